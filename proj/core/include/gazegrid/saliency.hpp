#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace gazegrid {

/// Dense row-major map of non-negative attention intensities.
class SaliencyMap {
 public:
  SaliencyMap(std::size_t width, std::size_t height);  // zero-filled
  SaliencyMap(std::size_t width, std::size_t height, std::vector<double> values);

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return values_.size(); }

  double at(std::size_t x, std::size_t y) const { return values_[y * width_ + x]; }
  double& at(std::size_t x, std::size_t y) { return values_[y * width_ + x]; }

  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

  double max() const;
  double sum() const;

  bool operator==(const SaliencyMap&) const = default;

 private:
  std::size_t width_;
  std::size_t height_;
  std::vector<double> values_;
};

struct BinaryMap {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> bits;

  std::size_t count() const;
};

struct GridSpec {
  std::size_t rows = 16;
  std::size_t cols = 16;

  std::size_t cells() const noexcept { return rows * cols; }
  bool operator==(const GridSpec&) const = default;
};

/// Throws InvalidArgument unless rows and cols are both positive.
void validate(const GridSpec& spec);

struct GridVector {
  GridSpec spec;
  std::vector<std::uint8_t> entries;

  bool operator==(const GridVector&) const = default;
};

struct GridActivation {
  GridSpec spec;
  std::vector<double> probs;
};

/// Half-open pixel range [begin, end) covered by one grid row or column.
struct CellRange {
  std::size_t begin;
  std::size_t end;
};

/// Cell boundaries sit at floor(i * extent / cells).
CellRange cell_range(std::size_t index, std::size_t cells, std::size_t extent);

inline constexpr double kDefaultBinarizeRatio = 0.15;

BinaryMap binarize_map(const SaliencyMap& map, double ratio = kDefaultBinarizeRatio);

/// Per-cell fraction of binarized mass, row-major over cells.
std::vector<double> cell_mass_fractions(const BinaryMap& binary, const GridSpec& spec);

/// Saliency map to binary grid vector: entry j is set iff the cell's share of
/// the binarized mass is strictly greater than 1/K.
GridVector encode_grid(const SaliencyMap& map, const GridSpec& spec,
                       double ratio = kDefaultBinarizeRatio);

/// Half a cell: min(H/n, W/m) / 2.
double default_decode_sigma(const GridSpec& spec, std::size_t out_width,
                            std::size_t out_height);

/// Fills every cell's pixel block with its probability and blurs. Output is
/// raw; apply normalize_peak or normalize_distribution as needed.
SaliencyMap decode_grid(const GridActivation& act, std::size_t out_width,
                        std::size_t out_height, double sigma);

/// Separable Gaussian, radius ceil(3 sigma), kernel renormalized at borders.
SaliencyMap gaussian_blur(const SaliencyMap& map, double sigma);

SaliencyMap normalize_peak(const SaliencyMap& map);
SaliencyMap normalize_distribution(const SaliencyMap& map);

/// Bilinear resampling with pixel-center alignment and edge clamping.
SaliencyMap resize_bilinear(const SaliencyMap& map, std::size_t out_width,
                            std::size_t out_height);

/// 8-bit intensities mapped to [0, 1].
SaliencyMap from_bytes(std::size_t width, std::size_t height,
                       std::span<const std::uint8_t> bytes);

}  // namespace gazegrid
