#include "gazegrid/saliency.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "gazegrid/error.hpp"

namespace gazegrid {

namespace {

void check_values(std::span<const double> values) {
  for (double v : values) {
    if (!std::isfinite(v) || v < 0.0) {
      throw Error(ErrorCode::NegativeValue,
                  "saliency values must be finite and non-negative");
    }
  }
}

// Normalized 1-D Gaussian taps for offsets -radius..radius.
std::vector<double> gaussian_kernel(double sigma, int& radius) {
  radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> taps(2 * radius + 1);
  const double denom = 2.0 * sigma * sigma;
  for (int k = -radius; k <= radius; ++k) {
    taps[k + radius] = std::exp(-(k * k) / denom);
  }
  return taps;
}

// One blur pass along a line of `count` samples separated by `stride`.
void blur_line(const double* src, double* dst, std::size_t count, std::size_t stride,
               const std::vector<double>& taps, int radius) {
  const auto n = static_cast<long>(count);
  for (long i = 0; i < n; ++i) {
    const long lo = std::max(-static_cast<long>(radius), -i);
    const long hi = std::min(static_cast<long>(radius), n - 1 - i);
    double acc = 0.0;
    double weight = 0.0;
    for (long k = lo; k <= hi; ++k) {
      const double t = taps[k + radius];
      acc += t * src[(i + k) * static_cast<long>(stride)];
      weight += t;
    }
    dst[i * static_cast<long>(stride)] = acc / weight;
  }
}

}  // namespace

SaliencyMap::SaliencyMap(std::size_t width, std::size_t height)
    : SaliencyMap(width, height, std::vector<double>(width * height, 0.0)) {}

SaliencyMap::SaliencyMap(std::size_t width, std::size_t height, std::vector<double> values)
    : width_(width), height_(height), values_(std::move(values)) {
  if (width_ == 0 || height_ == 0) {
    throw Error(ErrorCode::InvalidArgument, "saliency map dimensions must be positive");
  }
  if (values_.size() != width_ * height_) {
    throw Error(ErrorCode::DimensionMismatch,
                "saliency map holds " + std::to_string(values_.size()) +
                    " values, expected " + std::to_string(width_ * height_));
  }
  check_values(values_);
}

double SaliencyMap::max() const { return *std::max_element(values_.begin(), values_.end()); }

double SaliencyMap::sum() const { return std::accumulate(values_.begin(), values_.end(), 0.0); }

std::size_t BinaryMap::count() const {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

void validate(const GridSpec& spec) {
  if (spec.rows == 0 || spec.cols == 0) {
    throw Error(ErrorCode::InvalidArgument, "grid must have at least one row and column");
  }
}

CellRange cell_range(std::size_t index, std::size_t cells, std::size_t extent) {
  return {index * extent / cells, (index + 1) * extent / cells};
}

BinaryMap binarize_map(const SaliencyMap& map, double ratio) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "binarization ratio must lie in (0, 1)");
  }
  const double peak = map.max();
  if (peak <= 0.0) {
    throw Error(ErrorCode::AllZeroMap, "cannot binarize an all-zero saliency map");
  }
  const double threshold = ratio * peak;
  BinaryMap out{map.width(), map.height(), std::vector<std::uint8_t>(map.size())};
  auto values = map.values();
  std::transform(values.begin(), values.end(), out.bits.begin(),
                 [threshold](double v) { return static_cast<std::uint8_t>(v > threshold); });
  return out;
}

std::vector<double> cell_mass_fractions(const BinaryMap& binary, const GridSpec& spec) {
  validate(spec);
  std::vector<double> counts(spec.cells(), 0.0);
  // Precompute the cell column for every pixel column.
  std::vector<std::size_t> col_of(binary.width);
  for (std::size_t c = 0; c < spec.cols; ++c) {
    const auto r = cell_range(c, spec.cols, binary.width);
    for (std::size_t x = r.begin; x < r.end; ++x) col_of[x] = c;
  }
  for (std::size_t row = 0; row < spec.rows; ++row) {
    const auto yr = cell_range(row, spec.rows, binary.height);
    for (std::size_t y = yr.begin; y < yr.end; ++y) {
      for (std::size_t x = 0; x < binary.width; ++x) {
        counts[row * spec.cols + col_of[x]] += binary.bits[y * binary.width + x];
      }
    }
  }
  const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
  if (total <= 0.0) {
    throw Error(ErrorCode::EmptyBinaryMap, "binarized map has no set pixels");
  }
  for (double& c : counts) c /= total;
  return counts;
}

GridVector encode_grid(const SaliencyMap& map, const GridSpec& spec, double ratio) {
  validate(spec);
  const auto fractions = cell_mass_fractions(binarize_map(map, ratio), spec);
  const double threshold = 1.0 / static_cast<double>(spec.cells());
  GridVector out{spec, std::vector<std::uint8_t>(spec.cells())};
  for (std::size_t j = 0; j < fractions.size(); ++j) {
    out.entries[j] = fractions[j] > threshold ? 1 : 0;
  }
  return out;
}

double default_decode_sigma(const GridSpec& spec, std::size_t out_width,
                            std::size_t out_height) {
  validate(spec);
  const double cell_h = static_cast<double>(out_height) / static_cast<double>(spec.rows);
  const double cell_w = static_cast<double>(out_width) / static_cast<double>(spec.cols);
  return std::min(cell_h, cell_w) / 2.0;
}

SaliencyMap decode_grid(const GridActivation& act, std::size_t out_width,
                        std::size_t out_height, double sigma) {
  const GridSpec& spec = act.spec;
  validate(spec);
  if (act.probs.size() != spec.cells()) {
    throw Error(ErrorCode::SpecMismatch, "activation length does not match grid");
  }
  if (out_width < spec.cols || out_height < spec.rows) {
    throw Error(ErrorCode::DimensionMismatch, "output map smaller than the grid");
  }
  if (!(sigma >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "blur sigma must be non-negative");
  }
  std::vector<double> values(out_width * out_height);
  for (std::size_t row = 0; row < spec.rows; ++row) {
    const auto yr = cell_range(row, spec.rows, out_height);
    for (std::size_t col = 0; col < spec.cols; ++col) {
      const auto xr = cell_range(col, spec.cols, out_width);
      const double p = act.probs[row * spec.cols + col];
      for (std::size_t y = yr.begin; y < yr.end; ++y) {
        std::fill(values.begin() + static_cast<long>(y * out_width + xr.begin),
                  values.begin() + static_cast<long>(y * out_width + xr.end), p);
      }
    }
  }
  return gaussian_blur(SaliencyMap(out_width, out_height, std::move(values)), sigma);
}

SaliencyMap gaussian_blur(const SaliencyMap& map, double sigma) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw Error(ErrorCode::InvalidArgument, "blur sigma must be finite and non-negative");
  }
  if (sigma == 0.0) return map;
  int radius = 0;
  const auto taps = gaussian_kernel(sigma, radius);
  const std::size_t w = map.width();
  const std::size_t h = map.height();
  std::vector<double> tmp(map.size());
  std::vector<double> out(map.size());
  const double* src = map.values().data();
  for (std::size_t y = 0; y < h; ++y) {
    blur_line(src + y * w, tmp.data() + y * w, w, 1, taps, radius);
  }
  for (std::size_t x = 0; x < w; ++x) {
    blur_line(tmp.data() + x, out.data() + x, h, w, taps, radius);
  }
  // Rounding can leave values like -1e-300 next to exact zeros.
  for (double& v : out) v = std::max(v, 0.0);
  return SaliencyMap(w, h, std::move(out));
}

SaliencyMap normalize_peak(const SaliencyMap& map) {
  const double peak = map.max();
  if (peak <= 0.0) throw Error(ErrorCode::AllZeroMap, "cannot peak-normalize an all-zero map");
  std::vector<double> out(map.values().begin(), map.values().end());
  for (double& v : out) v /= peak;
  return SaliencyMap(map.width(), map.height(), std::move(out));
}

SaliencyMap normalize_distribution(const SaliencyMap& map) {
  const double total = map.sum();
  if (total <= 0.0) throw Error(ErrorCode::AllZeroMap, "cannot normalize an all-zero map");
  std::vector<double> out(map.values().begin(), map.values().end());
  for (double& v : out) v /= total;
  return SaliencyMap(map.width(), map.height(), std::move(out));
}

SaliencyMap resize_bilinear(const SaliencyMap& map, std::size_t out_width,
                            std::size_t out_height) {
  if (out_width == 0 || out_height == 0) {
    throw Error(ErrorCode::InvalidArgument, "resize target must be at least 1x1");
  }
  if (out_width == map.width() && out_height == map.height()) return map;

  struct Tap {
    std::size_t lo, hi;
    double frac;
  };
  auto taps_for = [](std::size_t in, std::size_t out) {
    std::vector<Tap> taps(out);
    const double scale = static_cast<double>(in) / static_cast<double>(out);
    const double last = static_cast<double>(in - 1);
    for (std::size_t i = 0; i < out; ++i) {
      double src = (static_cast<double>(i) + 0.5) * scale - 0.5;
      src = std::clamp(src, 0.0, last);
      const auto lo = static_cast<std::size_t>(std::floor(src));
      const std::size_t hi = std::min(lo + 1, in - 1);
      taps[i] = {lo, hi, src - static_cast<double>(lo)};
    }
    return taps;
  };
  const auto xs = taps_for(map.width(), out_width);
  const auto ys = taps_for(map.height(), out_height);

  std::vector<double> out(out_width * out_height);
  for (std::size_t y = 0; y < out_height; ++y) {
    const Tap& ty = ys[y];
    for (std::size_t x = 0; x < out_width; ++x) {
      const Tap& tx = xs[x];
      const double top = map.at(tx.lo, ty.lo) * (1.0 - tx.frac) + map.at(tx.hi, ty.lo) * tx.frac;
      const double bottom =
          map.at(tx.lo, ty.hi) * (1.0 - tx.frac) + map.at(tx.hi, ty.hi) * tx.frac;
      out[y * out_width + x] = top * (1.0 - ty.frac) + bottom * ty.frac;
    }
  }
  return SaliencyMap(out_width, out_height, std::move(out));
}

SaliencyMap from_bytes(std::size_t width, std::size_t height,
                       std::span<const std::uint8_t> bytes) {
  std::vector<double> values(bytes.size());
  std::transform(bytes.begin(), bytes.end(), values.begin(),
                 [](std::uint8_t b) { return static_cast<double>(b) / 255.0; });
  return SaliencyMap(width, height, std::move(values));
}

}  // namespace gazegrid
