#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gazegrid/saliency.hpp"

namespace gazegrid {

/// Half-open box in pixel coordinates.
struct BoundingBox {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;
  int class_id = 0;
  double detector_confidence = 1.0;

  bool operator==(const BoundingBox&) const = default;
};

/// Throws InvalidBox for non-finite or empty boxes and out-of-range confidences.
void validate(const BoundingBox& box);

struct DetectionSet {
  std::string frame_id;
  std::vector<BoundingBox> boxes;
};

struct FocusResult {
  std::vector<double> focus_probability;
  std::vector<std::uint8_t> focused;
  std::vector<std::uint8_t> empty_intersection;  // box covered no pixel centers
  double threshold_used = 0.0;

  std::size_t focused_count() const;
};

/// Throws InvalidBox. Pixel (x, y) belongs to the box iff (x + 0.5, y + 0.5) lies inside it.
/// Returns nullopt when the clipped box covers no pixel centers.
std::optional<double> try_focus_probability(const SaliencyMap& map, const BoundingBox& box);

/// Maximum map value inside the box; throws EmptyIntersection.
double focus_probability(const SaliencyMap& map, const BoundingBox& box);

/// The map is used as given; peak-normalize it first for probability-like
/// scores. A box is focused iff its probability is strictly above threshold.
FocusResult detect_focused(const SaliencyMap& map, const DetectionSet& detections,
                           double threshold);

/// Ground-truth focus labels: peak-normalize the map and apply the same
/// strict rule with `ratio`.
std::vector<std::uint8_t> label_ground_truth(const SaliencyMap& gt_map,
                                             const DetectionSet& detections,
                                             double ratio = kDefaultBinarizeRatio);

/// Per-pixel mean of the maps after resizing each to the output dims.
SaliencyMap baseline_map(std::span<const SaliencyMap> training_maps, std::size_t out_width,
                         std::size_t out_height);

/// Streaming form of baseline_map for datasets that do not fit in memory.
class BaselineAccumulator {
 public:
  BaselineAccumulator(std::size_t out_width, std::size_t out_height);

  void add(const SaliencyMap& map);
  std::size_t count() const noexcept { return count_; }
  SaliencyMap result() const;

 private:
  std::size_t width_;
  std::size_t height_;
  std::vector<double> sum_;
  std::size_t count_ = 0;
};

}  // namespace gazegrid
