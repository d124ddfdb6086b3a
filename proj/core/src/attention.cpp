#include "gazegrid/attention.hpp"

#include <algorithm>
#include <cmath>

#include "gazegrid/error.hpp"

namespace gazegrid {

namespace {

// First pixel index whose center is >= edge.
long first_center_at_or_after(double edge) { return static_cast<long>(std::ceil(edge - 0.5)); }

}  // namespace

void validate(const BoundingBox& box) {
  if (!std::isfinite(box.x_min) || !std::isfinite(box.y_min) || !std::isfinite(box.x_max) ||
      !std::isfinite(box.y_max)) {
    throw Error(ErrorCode::InvalidBox, "box coordinates must be finite");
  }
  if (!(box.x_max > box.x_min) || !(box.y_max > box.y_min)) {
    throw Error(ErrorCode::InvalidBox, "box must satisfy x_max > x_min and y_max > y_min");
  }
  if (!(box.detector_confidence >= 0.0 && box.detector_confidence <= 1.0)) {
    throw Error(ErrorCode::InvalidBox, "detector confidence must lie in [0, 1]");
  }
}

std::size_t FocusResult::focused_count() const {
  return static_cast<std::size_t>(std::count(focused.begin(), focused.end(), std::uint8_t{1}));
}

std::optional<double> try_focus_probability(const SaliencyMap& map, const BoundingBox& box) {
  validate(box);
  const long x0 = std::max(first_center_at_or_after(box.x_min), 0L);
  const long x1 = std::min(first_center_at_or_after(box.x_max), static_cast<long>(map.width()));
  const long y0 = std::max(first_center_at_or_after(box.y_min), 0L);
  const long y1 = std::min(first_center_at_or_after(box.y_max), static_cast<long>(map.height()));
  if (x0 >= x1 || y0 >= y1) return std::nullopt;
  double best = 0.0;
  for (long y = y0; y < y1; ++y) {
    for (long x = x0; x < x1; ++x) {
      best = std::max(best, map.at(static_cast<std::size_t>(x), static_cast<std::size_t>(y)));
    }
  }
  return best;
}

double focus_probability(const SaliencyMap& map, const BoundingBox& box) {
  const auto p = try_focus_probability(map, box);
  if (!p) throw Error(ErrorCode::EmptyIntersection, "box covers no pixel centers of the map");
  return *p;
}

FocusResult detect_focused(const SaliencyMap& map, const DetectionSet& detections,
                           double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "threshold must lie in [0, 1]");
  }
  FocusResult out;
  out.threshold_used = threshold;
  const std::size_t n = detections.boxes.size();
  out.focus_probability.reserve(n);
  out.focused.reserve(n);
  out.empty_intersection.reserve(n);
  for (const auto& box : detections.boxes) {
    const auto p = try_focus_probability(map, box);
    const double prob = p.value_or(0.0);
    out.focus_probability.push_back(prob);
    out.focused.push_back(prob > threshold ? 1 : 0);
    out.empty_intersection.push_back(p ? 0 : 1);
  }
  return out;
}

std::vector<std::uint8_t> label_ground_truth(const SaliencyMap& gt_map,
                                             const DetectionSet& detections, double ratio) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "labeling ratio must lie in (0, 1)");
  }
  return detect_focused(normalize_peak(gt_map), detections, ratio).focused;
}

SaliencyMap baseline_map(std::span<const SaliencyMap> training_maps, std::size_t out_width,
                         std::size_t out_height) {
  BaselineAccumulator acc(out_width, out_height);
  for (const auto& m : training_maps) acc.add(m);
  return acc.result();
}

BaselineAccumulator::BaselineAccumulator(std::size_t out_width, std::size_t out_height)
    : width_(out_width), height_(out_height), sum_(out_width * out_height, 0.0) {
  if (out_width == 0 || out_height == 0) {
    throw Error(ErrorCode::InvalidArgument, "baseline dims must be positive");
  }
}

void BaselineAccumulator::add(const SaliencyMap& map) {
  const SaliencyMap resized = resize_bilinear(map, width_, height_);
  auto values = resized.values();
  for (std::size_t i = 0; i < sum_.size(); ++i) sum_[i] += values[i];
  ++count_;
}

SaliencyMap BaselineAccumulator::result() const {
  if (count_ == 0) throw Error(ErrorCode::EmptyInput, "baseline needs at least one map");
  std::vector<double> mean(sum_);
  for (double& v : mean) v /= static_cast<double>(count_);
  return SaliencyMap(width_, height_, std::move(mean));
}

}  // namespace gazegrid
