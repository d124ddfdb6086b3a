#include "gazegrid/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "gazegrid/error.hpp"
#include "gazegrid/random.hpp"

namespace gazegrid {

namespace {

constexpr int kMaxRedraws = 1000;
constexpr int kMaxPlacementTries = 200;

// Adds amplitude * gx(x) * gy(y) to the map, where g* are unnormalized
// Gaussians centered at (cx, cy).
void add_gaussian(std::vector<double>& values, std::size_t width, std::size_t height, double cx,
                  double cy, double sigma_x, double sigma_y, double amplitude) {
  std::vector<double> gx(width);
  std::vector<double> gy(height);
  for (std::size_t x = 0; x < width; ++x) {
    const double d = (static_cast<double>(x) + 0.5 - cx) / sigma_x;
    gx[x] = std::exp(-0.5 * d * d);
  }
  for (std::size_t y = 0; y < height; ++y) {
    const double d = (static_cast<double>(y) + 0.5 - cy) / sigma_y;
    gy[y] = amplitude * std::exp(-0.5 * d * d);
  }
  for (std::size_t y = 0; y < height; ++y) {
    double* row = values.data() + y * width;
    for (std::size_t x = 0; x < width; ++x) row[x] += gy[y] * gx[x];
  }
}

double overlap(double a0, double a1, double b0, double b1) {
  return std::max(0.0, std::min(a1, b1) - std::max(a0, b0));
}

// Returns an empty vector when spacing could not be satisfied.
std::vector<BoundingBox> place_objects(std::mt19937_64& rng, const SceneSpec& spec) {
  const auto fw = static_cast<double>(spec.frame_width);
  const auto fh = static_cast<double>(spec.frame_height);
  const std::size_t count =
      spec.min_objects + uniform_below(rng, spec.max_objects - spec.min_objects + 1);
  const double min_d2 = spec.min_center_distance * spec.min_center_distance;
  std::vector<BoundingBox> boxes;
  boxes.reserve(count);
  while (boxes.size() < count) {
    const double w = uniform(rng, spec.box_width_min, spec.box_width_max) * fw;
    const double h = uniform(rng, spec.box_height_min, spec.box_height_max) * fh;
    bool placed = false;
    double cx = 0.0;
    double cy = 0.0;
    for (int t = 0; t < kMaxPlacementTries && !placed; ++t) {
      cx = uniform(rng, w / 2.0, fw - w / 2.0);
      cy = uniform(rng, h / 2.0, fh - h / 2.0);
      placed = std::all_of(boxes.begin(), boxes.end(), [&](const BoundingBox& o) {
        const double dx = (o.x_min + o.x_max) / 2.0 - cx;
        const double dy = (o.y_min + o.y_max) / 2.0 - cy;
        return dx * dx + dy * dy >= min_d2;
      });
    }
    if (!placed) return {};
    BoundingBox b;
    b.x_min = cx - w / 2.0;
    b.x_max = cx + w / 2.0;
    b.y_min = cy - h / 2.0;
    b.y_max = cy + h / 2.0;
    b.class_id = static_cast<int>(uniform_below(rng, spec.class_count));
    b.detector_confidence = uniform(rng, 0.5, 1.0);
    boxes.push_back(b);
  }
  return boxes;
}

FeatureTensor render_features(std::mt19937_64& rng, const SceneSpec& spec,
                              const std::vector<BoundingBox>& boxes) {
  const FeatureDims& d = spec.feature_dims;
  FeatureTensor t{d, std::vector<double>(d.size(), 0.0)};
  const double cell_w = static_cast<double>(spec.frame_width) / static_cast<double>(d.width);
  const double cell_h = static_cast<double>(spec.frame_height) / static_cast<double>(d.height);
  const double cell_area = cell_w * cell_h;
  for (const auto& b : boxes) {
    const auto ch = static_cast<std::size_t>(b.class_id);
    for (std::size_t y = 0; y < d.height; ++y) {
      const double oy = overlap(b.y_min, b.y_max, cell_h * static_cast<double>(y),
                                cell_h * static_cast<double>(y + 1));
      if (oy <= 0.0) continue;
      for (std::size_t x = 0; x < d.width; ++x) {
        const double ox = overlap(b.x_min, b.x_max, cell_w * static_cast<double>(x),
                                  cell_w * static_cast<double>(x + 1));
        t.values[(ch * d.height + y) * d.width + x] += ox * oy / cell_area;
      }
    }
  }
  for (double& v : t.values) {
    v = std::min(v, 1.0) + uniform(rng, -spec.noise_amplitude, spec.noise_amplitude);
  }
  return t;
}

SaliencyMap render_gaze(const SceneSpec& spec, const std::vector<BoundingBox>& boxes,
                        const std::vector<std::uint8_t>& focus) {
  const std::size_t w = spec.frame_width;
  const std::size_t h = spec.frame_height;
  std::vector<double> values(w * h, 0.0);
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    if (!focus[i]) continue;
    const auto& b = boxes[i];
    add_gaussian(values, w, h, (b.x_min + b.x_max) / 2.0, (b.y_min + b.y_max) / 2.0,
                 spec.blob_sigma, spec.blob_sigma, 1.0);
  }
  if (spec.center_bias_weight > 0.0) {
    const auto fw = static_cast<double>(w);
    const auto fh = static_cast<double>(h);
    add_gaussian(values, w, h, fw / 2.0, fh / 2.0, spec.ellipse_radius_x * fw / 2.0,
                 spec.ellipse_radius_y * fh / 2.0, spec.center_bias_weight);
  }
  return SaliencyMap(w, h, std::move(values));
}

}  // namespace

void validate(const SceneSpec& spec) {
  auto fail = [](const char* what) { throw Error(ErrorCode::InvalidArgument, what); };
  if (spec.frame_width == 0 || spec.frame_height == 0) fail("frame dims must be positive");
  const FeatureDims& d = spec.feature_dims;
  if (d.channels == 0 || d.height == 0 || d.width == 0) fail("feature dims must be positive");
  if (spec.class_count == 0) fail("class_count must be positive");
  if (d.channels < spec.class_count) fail("need one feature channel per class");
  if (spec.min_objects < 1 || spec.max_objects < spec.min_objects) fail("bad object count range");
  if (!(spec.center_bias_weight >= 0.0 && spec.center_bias_weight <= 1.0)) {
    fail("center_bias_weight must lie in [0, 1]");
  }
  if (!(spec.blob_sigma > 0.0)) fail("blob_sigma must be positive");
  if (!(spec.ellipse_radius_x >= 0.0) || !(spec.ellipse_radius_y >= 0.0)) {
    fail("ellipse radii must be non-negative");
  }
  if (spec.center_bias_weight > 0.0 &&
      !(spec.ellipse_radius_x > 0.0 && spec.ellipse_radius_y > 0.0)) {
    fail("center bias needs a non-degenerate ellipse");
  }
  if (!(spec.box_width_min > 0.0 && spec.box_width_min <= spec.box_width_max &&
        spec.box_width_max <= 1.0)) {
    fail("bad box width range");
  }
  if (!(spec.box_height_min > 0.0 && spec.box_height_min <= spec.box_height_max &&
        spec.box_height_max <= 1.0)) {
    fail("bad box height range");
  }
  if (!(spec.noise_amplitude >= 0.0)) fail("noise_amplitude must be non-negative");
  if (!(spec.min_center_distance >= 0.0)) fail("min_center_distance must be non-negative");

  const bool has_ellipse = spec.ellipse_radius_x > 0.0 && spec.ellipse_radius_y > 0.0;
  const bool has_critical =
      std::any_of(spec.critical_classes.begin(), spec.critical_classes.end(),
                  [&](int c) { return c >= 0 && static_cast<std::size_t>(c) < spec.class_count; });
  if (!has_ellipse && !has_critical) {
    throw Error(ErrorCode::InfeasibleSpec,
                "no object can be focused: empty ellipse and no valid critical class");
  }
}

bool is_intended_focus(const SceneSpec& spec, const BoundingBox& box) {
  if (std::find(spec.critical_classes.begin(), spec.critical_classes.end(), box.class_id) !=
      spec.critical_classes.end()) {
    return true;
  }
  if (!(spec.ellipse_radius_x > 0.0 && spec.ellipse_radius_y > 0.0)) return false;
  const auto fw = static_cast<double>(spec.frame_width);
  const auto fh = static_cast<double>(spec.frame_height);
  const double dx = ((box.x_min + box.x_max) / 2.0 - fw / 2.0) / (spec.ellipse_radius_x * fw);
  const double dy = ((box.y_min + box.y_max) / 2.0 - fh / 2.0) / (spec.ellipse_radius_y * fh);
  return dx * dx + dy * dy <= 1.0;
}

std::string synthetic_frame_id(std::uint64_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%06llu", static_cast<unsigned long long>(index));
  return buf;
}

SyntheticSample generate_scene(std::uint64_t seed, std::uint64_t index, const SceneSpec& spec) {
  validate(spec);
  auto rng = make_engine(seed, index);
  for (int attempt = 0; attempt < kMaxRedraws; ++attempt) {
    auto boxes = place_objects(rng, spec);
    if (boxes.empty()) continue;
    std::vector<std::uint8_t> focus(boxes.size());
    std::transform(boxes.begin(), boxes.end(), focus.begin(),
                   [&](const BoundingBox& b) { return is_intended_focus(spec, b) ? 1 : 0; });
    if (std::none_of(focus.begin(), focus.end(), [](std::uint8_t f) { return f != 0; })) continue;

    FeatureTensor features = render_features(rng, spec, boxes);
    SaliencyMap gt = render_gaze(spec, boxes, focus);
    return SyntheticSample{std::move(features), std::move(gt),
                           DetectionSet{synthetic_frame_id(index), std::move(boxes)},
                           std::move(focus)};
  }
  throw Error(ErrorCode::InfeasibleSpec,
              "no valid placement with a focused object after repeated redraws");
}

std::vector<SyntheticSample> generate_dataset(std::uint64_t seed, std::size_t count,
                                              const SceneSpec& spec, std::uint64_t first_index) {
  if (count < 1) throw Error(ErrorCode::InvalidArgument, "count must be >= 1");
  std::vector<SyntheticSample> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(generate_scene(seed, first_index + i, spec));
  return out;
}

}  // namespace gazegrid
