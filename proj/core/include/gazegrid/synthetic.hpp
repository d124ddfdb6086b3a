#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "gazegrid/attention.hpp"
#include "gazegrid/gaze_head.hpp"
#include "gazegrid/saliency.hpp"

namespace gazegrid {

/// Parameters of the synthetic driving-scene generator.
///
/// An object is intended-focused iff its center lies inside the central
/// ellipse or its class is critical. The ground-truth gaze map is a Gaussian
/// blob at every focused center plus a weighted central Gaussian whose
/// per-axis sigma is half the ellipse semi-axis.
///
/// Feature channels [0, class_count) hold per-class box occupancy at feature
/// resolution; the remaining channels are pure noise. Every channel carries
/// uniform noise in +-noise_amplitude.
struct SceneSpec {
  std::size_t frame_width = 512;
  std::size_t frame_height = 288;
  FeatureDims feature_dims{8, 12, 20};
  std::size_t min_objects = 3;
  std::size_t max_objects = 10;
  std::size_t class_count = 4;
  double center_bias_weight = 0.3;
  // Ellipse semi-axes as fractions of frame width / height.
  double ellipse_radius_x = 0.25;
  double ellipse_radius_y = 0.25;
  std::vector<int> critical_classes{3};
  double blob_sigma = 24.0;
  // Box extents as fractions of frame width / height.
  double box_width_min = 0.04;
  double box_width_max = 0.12;
  double box_height_min = 0.06;
  double box_height_max = 0.16;
  // Minimum distance between object centers, in pixels.
  double min_center_distance = 80.0;
  double noise_amplitude = 0.05;
};

/// Throws InvalidArgument for malformed ranges and InfeasibleSpec when no
/// placement can ever produce a focused object.
void validate(const SceneSpec& spec);

struct SyntheticSample {
  FeatureTensor features;
  SaliencyMap gt_map;
  DetectionSet detections;
  std::vector<std::uint8_t> intended_focus;
};

/// Pure function of (seed, index, spec). Scenes without a focused object are
/// redrawn, so every sample has at least one.
SyntheticSample generate_scene(std::uint64_t seed, std::uint64_t index, const SceneSpec& spec);

/// Scenes for indices first_index .. first_index + count - 1.
std::vector<SyntheticSample> generate_dataset(std::uint64_t seed, std::size_t count,
                                              const SceneSpec& spec,
                                              std::uint64_t first_index = 0);

bool is_intended_focus(const SceneSpec& spec, const BoundingBox& box);

/// Frame id used for scene `index` in generated manifests.
std::string synthetic_frame_id(std::uint64_t index);

}  // namespace gazegrid
