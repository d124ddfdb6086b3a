#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "gazegrid/saliency.hpp"

namespace gazegrid {

struct FeatureDims {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;

  std::size_t size() const noexcept { return channels * height * width; }
  bool operator==(const FeatureDims&) const = default;
};

/// c x h x w feature map, row-major with channel outermost.
struct FeatureTensor {
  FeatureDims dims;
  std::vector<double> values;

  double at(std::size_t c, std::size_t y, std::size_t x) const {
    return values[(c * dims.height + y) * dims.width + x];
  }
};

/// Throws InconsistentDims on a size mismatch and InvalidArgument on
/// non-finite values.
void validate(const FeatureTensor& tensor);

/// Channels produced by the 1x1 convolution.
inline constexpr std::size_t kConvChannels = 16;

/// Parameters of the gaze head: 1x1 conv to 16 channels, 2x2 average pool,
/// dense layer to one logit per grid cell. Also used as the gradient shape.
struct ModelParams {
  FeatureDims input_dims;
  GridSpec grid;
  std::vector<double> conv_weights;   // [16][c]
  std::vector<double> conv_biases;    // [16]
  std::vector<double> dense_weights;  // [K][16 * ph * pw]
  std::vector<double> dense_biases;   // [K]

  std::size_t pooled_height() const noexcept { return (input_dims.height + 1) / 2; }
  std::size_t pooled_width() const noexcept { return (input_dims.width + 1) / 2; }
  std::size_t dense_inputs() const noexcept {
    return kConvChannels * pooled_height() * pooled_width();
  }

  bool operator==(const ModelParams&) const = default;
};

/// Same dims as `shape`, every parameter zero.
ModelParams zeros_like(const ModelParams& shape);

/// Visits the four parameter blocks in declaration order.
void for_each_block(ModelParams& params, const std::function<void(std::span<double>)>& fn);
void for_each_block(const ModelParams& params,
                    const std::function<void(std::span<const double>)>& fn);

/// Uniform in +-sqrt(1/fan_in) per layer, biases zero.
ModelParams init_params(const FeatureDims& dims, const GridSpec& grid, std::uint64_t seed);

std::size_t count_params(const ModelParams& params);

GridActivation forward(const ModelParams& params, const FeatureTensor& features);

inline constexpr double kProbClamp = 1e-7;

/// Mean binary cross-entropy over the K cells, predictions clamped to
/// [1e-7, 1 - 1e-7].
double bce_loss(const GridActivation& pred, const GridVector& target);

struct LossAndGradient {
  double loss;
  ModelParams grad;
};

/// Exact gradient of bce_loss(forward(params, features), target).
LossAndGradient loss_and_gradient(const ModelParams& params, const FeatureTensor& features,
                                  const GridVector& target);

ModelParams backward(const ModelParams& params, const FeatureTensor& features,
                     const GridVector& target);

struct AdamState {
  ModelParams first_moment;
  ModelParams second_moment;
  std::uint64_t step_count = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

AdamState make_adam_state(const ModelParams& params);

/// One bias-corrected Adam update, in place.
void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state, double lr);

struct TrainConfig {
  std::size_t epochs = 40;
  double base_lr = 0.01;
  double decay_factor = 0.1;
  std::size_t decay_every = 10;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  GridSpec grid{16, 16};
};

void validate(const TrainConfig& config);

double lr_schedule(const TrainConfig& config, std::size_t epoch);

/// Sample order for one epoch; a pure function of (seed, epoch, count).
std::vector<std::size_t> epoch_order(std::uint64_t seed, std::size_t epoch, std::size_t count);

struct TrainingSample {
  FeatureTensor features;
  GridVector target;
};

struct TrainResult {
  ModelParams params;
  std::vector<double> loss_history;  // mean per-sample loss for each epoch
};

TrainResult train(std::span<const TrainingSample> dataset, const TrainConfig& config);

}  // namespace gazegrid
