#include "gazegrid/gaze_head.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "gazegrid/error.hpp"
#include "gazegrid/random.hpp"

namespace gazegrid {

namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void check_input(const ModelParams& params, const FeatureTensor& features) {
  if (!(features.dims == params.input_dims)) {
    throw Error(ErrorCode::DimensionMismatch, "feature dims do not match model input dims");
  }
  if (features.values.size() != features.dims.size()) {
    throw Error(ErrorCode::InconsistentDims, "feature tensor payload does not match its dims");
  }
}

// Activations kept for the backward pass.
struct Activations {
  std::vector<double> conv;    // [16][h][w]
  std::vector<double> pooled;  // [16][ph][pw]
  std::vector<double> probs;   // [K]
};

Activations run_forward(const ModelParams& p, const FeatureTensor& v) {
  const std::size_t c = p.input_dims.channels;
  const std::size_t h = p.input_dims.height;
  const std::size_t w = p.input_dims.width;
  const std::size_t hw = h * w;
  const std::size_t ph = p.pooled_height();
  const std::size_t pw = p.pooled_width();
  const std::size_t k_cells = p.grid.cells();

  Activations a;
  a.conv.assign(kConvChannels * hw, 0.0);
  for (std::size_t k = 0; k < kConvChannels; ++k) {
    double* out = a.conv.data() + k * hw;
    std::fill(out, out + hw, p.conv_biases[k]);
    for (std::size_t ch = 0; ch < c; ++ch) {
      const double wk = p.conv_weights[k * c + ch];
      const double* in = v.values.data() + ch * hw;
      for (std::size_t i = 0; i < hw; ++i) out[i] += wk * in[i];
    }
  }

  a.pooled.assign(kConvChannels * ph * pw, 0.0);
  for (std::size_t k = 0; k < kConvChannels; ++k) {
    const double* in = a.conv.data() + k * hw;
    for (std::size_t py = 0; py < ph; ++py) {
      const std::size_t y1 = std::min(2 * py + 2, h);
      for (std::size_t px = 0; px < pw; ++px) {
        const std::size_t x1 = std::min(2 * px + 2, w);
        double acc = 0.0;
        for (std::size_t y = 2 * py; y < y1; ++y) {
          for (std::size_t x = 2 * px; x < x1; ++x) acc += in[y * w + x];
        }
        a.pooled[(k * ph + py) * pw + px] = acc / static_cast<double>((y1 - 2 * py) * (x1 - 2 * px));
      }
    }
  }

  const std::size_t f = a.pooled.size();
  a.probs.resize(k_cells);
  for (std::size_t i = 0; i < k_cells; ++i) {
    const double* row = p.dense_weights.data() + i * f;
    const double z = std::inner_product(row, row + f, a.pooled.data(), p.dense_biases[i]);
    a.probs[i] = sigmoid(z);
  }
  return a;
}

void check_target(const GridSpec& spec, const GridVector& target) {
  if (!(target.spec == spec) || target.entries.size() != spec.cells()) {
    throw Error(ErrorCode::SpecMismatch, "target grid does not match prediction grid");
  }
}

double bce_terms(std::span<const double> probs, const GridVector& target) {
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = std::clamp(probs[i], kProbClamp, 1.0 - kProbClamp);
    acc += target.entries[i] ? std::log(p) : std::log1p(-p);
  }
  return -acc / static_cast<double>(probs.size());
}

// Adds scale * d(loss)/d(params) into `acc`; returns the loss.
double accumulate_gradient(const ModelParams& p, const FeatureTensor& v, const GridVector& target,
                           ModelParams& acc, double scale) {
  check_input(p, v);
  check_target(p.grid, target);
  const Activations a = run_forward(p, v);

  const std::size_t c = p.input_dims.channels;
  const std::size_t h = p.input_dims.height;
  const std::size_t w = p.input_dims.width;
  const std::size_t hw = h * w;
  const std::size_t ph = p.pooled_height();
  const std::size_t pw = p.pooled_width();
  const std::size_t k_cells = p.grid.cells();
  const std::size_t f = a.pooled.size();
  const double inv_k = 1.0 / static_cast<double>(k_cells);

  // d(loss)/d(logit): (p - y)/K inside the clamp band, zero where the clamp
  // is active.
  std::vector<double> dz(k_cells);
  for (std::size_t i = 0; i < k_cells; ++i) {
    const double prob = a.probs[i];
    const bool clamped = prob < kProbClamp || prob > 1.0 - kProbClamp;
    dz[i] = clamped ? 0.0 : (prob - static_cast<double>(target.entries[i])) * inv_k;
  }

  std::vector<double> dpooled(f, 0.0);
  for (std::size_t i = 0; i < k_cells; ++i) {
    const double g = dz[i];
    if (g == 0.0) continue;
    const double* row = p.dense_weights.data() + i * f;
    double* grow = acc.dense_weights.data() + i * f;
    for (std::size_t j = 0; j < f; ++j) {
      grow[j] += scale * g * a.pooled[j];
      dpooled[j] += g * row[j];
    }
    acc.dense_biases[i] += scale * g;
  }

  std::vector<double> dconv(hw);
  for (std::size_t k = 0; k < kConvChannels; ++k) {
    for (std::size_t py = 0; py < ph; ++py) {
      const std::size_t y1 = std::min(2 * py + 2, h);
      for (std::size_t px = 0; px < pw; ++px) {
        const std::size_t x1 = std::min(2 * px + 2, w);
        const double share = dpooled[(k * ph + py) * pw + px] /
                             static_cast<double>((y1 - 2 * py) * (x1 - 2 * px));
        for (std::size_t y = 2 * py; y < y1; ++y) {
          for (std::size_t x = 2 * px; x < x1; ++x) dconv[y * w + x] = share;
        }
      }
    }
    acc.conv_biases[k] += scale * std::accumulate(dconv.begin(), dconv.end(), 0.0);
    for (std::size_t ch = 0; ch < c; ++ch) {
      const double* in = v.values.data() + ch * hw;
      acc.conv_weights[k * c + ch] +=
          scale * std::inner_product(dconv.begin(), dconv.end(), in, 0.0);
    }
  }
  return bce_terms(a.probs, target);
}

void check_same_shape(const ModelParams& a, const ModelParams& b) {
  if (!(a.input_dims == b.input_dims) || !(a.grid == b.grid) ||
      a.conv_weights.size() != b.conv_weights.size() ||
      a.conv_biases.size() != b.conv_biases.size() ||
      a.dense_weights.size() != b.dense_weights.size() ||
      a.dense_biases.size() != b.dense_biases.size()) {
    throw Error(ErrorCode::ShapeMismatch, "parameter shapes differ");
  }
}

}  // namespace

void validate(const FeatureTensor& tensor) {
  if (tensor.values.size() != tensor.dims.size()) {
    throw Error(ErrorCode::InconsistentDims, "feature tensor payload does not match its dims");
  }
  for (double v : tensor.values) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "non-finite feature value");
  }
}

ModelParams zeros_like(const ModelParams& shape) {
  ModelParams out;
  out.input_dims = shape.input_dims;
  out.grid = shape.grid;
  out.conv_weights.assign(shape.conv_weights.size(), 0.0);
  out.conv_biases.assign(shape.conv_biases.size(), 0.0);
  out.dense_weights.assign(shape.dense_weights.size(), 0.0);
  out.dense_biases.assign(shape.dense_biases.size(), 0.0);
  return out;
}

void for_each_block(ModelParams& params, const std::function<void(std::span<double>)>& fn) {
  fn(params.conv_weights);
  fn(params.conv_biases);
  fn(params.dense_weights);
  fn(params.dense_biases);
}

void for_each_block(const ModelParams& params,
                    const std::function<void(std::span<const double>)>& fn) {
  fn(params.conv_weights);
  fn(params.conv_biases);
  fn(params.dense_weights);
  fn(params.dense_biases);
}

ModelParams init_params(const FeatureDims& dims, const GridSpec& grid, std::uint64_t seed) {
  if (dims.channels == 0 || dims.height == 0 || dims.width == 0) {
    throw Error(ErrorCode::InvalidArgument, "feature dims must be positive");
  }
  validate(grid);
  ModelParams p;
  p.input_dims = dims;
  p.grid = grid;
  p.conv_weights.resize(kConvChannels * dims.channels);
  p.conv_biases.assign(kConvChannels, 0.0);
  p.dense_weights.resize(grid.cells() * p.dense_inputs());
  p.dense_biases.assign(grid.cells(), 0.0);

  auto rng = make_engine(seed, 0x1A17);
  const double conv_bound = std::sqrt(1.0 / static_cast<double>(dims.channels));
  for (double& w : p.conv_weights) w = uniform(rng, -conv_bound, conv_bound);
  const double dense_bound = std::sqrt(1.0 / static_cast<double>(p.dense_inputs()));
  for (double& w : p.dense_weights) w = uniform(rng, -dense_bound, dense_bound);
  return p;
}

std::size_t count_params(const ModelParams& params) {
  std::size_t n = 0;
  for_each_block(params, [&n](std::span<const double> block) { n += block.size(); });
  return n;
}

GridActivation forward(const ModelParams& params, const FeatureTensor& features) {
  check_input(params, features);
  return {params.grid, run_forward(params, features).probs};
}

double bce_loss(const GridActivation& pred, const GridVector& target) {
  check_target(pred.spec, target);
  if (pred.probs.size() != pred.spec.cells()) {
    throw Error(ErrorCode::SpecMismatch, "activation length does not match grid");
  }
  return bce_terms(pred.probs, target);
}

LossAndGradient loss_and_gradient(const ModelParams& params, const FeatureTensor& features,
                                  const GridVector& target) {
  LossAndGradient out{0.0, zeros_like(params)};
  out.loss = accumulate_gradient(params, features, target, out.grad, 1.0);
  return out;
}

ModelParams backward(const ModelParams& params, const FeatureTensor& features,
                     const GridVector& target) {
  return loss_and_gradient(params, features, target).grad;
}

AdamState make_adam_state(const ModelParams& params) {
  AdamState s;
  s.first_moment = zeros_like(params);
  s.second_moment = zeros_like(params);
  return s;
}

void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state, double lr) {
  check_same_shape(params, grads);
  check_same_shape(params, state.first_moment);
  check_same_shape(params, state.second_moment);
  if (!(lr > 0.0)) throw Error(ErrorCode::InvalidArgument, "learning rate must be positive");

  ++state.step_count;
  const double b1 = state.beta1;
  const double b2 = state.beta2;
  const auto t = static_cast<double>(state.step_count);
  const double correction1 = 1.0 - std::pow(b1, t);
  const double correction2 = 1.0 - std::pow(b2, t);

  auto update = [&](std::vector<double>& p, const std::vector<double>& g, std::vector<double>& m,
                    std::vector<double>& v) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * g[i];
      v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      p[i] -= lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  };
  auto& m = state.first_moment;
  auto& v = state.second_moment;
  update(params.conv_weights, grads.conv_weights, m.conv_weights, v.conv_weights);
  update(params.conv_biases, grads.conv_biases, m.conv_biases, v.conv_biases);
  update(params.dense_weights, grads.dense_weights, m.dense_weights, v.dense_weights);
  update(params.dense_biases, grads.dense_biases, m.dense_biases, v.dense_biases);
}

void validate(const TrainConfig& config) {
  if (config.epochs < 1) throw Error(ErrorCode::InvalidArgument, "epochs must be >= 1");
  if (!(config.base_lr > 0.0)) throw Error(ErrorCode::InvalidArgument, "base_lr must be > 0");
  if (!(config.decay_factor > 0.0 && config.decay_factor <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "decay_factor must lie in (0, 1]");
  }
  if (config.decay_every < 1) throw Error(ErrorCode::InvalidArgument, "decay_every must be >= 1");
  if (config.batch_size < 1) throw Error(ErrorCode::InvalidArgument, "batch_size must be >= 1");
  validate(config.grid);
}

double lr_schedule(const TrainConfig& config, std::size_t epoch) {
  const auto steps = static_cast<double>(epoch / config.decay_every);
  return config.base_lr * std::pow(config.decay_factor, steps);
}

std::vector<std::size_t> epoch_order(std::uint64_t seed, std::size_t epoch, std::size_t count) {
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto rng = make_engine(seed, 0x5EED0000ULL + epoch);
  for (std::size_t i = count; i > 1; --i) {
    std::swap(order[i - 1], order[uniform_below(rng, i)]);
  }
  return order;
}

TrainResult train(std::span<const TrainingSample> dataset, const TrainConfig& config) {
  validate(config);
  if (dataset.empty()) throw Error(ErrorCode::EmptyDataset, "training set is empty");
  const FeatureDims dims = dataset.front().features.dims;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& s = dataset[i];
    if (!(s.features.dims == dims) || s.features.values.size() != dims.size()) {
      throw Error(ErrorCode::InconsistentDims,
                  "sample " + std::to_string(i) + " has feature dims differing from sample 0");
    }
    if (!(s.target.spec == config.grid) || s.target.entries.size() != config.grid.cells()) {
      throw Error(ErrorCode::SpecMismatch,
                  "sample " + std::to_string(i) + " target does not match the training grid");
    }
  }

  TrainResult result{init_params(dims, config.grid, config.seed), {}};
  ModelParams& params = result.params;
  AdamState adam = make_adam_state(params);
  ModelParams grad = zeros_like(params);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr = lr_schedule(config, epoch);
    const auto order = epoch_order(config.seed, epoch, dataset.size());
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(start + config.batch_size, order.size());
      const double scale = 1.0 / static_cast<double>(stop - start);
      for_each_block(grad, [](std::span<double> b) { std::fill(b.begin(), b.end(), 0.0); });
      for (std::size_t i = start; i < stop; ++i) {
        const auto& sample = dataset[order[i]];
        epoch_loss += accumulate_gradient(params, sample.features, sample.target, grad, scale);
      }
      adam_step(params, grad, adam, lr);
    }
    result.loss_history.push_back(epoch_loss / static_cast<double>(dataset.size()));
  }
  return result;
}

}  // namespace gazegrid
