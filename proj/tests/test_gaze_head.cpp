#include <cmath>
#include <numbers>

#include "doctest.h"
#include "gazegrid/error.hpp"
#include "gazegrid/gaze_head.hpp"
#include "gazegrid/random.hpp"
#include "gazegrid/synthetic.hpp"
#include "oracles/oracles.hpp"
#include "test_helpers.hpp"

using namespace gazegrid;

namespace {

FeatureTensor random_features(std::mt19937_64& rng, FeatureDims dims) {
  FeatureTensor t{dims, std::vector<double>(dims.size())};
  for (double& v : t.values) v = uniform(rng, -1.0, 1.0);
  return t;
}

GridVector random_target(std::mt19937_64& rng, GridSpec spec) {
  GridVector y{spec, std::vector<std::uint8_t>(spec.cells())};
  for (auto& e : y.entries) e = static_cast<std::uint8_t>(uniform_below(rng, 2));
  return y;
}

// Random weights and non-zero biases so every parameter gets exercised.
ModelParams random_params(std::uint64_t seed, FeatureDims dims, GridSpec grid) {
  ModelParams p = init_params(dims, grid, seed);
  auto rng = make_engine(seed, 99);
  for (double& b : p.conv_biases) b = uniform(rng, -0.5, 0.5);
  for (double& b : p.dense_biases) b = uniform(rng, -0.5, 0.5);
  for (double& w : p.dense_weights) w *= 3.0;
  return p;
}

double loss_at(const ModelParams& p, const FeatureTensor& v, const GridVector& y) {
  return bce_loss(forward(p, v), y);
}

}  // namespace

TEST_SUITE("gaze-head") {

TEST_CASE("init_params is deterministic per seed") {
  const FeatureDims dims{3, 6, 8};
  const GridSpec grid{4, 4};
  CHECK(init_params(dims, grid, 42) == init_params(dims, grid, 42));
  CHECK_FALSE(init_params(dims, grid, 42) == init_params(dims, grid, 43));
}

TEST_CASE("init_params respects the fan-in bound and zero biases") {
  const FeatureDims dims{5, 7, 9};
  const ModelParams p = init_params(dims, {3, 3}, 1);
  const double conv_bound = std::sqrt(1.0 / 5.0);
  const double dense_bound = std::sqrt(1.0 / static_cast<double>(p.dense_inputs()));
  for (double w : p.conv_weights) CHECK(std::abs(w) <= conv_bound);
  for (double w : p.dense_weights) CHECK(std::abs(w) <= dense_bound);
  for (double b : p.conv_biases) CHECK(b == 0.0);
  for (double b : p.dense_biases) CHECK(b == 0.0);
  CHECK(p.dense_inputs() == 16 * 4 * 5);
}

TEST_CASE("forward with zero weights returns sigmoid of the dense biases") {
  ModelParams p = init_params({2, 4, 4}, {2, 2}, 0);
  for_each_block(p, [](std::span<double> b) { std::fill(b.begin(), b.end(), 0.0); });
  p.dense_biases = {-1.0, 0.0, 0.5, 2.0};
  auto rng = make_engine(1, 0);
  for (int i = 0; i < 3; ++i) {
    const GridActivation a = forward(p, random_features(rng, p.input_dims));
    for (std::size_t k = 0; k < 4; ++k) {
      CHECK(a.probs[k] == doctest::Approx(1.0 / (1.0 + std::exp(-p.dense_biases[k]))));
    }
  }
}

TEST_CASE("forward matches the straight-line oracle") {
  struct Case {
    FeatureDims dims;
    GridSpec grid;
  };
  for (const Case& c : {Case{{2, 4, 4}, {2, 2}}, Case{{3, 5, 3}, {1, 3}}, Case{{1, 1, 1}, {1, 1}}}) {
    const ModelParams p = random_params(7, c.dims, c.grid);
    auto rng = make_engine(7, 1);
    const FeatureTensor v = random_features(rng, c.dims);
    const auto expected =
        oracle::head_forward(p.conv_weights, p.conv_biases, p.dense_weights, p.dense_biases,
                             v.values, c.dims.channels, c.dims.height, c.dims.width, c.grid.cells());
    const GridActivation a = forward(p, v);
    REQUIRE(a.probs.size() == expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) CHECK(std::abs(a.probs[i] - expected[i]) < 1e-9);
  }
}

TEST_CASE("forward outputs stay strictly inside (0, 1)") {
  ModelParams p = random_params(3, {2, 4, 4}, {2, 2});
  p.dense_biases = {-30.0, -5.0, 5.0, 30.0};
  auto rng = make_engine(3, 0);
  const GridActivation a = forward(p, random_features(rng, p.input_dims));
  for (double q : a.probs) {
    CHECK(q > 0.0);
    CHECK(q < 1.0);
  }
}

TEST_CASE("forward rejects mismatched features") {
  const ModelParams p = init_params({2, 4, 4}, {2, 2}, 0);
  FeatureTensor v{{2, 4, 5}, std::vector<double>(40, 0.0)};
  CHECK(error_code([&] { forward(p, v); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("bce_loss values") {
  const GridSpec spec{1, 2};
  const GridActivation half{spec, {0.5, 0.5}};
  CHECK(bce_loss(half, GridVector{spec, {1, 0}}) == doctest::Approx(std::numbers::ln2).epsilon(1e-15));
  CHECK(bce_loss(half, GridVector{spec, {1, 1}}) == doctest::Approx(std::numbers::ln2).epsilon(1e-15));

  const GridActivation good{spec, {0.9, 0.1}};
  // -(1/2)(ln 0.9 + ln 0.9) = -ln 0.9
  CHECK(bce_loss(good, GridVector{spec, {1, 0}}) == doctest::Approx(0.10536051565782628).epsilon(1e-14));

  const GridActivation exact{spec, {1.0, 0.0}};
  const double l = bce_loss(exact, GridVector{spec, {1, 0}});
  CHECK(l >= 0.0);
  CHECK(l <= -std::log1p(-kProbClamp) + 1e-15);

  CHECK(error_code([&] { bce_loss(half, GridVector{{2, 1}, {1, 0}}); }) == ErrorCode::SpecMismatch);
}

TEST_CASE("bce_loss is non-negative") {
  auto rng = make_engine(21, 0);
  const GridSpec spec{3, 3};
  for (int i = 0; i < 200; ++i) {
    GridActivation a{spec, std::vector<double>(9)};
    for (double& q : a.probs) q = uniform01(rng);
    CHECK(bce_loss(a, random_target(rng, spec)) >= 0.0);
  }
}

TEST_CASE("analytic gradients match central finite differences") {
  const FeatureDims dims{2, 4, 4};
  const GridSpec grid{2, 2};
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    ModelParams p = random_params(seed, dims, grid);
    auto rng = make_engine(seed, 2);
    const FeatureTensor v = random_features(rng, dims);
    const GridVector y = random_target(rng, grid);
    const ModelParams g = backward(p, v, y);

    std::vector<double> analytic;
    for_each_block(g, [&](std::span<const double> b) { analytic.insert(analytic.end(), b.begin(), b.end()); });
    std::size_t k = 0;
    for_each_block(p, [&](std::span<double> block) {
      for (double& x : block) {
        const double numeric = oracle::central_difference([&] { return loss_at(p, v, y); }, x, 1e-4);
        const double a = analytic[k++];
        const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-7});
        worst = std::max(worst, rel);
        CHECK(rel < 1e-4);
      }
    });
    CHECK(k == count_params(p));
  }
  MESSAGE("worst relative gradient error " << worst);
}

TEST_CASE("gradient vanishes at clamped saturation") {
  ModelParams p = init_params({2, 4, 4}, {2, 2}, 0);
  for_each_block(p, [](std::span<double> b) { std::fill(b.begin(), b.end(), 0.0); });
  const GridVector y{{2, 2}, {1, 0, 0, 1}};
  for (std::size_t i = 0; i < 4; ++i) p.dense_biases[i] = y.entries[i] ? 40.0 : -40.0;
  auto rng = make_engine(5, 0);
  const ModelParams g = backward(p, random_features(rng, p.input_dims), y);
  double norm2 = 0.0;
  for_each_block(g, [&](std::span<const double> b) {
    for (double x : b) norm2 += x * x;
  });
  CHECK(std::sqrt(norm2) <= 1e-5);
}

TEST_CASE("conv-weight gradients scale linearly with the input near zero logits") {
  ModelParams p = init_params({3, 4, 6}, {2, 3}, 4);
  for (double& w : p.dense_weights) w *= 1e-6;  // logits ~ 0, sigmoid slope constant
  auto rng = make_engine(4, 0);
  FeatureTensor v = random_features(rng, p.input_dims);
  const GridVector y = random_target(rng, p.grid);
  const ModelParams g1 = backward(p, v, y);
  for (double& x : v.values) x *= 2.0;
  const ModelParams g2 = backward(p, v, y);
  for (std::size_t i = 0; i < g1.conv_weights.size(); ++i) {
    CHECK(g2.conv_weights[i] == doctest::Approx(2.0 * g1.conv_weights[i]).epsilon(1e-4));
  }
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
  ModelParams p = random_params(2, {2, 2, 2}, {1, 2});
  const ModelParams before = p;
  AdamState s = make_adam_state(p);
  adam_step(p, zeros_like(p), s, 0.01);
  CHECK(p == before);
  CHECK(s.step_count == 1);
}

TEST_CASE("adam: first step with unit gradient moves by lr") {
  ModelParams p = init_params({1, 1, 1}, {1, 1}, 0);
  const ModelParams before = p;
  ModelParams g = zeros_like(p);
  for_each_block(g, [](std::span<double> b) { std::fill(b.begin(), b.end(), 1.0); });
  AdamState s = make_adam_state(p);
  adam_step(p, g, s, 0.01);
  std::vector<double> a, b;
  for_each_block(p, [&](std::span<const double> x) { a.insert(a.end(), x.begin(), x.end()); });
  for_each_block(before, [&](std::span<const double> x) { b.insert(b.end(), x.begin(), x.end()); });
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs((b[i] - a[i]) - 0.01) < 1e-6);
}

TEST_CASE("adam: trajectory on a quadratic matches the scalar oracle") {
  ModelParams p = init_params({1, 1, 1}, {1, 1}, 5);
  auto rng = make_engine(5, 7);
  std::vector<double*> xs;
  for_each_block(p, [&](std::span<double> b) {
    for (double& x : b) xs.push_back(&x);
  });
  std::vector<double> centers(xs.size()), curv(xs.size()), shadow(xs.size());
  std::vector<oracle::ScalarAdam> oracles(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    centers[i] = uniform(rng, -2.0, 2.0);
    curv[i] = uniform(rng, 0.1, 3.0);
    shadow[i] = *xs[i];
  }
  AdamState s = make_adam_state(p);
  for (int step = 0; step < 100; ++step) {
    const double lr = uniform(rng, 0.001, 0.05);
    ModelParams g = zeros_like(p);
    std::size_t k = 0;
    for_each_block(g, [&](std::span<double> b) {
      for (double& x : b) {
        x = 2.0 * curv[k] * (*xs[k] - centers[k]);
        ++k;
      }
    });
    for (std::size_t i = 0; i < xs.size(); ++i) {
      shadow[i] = oracles[i].step(shadow[i], 2.0 * curv[i] * (shadow[i] - centers[i]), lr);
    }
    adam_step(p, g, s, lr);
    for (std::size_t i = 0; i < xs.size(); ++i) CHECK(std::abs(*xs[i] - shadow[i]) < 1e-9);
  }
}

TEST_CASE("adam: shape mismatch is rejected") {
  ModelParams p = init_params({1, 2, 2}, {1, 1}, 0);
  const ModelParams other = init_params({1, 2, 2}, {1, 2}, 0);
  AdamState s = make_adam_state(p);
  CHECK(error_code([&] { adam_step(p, other, s, 0.01); }) == ErrorCode::ShapeMismatch);
}

TEST_CASE("lr_schedule follows step decay") {
  TrainConfig c;
  c.base_lr = 0.01;
  c.decay_factor = 0.1;
  c.decay_every = 10;
  CHECK(lr_schedule(c, 0) == doctest::Approx(0.01));
  CHECK(lr_schedule(c, 9) == doctest::Approx(0.01));
  CHECK(lr_schedule(c, 10) == doctest::Approx(0.001));
  CHECK(lr_schedule(c, 25) == doctest::Approx(0.0001));
  for (std::size_t e = 1; e < 40; ++e) CHECK(lr_schedule(c, e) <= lr_schedule(c, e - 1));
  c.decay_factor = 1.0;
  for (std::size_t e = 0; e < 40; ++e) CHECK(lr_schedule(c, e) == 0.01);
}

TEST_CASE("count_params") {
  CHECK(count_params(init_params({512, 12, 20}, {16, 16}, 0)) == 254224);
  CHECK(count_params(init_params({1, 2, 2}, {1, 1}, 0)) == 49);
  const ModelParams a = init_params({4, 6, 6}, {2, 3}, 0);
  const ModelParams b = init_params({4, 6, 6}, {4, 3}, 0);
  const std::size_t conv = 16 * 4 + 16;
  CHECK(count_params(b) - conv == 2 * (count_params(a) - conv));
}

TEST_CASE("epoch_order is a permutation and a pure function of its inputs") {
  const auto a = epoch_order(9, 3, 50);
  CHECK(a == epoch_order(9, 3, 50));
  CHECK_FALSE(a == epoch_order(9, 4, 50));
  auto sorted = a;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) CHECK(sorted[i] == i);
}

TEST_CASE("train: validation errors") {
  TrainConfig c;
  c.grid = {2, 2};
  CHECK(error_code([&] { train({}, c); }) == ErrorCode::EmptyDataset);
  std::vector<TrainingSample> mixed{
      {FeatureTensor{{1, 2, 2}, std::vector<double>(4, 0.0)}, GridVector{{2, 2}, {1, 0, 0, 0}}},
      {FeatureTensor{{1, 2, 3}, std::vector<double>(6, 0.0)}, GridVector{{2, 2}, {1, 0, 0, 0}}}};
  CHECK(error_code([&] { train(mixed, c); }) == ErrorCode::InconsistentDims);
  c.epochs = 0;
  CHECK(error_code([&] { train(mixed, c); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("train: deterministic for a fixed seed") {
  auto rng = make_engine(12, 0);
  std::vector<TrainingSample> data;
  for (int i = 0; i < 20; ++i) {
    data.push_back({random_features(rng, {2, 4, 4}), random_target(rng, {2, 2})});
  }
  TrainConfig c;
  c.epochs = 5;
  c.batch_size = 4;
  c.grid = {2, 2};
  c.seed = 77;
  const TrainResult a = train(data, c);
  const TrainResult b = train(data, c);
  CHECK(a.params == b.params);
  CHECK(a.loss_history == b.loss_history);
  CHECK(a.loss_history.size() == 5);
}

TEST_CASE("train: memorizes a single sample") {
  auto rng = make_engine(13, 0);
  std::vector<TrainingSample> data{{random_features(rng, {3, 4, 6}), random_target(rng, {3, 3})}};
  TrainConfig c;
  c.epochs = 200;
  c.decay_factor = 1.0;
  c.grid = {3, 3};
  const TrainResult r = train(data, c);
  CHECK(r.loss_history.back() < 0.01);
}

TEST_CASE("train: loss decreases on synthetic scenes") {
  SceneSpec spec;
  std::vector<TrainingSample> data;
  for (const auto& s : generate_dataset(3, 120, spec)) {
    data.push_back({s.features, encode_grid(s.gt_map, {4, 4})});
  }
  TrainConfig c;
  c.epochs = 10;
  c.grid = {4, 4};
  const TrainResult r = train(data, c);
  CHECK(r.loss_history.back() < r.loss_history.front());
}

}  // TEST_SUITE
