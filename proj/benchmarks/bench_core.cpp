#include <benchmark/benchmark.h>

#include <vector>

#include "gazegrid/attention.hpp"
#include "gazegrid/gaze_head.hpp"
#include "gazegrid/metrics.hpp"
#include "gazegrid/random.hpp"
#include "gazegrid/saliency.hpp"
#include "gazegrid/synthetic.hpp"

using namespace gazegrid;

namespace {

SaliencyMap random_map(std::uint64_t seed, std::size_t w, std::size_t h) {
  auto rng = make_engine(seed, 0);
  std::vector<double> v(w * h);
  for (double& x : v) x = uniform01(rng);
  return SaliencyMap(w, h, std::move(v));
}

FeatureTensor random_features(FeatureDims dims) {
  auto rng = make_engine(1, 1);
  FeatureTensor t{dims, std::vector<double>(dims.size())};
  for (double& x : t.values) x = uniform(rng, -1.0, 1.0);
  return t;
}

}  // namespace

static void BM_EncodeGrid(benchmark::State& state) {
  const SaliencyMap m = random_map(1, 512, 288);
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(encode_grid(m, {n, n}));
}
BENCHMARK(BM_EncodeGrid)->Arg(4)->Arg(16);

static void BM_DecodeGrid(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const GridSpec spec{n, n};
  GridActivation act{spec, std::vector<double>(spec.cells(), 0.5)};
  const double sigma = default_decode_sigma(spec, 512, 288);
  for (auto _ : state) benchmark::DoNotOptimize(decode_grid(act, 512, 288, sigma));
}
BENCHMARK(BM_DecodeGrid)->Arg(4)->Arg(16);

static void BM_Forward(benchmark::State& state) {
  const FeatureDims dims{static_cast<std::size_t>(state.range(0)), 12, 20};
  const ModelParams p = init_params(dims, {16, 16}, 0);
  const FeatureTensor v = random_features(dims);
  for (auto _ : state) benchmark::DoNotOptimize(forward(p, v));
}
BENCHMARK(BM_Forward)->Arg(8)->Arg(512);

static void BM_Backward(benchmark::State& state) {
  const FeatureDims dims{static_cast<std::size_t>(state.range(0)), 12, 20};
  const ModelParams p = init_params(dims, {16, 16}, 0);
  const FeatureTensor v = random_features(dims);
  GridVector y{{16, 16}, std::vector<std::uint8_t>(256, 0)};
  y.entries[37] = 1;
  for (auto _ : state) benchmark::DoNotOptimize(backward(p, v, y));
}
BENCHMARK(BM_Backward)->Arg(8)->Arg(512);

static void BM_PixelMetrics(benchmark::State& state) {
  const SaliencyMap a = random_map(2, 512, 288);
  const SaliencyMap b = random_map(3, 512, 288);
  for (auto _ : state) {
    benchmark::DoNotOptimize(kl_divergence(a, b));
    benchmark::DoNotOptimize(pearson_cc(a, b));
  }
}
BENCHMARK(BM_PixelMetrics);

static void BM_Auc(benchmark::State& state) {
  auto rng = make_engine(4, 0);
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<std::uint8_t> labels(n);
  std::vector<double> scores(n);
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = static_cast<std::uint8_t>(uniform_below(rng, 2));
    scores[i] = uniform01(rng);
  }
  for (auto _ : state) benchmark::DoNotOptimize(auc(labels, scores));
}
BENCHMARK(BM_Auc)->Arg(1000)->Arg(100000);

static void BM_DetectFocused(benchmark::State& state) {
  const SyntheticSample s = generate_scene(5, 0, SceneSpec{});
  const SaliencyMap m = normalize_peak(s.gt_map);
  for (auto _ : state) benchmark::DoNotOptimize(detect_focused(m, s.detections, 0.5));
}
BENCHMARK(BM_DetectFocused);

static void BM_GenerateScene(benchmark::State& state) {
  const SceneSpec spec;
  std::uint64_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(generate_scene(6, i++, spec));
}
BENCHMARK(BM_GenerateScene);

BENCHMARK_MAIN();
