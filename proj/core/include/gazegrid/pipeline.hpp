#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gazegrid/formats.hpp"
#include "gazegrid/gaze_head.hpp"
#include "gazegrid/metrics.hpp"
#include "gazegrid/synthetic.hpp"

namespace gazegrid {

// File-level steps behind the command-line tool. Each function reads and
// writes only files, so any step can be swapped for external data.

/// Parses "16x16" (rows x cols).
GridSpec parse_grid_spec(std::string_view text);

struct GenOptions {
  std::uint64_t seed = 0;
  std::size_t train_count = 100;
  std::size_t val_count = 0;
  std::size_t test_count = 0;
  SceneSpec scene;
  std::filesystem::path out_dir;
};

/// Writes features/<id>.ftn, gt/<id>.smf, detections.ndjson and
/// manifest.json under out_dir. Returns the manifest path.
std::filesystem::path run_gen(const GenOptions& options);

struct TrainOptions {
  std::filesystem::path manifest;
  TrainConfig config;
  double ratio = kDefaultBinarizeRatio;
  std::filesystem::path checkpoint_out;
  std::filesystem::path history_out;  // CSV; skipped when empty
};

TrainResult run_train(const TrainOptions& options);

struct PredictOptions {
  std::filesystem::path manifest;
  std::filesystem::path checkpoint;
  std::filesystem::path out_dir;
  std::optional<double> sigma;  // default: half a cell
  std::optional<Split> split = Split::Test;
};

/// Writes <out_dir>/<frame_id>.smf at the manifest's frame size, raw (not
/// normalized). Returns the number of maps written.
std::size_t run_predict(const PredictOptions& options);

/// Where predicted maps come from: one file per frame in a directory, or a
/// single map shared by every frame (e.g. the mean-map baseline).
struct MapSource {
  std::filesystem::path directory;
  std::filesystem::path single_file;
};

struct MapOptions {
  std::filesystem::path manifest;
  MapSource maps;
  double threshold = 0.5;
  std::optional<Split> split = Split::Test;
  std::filesystem::path out;  // focus JSON
};

/// Returns the total number of focused boxes.
std::size_t run_map(const MapOptions& options);

struct EvalOptions {
  std::filesystem::path manifest;
  MapSource maps;
  std::optional<Split> split = Split::Test;
  double threshold = 0.5;
  bool auto_threshold = false;  // pick Th from the ROC curve
  ThresholdRule rule = ThresholdRule::GeometricMean;
  double ratio = kDefaultBinarizeRatio;
  MetricSize metric_size;
  std::filesystem::path metrics_out;  // JSON; skipped when empty
  std::filesystem::path frames_out;   // CSV; skipped when empty
};

struct EvalReport {
  PixelMetrics pixel;  // means over frames
  ObjectMetrics object;
  double threshold = 0.0;
  std::size_t frames = 0;
  std::vector<std::uint8_t> labels;
  std::vector<double> scores;
};

EvalReport run_eval(const EvalOptions& options);

/// Metrics JSON with the fields kl, cc, auc, precision, recall, f1,
/// accuracy, tp, fp, tn, fn, threshold.
std::string format_metrics_json(const EvalReport& report);

struct RocOptions {
  std::filesystem::path manifest;
  MapSource maps;
  std::optional<Split> split = Split::Test;
  ThresholdRule rule = ThresholdRule::GeometricMean;
  double ratio = kDefaultBinarizeRatio;
  std::filesystem::path curve_out;  // CSV
};

ThresholdChoice run_roc(const RocOptions& options);

struct BaselineOptions {
  std::filesystem::path manifest;
  std::optional<Split> split = Split::Train;
  std::size_t width = 0;  // 0: manifest frame size
  std::size_t height = 0;
  std::filesystem::path out;
};

SaliencyMap run_baseline(const BaselineOptions& options);

}  // namespace gazegrid
