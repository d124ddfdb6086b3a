#include "gazegrid/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <memory>

#include "json.hpp"

#include "gazegrid/attention.hpp"
#include "gazegrid/error.hpp"

namespace gazegrid {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Loads detection files once and hands out per-frame sets.
class DetectionIndex {
 public:
  const DetectionSet& frame(const SampleRecord& record) {
    auto it = files_.find(record.detections_path);
    if (it == files_.end()) {
      auto by_frame = std::make_unique<std::map<std::string, DetectionSet>>();
      for (auto& set : load_detections(record.detections_path)) {
        const std::string id = set.frame_id;
        by_frame->emplace(id, std::move(set));
      }
      it = files_.emplace(record.detections_path, std::move(by_frame)).first;
    }
    auto found = it->second->find(record.frame_id);
    if (found == it->second->end()) {
      // A frame with no detections is legal: it contributes no boxes.
      found = it->second->emplace(record.frame_id, DetectionSet{record.frame_id, {}}).first;
    }
    return found->second;
  }

 private:
  std::map<fs::path, std::unique_ptr<std::map<std::string, DetectionSet>>> files_;
};

class MapLoader {
 public:
  explicit MapLoader(MapSource source) : source_(std::move(source)) {
    if (source_.directory.empty() == source_.single_file.empty()) {
      throw Error(ErrorCode::InvalidArgument, "give exactly one of a map directory or a map file");
    }
    if (!source_.single_file.empty()) shared_ = load_map(source_.single_file);
  }

  SaliencyMap load(const std::string& frame_id) const {
    if (shared_) return *shared_;
    return load_map(source_.directory / (frame_id + ".smf"));
  }

 private:
  MapSource source_;
  std::optional<SaliencyMap> shared_;
};

SaliencyMap at_frame_size(const SaliencyMap& map, const DatasetManifest& m) {
  if (map.width() == m.frame_width && map.height() == m.frame_height) return map;
  return resize_bilinear(map, m.frame_width, m.frame_height);
}

FeatureTensor load_features(const SampleRecord& r, const DatasetManifest& m) {
  FeatureTensor t = load_tensor(r.feature_path);
  if (!(t.dims == m.feature_dims)) {
    throw Error(ErrorCode::InconsistentDims,
                "features of " + r.frame_id + " do not match the manifest feature dims");
  }
  return t;
}

std::vector<const SampleRecord*> require_records(const DatasetManifest& m,
                                                 std::optional<Split> split) {
  auto records = m.select(split);
  if (records.empty()) {
    throw Error(ErrorCode::EmptyDataset, split ? "manifest has no records in split " +
                                                     std::string(to_string(*split))
                                               : "manifest has no records");
  }
  return records;
}

// Ground-truth labels and predicted focus scores for every box, frame by frame.
struct FrameScores {
  std::string frame_id;
  std::vector<std::uint8_t> labels;
  std::vector<double> scores;
  double kl = 0.0;
  double cc = 0.0;
};

template <typename Fn>
void for_each_scored_frame(const DatasetManifest& m, std::optional<Split> split,
                           const MapSource& maps, double ratio, bool pixel_metrics,
                           MetricSize size, Fn&& fn) {
  MapLoader loader(maps);
  DetectionIndex detections;
  for (const SampleRecord* r : require_records(m, split)) {
    const SaliencyMap gt = at_frame_size(load_map(r->gt_map_path), m);
    const SaliencyMap pred = normalize_peak(at_frame_size(loader.load(r->frame_id), m));
    const DetectionSet& dets = detections.frame(*r);
    FrameScores f;
    f.frame_id = r->frame_id;
    f.labels = label_ground_truth(gt, dets, ratio);
    f.scores = detect_focused(pred, dets, 0.0).focus_probability;
    if (pixel_metrics) {
      f.kl = kl_divergence(gt, pred, size);
      f.cc = pearson_cc(gt, pred, size);
    }
    fn(f);
  }
}

std::vector<std::uint8_t> decide(const std::vector<double>& scores, double threshold) {
  std::vector<std::uint8_t> out(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) out[i] = scores[i] > threshold ? 1 : 0;
  return out;
}

}  // namespace

GridSpec parse_grid_spec(std::string_view text) {
  const auto x = text.find_first_of("xX");
  auto parse = [&](std::string_view part) -> std::size_t {
    std::size_t value = 0;
    if (part.empty()) throw Error(ErrorCode::InvalidArgument, "bad grid spec");
    for (char ch : part) {
      if (ch < '0' || ch > '9') throw Error(ErrorCode::InvalidArgument, "bad grid spec");
      value = value * 10 + static_cast<std::size_t>(ch - '0');
      if (value > 4096) throw Error(ErrorCode::InvalidArgument, "grid too large");
    }
    return value;
  };
  if (x == std::string_view::npos) {
    throw Error(ErrorCode::InvalidArgument, "grid must look like ROWSxCOLS, got " + std::string(text));
  }
  GridSpec spec{parse(text.substr(0, x)), parse(text.substr(x + 1))};
  validate(spec);
  return spec;
}

fs::path run_gen(const GenOptions& o) {
  validate(o.scene);
  const std::size_t total = o.train_count + o.val_count + o.test_count;
  if (total == 0) throw Error(ErrorCode::InvalidArgument, "nothing to generate");

  DatasetManifest manifest;
  manifest.frame_width = o.scene.frame_width;
  manifest.frame_height = o.scene.frame_height;
  manifest.feature_dims = o.scene.feature_dims;
  std::vector<DetectionSet> all_detections;
  all_detections.reserve(total);

  for (std::size_t index = 0; index < total; ++index) {
    const Split split = index < o.train_count                  ? Split::Train
                        : index < o.train_count + o.val_count ? Split::Val
                                                               : Split::Test;
    SyntheticSample s = generate_scene(o.seed, index, o.scene);
    const std::string id = s.detections.frame_id;
    SampleRecord rec{id, fs::path("features") / (id + ".ftn"), fs::path("gt") / (id + ".smf"),
                     fs::path("detections.ndjson"), split};
    save_tensor(o.out_dir / rec.feature_path, s.features);
    save_map(o.out_dir / rec.gt_map_path, s.gt_map);
    all_detections.push_back(std::move(s.detections));
    manifest.records.push_back(std::move(rec));
  }
  save_detections(o.out_dir / "detections.ndjson", all_detections);
  const fs::path manifest_path = o.out_dir / "manifest.json";
  save_manifest(manifest_path, manifest);
  return manifest_path;
}

TrainResult run_train(const TrainOptions& o) {
  validate(o.config);
  const DatasetManifest m = load_manifest(o.manifest);
  std::vector<TrainingSample> dataset;
  for (const SampleRecord* r : require_records(m, Split::Train)) {
    FeatureTensor features = load_features(*r, m);
    GridVector target = encode_grid(load_map(r->gt_map_path), o.config.grid, o.ratio);
    dataset.push_back({std::move(features), std::move(target)});
  }
  TrainResult result = train(dataset, o.config);
  if (!o.checkpoint_out.empty()) save_checkpoint(o.checkpoint_out, result.params);
  if (!o.history_out.empty()) {
    std::string csv = "epoch,lr,loss\n";
    for (std::size_t e = 0; e < result.loss_history.size(); ++e) {
      csv += std::to_string(e) + "," + format_double(lr_schedule(o.config, e)) + "," +
             format_double(result.loss_history[e]) + "\n";
    }
    write_file(o.history_out, csv);
  }
  return result;
}

std::size_t run_predict(const PredictOptions& o) {
  const DatasetManifest m = load_manifest(o.manifest);
  const ModelParams params = load_checkpoint(o.checkpoint);
  if (!(params.input_dims == m.feature_dims)) {
    throw Error(ErrorCode::DimensionMismatch, "checkpoint input dims differ from manifest");
  }
  const double sigma =
      o.sigma.value_or(default_decode_sigma(params.grid, m.frame_width, m.frame_height));
  std::size_t written = 0;
  for (const SampleRecord* r : require_records(m, o.split)) {
    const GridActivation act = forward(params, load_features(*r, m));
    save_map(o.out_dir / (r->frame_id + ".smf"),
             decode_grid(act, m.frame_width, m.frame_height, sigma));
    ++written;
  }
  return written;
}

std::size_t run_map(const MapOptions& o) {
  const DatasetManifest m = load_manifest(o.manifest);
  MapLoader loader(o.maps);
  DetectionIndex detections;
  json frames = json::array();
  std::size_t focused_total = 0;
  std::size_t box_total = 0;
  for (const SampleRecord* r : require_records(m, o.split)) {
    const SaliencyMap pred = normalize_peak(at_frame_size(loader.load(r->frame_id), m));
    const DetectionSet& dets = detections.frame(*r);
    const FocusResult res = detect_focused(pred, dets, o.threshold);
    json boxes = json::array();
    for (std::size_t i = 0; i < dets.boxes.size(); ++i) {
      const auto& b = dets.boxes[i];
      boxes.push_back({{"index", i},
                       {"class_id", b.class_id},
                       {"confidence", b.detector_confidence},
                       {"x_min", b.x_min},
                       {"y_min", b.y_min},
                       {"x_max", b.x_max},
                       {"y_max", b.y_max},
                       {"focus_probability", res.focus_probability[i]},
                       {"focused", res.focused[i] != 0},
                       {"empty_intersection", res.empty_intersection[i] != 0}});
    }
    focused_total += res.focused_count();
    box_total += dets.boxes.size();
    frames.push_back({{"frame_id", r->frame_id}, {"boxes", std::move(boxes)}});
  }
  json out = {{"threshold", o.threshold},
              {"boxes", box_total},
              {"focused", focused_total},
              {"frames", std::move(frames)}};
  if (!o.out.empty()) write_file(o.out, out.dump(1) + "\n");
  return focused_total;
}

EvalReport run_eval(const EvalOptions& o) {
  if (!(o.threshold >= 0.0 && o.threshold <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "threshold must lie in [0, 1]");
  }
  const DatasetManifest m = load_manifest(o.manifest);
  EvalReport report;
  std::vector<FrameScores> frames;
  double kl_sum = 0.0;
  double cc_sum = 0.0;
  for_each_scored_frame(m, o.split, o.maps, o.ratio, true, o.metric_size,
                        [&](FrameScores& f) {
                          kl_sum += f.kl;
                          cc_sum += f.cc;
                          report.labels.insert(report.labels.end(), f.labels.begin(),
                                               f.labels.end());
                          report.scores.insert(report.scores.end(), f.scores.begin(),
                                               f.scores.end());
                          frames.push_back(std::move(f));
                        });
  report.frames = frames.size();
  report.pixel.kl_divergence = kl_sum / static_cast<double>(report.frames);
  report.pixel.correlation = cc_sum / static_cast<double>(report.frames);

  report.threshold = o.threshold;
  if (o.auto_threshold) {
    report.threshold = optimal_threshold(roc_curve(report.labels, report.scores), o.rule).threshold;
  }
  report.object.auc = auc(report.labels, report.scores);
  report.object.counts = confusion(report.labels, decide(report.scores, report.threshold));
  report.object.scores = prf_accuracy(report.object.counts);

  if (!o.metrics_out.empty()) write_file(o.metrics_out, format_metrics_json(report));
  if (!o.frames_out.empty()) {
    std::string csv = "frame_id,kl,cc,boxes,gt_focused,pred_focused,tp,fp,tn,fn\n";
    for (const auto& f : frames) {
      const auto decisions = decide(f.scores, report.threshold);
      const ConfusionCounts c = confusion(f.labels, decisions);
      csv += f.frame_id + "," + format_double(f.kl) + "," + format_double(f.cc) + "," +
             std::to_string(f.labels.size()) + "," + std::to_string(c.tp + c.fn) + "," +
             std::to_string(c.tp + c.fp) + "," + std::to_string(c.tp) + "," +
             std::to_string(c.fp) + "," + std::to_string(c.tn) + "," + std::to_string(c.fn) +
             "\n";
    }
    write_file(o.frames_out, csv);
  }
  return report;
}

std::string format_metrics_json(const EvalReport& r) {
  const json out = {{"kl", r.pixel.kl_divergence},
                    {"cc", r.pixel.correlation},
                    {"auc", r.object.auc},
                    {"precision", r.object.scores.precision},
                    {"recall", r.object.scores.recall},
                    {"f1", r.object.scores.f1},
                    {"accuracy", r.object.scores.accuracy},
                    {"tp", r.object.counts.tp},
                    {"fp", r.object.counts.fp},
                    {"tn", r.object.counts.tn},
                    {"fn", r.object.counts.fn},
                    {"threshold", r.threshold}};
  return out.dump(2) + "\n";
}

ThresholdChoice run_roc(const RocOptions& o) {
  const DatasetManifest m = load_manifest(o.manifest);
  std::vector<std::uint8_t> labels;
  std::vector<double> scores;
  for_each_scored_frame(m, o.split, o.maps, o.ratio, false, MetricSize{}, [&](FrameScores& f) {
    labels.insert(labels.end(), f.labels.begin(), f.labels.end());
    scores.insert(scores.end(), f.scores.begin(), f.scores.end());
  });
  const RocCurve curve = roc_curve(labels, scores);
  const ThresholdChoice choice = optimal_threshold(curve, o.rule);
  if (!o.curve_out.empty()) {
    std::string csv = "threshold,tpr,fpr\n";
    for (const auto& p : curve.points) {
      csv += (std::isinf(p.threshold) ? std::string("inf") : format_double(p.threshold)) + "," +
             format_double(p.tpr) + "," + format_double(p.fpr) + "\n";
    }
    write_file(o.curve_out, csv);
  }
  return choice;
}

SaliencyMap run_baseline(const BaselineOptions& o) {
  const DatasetManifest m = load_manifest(o.manifest);
  const std::size_t w = o.width ? o.width : m.frame_width;
  const std::size_t h = o.height ? o.height : m.frame_height;
  BaselineAccumulator acc(w, h);
  for (const SampleRecord* r : require_records(m, o.split)) acc.add(load_map(r->gt_map_path));
  SaliencyMap mean = acc.result();
  if (!o.out.empty()) save_map(o.out, mean);
  return mean;
}

}  // namespace gazegrid
