#include <filesystem>
#include <sstream>

#include "doctest.h"
#include "gazegrid/error.hpp"
#include "gazegrid/pipeline.hpp"
#include "json.hpp"
#include "test_helpers.hpp"

using namespace gazegrid;
namespace fs = std::filesystem;

namespace {

// One small dataset shared by every case in this file.
struct Fixture {
  fs::path root = fs::temp_directory_path() / "gazegrid_test_pipeline";
  fs::path manifest;

  Fixture() {
    fs::remove_all(root);
    GenOptions g;
    g.seed = 3;
    g.train_count = 40;
    g.val_count = 2;
    g.test_count = 12;
    g.out_dir = root / "data";
    manifest = run_gen(g);
  }
  ~Fixture() { fs::remove_all(root); }
};

const Fixture& fixture() {
  static Fixture f;
  return f;
}

std::size_t count_lines(const std::string& text) {
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("parse_grid_spec") {
  const GridSpec g = parse_grid_spec("8x4");
  CHECK(g.rows == 8);
  CHECK(g.cols == 4);
  CHECK(error_code([] { parse_grid_spec("8"); }) == ErrorCode::InvalidArgument);
  CHECK(error_code([] { parse_grid_spec("0x4"); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("gen writes a loadable dataset") {
  const DatasetManifest m = load_manifest(fixture().manifest);
  CHECK(m.records.size() == 54);
  CHECK(m.select(Split::Train).size() == 40);
  CHECK(m.select(Split::Val).size() == 2);
  CHECK(m.select(Split::Test).size() == 12);
  const auto& r = *m.select(Split::Test).front();
  CHECK(fs::exists(r.feature_path));
  CHECK(load_map(r.gt_map_path).width() == m.frame_width);
  CHECK(load_tensor(r.feature_path).dims.size() == m.feature_dims.size());
}

TEST_CASE("train, predict and evaluate") {
  const fs::path dir = fixture().root / "run";
  TrainOptions t;
  t.manifest = fixture().manifest;
  t.config.epochs = 3;
  t.config.grid = {4, 4};
  t.checkpoint_out = dir / "model.gzh";
  t.history_out = dir / "history.csv";
  const TrainResult r = run_train(t);
  CHECK(load_checkpoint(t.checkpoint_out) == r.params);
  const std::string history = read_file(t.history_out);
  CHECK(history.rfind("epoch,lr,loss\n", 0) == 0);
  CHECK(count_lines(history) == 4);

  PredictOptions p;
  p.manifest = fixture().manifest;
  p.checkpoint = t.checkpoint_out;
  p.out_dir = dir / "pred";
  CHECK(run_predict(p) == 12);

  EvalOptions e;
  e.manifest = fixture().manifest;
  e.maps.directory = p.out_dir;
  e.metrics_out = dir / "metrics.json";
  e.frames_out = dir / "frames.csv";
  const EvalReport rep = run_eval(e);
  CHECK(rep.frames == 12);
  CHECK(rep.labels.size() == rep.scores.size());
  const auto j = nlohmann::json::parse(read_file(e.metrics_out));
  CHECK(j.size() == 12);
  for (const char* k : {"kl", "cc", "auc", "precision", "recall", "f1", "accuracy", "tp", "fp", "tn", "fn",
                        "threshold"}) {
    CHECK(j.contains(k));
  }
  CHECK(j["tp"].get<std::size_t>() + j["fp"].get<std::size_t>() + j["tn"].get<std::size_t>() +
            j["fn"].get<std::size_t>() ==
        rep.labels.size());
  const std::string frames = read_file(e.frames_out);
  CHECK(frames.rfind("frame_id,kl,cc,boxes,gt_focused,pred_focused,tp,fp,tn,fn\n", 0) == 0);
  CHECK(count_lines(frames) == 13);
}

TEST_CASE("ground truth scored against itself is perfect") {
  EvalOptions e;
  e.manifest = fixture().manifest;
  e.maps.directory = fixture().manifest.parent_path() / "gt";
  e.threshold = kDefaultBinarizeRatio;
  const EvalReport rep = run_eval(e);
  CHECK(rep.pixel.kl_divergence < 1e-6);
  CHECK(rep.pixel.correlation == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(rep.object.auc == 1.0);
  CHECK(rep.object.counts.fp == 0);
  CHECK(rep.object.counts.fn == 0);
}

TEST_CASE("map with threshold 1 focuses nothing") {
  MapOptions m;
  m.manifest = fixture().manifest;
  m.maps.directory = fixture().manifest.parent_path() / "gt";
  m.threshold = 1.0;
  m.out = fixture().root / "focus1.json";
  CHECK(run_map(m) == 0);
  m.threshold = 0.0;
  m.out = fixture().root / "focus0.json";
  CHECK(run_map(m) > 0);
  const auto j = nlohmann::json::parse(read_file(m.out));
  CHECK((j.is_object() || j.is_array()));
}

TEST_CASE("roc and baseline") {
  BaselineOptions b;
  b.manifest = fixture().manifest;
  b.out = fixture().root / "baseline.smf";
  const SaliencyMap mean = run_baseline(b);
  CHECK(load_map(b.out).width() == mean.width());

  RocOptions r;
  r.manifest = fixture().manifest;
  r.maps.single_file = b.out;
  r.curve_out = fixture().root / "roc.csv";
  const ThresholdChoice c = run_roc(r);
  CHECK(c.threshold >= 0.0);
  CHECK(c.threshold <= 1.0);
  const std::string csv = read_file(r.curve_out);
  CHECK(csv.rfind("threshold,tpr,fpr\ninf,0,0\n", 0) == 0);

  EvalOptions e;
  e.manifest = fixture().manifest;
  e.maps.single_file = b.out;
  e.auto_threshold = true;
  CHECK(run_eval(e).threshold == c.threshold);
}

TEST_CASE("missing predicted maps are reported") {
  EvalOptions e;
  e.manifest = fixture().manifest;
  e.maps.directory = fixture().root / "nowhere";
  CHECK(error_code([&] { run_eval(e); }) == ErrorCode::IoError);
}

}  // TEST_SUITE
