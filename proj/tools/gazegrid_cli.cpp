// gazegrid: command-line front end for the grid gaze pipeline.
//
//   gen -> train -> predict -> map / eval / roc, plus baseline, encode,
//   decode and info. Every step reads and writes plain files.
//
// Module errors exit with status 1 and print one line to stderr:
//   error: <Code>: <message>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "gazegrid/error.hpp"
#include "gazegrid/formats.hpp"
#include "gazegrid/gaze_head.hpp"
#include "gazegrid/pipeline.hpp"
#include "gazegrid/saliency.hpp"

namespace fs = std::filesystem;
using namespace gazegrid;

namespace {

std::optional<Split> split_option(const std::string& text) {
  if (text == "all") return std::nullopt;
  return parse_split(text);
}

ThresholdRule rule_option(const std::string& text) {
  if (text == "gmean") return ThresholdRule::GeometricMean;
  if (text == "distance") return ThresholdRule::DistanceToCorner;
  throw Error(ErrorCode::InvalidArgument, "unknown threshold rule '" + text + "'");
}

MetricSize metric_size_option(const std::string& text) {
  // Same "HxW" syntax as grids.
  const GridSpec g = parse_grid_spec(text);
  return {g.cols, g.rows};
}

struct MapFlags {
  std::string dir;
  std::string file;

  void attach(CLI::App* cmd) {
    auto* d = cmd->add_option("--maps", dir, "Directory of <frame_id>.smf predicted maps");
    auto* f = cmd->add_option("--map-file", file, "Single map used for every frame");
    d->excludes(f);
  }
  MapSource source() const { return {dir, file}; }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Grid-based driver gaze prediction and attention-based object detection"};
  app.require_subcommand(1);

  // gen
  GenOptions gen;
  std::string gen_out;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a synthetic dataset and manifest");
  gen_cmd->add_option("--seed", gen.seed, "Dataset seed")->capture_default_str();
  gen_cmd->add_option("--count", gen.train_count, "Training frames")->capture_default_str();
  gen_cmd->add_option("--val-count", gen.val_count, "Validation frames")->capture_default_str();
  gen_cmd->add_option("--test-count", gen.test_count, "Test frames")->capture_default_str();
  gen_cmd->add_option("--out", gen_out, "Output directory")->required();
  gen_cmd->add_option("--center-bias", gen.scene.center_bias_weight, "Center-bias weight")
      ->capture_default_str();
  gen_cmd->add_option("--blob-sigma", gen.scene.blob_sigma, "Gaze blob sigma in pixels")
      ->capture_default_str();
  gen_cmd->add_option("--noise", gen.scene.noise_amplitude, "Feature noise amplitude")
      ->capture_default_str();

  // train
  TrainOptions tr;
  std::string tr_manifest, tr_out, tr_history, tr_grid = "16x16";
  auto* train_cmd = app.add_subcommand("train", "Train the gaze head on the train split");
  train_cmd->add_option("--manifest", tr_manifest, "Dataset manifest")->required();
  train_cmd->add_option("--out", tr_out, "Checkpoint path (GZH1)")->required();
  train_cmd->add_option("--history", tr_history, "Per-epoch loss CSV");
  train_cmd->add_option("--grid", tr_grid, "Grid as ROWSxCOLS")->capture_default_str();
  train_cmd->add_option("--epochs", tr.config.epochs)->capture_default_str();
  train_cmd->add_option("--lr", tr.config.base_lr, "Initial learning rate")->capture_default_str();
  train_cmd->add_option("--decay", tr.config.decay_factor)->capture_default_str();
  train_cmd->add_option("--decay-every", tr.config.decay_every)->capture_default_str();
  train_cmd->add_option("--batch-size", tr.config.batch_size)->capture_default_str();
  train_cmd->add_option("--seed", tr.config.seed)->capture_default_str();
  train_cmd->add_option("--ratio", tr.ratio, "Binarization ratio")->capture_default_str();

  // predict
  PredictOptions pr;
  std::string pr_manifest, pr_model, pr_out, pr_split = "test";
  double pr_sigma = -1.0;
  auto* predict_cmd = app.add_subcommand("predict", "Write predicted saliency maps");
  predict_cmd->add_option("--manifest", pr_manifest)->required();
  predict_cmd->add_option("--model", pr_model, "Checkpoint (GZH1)")->required();
  predict_cmd->add_option("--out", pr_out, "Output directory for .smf maps")->required();
  predict_cmd->add_option("--split", pr_split, "train|val|test|all")->capture_default_str();
  predict_cmd->add_option("--sigma", pr_sigma, "Blur sigma in pixels (default: half a cell)");

  // map
  MapOptions mp;
  MapFlags mp_maps;
  std::string mp_manifest, mp_out, mp_split = "test";
  auto* map_cmd = app.add_subcommand("map", "Score detections against predicted maps");
  map_cmd->add_option("--manifest", mp_manifest)->required();
  mp_maps.attach(map_cmd);
  map_cmd->add_option("--th", mp.threshold, "Focus threshold")->capture_default_str();
  map_cmd->add_option("--split", mp_split)->capture_default_str();
  map_cmd->add_option("--out", mp_out, "Focus JSON")->required();

  // eval
  EvalOptions ev;
  MapFlags ev_maps;
  std::string ev_manifest, ev_out, ev_frames, ev_split = "test", ev_rule = "gmean",
                                              ev_size = "36x64";
  auto* eval_cmd = app.add_subcommand("eval", "Pixel- and object-level metrics");
  eval_cmd->add_option("--manifest", ev_manifest)->required();
  ev_maps.attach(eval_cmd);
  eval_cmd->add_option("--split", ev_split)->capture_default_str();
  eval_cmd->add_option("--th", ev.threshold, "Focus threshold")->capture_default_str();
  eval_cmd->add_flag("--auto-th", ev.auto_threshold, "Pick the threshold from the ROC curve");
  eval_cmd->add_option("--rule", ev_rule, "gmean|distance")->capture_default_str();
  eval_cmd->add_option("--ratio", ev.ratio, "Ground-truth focus ratio")->capture_default_str();
  eval_cmd->add_option("--metric-size", ev_size, "Resize for KL/CC as HxW")->capture_default_str();
  eval_cmd->add_option("--out", ev_out, "Metrics JSON")->required();
  eval_cmd->add_option("--frames", ev_frames, "Per-frame CSV");

  // roc
  RocOptions rc;
  MapFlags rc_maps;
  std::string rc_manifest, rc_out, rc_split = "test", rc_rule = "gmean";
  auto* roc_cmd = app.add_subcommand("roc", "ROC curve and optimal threshold");
  roc_cmd->add_option("--manifest", rc_manifest)->required();
  rc_maps.attach(roc_cmd);
  roc_cmd->add_option("--split", rc_split)->capture_default_str();
  roc_cmd->add_option("--rule", rc_rule, "gmean|distance")->capture_default_str();
  roc_cmd->add_option("--ratio", rc.ratio)->capture_default_str();
  roc_cmd->add_option("--out", rc_out, "Curve CSV")->required();

  // baseline
  BaselineOptions bl;
  std::string bl_manifest, bl_out, bl_split = "train";
  auto* baseline_cmd = app.add_subcommand("baseline", "Mean ground-truth map");
  baseline_cmd->add_option("--manifest", bl_manifest)->required();
  baseline_cmd->add_option("--split", bl_split)->capture_default_str();
  baseline_cmd->add_option("--width", bl.width, "Output width (default: frame width)");
  baseline_cmd->add_option("--height", bl.height, "Output height (default: frame height)");
  baseline_cmd->add_option("--out", bl_out, "Output map (SMF1)")->required();

  // encode
  std::string en_map, en_grid = "16x16", en_out;
  double en_ratio = kDefaultBinarizeRatio;
  auto* encode_cmd = app.add_subcommand("encode", "Saliency map to grid vector");
  encode_cmd->add_option("--map", en_map, "Input map (SMF1)")->required();
  encode_cmd->add_option("--grid", en_grid)->capture_default_str();
  encode_cmd->add_option("--ratio", en_ratio)->capture_default_str();
  encode_cmd->add_option("--out", en_out, "Grid JSON (default: stdout)");

  // decode
  std::string de_in, de_out, de_norm = "none";
  std::size_t de_width = 0, de_height = 0;
  double de_sigma = -1.0;
  auto* decode_cmd = app.add_subcommand("decode", "Grid activation to saliency map");
  decode_cmd->add_option("--grid-file", de_in, "Grid JSON {rows, cols, values}")->required();
  decode_cmd->add_option("--width", de_width)->required();
  decode_cmd->add_option("--height", de_height)->required();
  decode_cmd->add_option("--sigma", de_sigma, "Blur sigma (default: half a cell)");
  decode_cmd->add_option("--normalize", de_norm, "none|peak|distribution")->capture_default_str();
  decode_cmd->add_option("--out", de_out, "Output map (SMF1)")->required();

  // info
  std::string in_model;
  auto* info_cmd = app.add_subcommand("info", "Checkpoint dims and parameter count");
  info_cmd->add_option("--model", in_model)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen_cmd->parsed()) {
      gen.out_dir = gen_out;
      std::cout << run_gen(gen).generic_string() << "\n";
    } else if (train_cmd->parsed()) {
      tr.manifest = tr_manifest;
      tr.checkpoint_out = tr_out;
      tr.history_out = tr_history;
      tr.config.grid = parse_grid_spec(tr_grid);
      const TrainResult r = run_train(tr);
      std::cout << "final_loss " << fmt(r.loss_history.back()) << "\n";
    } else if (predict_cmd->parsed()) {
      pr.manifest = pr_manifest;
      pr.checkpoint = pr_model;
      pr.out_dir = pr_out;
      pr.split = split_option(pr_split);
      if (pr_sigma >= 0.0) pr.sigma = pr_sigma;
      std::cout << "maps " << run_predict(pr) << "\n";
    } else if (map_cmd->parsed()) {
      mp.manifest = mp_manifest;
      mp.maps = mp_maps.source();
      mp.split = split_option(mp_split);
      mp.out = mp_out;
      std::cout << "focused " << run_map(mp) << "\n";
    } else if (eval_cmd->parsed()) {
      ev.manifest = ev_manifest;
      ev.maps = ev_maps.source();
      ev.split = split_option(ev_split);
      ev.rule = rule_option(ev_rule);
      ev.metric_size = metric_size_option(ev_size);
      ev.metrics_out = ev_out;
      ev.frames_out = ev_frames;
      std::cout << format_metrics_json(run_eval(ev));
    } else if (roc_cmd->parsed()) {
      rc.manifest = rc_manifest;
      rc.maps = rc_maps.source();
      rc.split = split_option(rc_split);
      rc.rule = rule_option(rc_rule);
      rc.curve_out = rc_out;
      const ThresholdChoice c = run_roc(rc);
      std::cout << "threshold " << fmt(c.threshold) << " tpr " << fmt(c.point.tpr) << " fpr "
                << fmt(c.point.fpr) << "\n";
    } else if (baseline_cmd->parsed()) {
      bl.manifest = bl_manifest;
      bl.split = split_option(bl_split);
      bl.out = bl_out;
      const SaliencyMap m = run_baseline(bl);
      std::cout << "baseline " << m.width() << "x" << m.height() << "\n";
    } else if (encode_cmd->parsed()) {
      const GridVector y = encode_grid(load_map(en_map), parse_grid_spec(en_grid), en_ratio);
      const std::string text = format_grid(y.spec, std::vector<double>(y.entries.begin(), y.entries.end()));
      if (en_out.empty()) std::cout << text;
      else write_file(en_out, text);
    } else if (decode_cmd->parsed()) {
      const GridActivation act = parse_grid(read_file(de_in));
      const double sigma =
          de_sigma >= 0.0 ? de_sigma : default_decode_sigma(act.spec, de_width, de_height);
      SaliencyMap m = decode_grid(act, de_width, de_height, sigma);
      if (de_norm == "peak") m = normalize_peak(m);
      else if (de_norm == "distribution") m = normalize_distribution(m);
      else if (de_norm != "none") throw Error(ErrorCode::InvalidArgument, "unknown normalization");
      save_map(de_out, m);
    } else if (info_cmd->parsed()) {
      const ModelParams p = load_checkpoint(in_model);
      const nlohmann::json out = {{"channels", p.input_dims.channels},
                                  {"height", p.input_dims.height},
                                  {"width", p.input_dims.width},
                                  {"grid_rows", p.grid.rows},
                                  {"grid_cols", p.grid.cols},
                                  {"parameters", count_params(p)}};
      std::cout << out.dump() << "\n";
    }
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: Internal: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
