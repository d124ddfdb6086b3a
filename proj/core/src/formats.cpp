#include "gazegrid/formats.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "json.hpp"

#include "gazegrid/error.hpp"

namespace gazegrid {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

std::uint32_t get_u32(std::string_view in, std::size_t offset) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[offset + i])) << (8 * i);
  }
  return v;
}

std::uint64_t get_u64(std::string_view in, std::size_t offset) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[offset + i])) << (8 * i);
  }
  return v;
}

void put_f32(std::string& out, double v) {
  put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
}

double get_f32(std::string_view in, std::size_t offset) {
  return static_cast<double>(std::bit_cast<float>(get_u32(in, offset)));
}

// Parses "<magic> <n1> ... <nk>\n" and returns the dims and payload offset.
std::vector<std::size_t> parse_text_header(std::string_view bytes, std::string_view magic,
                                           std::size_t dim_count, std::size_t& payload_offset) {
  const auto newline = bytes.find('\n');
  if (newline == std::string_view::npos || newline > 256) {
    throw Error(ErrorCode::MalformedHeader, "missing header line");
  }
  const std::string header(bytes.substr(0, newline));
  std::istringstream in(header);
  std::string tag;
  in >> tag;
  if (tag != magic) {
    throw Error(ErrorCode::MalformedHeader,
                "expected magic " + std::string(magic) + ", found '" + tag + "'");
  }
  std::vector<std::size_t> dims;
  for (std::size_t i = 0; i < dim_count; ++i) {
    long long v = 0;
    if (!(in >> v) || v <= 0) {
      throw Error(ErrorCode::MalformedHeader, "header must carry " + std::to_string(dim_count) +
                                                  " positive dimensions");
    }
    dims.push_back(static_cast<std::size_t>(v));
  }
  std::string extra;
  if (in >> extra) throw Error(ErrorCode::MalformedHeader, "unexpected header token: " + extra);
  payload_offset = newline + 1;
  return dims;
}

void check_payload(std::size_t available, std::size_t expected) {
  if (available < expected) {
    throw Error(ErrorCode::TruncatedPayload, "payload holds " + std::to_string(available) +
                                                 " bytes, expected " + std::to_string(expected));
  }
  if (available > expected) {
    throw Error(ErrorCode::TruncatedPayload, "payload has " +
                                                 std::to_string(available - expected) +
                                                 " trailing bytes");
  }
}

std::string path_string(const fs::path& p) { return p.generic_string(); }

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

[[noreturn]] void parse_fail(std::size_t line, const std::string& what) {
  throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + what);
}

}  // namespace

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path_string(path));
  std::ostringstream buf;
  buf << in.rdbuf();
  return std::move(buf).str();
}

void write_file(const fs::path& path, std::string_view bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path_string(path));
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path_string(path));
}

// ---- SMF1 -----------------------------------------------------------------

std::string encode_map(const SaliencyMap& map) {
  std::string out = "SMF1 " + std::to_string(map.width()) + " " + std::to_string(map.height()) + "\n";
  out.reserve(out.size() + 4 * map.size());
  for (double v : map.values()) put_f32(out, v);
  return out;
}

SaliencyMap decode_map(std::string_view bytes) {
  std::size_t offset = 0;
  const auto dims = parse_text_header(bytes, "SMF1", 2, offset);
  const std::size_t count = dims[0] * dims[1];
  check_payload(bytes.size() - offset, 4 * count);
  std::vector<double> values(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double v = get_f32(bytes, offset + 4 * i);
    if (!std::isfinite(v)) throw Error(ErrorCode::NegativeValue, "non-finite map value");
    if (v < 0.0) {
      throw Error(ErrorCode::NegativeValue, "negative map value at index " + std::to_string(i));
    }
    values[i] = v;
  }
  return SaliencyMap(dims[0], dims[1], std::move(values));
}

void save_map(const fs::path& path, const SaliencyMap& map) { write_file(path, encode_map(map)); }

SaliencyMap load_map(const fs::path& path) { return decode_map(read_file(path)); }

// ---- FTN1 -----------------------------------------------------------------

std::string encode_tensor(const FeatureTensor& tensor) {
  validate(tensor);
  const auto& d = tensor.dims;
  std::string out = "FTN1 " + std::to_string(d.channels) + " " + std::to_string(d.height) + " " +
                    std::to_string(d.width) + "\n";
  out.reserve(out.size() + 4 * d.size());
  for (double v : tensor.values) put_f32(out, v);
  return out;
}

FeatureTensor decode_tensor(std::string_view bytes) {
  std::size_t offset = 0;
  const auto dims = parse_text_header(bytes, "FTN1", 3, offset);
  FeatureTensor t{{dims[0], dims[1], dims[2]}, {}};
  const std::size_t count = t.dims.size();
  check_payload(bytes.size() - offset, 4 * count);
  t.values.resize(count);
  for (std::size_t i = 0; i < count; ++i) t.values[i] = get_f32(bytes, offset + 4 * i);
  validate(t);
  return t;
}

void save_tensor(const fs::path& path, const FeatureTensor& tensor) {
  write_file(path, encode_tensor(tensor));
}

FeatureTensor load_tensor(const fs::path& path) { return decode_tensor(read_file(path)); }

// ---- GZH1 -----------------------------------------------------------------

std::string encode_checkpoint(const ModelParams& params) {
  std::string out = "GZH1";
  const auto& d = params.input_dims;
  for (std::size_t v : {d.channels, d.height, d.width, params.grid.rows, params.grid.cols}) {
    put_u32(out, static_cast<std::uint32_t>(v));
  }
  for_each_block(params, [&out](std::span<const double> block) {
    for (double v : block) put_u64(out, std::bit_cast<std::uint64_t>(v));
  });
  return out;
}

ModelParams decode_checkpoint(std::string_view bytes) {
  constexpr std::size_t kHeader = 4 + 5 * 4;
  if (bytes.size() < 4 || bytes.substr(0, 4) != "GZH1") {
    throw Error(ErrorCode::MalformedHeader, "not a GZH1 checkpoint");
  }
  if (bytes.size() < kHeader) throw Error(ErrorCode::TruncatedPayload, "checkpoint header cut short");
  std::size_t dims[5];
  for (std::size_t i = 0; i < 5; ++i) {
    dims[i] = get_u32(bytes, 4 + 4 * i);
    if (dims[i] == 0) throw Error(ErrorCode::MalformedHeader, "checkpoint dims must be positive");
  }
  const std::size_t cells = dims[3] * dims[4];
  const std::size_t dense_in = kConvChannels * ((dims[1] + 1) / 2) * ((dims[2] + 1) / 2);
  const std::size_t expected = kConvChannels * (dims[0] + 1) + cells * (dense_in + 1);
  check_payload(bytes.size() - kHeader, 8 * expected);
  // Shapes come from init_params; values are overwritten below.
  ModelParams p = init_params({dims[0], dims[1], dims[2]}, {dims[3], dims[4]}, 0);
  std::size_t offset = kHeader;
  for_each_block(p, [&](std::span<double> block) {
    for (double& v : block) {
      v = std::bit_cast<double>(get_u64(bytes, offset));
      offset += 8;
      if (!std::isfinite(v)) throw Error(ErrorCode::MalformedHeader, "non-finite parameter");
    }
  });
  return p;
}

void save_checkpoint(const fs::path& path, const ModelParams& params) {
  write_file(path, encode_checkpoint(params));
}

ModelParams load_checkpoint(const fs::path& path) { return decode_checkpoint(read_file(path)); }

// ---- detections -----------------------------------------------------------

std::vector<DetectionSet> parse_detections(std::string_view text) {
  std::vector<DetectionSet> frames;
  std::unordered_map<std::string, std::size_t> index;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;

    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      parse_fail(line_no, e.what());
    }
    if (!obj.is_object()) parse_fail(line_no, "expected a JSON object");
    BoundingBox box;
    std::string frame_id;
    try {
      frame_id = obj.at("frame_id").get<std::string>();
      box.class_id = obj.at("class_id").get<int>();
      box.detector_confidence = obj.at("confidence").get<double>();
      box.x_min = obj.at("x_min").get<double>();
      box.y_min = obj.at("y_min").get<double>();
      box.x_max = obj.at("x_max").get<double>();
      box.y_max = obj.at("y_max").get<double>();
    } catch (const json::exception& e) {
      parse_fail(line_no, e.what());
    }
    if (frame_id.empty()) parse_fail(line_no, "empty frame_id");
    try {
      validate(box);
    } catch (const Error& e) {
      throw Error(ErrorCode::InvalidBox, "line " + std::to_string(line_no) + ": " + e.what());
    }
    auto [it, inserted] = index.try_emplace(frame_id, frames.size());
    if (inserted) frames.push_back(DetectionSet{frame_id, {}});
    frames[it->second].boxes.push_back(box);
  }
  return frames;
}

std::string format_detections(const std::vector<DetectionSet>& frames) {
  std::string out;
  for (const auto& f : frames) {
    for (const auto& b : f.boxes) {
      json obj = {{"frame_id", f.frame_id}, {"class_id", b.class_id},
                  {"confidence", b.detector_confidence},
                  {"x_min", b.x_min}, {"y_min", b.y_min},
                  {"x_max", b.x_max}, {"y_max", b.y_max}};
      out += obj.dump();
      out += '\n';
    }
  }
  return out;
}

std::vector<DetectionSet> load_detections(const fs::path& path) {
  return parse_detections(read_file(path));
}

void save_detections(const fs::path& path, const std::vector<DetectionSet>& frames) {
  write_file(path, format_detections(frames));
}

// ---- grid JSON ------------------------------------------------------------

std::string format_grid(const GridSpec& spec, const std::vector<double>& values) {
  json obj = {{"rows", spec.rows}, {"cols", spec.cols}, {"values", values}};
  return obj.dump() + "\n";
}

GridActivation parse_grid(std::string_view text) {
  GridActivation act;
  try {
    const json obj = json::parse(text);
    act.spec.rows = obj.at("rows").get<std::size_t>();
    act.spec.cols = obj.at("cols").get<std::size_t>();
    act.probs = obj.at("values").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  validate(act.spec);
  if (act.probs.size() != act.spec.cells()) {
    throw Error(ErrorCode::SpecMismatch, "grid value count does not match rows*cols");
  }
  for (double p : act.probs) {
    if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::InvalidArgument, "grid values must lie in [0, 1]");
  }
  return act;
}

// ---- manifest -------------------------------------------------------------

std::string_view to_string(Split split) {
  switch (split) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "train";
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::Train;
  if (text == "val") return Split::Val;
  if (text == "test") return Split::Test;
  throw Error(ErrorCode::ParseError, "unknown split '" + std::string(text) + "'");
}

std::vector<const SampleRecord*> DatasetManifest::select(std::optional<Split> split) const {
  std::vector<const SampleRecord*> out;
  for (const auto& r : records) {
    if (!split || r.split == *split) out.push_back(&r);
  }
  return out;
}

void validate(const DatasetManifest& manifest) {
  if (manifest.frame_width == 0 || manifest.frame_height == 0) {
    throw Error(ErrorCode::InvalidArgument, "manifest frame dims must be positive");
  }
  const auto& d = manifest.feature_dims;
  if (d.channels == 0 || d.height == 0 || d.width == 0) {
    throw Error(ErrorCode::InvalidArgument, "manifest feature dims must be positive");
  }
  std::set<std::string> seen;
  for (const auto& r : manifest.records) {
    if (r.frame_id.empty()) throw Error(ErrorCode::ParseError, "record with empty frame_id");
    if (r.feature_path.empty() || r.gt_map_path.empty() || r.detections_path.empty()) {
      throw Error(ErrorCode::ParseError, "record " + r.frame_id + " has an empty path");
    }
    if (!seen.insert(r.frame_id).second) {
      throw Error(ErrorCode::ParseError, "duplicate frame_id " + r.frame_id);
    }
  }
}

std::string format_manifest(const DatasetManifest& manifest) {
  validate(manifest);
  json records = json::array();
  for (const auto& r : manifest.records) {
    records.push_back({{"frame_id", r.frame_id},
                       {"split", std::string(to_string(r.split))},
                       {"features", path_string(r.feature_path)},
                       {"gt_map", path_string(r.gt_map_path)},
                       {"detections", path_string(r.detections_path)}});
  }
  json obj = {{"format", "gazegrid-manifest"},
              {"version", 1},
              {"frame_width", manifest.frame_width},
              {"frame_height", manifest.frame_height},
              {"feature_dims",
               {{"channels", manifest.feature_dims.channels},
                {"height", manifest.feature_dims.height},
                {"width", manifest.feature_dims.width}}},
              {"records", std::move(records)}};
  return obj.dump(1) + "\n";
}

DatasetManifest parse_manifest(std::string_view text, const fs::path& base_dir) {
  DatasetManifest m;
  try {
    const json obj = json::parse(text);
    if (obj.value("format", std::string()) != "gazegrid-manifest") {
      throw Error(ErrorCode::MalformedHeader, "not a gazegrid manifest");
    }
    if (obj.at("version").get<int>() != 1) {
      throw Error(ErrorCode::MalformedHeader, "unsupported manifest version");
    }
    m.frame_width = obj.at("frame_width").get<std::size_t>();
    m.frame_height = obj.at("frame_height").get<std::size_t>();
    const auto& fd = obj.at("feature_dims");
    m.feature_dims = {fd.at("channels").get<std::size_t>(), fd.at("height").get<std::size_t>(),
                      fd.at("width").get<std::size_t>()};
    for (const auto& r : obj.at("records")) {
      SampleRecord rec;
      rec.frame_id = r.at("frame_id").get<std::string>();
      rec.split = parse_split(r.at("split").get<std::string>());
      rec.feature_path = resolve(base_dir, r.at("features").get<std::string>());
      rec.gt_map_path = resolve(base_dir, r.at("gt_map").get<std::string>());
      rec.detections_path = resolve(base_dir, r.at("detections").get<std::string>());
      m.records.push_back(std::move(rec));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("manifest: ") + e.what());
  }
  validate(m);
  return m;
}

void save_manifest(const fs::path& path, const DatasetManifest& manifest) {
  write_file(path, format_manifest(manifest));
}

DatasetManifest load_manifest(const fs::path& path) {
  return parse_manifest(read_file(path), path.parent_path());
}

}  // namespace gazegrid
