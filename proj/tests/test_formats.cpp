#include <filesystem>

#include "doctest.h"
#include "gazegrid/error.hpp"
#include "gazegrid/formats.hpp"
#include "gazegrid/random.hpp"
#include "test_helpers.hpp"

using namespace gazegrid;
namespace fs = std::filesystem;

namespace {

std::string bytes(std::initializer_list<unsigned char> b) { return std::string(b.begin(), b.end()); }

struct TempDir {
  fs::path path;
  explicit TempDir(const char* name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_SUITE("io") {

TEST_CASE("map encoding golden bytes") {
  const SaliencyMap m(2, 1, {0.5, 1.0});
  CHECK(encode_map(m) == "SMF1 2 1\n" + bytes({0x00, 0x00, 0x00, 0x3F, 0x00, 0x00, 0x80, 0x3F}));
  CHECK(decode_map(encode_map(m)) == m);
}

TEST_CASE("tensor encoding golden bytes") {
  const FeatureTensor t{{1, 1, 2}, {-2.0, 0.25}};
  CHECK(encode_tensor(t) == "FTN1 1 1 2\n" + bytes({0x00, 0x00, 0x00, 0xC0, 0x00, 0x00, 0x80, 0x3E}));
  const FeatureTensor back = decode_tensor(encode_tensor(t));
  CHECK(back.dims.channels == 1);
  CHECK(back.values == t.values);
}

TEST_CASE("map round trip is float32 exact") {
  auto rng = make_engine(51, 0);
  const SaliencyMap m = random_map(rng, 17, 5);
  const SaliencyMap back = decode_map(encode_map(m));
  for (std::size_t i = 0; i < m.size(); ++i) {
    CHECK(back.values()[i] == static_cast<double>(static_cast<float>(m.values()[i])));
  }
  CHECK(encode_map(back) == encode_map(m));
}

TEST_CASE("map decoding errors") {
  const std::string good = encode_map(SaliencyMap(2, 1, {0.5, 1.0}));
  CHECK(error_code([&] { decode_map("XXXX 2 1\n"); }) == ErrorCode::MalformedHeader);
  CHECK(error_code([&] { decode_map("SMF1 2\n"); }) == ErrorCode::MalformedHeader);
  CHECK(error_code([&] { decode_map("SMF1 0 1\n"); }) == ErrorCode::MalformedHeader);
  CHECK(error_code([&] { decode_map("SMF1 2 1"); }) == ErrorCode::MalformedHeader);
  CHECK(error_code([&] { decode_map(good.substr(0, good.size() - 1)); }) == ErrorCode::TruncatedPayload);
  CHECK(error_code([&] { decode_map(good + "x"); }) == ErrorCode::TruncatedPayload);
  CHECK(error_code([&] { decode_map("SMF1 1 1\n" + bytes({0x00, 0x00, 0x80, 0xBF})); }) ==
        ErrorCode::NegativeValue);
  CHECK(error_code([&] { decode_tensor("FTN1 1 1\n"); }) == ErrorCode::MalformedHeader);
}

TEST_CASE("checkpoint round trip is exact") {
  const ModelParams p = init_params({3, 5, 7}, {4, 2}, 9);
  const std::string enc = encode_checkpoint(p);
  CHECK(enc.size() == 4 + 5 * 4 + 8 * count_params(p));
  CHECK(decode_checkpoint(enc) == p);
  CHECK(error_code([&] { decode_checkpoint("GZH2" + enc.substr(4)); }) == ErrorCode::MalformedHeader);
  CHECK(error_code([&] { decode_checkpoint(enc.substr(0, enc.size() - 8)); }) == ErrorCode::TruncatedPayload);
  CHECK(error_code([&] { decode_checkpoint(enc.substr(0, 10)); }) == ErrorCode::TruncatedPayload);
  CHECK(error_code([&] { decode_checkpoint(enc + "12345678"); }) == ErrorCode::TruncatedPayload);
}

TEST_CASE("detections parse and format") {
  const std::string text =
      R"({"frame_id":"a","class_id":1,"confidence":0.9,"x_min":1,"y_min":2,"x_max":3,"y_max":4})"
      "\n\n"
      R"({"frame_id":"b","class_id":0,"confidence":0.5,"x_min":0,"y_min":0,"x_max":1,"y_max":1})"
      "\n"
      R"({"frame_id":"a","class_id":2,"confidence":1,"x_min":5,"y_min":5,"x_max":6,"y_max":7})"
      "\n";
  const auto frames = parse_detections(text);
  REQUIRE(frames.size() == 2);
  CHECK(frames[0].frame_id == "a");
  REQUIRE(frames[0].boxes.size() == 2);
  CHECK(frames[0].boxes[1].class_id == 2);
  CHECK(frames[0].boxes[0].x_max == 3.0);
  CHECK(frames[1].frame_id == "b");

  const auto again = parse_detections(format_detections(frames));
  REQUIRE(again.size() == 2);
  CHECK(again[0].boxes == frames[0].boxes);
  CHECK(again[1].boxes == frames[1].boxes);
}

TEST_CASE("detections errors carry the line number") {
  const std::string ok =
      R"({"frame_id":"a","class_id":1,"confidence":0.9,"x_min":1,"y_min":2,"x_max":3,"y_max":4})";
  auto message = [](const std::string& t) -> std::string {
    try {
      parse_detections(t);
    } catch (const Error& e) {
      return e.what();
    }
    return "";
  };
  CHECK(error_code([&] { parse_detections(ok + "\n{not json\n"); }) == ErrorCode::ParseError);
  CHECK(message(ok + "\n{not json\n").find("line 2") != std::string::npos);
  CHECK(error_code([&] { parse_detections(R"({"frame_id":"a","class_id":1})"); }) == ErrorCode::ParseError);
  const std::string inverted =
      R"({"frame_id":"a","class_id":1,"confidence":0.9,"x_min":3,"y_min":2,"x_max":1,"y_max":4})";
  CHECK(error_code([&] { parse_detections(ok + "\n" + inverted); }) == ErrorCode::InvalidBox);
  CHECK(message(ok + "\n" + inverted).find("line 2") != std::string::npos);
}

TEST_CASE("grid json") {
  const GridSpec spec{2, 2};
  const GridActivation a = parse_grid(format_grid(spec, {0.0, 0.25, 0.5, 1.0}));
  CHECK(a.spec.rows == 2);
  CHECK(a.probs == std::vector<double>{0.0, 0.25, 0.5, 1.0});
  CHECK(error_code([&] { parse_grid(R"({"rows":2,"cols":2,"values":[1]})"); }) == ErrorCode::SpecMismatch);
  CHECK(error_code([&] { parse_grid("nope"); }) == ErrorCode::ParseError);
  CHECK(error_code([&] { parse_grid(R"({"rows":1,"cols":1,"values":[2]})"); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("splits") {
  for (Split s : {Split::Train, Split::Val, Split::Test}) CHECK(parse_split(to_string(s)) == s);
  CHECK(error_code([] { parse_split("dev"); }) == ErrorCode::ParseError);
}

TEST_CASE("manifest round trip and path resolution") {
  TempDir dir("gazegrid_test_manifest");
  DatasetManifest m;
  m.frame_width = 64;
  m.frame_height = 32;
  m.feature_dims = {2, 3, 4};
  m.records.push_back({"f0", "features/f0.ftn", "gt/f0.smf", "detections.ndjson", Split::Train});
  m.records.push_back({"f1", "features/f1.ftn", "gt/f1.smf", "detections.ndjson", Split::Test});
  save_manifest(dir.path / "manifest.json", m);
  const DatasetManifest back = load_manifest(dir.path / "manifest.json");
  CHECK(back.frame_width == 64);
  CHECK(back.feature_dims.width == 4);
  REQUIRE(back.records.size() == 2);
  CHECK(back.records[1].split == Split::Test);
  CHECK(back.records[0].feature_path == dir.path / "features/f0.ftn");
  CHECK(back.select(Split::Test).size() == 1);
  CHECK(back.select(std::nullopt).size() == 2);

  m.records.push_back(m.records[0]);
  CHECK(error_code([&] { validate(m); }) == ErrorCode::ParseError);
  CHECK(error_code([&] { parse_manifest("{}", dir.path); }) == ErrorCode::MalformedHeader);
  CHECK(error_code([&] { parse_manifest("[", dir.path); }) == ErrorCode::ParseError);
  CHECK(error_code([&] {
          parse_manifest(R"({"format":"gazegrid-manifest","version":1})", dir.path);
        }) == ErrorCode::ParseError);
}

TEST_CASE("file helpers") {
  TempDir dir("gazegrid_test_files");
  const SaliencyMap m(3, 2, {0, 1, 2, 3, 4, 5});
  save_map(dir.path / "nested/m.smf", m);
  CHECK(load_map(dir.path / "nested/m.smf") == m);
  CHECK(error_code([&] { load_map(dir.path / "missing.smf"); }) == ErrorCode::IoError);
}

}  // TEST_SUITE
