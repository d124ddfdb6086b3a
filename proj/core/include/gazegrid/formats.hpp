#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gazegrid/attention.hpp"
#include "gazegrid/gaze_head.hpp"
#include "gazegrid/saliency.hpp"

namespace gazegrid {

// Saliency maps, "SMF1": ASCII header "SMF1 <width> <height>\n" followed by
// width*height little-endian float32 values, row-major.
std::string encode_map(const SaliencyMap& map);
SaliencyMap decode_map(std::string_view bytes);
void save_map(const std::filesystem::path& path, const SaliencyMap& map);
SaliencyMap load_map(const std::filesystem::path& path);

// Feature tensors, "FTN1": header "FTN1 <c> <h> <w>\n" then c*h*w
// little-endian float32 values.
std::string encode_tensor(const FeatureTensor& tensor);
FeatureTensor decode_tensor(std::string_view bytes);
void save_tensor(const std::filesystem::path& path, const FeatureTensor& tensor);
FeatureTensor load_tensor(const std::filesystem::path& path);

// Model checkpoints, "GZH1": 4 magic bytes, then c, h, w, rows, cols as
// little-endian uint32, then every parameter as little-endian float64 in
// the order conv weights, conv biases, dense weights, dense biases.
std::string encode_checkpoint(const ModelParams& params);
ModelParams decode_checkpoint(std::string_view bytes);
void save_checkpoint(const std::filesystem::path& path, const ModelParams& params);
ModelParams load_checkpoint(const std::filesystem::path& path);

// Detections: newline-delimited JSON, one box per line with keys frame_id,
// class_id, confidence, x_min, y_min, x_max, y_max. Frames are returned in
// order of first appearance with their boxes in file order.
std::vector<DetectionSet> parse_detections(std::string_view text);
std::string format_detections(const std::vector<DetectionSet>& frames);
std::vector<DetectionSet> load_detections(const std::filesystem::path& path);
void save_detections(const std::filesystem::path& path, const std::vector<DetectionSet>& frames);

// Grid vectors / activations as JSON {"rows", "cols", "values"}.
std::string format_grid(const GridSpec& spec, const std::vector<double>& values);
GridActivation parse_grid(std::string_view text);

enum class Split { Train, Val, Test };

std::string_view to_string(Split split);
Split parse_split(std::string_view text);

struct SampleRecord {
  std::string frame_id;
  std::filesystem::path feature_path;
  std::filesystem::path gt_map_path;
  std::filesystem::path detections_path;
  Split split = Split::Train;
};

/// JSON manifest. Relative paths resolve against the manifest's directory.
struct DatasetManifest {
  std::size_t frame_width = 0;
  std::size_t frame_height = 0;
  FeatureDims feature_dims;
  std::vector<SampleRecord> records;

  std::vector<const SampleRecord*> select(std::optional<Split> split) const;
};

void validate(const DatasetManifest& manifest);
std::string format_manifest(const DatasetManifest& manifest);
DatasetManifest parse_manifest(std::string_view text, const std::filesystem::path& base_dir);
void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);
DatasetManifest load_manifest(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace gazegrid
