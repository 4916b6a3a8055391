#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "affordmap/types.hpp"

namespace affordmap::io {

/// In-memory NPY array. The engine's canonical dtype is float32; float64
/// files are narrowed on read.
struct NpyArray {
  std::vector<std::size_t> shape;
  std::vector<float> values;

  std::size_t element_count() const;
  friend bool operator==(const NpyArray&, const NpyArray&) = default;
};

/// Reads an NPY v1.0/v2.0 file holding '<f4', '>f4', '<f8' or '>f8' data in C
/// order. Throws FormatError on a malformed header, CorruptError when the
/// payload length disagrees with the shape, MissingInputError if absent.
NpyArray read_array(const std::filesystem::path& path);
NpyArray parse_array(const std::string& bytes);

/// Writes a little-endian float32 NPY v1.0 file with the same header bytes
/// numpy.save emits. Rank-0 arrays are rejected with FormatError.
void write_array(const std::filesystem::path& path, const NpyArray& arr);
std::string serialize_array(const NpyArray& arr);

NpyArray to_array(const SpatialMap& map);
NpyArray to_array(const DenseFeatureMap& features);
NpyArray to_array(const AttentionStack& stack);

/// Rank-2 [h, w] array, or rank-3 with a leading singleton axis.
SpatialMap to_spatial_map(const NpyArray& arr);
DenseFeatureMap to_feature_map(const NpyArray& arr);
/// Rank-3 [layers, h, w]; rank-2 arrays are read as a single layer.
AttentionStack to_attention_stack(const NpyArray& arr);

struct SampleMeta {
  std::string image_path;
  std::string verb;
  std::string object;
  std::string prompt;
  std::vector<int> layer_ids;
  int grid_h = 0;
  int grid_w = 0;
  std::string source_model;
};

/// Throws FormatError (message names meta.json) for malformed JSON, missing
/// required fields, or verb/object tokens that are empty or not lowercase.
SampleMeta parse_meta(const std::string& json_text);
SampleMeta read_meta(const std::filesystem::path& path);
std::string serialize_meta(const SampleMeta& meta);
void write_meta(const std::filesystem::path& path, const SampleMeta& meta);

struct SampleBundle {
  DenseFeatureMap features;
  AttentionStack verb_attention;
  AttentionStack object_attention;
  SampleMeta meta;
};

inline constexpr const char* kFeaturesFile = "features.npy";
inline constexpr const char* kVerbAttentionFile = "attn_verb.npy";
inline constexpr const char* kObjectAttentionFile = "attn_object.npy";
inline constexpr const char* kMetaFile = "meta.json";

/// Loads features.npy, attn_verb.npy, attn_object.npy and meta.json from a
/// bundle directory. Missing files raise MissingInputError naming the file;
/// grids that disagree with meta.json raise ShapeMismatchError.
SampleBundle read_sample_bundle(const std::filesystem::path& dir);
void write_sample_bundle(const std::filesystem::path& dir, const SampleBundle& bundle);

/// Ground truth from gt.npy (float32 [h, w]) or an 8-bit grayscale PNG
/// rescaled to [0, 1].
SpatialMap read_ground_truth(const std::filesystem::path& path);

}  // namespace affordmap::io
