#include "affordmap/types.hpp"

#include <cmath>
#include <string>

#include "affordmap/error.hpp"

namespace affordmap {

SpatialMap::SpatialMap(int h, int w, float fill)
    : h_(h), w_(w) {
  if (h < 1 || w < 1) raise(ErrorCode::kArgument, "map dimensions must be >= 1");
  values_.assign(static_cast<std::size_t>(h) * w, fill);
}

SpatialMap::SpatialMap(int h, int w, std::vector<float> values)
    : h_(h), w_(w), values_(std::move(values)) {
  if (h < 1 || w < 1) raise(ErrorCode::kArgument, "map dimensions must be >= 1");
  if (values_.size() != static_cast<std::size_t>(h) * w)
    raise(ErrorCode::kShapeMismatch,
          "map expects " + std::to_string(h * w) + " values, got " +
              std::to_string(values_.size()));
}

DenseFeatureMap::DenseFeatureMap(int grid_h, int grid_w, int channels,
                                 std::vector<float> values)
    : grid_h_(grid_h), grid_w_(grid_w), channels_(channels), values_(std::move(values)) {
  if (grid_h < 1 || grid_w < 1) raise(ErrorCode::kArgument, "feature grid must be >= 1x1");
  if (channels < 2) raise(ErrorCode::kArgument, "feature maps need at least 2 channels");
  if (values_.size() != static_cast<std::size_t>(grid_h) * grid_w * channels)
    raise(ErrorCode::kShapeMismatch, "feature value count does not match grid");
  for (float v : values_)
    if (!std::isfinite(v)) raise(ErrorCode::kArgument, "feature map contains NaN/Inf");
}

AttentionStack::AttentionStack(int layers, int grid_h, int grid_w,
                               std::vector<float> values)
    : layers_(layers), grid_h_(grid_h), grid_w_(grid_w), values_(std::move(values)) {
  if (layers < 1) raise(ErrorCode::kArgument, "attention stack needs at least one layer");
  if (grid_h < 1 || grid_w < 1) raise(ErrorCode::kArgument, "attention grid must be >= 1x1");
  if (values_.size() != static_cast<std::size_t>(layers) * grid_h * grid_w)
    raise(ErrorCode::kShapeMismatch, "attention value count does not match grid");
  for (float v : values_) {
    if (!std::isfinite(v)) raise(ErrorCode::kArgument, "attention contains NaN/Inf");
    if (v < 0.0f) raise(ErrorCode::kArgument, "attention values must be non-negative");
  }
}

}  // namespace affordmap
