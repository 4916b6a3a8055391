#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace affordmap {

/// Single-channel row-major map (attention, heatmap, ground truth, probe
/// response). Dimensions are always at least 1x1.
class SpatialMap {
 public:
  SpatialMap() = default;
  SpatialMap(int h, int w, float fill = 0.0f);
  SpatialMap(int h, int w, std::vector<float> values);

  int h() const noexcept { return h_; }
  int w() const noexcept { return w_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool same_shape(const SpatialMap& other) const noexcept {
    return h_ == other.h_ && w_ == other.w_;
  }

  float& at(int r, int c) { return values_[static_cast<std::size_t>(r) * w_ + c]; }
  float at(int r, int c) const { return values_[static_cast<std::size_t>(r) * w_ + c]; }

  std::span<float> values() noexcept { return values_; }
  std::span<const float> values() const noexcept { return values_; }

  friend bool operator==(const SpatialMap&, const SpatialMap&) = default;

 private:
  int h_ = 0;
  int w_ = 0;
  std::vector<float> values_;
};

/// H x W grid of C-dimensional patch features, stored [h][w][c].
class DenseFeatureMap {
 public:
  DenseFeatureMap() = default;
  /// Throws ArgumentError when channels < 2, values contain NaN/Inf, or the
  /// value count does not match the grid.
  DenseFeatureMap(int grid_h, int grid_w, int channels, std::vector<float> values);

  int grid_h() const noexcept { return grid_h_; }
  int grid_w() const noexcept { return grid_w_; }
  int channels() const noexcept { return channels_; }

  std::span<const float> patch(int r, int c) const {
    return {values_.data() + (static_cast<std::size_t>(r) * grid_w_ + c) * channels_,
            static_cast<std::size_t>(channels_)};
  }
  std::span<const float> values() const noexcept { return values_; }

 private:
  int grid_h_ = 0;
  int grid_w_ = 0;
  int channels_ = 0;
  std::vector<float> values_;
};

/// Per-layer, head-averaged spatial attention for one token group,
/// stored [layer][h][w].
class AttentionStack {
 public:
  AttentionStack() = default;
  /// Throws ArgumentError when layers < 1, a value is negative or
  /// non-finite, or the value count does not match.
  AttentionStack(int layers, int grid_h, int grid_w, std::vector<float> values);

  int layers() const noexcept { return layers_; }
  int grid_h() const noexcept { return grid_h_; }
  int grid_w() const noexcept { return grid_w_; }

  std::span<const float> layer(int l) const {
    const auto plane = static_cast<std::size_t>(grid_h_) * grid_w_;
    return {values_.data() + plane * l, plane};
  }
  std::span<const float> values() const noexcept { return values_; }

 private:
  int layers_ = 0;
  int grid_h_ = 0;
  int grid_w_ = 0;
  std::vector<float> values_;
};

/// Integer label map for segmentation-style masks.
struct LabelMap {
  int h = 0;
  int w = 0;
  std::vector<int> labels;
};

/// 8-bit interleaved RGB image.
struct RgbImage {
  int h = 0;
  int w = 0;
  std::vector<unsigned char> rgb;

  friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

}  // namespace affordmap
