#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "affordmap/error.hpp"
#include "affordmap/geometry.hpp"
#include "affordmap/tensor_io.hpp"
#include "affordmap/types.hpp"

namespace affordmap::testing {

/// Error code thrown by fn, or nullopt if it returned normally.
template <typename Fn>
std::optional<ErrorCode> error_code_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

/// Directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& prefix = "affordmap");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

SpatialMap random_map(std::mt19937& rng, int h, int w, float lo = 0.0f, float hi = 1.0f);
DenseFeatureMap random_features(std::mt19937& rng, int h, int w, int channels);

/// Boolean grid mask, row-major.
using GridMask = std::vector<char>;

/// Synthetic mug: body block plus a handle block on its right, each with a
/// distinct feature prototype, object attention on the whole mug and verb
/// attention concentrated on the handle with weaker spill onto the body.
struct MugFixture {
  io::SampleBundle bundle;
  GridMask handle;
  GridMask body;
};

struct MugLayout {
  int grid = 16;
  int channels = 16;
  int body_row0 = 4, body_row1 = 12, body_col0 = 3, body_col1 = 9;
  int handle_row0 = 6, handle_row1 = 10, handle_col0 = 9, handle_col1 = 12;
  float feature_noise = 0.1f;
};

MugFixture make_mug(std::uint32_t seed, const MugLayout& layout = {});

/// Random mug placement for dataset generation.
MugLayout random_layout(std::mt19937& rng);

/// Gaussian heatmap centred on the handle, rendered at gt_size x gt_size.
SpatialMap handle_ground_truth(const MugLayout& layout, int gt_size);

/// Fraction of the map's total mass that falls on grid cells inside the
/// mask, where the map may be at a multiple of the grid resolution.
double mass_fraction(const SpatialMap& map, const GridMask& mask, int grid_h, int grid_w);

/// Writes root/unseen/<verb>/<object>/<id>/ bundles with gt.npy for `count`
/// random mugs. Every third sample also gets an image.png.
void write_synthetic_dataset(const std::filesystem::path& root, int count, std::uint32_t seed);

}  // namespace affordmap::testing
