#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "affordmap/types.hpp"

namespace affordmap::geometry {

/// Half-open grid box [row0, row1) x [col0, col1).
struct Roi {
  int row0 = 0;
  int col0 = 0;
  int row1 = 0;
  int col1 = 0;

  int height() const noexcept { return row1 - row0; }
  int width() const noexcept { return col1 - col0; }
  int area() const noexcept { return height() * width(); }
  bool contains(int r, int c) const noexcept {
    return r >= row0 && r < row1 && c >= col0 && c < col1;
  }
  friend bool operator==(const Roi&, const Roi&) = default;
};

inline constexpr int kMinRoiArea = 4;

/// Bounding box of the largest 4-connected component of pixels at or above
/// rel_threshold * max(obj_attn), grown by margin * side on each side and
/// clamped to the grid. Boxes under kMinRoiArea patches are grown one row or
/// column at a time (shorter side first, toward the far edge when possible).
/// Throws EmptyAttentionError when the map has no positive value.
Roi roi_from_attention(const SpatialMap& obj_attn, double rel_threshold, double margin);

/// PCA part prototypes of the patch features inside an ROI.
struct PartBasis {
  int k = 0;
  int channels = 0;
  int grid_h = 0;
  int grid_w = 0;
  Roi roi;
  /// [k][channels], unit norm, pairwise orthogonal.
  std::vector<std::vector<float>> directions;
  /// Eigenvalues of the 1/N covariance, non-increasing.
  std::vector<float> explained_var;
  std::vector<float> mean_vec;
  /// True where the raw eigenvector was negated by the sign convention.
  std::vector<bool> sign_flipped;
  /// Signed scores per component over the full grid; zero outside the ROI.
  std::vector<SpatialMap> projections;
};

/// Top-k principal directions of the mean-centered ROI patch vectors. Each
/// direction is oriented so that its largest-magnitude ROI projection is
/// positive (first such patch in row-major order on ties).
/// Throws ArgumentError for k outside [1, min(channels, roi area)] or an
/// invalid ROI, DegenerateFeaturesError when all ROI patches coincide.
PartBasis pca_decompose(const DenseFeatureMap& features, const Roi& roi, int k);

/// Per-patch cosine similarity with a probe vector, in [-1, 1]. Zero-norm
/// patches score 0. Throws ArgumentError for a zero-norm probe and
/// ShapeMismatchError for a channel mismatch.
SpatialMap cosine_probe(const DenseFeatureMap& features, std::span<const float> probe);

/// Full-grid signed projections of features onto a reference basis, centered
/// by the reference mean. No ROI masking.
std::vector<SpatialMap> project_into_reference_basis(const DenseFeatureMap& features,
                                                     const PartBasis& basis);

/// basis.npy is a flat float32 array: directions [k * channels] followed by
/// explained variance [k]. basis.json records the offsets, mean vector, ROI
/// and sign flips.
void save_basis(const std::filesystem::path& npy_path, const std::filesystem::path& json_path,
                const PartBasis& basis);
/// Restores everything except the projections, which need the features.
PartBasis load_basis(const std::filesystem::path& npy_path, const std::filesystem::path& json_path);

}  // namespace affordmap::geometry
