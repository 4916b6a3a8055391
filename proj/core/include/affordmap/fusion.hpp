#pragma once

#include <optional>
#include <string>
#include <vector>

#include "affordmap/geometry.hpp"
#include "affordmap/tensor_io.hpp"
#include "affordmap/types.hpp"

namespace affordmap::fusion {

enum class Mode { kInteractionOnly, kInteractionXGeometry };

std::string_view to_string(Mode mode);
/// Accepts "interaction-only"/"interaction_only" and
/// "fusion"/"interaction_x_geometry". Throws ArgumentError otherwise.
Mode parse_mode(std::string_view text);

inline constexpr int kReferenceWorkingSize = 224;
inline constexpr double kReferenceBlurSigma = 3.0;

struct FusionConfig {
  int k = 3;
  double fixation_quantile = 0.8;
  bool consider_negated_components = true;
  /// Blur sigma in working-resolution pixels. Unset means 3 px at 224 px,
  /// scaled with working_size.
  std::optional<double> blur_sigma;
  double roi_threshold = 0.4;
  double roi_margin = 0.1;
  /// Side of the square working resolution the fused map is produced at.
  int working_size = kReferenceWorkingSize;
  /// Attention layers to average; unset means all layers.
  std::optional<std::vector<int>> layers;

  double effective_sigma() const;
  /// Throws ArgumentError on out-of-range values.
  void validate() const;
};

/// Mean of the z-normalized saliency (population std) at fixation pixels
/// (mask > 0). Returns 0 when std < 1e-8. Throws ArgumentError for an empty
/// mask and ShapeMismatchError for unequal shapes.
double nss_score(const SpatialMap& saliency, const SpatialMap& fixation_mask);

struct Selection {
  int component = -1;
  int sign = 0;
  /// Scores of the positive components [0, k), followed by the negated
  /// components [k, 2k) when negation is enabled. Excluded candidates hold
  /// -infinity.
  std::vector<float> scores;
};

/// Rectified part map of one candidate: max(0, sign * projection).
SpatialMap rectified_component(const geometry::PartBasis& basis, int component, int sign);

/// Binary mask of the top (1 - quantile) share of positive values inside
/// the ROI. The count is ceil((1 - quantile) * roi_area) with at least one
/// pixel; every pixel tied with the cut-off value is included.
SpatialMap top_quantile_mask(const SpatialMap& map, const geometry::Roi& roi, double quantile);

/// Scores every component (and its negation when configured) by NSS of the
/// verb map at the component's fixation mask and returns the best one. Ties
/// go to the lower index, then to the positive sign.
/// Throws NoViablePartError when every rectified component is all-zero.
Selection select_component(const geometry::PartBasis& basis, const SpatialMap& verb_map,
                           const FusionConfig& cfg);

/// Scales a non-negative map to [0, 1] with normalize_01, except that a
/// constant positive map becomes all ones.
SpatialMap normalize_input(const SpatialMap& map);

/// gaussian_blur(normalize_input(verb) * normalize_input(part), sigma),
/// i.e. the fused map before the final normalization.
SpatialMap fuse_product(const SpatialMap& verb_map, const SpatialMap& part_map, double sigma);

/// normalize_01 of fuse_product with cfg.effective_sigma().
SpatialMap fuse(const SpatialMap& verb_map, const SpatialMap& part_map, const FusionConfig& cfg);

struct FusionResult {
  Mode mode = Mode::kInteractionXGeometry;
  /// -1 in interaction-only mode.
  int selected_component = -1;
  /// +1 or -1; 0 in interaction-only mode.
  int selected_sign = 0;
  std::vector<float> component_scores;
  std::optional<geometry::Roi> roi;
  std::vector<float> explained_var;
  /// Working-resolution maps.
  SpatialMap affordance_map;
  SpatialMap verb_map;
  SpatialMap part_map;
  /// Pipeline stages executed, in order.
  std::vector<std::string> stages;
};

/// aggregate -> roi -> pca -> select -> fuse. In interaction-only mode the
/// geometry stages are skipped and the verb map is fused with a neutral part
/// map. Errors are rethrown tagged with the stage that raised them.
FusionResult run_pipeline(const io::SampleBundle& bundle, const FusionConfig& cfg,
                          Mode mode = Mode::kInteractionXGeometry);

}  // namespace affordmap::fusion
