#include "affordmap/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include <fmt/format.h>

#include "affordmap/error.hpp"
#include "affordmap/interaction.hpp"

namespace affordmap::fusion {
namespace {

template <typename Fn>
auto run_stage(const char* stage, std::vector<std::string>& trace, Fn&& fn) {
  trace.emplace_back(stage);
  try {
    return std::invoke(std::forward<Fn>(fn));
  } catch (const Error& e) {
    if (!e.stage().empty()) throw;
    throw e.with_stage(stage);
  }
}

}  // namespace

std::string_view to_string(Mode mode) {
  return mode == Mode::kInteractionOnly ? "interaction_only" : "interaction_x_geometry";
}

Mode parse_mode(std::string_view text) {
  if (text == "interaction-only" || text == "interaction_only") return Mode::kInteractionOnly;
  if (text == "fusion" || text == "interaction_x_geometry") return Mode::kInteractionXGeometry;
  raise(ErrorCode::kArgument, fmt::format("unknown mode '{}'", text));
}

double FusionConfig::effective_sigma() const {
  if (blur_sigma) return *blur_sigma;
  return kReferenceBlurSigma * working_size / kReferenceWorkingSize;
}

void FusionConfig::validate() const {
  if (k < 1 || k > 10) raise(ErrorCode::kArgument, fmt::format("k={} outside [1, 10]", k));
  const auto open_unit = [](double v, const char* name) {
    if (!(v > 0.0 && v < 1.0)) raise(ErrorCode::kArgument, fmt::format("{}={} outside (0, 1)", name, v));
  };
  open_unit(fixation_quantile, "fixation_quantile");
  open_unit(roi_threshold, "roi_threshold");
  if (!(roi_margin >= 0.0 && roi_margin < 1.0))
    raise(ErrorCode::kArgument, fmt::format("roi_margin={} outside [0, 1)", roi_margin));
  if (blur_sigma && !(*blur_sigma >= 0.0 && std::isfinite(*blur_sigma)))
    raise(ErrorCode::kArgument, "blur sigma must be >= 0");
  if (working_size < 1 || working_size > 8192)
    raise(ErrorCode::kArgument, fmt::format("working size {} outside [1, 8192]", working_size));
  if (layers && layers->empty()) raise(ErrorCode::kArgument, "layer subset is empty");
}

double nss_score(const SpatialMap& saliency, const SpatialMap& fixation_mask) {
  if (!saliency.same_shape(fixation_mask))
    raise(ErrorCode::kShapeMismatch,
          fmt::format("saliency {}x{} vs fixations {}x{}", saliency.h(), saliency.w(),
                      fixation_mask.h(), fixation_mask.w()));
  const auto sal = saliency.values();
  const auto fix = fixation_mask.values();
  const double n = static_cast<double>(sal.size());

  double mean = 0.0;
  for (float v : sal) mean += v;
  mean /= n;
  double var = 0.0;
  for (float v : sal) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / n);

  double acc = 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < sal.size(); ++i)
    if (fix[i] > 0.0f) {
      acc += sal[i];
      ++hits;
    }
  if (hits == 0) raise(ErrorCode::kArgument, "fixation mask is empty");
  if (sd < 1e-8) return 0.0;
  return (acc / static_cast<double>(hits) - mean) / sd;
}

SpatialMap rectified_component(const geometry::PartBasis& basis, int component, int sign) {
  if (component < 0 || component >= basis.k) raise(ErrorCode::kArgument, "component index out of range");
  SpatialMap out = basis.projections[component];
  for (float& v : out.values()) v = std::max(0.0f, static_cast<float>(sign) * v);
  return out;
}

SpatialMap top_quantile_mask(const SpatialMap& map, const geometry::Roi& roi, double quantile) {
  std::vector<float> inside;
  inside.reserve(roi.area());
  for (int r = roi.row0; r < roi.row1; ++r)
    for (int c = roi.col0; c < roi.col1; ++c) inside.push_back(map.at(r, c));

  SpatialMap mask(map.h(), map.w(), 0.0f);
  const std::size_t want = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil((1.0 - quantile) * inside.size() - 1e-9)));
  const std::size_t rank = std::min(want, inside.size()) - 1;
  std::nth_element(inside.begin(), inside.begin() + static_cast<std::ptrdiff_t>(rank), inside.end(),
                   std::greater<>());
  const float cut = inside[rank];
  for (int r = roi.row0; r < roi.row1; ++r)
    for (int c = roi.col0; c < roi.col1; ++c)
      if (map.at(r, c) > 0.0f && map.at(r, c) >= cut) mask.at(r, c) = 1.0f;
  return mask;
}

Selection select_component(const geometry::PartBasis& basis, const SpatialMap& verb_map,
                           const FusionConfig& cfg) {
  if (basis.k < 1) raise(ErrorCode::kArgument, "basis has no components");
  if (verb_map.h() != basis.grid_h || verb_map.w() != basis.grid_w)
    raise(ErrorCode::kShapeMismatch,
          fmt::format("verb map {}x{} vs basis grid {}x{}", verb_map.h(), verb_map.w(),
                      basis.grid_h, basis.grid_w));

  const bool negated = cfg.consider_negated_components;
  Selection sel;
  sel.scores.assign(negated ? 2 * basis.k : basis.k, -std::numeric_limits<float>::infinity());
  double best = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < basis.k; ++i) {
    for (int sign : {+1, -1}) {
      if (sign < 0 && !negated) continue;
      const SpatialMap part = rectified_component(basis, i, sign);
      const bool any = std::any_of(part.values().begin(), part.values().end(),
                                   [](float v) { return v > 0.0f; });
      if (!any) continue;
      const double score =
          nss_score(verb_map, top_quantile_mask(part, basis.roi, cfg.fixation_quantile));
      sel.scores[sign > 0 ? i : basis.k + i] = static_cast<float>(score);
      if (score > best) {
        best = score;
        sel.component = i;
        sel.sign = sign;
      }
    }
  }
  if (sel.component < 0) raise(ErrorCode::kNoViablePart, "every rectified component is all-zero");
  return sel;
}

SpatialMap normalize_input(const SpatialMap& map) {
  const auto [lo, hi] = std::minmax_element(map.values().begin(), map.values().end());
  if (*lo == *hi && *hi > 0.0f) return SpatialMap(map.h(), map.w(), 1.0f);
  return interaction::normalize_01(map);
}

SpatialMap fuse_product(const SpatialMap& verb_map, const SpatialMap& part_map, double sigma) {
  if (!verb_map.same_shape(part_map))
    raise(ErrorCode::kShapeMismatch,
          fmt::format("verb map {}x{} vs part map {}x{}", verb_map.h(), verb_map.w(),
                      part_map.h(), part_map.w()));
  const SpatialMap verb = normalize_input(verb_map);
  const SpatialMap part = normalize_input(part_map);
  SpatialMap product(verb.h(), verb.w());
  for (std::size_t i = 0; i < product.size(); ++i)
    product.values()[i] = verb.values()[i] * part.values()[i];
  return interaction::gaussian_blur(product, sigma);
}

SpatialMap fuse(const SpatialMap& verb_map, const SpatialMap& part_map, const FusionConfig& cfg) {
  return interaction::normalize_01(fuse_product(verb_map, part_map, cfg.effective_sigma()));
}

FusionResult run_pipeline(const io::SampleBundle& bundle, const FusionConfig& cfg, Mode mode) {
  cfg.validate();
  FusionResult result;
  result.mode = mode;
  auto& trace = result.stages;
  const int size = cfg.working_size;

  const auto [verb_grid, object_grid] = run_stage("aggregate", trace, [&] {
    return std::pair{interaction::aggregate_layers(bundle.verb_attention, cfg.layers),
                     interaction::aggregate_layers(bundle.object_attention, cfg.layers)};
  });

  if (mode == Mode::kInteractionOnly) {
    run_stage("fuse", trace, [&] {
      result.verb_map = interaction::upsample_bilinear(verb_grid, size, size);
      result.part_map = SpatialMap(size, size, 1.0f);
      result.affordance_map = fuse(result.verb_map, result.part_map, cfg);
    });
    return result;
  }

  const geometry::Roi roi = run_stage("roi", trace, [&] {
    return geometry::roi_from_attention(object_grid, cfg.roi_threshold, cfg.roi_margin);
  });
  result.roi = roi;

  const geometry::PartBasis basis = run_stage("pca", trace, [&] {
    // Centered ROI data has rank <= area - 1.
    const int k = std::min({cfg.k, bundle.features.channels(), roi.area() - 1});
    return geometry::pca_decompose(bundle.features, roi, k);
  });
  result.explained_var = basis.explained_var;

  const Selection sel = run_stage("select", trace, [&] { return select_component(basis, verb_grid, cfg); });
  result.selected_component = sel.component;
  result.selected_sign = sel.sign;
  result.component_scores = sel.scores;

  run_stage("fuse", trace, [&] {
    const SpatialMap part_grid = rectified_component(basis, sel.component, sel.sign);
    result.verb_map = interaction::upsample_bilinear(verb_grid, size, size);
    result.part_map = interaction::upsample_bilinear(part_grid, size, size);
    result.affordance_map = fuse(result.verb_map, result.part_map, cfg);
  });
  return result;
}

}  // namespace affordmap::fusion
