#include "affordmap/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <fmt/format.h>

#include "affordmap/error.hpp"
#include "affordmap/fusion.hpp"

namespace affordmap::metrics {
namespace {

void require_same_shape(const SpatialMap& a, const SpatialMap& b) {
  if (!a.same_shape(b))
    raise(ErrorCode::kShapeMismatch,
          fmt::format("prediction {}x{} vs ground truth {}x{}", a.h(), a.w(), b.h(), b.w()));
}

std::vector<double> to_distribution(const SpatialMap& map, const char* what) {
  double sum = 0.0;
  for (float v : map.values()) {
    if (!(v >= 0.0f)) raise(ErrorCode::kArgument, fmt::format("{} has negative or NaN values", what));
    sum += v;
  }
  if (!(sum > 0.0)) raise(ErrorCode::kDegenerateMap, fmt::format("{} sums to zero", what));
  std::vector<double> p(map.size());
  std::transform(map.values().begin(), map.values().end(), p.begin(),
                 [sum](float v) { return v / sum; });
  return p;
}

}  // namespace

double kld(const SpatialMap& pred, const SpatialMap& gt, double eps) {
  require_same_shape(pred, gt);
  const auto p = to_distribution(pred, "prediction");
  const auto q = to_distribution(gt, "ground truth");
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) acc += q[i] * std::log(q[i] / (p[i] + eps) + eps);
  return acc;
}

double sim(const SpatialMap& pred, const SpatialMap& gt) {
  require_same_shape(pred, gt);
  const auto p = to_distribution(pred, "prediction");
  const auto q = to_distribution(gt, "ground truth");
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) acc += std::min(p[i], q[i]);
  return acc;
}

double nss_eval(const SpatialMap& pred, const SpatialMap& gt, double fixation_threshold) {
  require_same_shape(pred, gt);
  const float peak = *std::max_element(gt.values().begin(), gt.values().end());
  if (!(peak > 0.0f)) raise(ErrorCode::kDegenerateMap, "ground truth has no fixations");
  const double cut = fixation_threshold * peak;
  SpatialMap mask(gt.h(), gt.w(), 0.0f);
  for (std::size_t i = 0; i < gt.size(); ++i)
    if (gt.values()[i] >= cut) mask.values()[i] = 1.0f;
  return fusion::nss_score(pred, mask);
}

MetricTriple evaluate_all(const SpatialMap& pred, const SpatialMap& gt, double fixation_threshold) {
  return {kld(pred, gt), sim(pred, gt), nss_eval(pred, gt, fixation_threshold)};
}

double miou(const LabelMap& pred, const LabelMap& gt, int num_classes) {
  if (num_classes < 1) raise(ErrorCode::kArgument, "num_classes must be >= 1");
  if (pred.h != gt.h || pred.w != gt.w || pred.labels.size() != gt.labels.size() ||
      gt.labels.size() != static_cast<std::size_t>(gt.h) * gt.w)
    raise(ErrorCode::kShapeMismatch, "label maps differ in shape");
  std::vector<long> inter(num_classes, 0), uni(num_classes, 0), gt_count(num_classes, 0);
  for (std::size_t i = 0; i < gt.labels.size(); ++i) {
    const int p = pred.labels[i], g = gt.labels[i];
    if (p < 0 || p >= num_classes || g < 0 || g >= num_classes)
      raise(ErrorCode::kArgument, fmt::format("label outside [0, {})", num_classes));
    ++gt_count[g];
    if (p == g) {
      ++inter[g];
      ++uni[g];
    } else {
      ++uni[g];
      ++uni[p];
    }
  }
  double acc = 0.0;
  int present = 0;
  for (int c = 0; c < num_classes; ++c) {
    if (gt_count[c] == 0) continue;
    acc += static_cast<double>(inter[c]) / static_cast<double>(uni[c]);
    ++present;
  }
  if (present == 0) raise(ErrorCode::kArgument, "ground truth mask is empty");
  return acc / present;
}

}  // namespace affordmap::metrics
