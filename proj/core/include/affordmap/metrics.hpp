#pragma once

#include "affordmap/types.hpp"

namespace affordmap::metrics {

struct MetricTriple {
  double kld = 0.0;
  double sim = 0.0;
  double nss = 0.0;
};

inline constexpr double kDefaultKldEps = 1e-10;
inline constexpr double kDefaultFixationThreshold = 0.5;

/// KL divergence of the sum-normalized prediction P from the sum-normalized
/// ground truth Q: sum Q * log(Q / (P + eps) + eps).
/// Throws DegenerateMapError when either map sums to zero, ArgumentError on
/// negative values, ShapeMismatchError on unequal shapes.
double kld(const SpatialMap& pred, const SpatialMap& gt, double eps = kDefaultKldEps);

/// Histogram intersection of the two sum-normalized maps.
double sim(const SpatialMap& pred, const SpatialMap& gt);

/// NSS of pred at the ground-truth pixels >= threshold * max(gt).
/// Throws DegenerateMapError when the ground truth has no positive value.
double nss_eval(const SpatialMap& pred, const SpatialMap& gt,
                double fixation_threshold = kDefaultFixationThreshold);

MetricTriple evaluate_all(const SpatialMap& pred, const SpatialMap& gt,
                          double fixation_threshold = kDefaultFixationThreshold);

/// Mean IoU over the classes present in the ground truth.
/// Throws ArgumentError for labels outside [0, num_classes).
double miou(const LabelMap& pred_mask, const LabelMap& gt_mask, int num_classes);

}  // namespace affordmap::metrics
