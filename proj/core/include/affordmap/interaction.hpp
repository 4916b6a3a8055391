#pragma once

#include <optional>
#include <vector>

#include "affordmap/types.hpp"

namespace affordmap::interaction {

/// Elementwise mean over the selected layers (all layers when no subset is
/// given). Throws ArgumentError for an empty subset or an out-of-range index.
SpatialMap aggregate_layers(const AttentionStack& stack,
                            const std::optional<std::vector<int>>& layer_subset = std::nullopt);

/// Bilinear resize with half-pixel centers (align_corners = false); source
/// coordinates are clamped to the border.
SpatialMap upsample_bilinear(const SpatialMap& map, int out_h, int out_w);

/// (x - min) / (max - min); constant maps become all zeros.
SpatialMap normalize_01(const SpatialMap& map);

/// Separable Gaussian with radius ceil(3 sigma) and edge-inclusive
/// symmetric reflection at the borders, which keeps the total mass
/// unchanged. sigma == 0 returns the input.
SpatialMap gaussian_blur(const SpatialMap& map, double sigma);

/// Normalized 1-D kernel of length 2 * ceil(3 sigma) + 1.
std::vector<double> gaussian_kernel(double sigma);

/// Maps any integer index onto [0, n) by edge-inclusive reflection
/// (... 1 0 | 0 1 ... n-1 | n-1 n-2 ...).
int reflect_index(int i, int n);

}  // namespace affordmap::interaction
