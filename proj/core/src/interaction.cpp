#include "affordmap/interaction.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "affordmap/error.hpp"

namespace affordmap::interaction {

SpatialMap aggregate_layers(const AttentionStack& stack,
                            const std::optional<std::vector<int>>& layer_subset) {
  std::vector<int> layers;
  if (layer_subset) {
    if (layer_subset->empty()) raise(ErrorCode::kArgument, "layer subset is empty");
    layers = *layer_subset;
    for (int l : layers)
      if (l < 0 || l >= stack.layers())
        raise(ErrorCode::kArgument,
              fmt::format("layer index {} outside [0, {})", l, stack.layers()));
    // Fixed accumulation order makes the result independent of subset order.
    std::sort(layers.begin(), layers.end());
  } else {
    layers.resize(stack.layers());
    for (int l = 0; l < stack.layers(); ++l) layers[l] = l;
  }

  const std::size_t plane = static_cast<std::size_t>(stack.grid_h()) * stack.grid_w();
  std::vector<double> acc(plane, 0.0);
  for (int l : layers) {
    const auto slice = stack.layer(l);
    for (std::size_t i = 0; i < plane; ++i) acc[i] += slice[i];
  }
  SpatialMap out(stack.grid_h(), stack.grid_w());
  const double inv = 1.0 / static_cast<double>(layers.size());
  for (std::size_t i = 0; i < plane; ++i) out.values()[i] = static_cast<float>(acc[i] * inv);
  return out;
}

SpatialMap upsample_bilinear(const SpatialMap& map, int out_h, int out_w) {
  if (out_h < 1 || out_w < 1) raise(ErrorCode::kArgument, "output size must be >= 1x1");
  if (map.h() == out_h && map.w() == out_w) return map;

  struct Tap {
    int i0, i1;
    double frac;
  };
  const auto taps = [](int in, int out) {
    std::vector<Tap> t(out);
    const double scale = static_cast<double>(in) / out;
    for (int o = 0; o < out; ++o) {
      const double src = std::clamp((o + 0.5) * scale - 0.5, 0.0, static_cast<double>(in - 1));
      const int i0 = static_cast<int>(std::floor(src));
      const int i1 = std::min(i0 + 1, in - 1);
      t[o] = {i0, i1, src - i0};
    }
    return t;
  };
  const auto rows = taps(map.h(), out_h);
  const auto cols = taps(map.w(), out_w);

  SpatialMap out(out_h, out_w);
  for (int r = 0; r < out_h; ++r) {
    const Tap& tr = rows[r];
    for (int c = 0; c < out_w; ++c) {
      const Tap& tc = cols[c];
      const double top = (1.0 - tc.frac) * map.at(tr.i0, tc.i0) + tc.frac * map.at(tr.i0, tc.i1);
      const double bottom = (1.0 - tc.frac) * map.at(tr.i1, tc.i0) + tc.frac * map.at(tr.i1, tc.i1);
      out.at(r, c) = static_cast<float>((1.0 - tr.frac) * top + tr.frac * bottom);
    }
  }
  return out;
}

SpatialMap normalize_01(const SpatialMap& map) {
  const auto [lo, hi] = std::minmax_element(map.values().begin(), map.values().end());
  const double min = *lo, max = *hi;
  SpatialMap out(map.h(), map.w(), 0.0f);
  if (!(max > min)) return out;
  const double range = max - min;
  std::transform(map.values().begin(), map.values().end(), out.values().begin(),
                 [&](float v) { return static_cast<float>((v - min) / range); });
  return out;
}

int reflect_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

std::vector<double> gaussian_kernel(double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
    sum += k[i + radius];
  }
  for (double& v : k) v /= sum;
  return k;
}

SpatialMap gaussian_blur(const SpatialMap& map, double sigma) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) raise(ErrorCode::kArgument, "sigma must be >= 0");
  if (sigma == 0.0) return map;

  const auto kernel = gaussian_kernel(sigma);
  const int radius = static_cast<int>(kernel.size() / 2);
  const int h = map.h(), w = map.w();

  // Reflected source index for every (position, tap) pair, per axis.
  const auto taps = [&](int n) {
    std::vector<int> idx(static_cast<std::size_t>(n) * kernel.size());
    for (int i = 0; i < n; ++i)
      for (int t = -radius; t <= radius; ++t) idx[i * kernel.size() + t + radius] = reflect_index(i + t, n);
    return idx;
  };
  const std::vector<int> col_taps = taps(w), row_taps = taps(h);
  const std::size_t len = kernel.size();

  std::vector<double> tmp(static_cast<std::size_t>(h) * w);
  for (int r = 0; r < h; ++r) {
    const float* src = map.values().data() + static_cast<std::size_t>(r) * w;
    for (int c = 0; c < w; ++c) {
      const int* idx = col_taps.data() + c * len;
      double acc = 0.0;
      for (std::size_t t = 0; t < len; ++t) acc += kernel[t] * src[idx[t]];
      tmp[static_cast<std::size_t>(r) * w + c] = acc;
    }
  }

  SpatialMap out(h, w);
  std::vector<double> acc(w);
  for (int r = 0; r < h; ++r) {
    std::fill(acc.begin(), acc.end(), 0.0);
    const int* idx = row_taps.data() + r * len;
    for (std::size_t t = 0; t < len; ++t) {
      const double* src = tmp.data() + static_cast<std::size_t>(idx[t]) * w;
      for (int c = 0; c < w; ++c) acc[c] += kernel[t] * src[c];
    }
    for (int c = 0; c < w; ++c) out.at(r, c) = static_cast<float>(acc[c]);
  }
  return out;
}

}  // namespace affordmap::interaction
