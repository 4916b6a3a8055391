#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace affordmap::testing::oracle {

EigenSystem jacobi_eigen(std::vector<std::vector<double>> a) {
  const int n = static_cast<int>(a.size());
  std::vector<std::vector<double>> v(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i) v[i][i] = 1.0;

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
    if (off < 1e-30) break;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) {
        if (std::abs(a[p][q]) < 1e-300) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        for (int k = 0; k < n; ++k) {
          const double vkp = v[k][p], vkq = v[k][q];
          v[k][p] = c * vkp - s * vkq;
          v[k][q] = s * vkp + c * vkq;
        }
      }
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int x, int y) { return a[x][x] > a[y][y]; });
  EigenSystem out;
  for (int idx : order) {
    out.values.push_back(a[idx][idx]);
    std::vector<double> col(n);
    for (int k = 0; k < n; ++k) col[k] = v[k][idx];
    out.vectors.push_back(std::move(col));
  }
  return out;
}

PcaResult brute_force_pca(const DenseFeatureMap& f, const geometry::Roi& roi, int k) {
  const int c = f.channels();
  std::vector<std::vector<double>> rows;
  for (int r = roi.row0; r < roi.row1; ++r)
    for (int col = roi.col0; col < roi.col1; ++col) {
      const auto p = f.patch(r, col);
      rows.emplace_back(p.begin(), p.end());
    }
  const double n = static_cast<double>(rows.size());
  std::vector<double> mean(c, 0.0);
  for (const auto& row : rows)
    for (int j = 0; j < c; ++j) mean[j] += row[j] / n;
  std::vector<std::vector<double>> cov(c, std::vector<double>(c, 0.0));
  for (const auto& row : rows)
    for (int i = 0; i < c; ++i)
      for (int j = 0; j < c; ++j) cov[i][j] += (row[i] - mean[i]) * (row[j] - mean[j]) / n;

  PcaResult out;
  for (int i = 0; i < c; ++i) out.total_variance += cov[i][i];
  const EigenSystem es = jacobi_eigen(cov);
  out.eigenvalues = es.values;
  for (int i = 0; i < k; ++i) {
    std::vector<double> proj;
    for (const auto& row : rows) {
      double acc = 0.0;
      for (int j = 0; j < c; ++j) acc += (row[j] - mean[j]) * es.vectors[i][j];
      proj.push_back(acc);
    }
    out.projections.push_back(std::move(proj));
  }
  return out;
}

namespace {
int mirror(int i, int n) {
  while (i < 0 || i >= n) {
    if (i < 0) i = -i - 1;
    if (i >= n) i = 2 * n - 1 - i;
  }
  return i;
}
}  // namespace

SpatialMap dense_blur(const SpatialMap& map, double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  const int side = 2 * radius + 1;
  std::vector<double> kernel(static_cast<std::size_t>(side) * side);
  double sum = 0.0;
  for (int dy = -radius; dy <= radius; ++dy)
    for (int dx = -radius; dx <= radius; ++dx) {
      const double v = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
      kernel[static_cast<std::size_t>(dy + radius) * side + dx + radius] = v;
      sum += v;
    }
  const int ph = map.h() + 2 * radius, pw = map.w() + 2 * radius;
  std::vector<double> padded(static_cast<std::size_t>(ph) * pw);
  for (int r = 0; r < ph; ++r)
    for (int c = 0; c < pw; ++c)
      padded[static_cast<std::size_t>(r) * pw + c] = map.at(mirror(r - radius, map.h()), mirror(c - radius, map.w()));

  SpatialMap out(map.h(), map.w());
  for (int r = 0; r < map.h(); ++r)
    for (int c = 0; c < map.w(); ++c) {
      double acc = 0.0;
      for (int dy = 0; dy < side; ++dy)
        for (int dx = 0; dx < side; ++dx)
          acc += kernel[static_cast<std::size_t>(dy) * side + dx] * padded[static_cast<std::size_t>(r + dy) * pw + c + dx];
      out.at(r, c) = static_cast<float>(acc / sum);
    }
  return out;
}

double bilinear_at(const SpatialMap& map, int out_h, int out_w, int r, int c) {
  const auto coord = [](int o, int in, int out) {
    double x = (o + 0.5) * in / out - 0.5;
    if (x < 0) x = 0;
    if (x > in - 1) x = in - 1;
    return x;
  };
  const double y = coord(r, map.h(), out_h), x = coord(c, map.w(), out_w);
  const int y0 = static_cast<int>(y), x0 = static_cast<int>(x);
  const int y1 = std::min(y0 + 1, map.h() - 1), x1 = std::min(x0 + 1, map.w() - 1);
  const double wy = y - y0, wx = x - x0;
  return map.at(y0, x0) * (1 - wy) * (1 - wx) + map.at(y0, x1) * (1 - wy) * wx +
         map.at(y1, x0) * wy * (1 - wx) + map.at(y1, x1) * wy * wx;
}

geometry::Roi largest_component_box(const std::vector<char>& mask, int h, int w) {
  std::vector<int> label(mask.size(), -1);
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) label[i] = static_cast<int>(i);
  bool changed = true;
  while (changed) {
    changed = false;
    for (int r = 0; r < h; ++r)
      for (int c = 0; c < w; ++c) {
        const int i = r * w + c;
        if (label[i] < 0) continue;
        const int nbrs[4][2] = {{r - 1, c}, {r + 1, c}, {r, c - 1}, {r, c + 1}};
        for (const auto& nb : nbrs) {
          if (nb[0] < 0 || nb[0] >= h || nb[1] < 0 || nb[1] >= w) continue;
          const int j = nb[0] * w + nb[1];
          if (label[j] >= 0 && label[j] < label[i]) {
            label[i] = label[j];
            changed = true;
          }
        }
      }
  }
  std::vector<int> count(mask.size(), 0);
  for (int l : label)
    if (l >= 0) ++count[l];
  int best = -1;
  for (std::size_t l = 0; l < count.size(); ++l)
    if (count[l] > 0 && (best < 0 || count[l] > count[best])) best = static_cast<int>(l);
  if (best < 0) throw std::runtime_error("empty mask");
  geometry::Roi box{h, w, 0, 0};
  for (int i = 0; i < h * w; ++i)
    if (label[i] == best) {
      box.row0 = std::min(box.row0, i / w);
      box.col0 = std::min(box.col0, i % w);
      box.row1 = std::max(box.row1, i / w + 1);
      box.col1 = std::max(box.col1, i % w + 1);
    }
  return box;
}

double nss_reference(const SpatialMap& s, const std::vector<int>& fix) {
  const auto v = s.values();
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
  double ss = 0.0;
  for (float x : v) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / v.size());
  if (sd < 1e-8) return 0.0;
  double acc = 0.0;
  for (int i : fix) acc += (v[i] - mean) / sd;
  return acc / fix.size();
}

}  // namespace affordmap::testing::oracle
