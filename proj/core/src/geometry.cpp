#include "affordmap/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <utility>

#include <Eigen/Dense>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "affordmap/error.hpp"
#include "affordmap/tensor_io.hpp"

namespace affordmap::geometry {
namespace {

struct Component {
  int size = 0;
  int row0 = 0, col0 = 0, row1 = 0, col1 = 0;
};

// Largest 4-connected component of `mask`; ties keep the first one found in
// row-major order.
Component largest_component(const std::vector<char>& mask, int h, int w) {
  std::vector<char> seen(mask.size(), 0);
  std::vector<int> stack;
  Component best;
  for (int start = 0; start < h * w; ++start) {
    if (!mask[start] || seen[start]) continue;
    Component comp{0, start / w, start % w, start / w + 1, start % w + 1};
    stack.assign(1, start);
    seen[start] = 1;
    while (!stack.empty()) {
      const int idx = stack.back();
      stack.pop_back();
      const int r = idx / w, c = idx % w;
      ++comp.size;
      comp.row0 = std::min(comp.row0, r);
      comp.col0 = std::min(comp.col0, c);
      comp.row1 = std::max(comp.row1, r + 1);
      comp.col1 = std::max(comp.col1, c + 1);
      const std::pair<int, int> nbrs[] = {{r - 1, c}, {r + 1, c}, {r, c - 1}, {r, c + 1}};
      for (auto [nr, nc] : nbrs) {
        if (nr < 0 || nr >= h || nc < 0 || nc >= w) continue;
        const int n = nr * w + nc;
        if (mask[n] && !seen[n]) {
          seen[n] = 1;
          stack.push_back(n);
        }
      }
    }
    if (comp.size > best.size) best = comp;
  }
  return best;
}

// Extends [lo, hi) by one cell inside [0, limit), preferring the far edge.
bool grow_one(int& lo, int& hi, int limit) {
  if (hi < limit) { ++hi; return true; }
  if (lo > 0) { --lo; return true; }
  return false;
}

void validate_roi(const Roi& roi, int grid_h, int grid_w) {
  if (roi.row0 < 0 || roi.col0 < 0 || roi.row1 > grid_h || roi.col1 > grid_w ||
      roi.row0 >= roi.row1 || roi.col0 >= roi.col1)
    raise(ErrorCode::kArgument,
          fmt::format("ROI ({},{},{},{}) outside {}x{} grid", roi.row0, roi.col0, roi.row1,
                      roi.col1, grid_h, grid_w));
  if (roi.area() < kMinRoiArea)
    raise(ErrorCode::kArgument, fmt::format("ROI area {} below minimum {}", roi.area(), kMinRoiArea));
}

// (patch - mean) . direction, accumulated in double.
double project_patch(std::span<const float> patch, std::span<const float> mean,
                     std::span<const float> direction) {
  double acc = 0.0;
  for (std::size_t c = 0; c < patch.size(); ++c)
    acc += (static_cast<double>(patch[c]) - mean[c]) * direction[c];
  return acc;
}

}  // namespace

Roi roi_from_attention(const SpatialMap& obj_attn, double rel_threshold, double margin) {
  if (!(rel_threshold > 0.0 && rel_threshold < 1.0))
    raise(ErrorCode::kArgument, "ROI threshold must lie in (0, 1)");
  if (!(margin >= 0.0)) raise(ErrorCode::kArgument, "ROI margin must be >= 0");
  const int h = obj_attn.h(), w = obj_attn.w();
  if (h * w < kMinRoiArea)
    raise(ErrorCode::kArgument, fmt::format("{}x{} grid cannot hold a {}-patch ROI", h, w, kMinRoiArea));

  float peak = 0.0f;
  for (float v : obj_attn.values()) {
    if (!std::isfinite(v)) raise(ErrorCode::kArgument, "object attention contains NaN/Inf");
    peak = std::max(peak, v);
  }
  if (!(peak > 0.0f)) raise(ErrorCode::kEmptyAttention, "object attention has no positive value");

  const double cut = rel_threshold * static_cast<double>(peak);
  std::vector<char> mask(obj_attn.size());
  std::transform(obj_attn.values().begin(), obj_attn.values().end(), mask.begin(),
                 [cut](float v) { return static_cast<char>(static_cast<double>(v) >= cut); });
  const Component comp = largest_component(mask, h, w);

  Roi roi{comp.row0, comp.col0, comp.row1, comp.col1};
  const int pad_r = static_cast<int>(std::lround(margin * roi.height()));
  const int pad_c = static_cast<int>(std::lround(margin * roi.width()));
  roi.row0 = std::max(0, roi.row0 - pad_r);
  roi.row1 = std::min(h, roi.row1 + pad_r);
  roi.col0 = std::max(0, roi.col0 - pad_c);
  roi.col1 = std::min(w, roi.col1 + pad_c);

  while (roi.area() < kMinRoiArea) {
    const bool rows_first = roi.height() <= roi.width();
    bool grown = rows_first ? grow_one(roi.row0, roi.row1, h) : grow_one(roi.col0, roi.col1, w);
    if (!grown)
      grown = rows_first ? grow_one(roi.col0, roi.col1, w) : grow_one(roi.row0, roi.row1, h);
    if (!grown) raise(ErrorCode::kArgument, "grid too small for a legal ROI");
  }
  return roi;
}

PartBasis pca_decompose(const DenseFeatureMap& features, const Roi& roi, int k) {
  validate_roi(roi, features.grid_h(), features.grid_w());
  const int n = roi.area();
  const int channels = features.channels();
  if (k < 1 || k > std::min(channels, n))
    raise(ErrorCode::kArgument,
          fmt::format("k={} outside [1, {}] (channels={}, ROI area={})", k, std::min(channels, n),
                      channels, n));

  Eigen::MatrixXd x(n, channels);
  int row = 0;
  for (int r = roi.row0; r < roi.row1; ++r)
    for (int c = roi.col0; c < roi.col1; ++c, ++row) {
      const auto patch = features.patch(r, c);
      for (int ch = 0; ch < channels; ++ch) x(row, ch) = patch[ch];
    }

  const Eigen::RowVectorXd mean = x.colwise().mean();
  x.rowwise() -= mean;
  const double total_var = x.squaredNorm() / n;
  const double scale = (x.rowwise() + mean).squaredNorm() / n;
  if (total_var <= 1e-12 * std::max(scale, 1e-30))
    raise(ErrorCode::kDegenerateFeatures, "ROI patch features have zero variance");

  const Eigen::BDCSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const Eigen::MatrixXd& v = svd.matrixV();

  PartBasis basis;
  basis.k = k;
  basis.channels = channels;
  basis.grid_h = features.grid_h();
  basis.grid_w = features.grid_w();
  basis.roi = roi;
  basis.mean_vec.resize(channels);
  for (int ch = 0; ch < channels; ++ch) basis.mean_vec[ch] = static_cast<float>(mean(ch));

  for (int i = 0; i < k; ++i) {
    const Eigen::VectorXd dir = v.col(i).normalized();
    std::vector<float> d(channels);
    for (int ch = 0; ch < channels; ++ch) d[ch] = static_cast<float>(dir(ch));

    SpatialMap proj(basis.grid_h, basis.grid_w, 0.0f);
    double best = -1.0;
    double best_value = 0.0;
    for (int r = roi.row0; r < roi.row1; ++r)
      for (int c = roi.col0; c < roi.col1; ++c) {
        const double p = project_patch(features.patch(r, c), basis.mean_vec, d);
        proj.at(r, c) = static_cast<float>(p);
        if (std::abs(p) > best * (1.0 + 1e-9) + 1e-300) {
          best = std::abs(p);
          best_value = p;
        }
      }
    const bool flip = best_value < 0.0;
    if (flip) {
      for (float& e : d) e = -e;
      for (float& e : proj.values()) e = -e;
    }
    basis.directions.push_back(std::move(d));
    basis.sign_flipped.push_back(flip);
    basis.explained_var.push_back(static_cast<float>(sv(i) * sv(i) / n));
    basis.projections.push_back(std::move(proj));
  }
  return basis;
}

SpatialMap cosine_probe(const DenseFeatureMap& features, std::span<const float> probe) {
  if (probe.size() != static_cast<std::size_t>(features.channels()))
    raise(ErrorCode::kShapeMismatch,
          fmt::format("probe has {} channels, features have {}", probe.size(), features.channels()));
  double probe_norm = 0.0;
  for (float p : probe) probe_norm += static_cast<double>(p) * p;
  probe_norm = std::sqrt(probe_norm);
  if (!(probe_norm > 0.0)) raise(ErrorCode::kArgument, "probe vector has zero norm");

  SpatialMap out(features.grid_h(), features.grid_w(), 0.0f);
  for (int r = 0; r < out.h(); ++r)
    for (int c = 0; c < out.w(); ++c) {
      const auto patch = features.patch(r, c);
      double dot = 0.0, norm = 0.0;
      for (std::size_t ch = 0; ch < patch.size(); ++ch) {
        dot += static_cast<double>(patch[ch]) * probe[ch];
        norm += static_cast<double>(patch[ch]) * patch[ch];
      }
      if (norm <= 0.0) continue;
      out.at(r, c) = static_cast<float>(std::clamp(dot / (std::sqrt(norm) * probe_norm), -1.0, 1.0));
    }
  return out;
}

std::vector<SpatialMap> project_into_reference_basis(const DenseFeatureMap& features,
                                                     const PartBasis& basis) {
  if (features.channels() != basis.channels)
    raise(ErrorCode::kShapeMismatch,
          fmt::format("features have {} channels, basis has {}", features.channels(), basis.channels));
  std::vector<SpatialMap> out;
  out.reserve(basis.k);
  for (int i = 0; i < basis.k; ++i) {
    SpatialMap proj(features.grid_h(), features.grid_w(), 0.0f);
    for (int r = 0; r < proj.h(); ++r)
      for (int c = 0; c < proj.w(); ++c)
        proj.at(r, c) = static_cast<float>(
            project_patch(features.patch(r, c), basis.mean_vec, basis.directions[i]));
    out.push_back(std::move(proj));
  }
  return out;
}

void save_basis(const std::filesystem::path& npy_path, const std::filesystem::path& json_path,
                const PartBasis& basis) {
  io::NpyArray flat;
  const std::size_t dir_count = static_cast<std::size_t>(basis.k) * basis.channels;
  flat.shape = {dir_count + basis.k};
  for (const auto& d : basis.directions) flat.values.insert(flat.values.end(), d.begin(), d.end());
  flat.values.insert(flat.values.end(), basis.explained_var.begin(), basis.explained_var.end());
  io::write_array(npy_path, flat);

  nlohmann::ordered_json j;
  j["k"] = basis.k;
  j["channels"] = basis.channels;
  j["grid_h"] = basis.grid_h;
  j["grid_w"] = basis.grid_w;
  j["layout"] = {
      {"file", npy_path.filename().string()},
      {"directions", {{"offset", 0}, {"shape", {basis.k, basis.channels}}}},
      {"explained_var", {{"offset", dir_count}, {"shape", {basis.k}}}},
  };
  j["roi"] = {{"row0", basis.roi.row0}, {"col0", basis.roi.col0},
              {"row1", basis.roi.row1}, {"col1", basis.roi.col1}};
  j["sign_flips"] = basis.sign_flipped;
  j["explained_var"] = basis.explained_var;
  j["mean_vec"] = basis.mean_vec;
  std::ofstream out(json_path);
  if (!out) raise(ErrorCode::kIo, "cannot write " + json_path.string());
  out << j.dump(2) << '\n';
}

PartBasis load_basis(const std::filesystem::path& npy_path, const std::filesystem::path& json_path) {
  std::ifstream in(json_path);
  if (!in) raise(ErrorCode::kMissingInput, "missing " + json_path.string());
  try {
    const auto j = nlohmann::json::parse(in);
    PartBasis b;
    b.k = j.at("k").get<int>();
    b.channels = j.at("channels").get<int>();
    b.grid_h = j.at("grid_h").get<int>();
    b.grid_w = j.at("grid_w").get<int>();
    const auto& roi = j.at("roi");
    b.roi = {roi.at("row0").get<int>(), roi.at("col0").get<int>(), roi.at("row1").get<int>(),
             roi.at("col1").get<int>()};
    b.sign_flipped = j.at("sign_flips").get<std::vector<bool>>();
    b.mean_vec = j.at("mean_vec").get<std::vector<float>>();
    const auto dir_offset = j.at("layout").at("directions").at("offset").get<std::size_t>();
    const auto var_offset = j.at("layout").at("explained_var").at("offset").get<std::size_t>();

    const io::NpyArray flat = io::read_array(npy_path);
    const std::size_t dir_count = static_cast<std::size_t>(b.k) * b.channels;
    if (flat.values.size() < dir_offset + dir_count || flat.values.size() < var_offset + b.k)
      raise(ErrorCode::kCorrupt, "basis.npy shorter than basis.json layout");
    for (int i = 0; i < b.k; ++i) {
      const auto first = flat.values.begin() + static_cast<std::ptrdiff_t>(dir_offset + i * b.channels);
      b.directions.emplace_back(first, first + b.channels);
    }
    const auto var_first = flat.values.begin() + static_cast<std::ptrdiff_t>(var_offset);
    b.explained_var.assign(var_first, var_first + b.k);
    return b;
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::kFormat, json_path.string() + ": " + e.what());
  }
}

}  // namespace affordmap::geometry
