#include "fixtures.hpp"

#include <cmath>

#include <fmt/format.h>

#include "affordmap/image_io.hpp"

namespace affordmap::testing {
namespace fs = std::filesystem;

TempDir::TempDir(const std::string& prefix) {
  std::random_device rd;
  for (int attempt = 0; attempt < 100; ++attempt) {
    auto candidate = fs::temp_directory_path() / fmt::format("{}-{:08x}", prefix, rd());
    if (fs::create_directory(candidate)) {
      path_ = candidate;
      return;
    }
  }
  throw std::runtime_error("cannot create temp dir");
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

SpatialMap random_map(std::mt19937& rng, int h, int w, float lo, float hi) {
  std::uniform_real_distribution<float> dist(lo, hi);
  SpatialMap m(h, w);
  for (float& v : m.values()) v = dist(rng);
  return m;
}

DenseFeatureMap random_features(std::mt19937& rng, int h, int w, int channels) {
  std::normal_distribution<float> dist(0.0f, 1.0f);
  std::vector<float> v(static_cast<std::size_t>(h) * w * channels);
  for (float& x : v) x = dist(rng);
  return DenseFeatureMap(h, w, channels, std::move(v));
}

MugFixture make_mug(std::uint32_t seed, const MugLayout& L) {
  std::mt19937 rng(seed);
  std::normal_distribution<float> noise(0.0f, L.feature_noise);
  std::uniform_real_distribution<float> jitter(0.0f, 0.02f);
  const int g = L.grid;
  const auto cells = static_cast<std::size_t>(g) * g;

  MugFixture fx;
  fx.handle.assign(cells, 0);
  fx.body.assign(cells, 0);
  for (int r = 0; r < g; ++r)
    for (int c = 0; c < g; ++c) {
      const auto i = static_cast<std::size_t>(r) * g + c;
      fx.body[i] = r >= L.body_row0 && r < L.body_row1 && c >= L.body_col0 && c < L.body_col1;
      fx.handle[i] = r >= L.handle_row0 && r < L.handle_row1 && c >= L.handle_col0 && c < L.handle_col1;
    }

  std::vector<float> feats(cells * L.channels);
  for (std::size_t i = 0; i < cells; ++i) {
    const int proto = fx.handle[i] ? 2 : (fx.body[i] ? 1 : 0);
    for (int ch = 0; ch < L.channels; ++ch)
      feats[i * L.channels + ch] = (ch == proto ? 2.0f : 0.0f) + noise(rng);
  }

  const int layers = 2;
  std::vector<float> obj(cells * layers), verb(cells * layers);
  for (int l = 0; l < layers; ++l)
    for (int r = 0; r < g; ++r)
      for (int c = 0; c < g; ++c) {
        const auto i = static_cast<std::size_t>(r) * g + c;
        const auto j = static_cast<std::size_t>(l) * cells + i;
        obj[j] = (fx.body[i] || fx.handle[i] ? 1.0f : 0.02f) + jitter(rng);
        float v = 0.05f;
        if (fx.handle[i]) v = 1.0f;
        else if (fx.body[i] && c == L.body_col1 - 1) v = 0.4f;
        else if (fx.body[i]) v = 0.15f;
        verb[j] = v + jitter(rng);
      }

  fx.bundle.features = DenseFeatureMap(g, g, L.channels, std::move(feats));
  fx.bundle.verb_attention = AttentionStack(layers, g, g, std::move(verb));
  fx.bundle.object_attention = AttentionStack(layers, g, g, std::move(obj));
  fx.bundle.meta = {"image.png", "hold", "mug", "add a hand to hold the mug", {0, 1}, g, g, "synthetic"};
  return fx;
}

MugLayout random_layout(std::mt19937& rng) {
  MugLayout L;
  std::uniform_int_distribution<int> row(1, 5), col(1, 3), body_h(6, 9), body_w(5, 7);
  L.body_row0 = row(rng);
  L.body_row1 = L.body_row0 + body_h(rng);
  L.body_col0 = col(rng);
  L.body_col1 = L.body_col0 + body_w(rng);
  L.handle_row0 = L.body_row0 + 2;
  L.handle_row1 = L.body_row1 - 2;
  L.handle_col0 = L.body_col1;
  L.handle_col1 = L.body_col1 + 3;
  return L;
}

SpatialMap handle_ground_truth(const MugLayout& L, int gt_size) {
  const double scale = static_cast<double>(gt_size) / L.grid;
  const double cy = 0.5 * (L.handle_row0 + L.handle_row1) * scale;
  const double cx = 0.5 * (L.handle_col0 + L.handle_col1) * scale;
  const double sigma = 1.5 * scale;
  SpatialMap gt(gt_size, gt_size);
  for (int r = 0; r < gt_size; ++r)
    for (int c = 0; c < gt_size; ++c) {
      const double dy = r + 0.5 - cy, dx = c + 0.5 - cx;
      gt.at(r, c) = static_cast<float>(std::exp(-(dy * dy + dx * dx) / (2 * sigma * sigma)));
    }
  return gt;
}

double mass_fraction(const SpatialMap& map, const GridMask& mask, int grid_h, int grid_w) {
  double inside = 0.0, total = 0.0;
  for (int r = 0; r < map.h(); ++r)
    for (int c = 0; c < map.w(); ++c) {
      const int gr = r * grid_h / map.h();
      const int gc = c * grid_w / map.w();
      const double v = map.at(r, c);
      total += v;
      if (mask[static_cast<std::size_t>(gr) * grid_w + gc]) inside += v;
    }
  return total > 0.0 ? inside / total : 0.0;
}

void write_synthetic_dataset(const fs::path& root, int count, std::uint32_t seed) {
  std::mt19937 rng(seed);
  const char* verbs[] = {"hold", "drink_with", "pour"};
  const char* objects[] = {"mug", "cup"};
  for (int i = 0; i < count; ++i) {
    const MugLayout layout = random_layout(rng);
    const std::string verb = verbs[i % 3];
    const std::string object = objects[(i / 3) % 2];
    const auto dir = root / "unseen" / verb / object / fmt::format("img_{:03d}", i);
    MugFixture fx = make_mug(rng(), layout);
    fx.bundle.meta.verb = verb;
    fx.bundle.meta.object = object;
    io::write_sample_bundle(dir, fx.bundle);
    io::write_array(dir / "gt.npy", io::to_array(handle_ground_truth(layout, 48)));
    if (i % 3 == 0) {
      RgbImage img{32, 32, std::vector<unsigned char>(32 * 32 * 3)};
      for (std::size_t p = 0; p < img.rgb.size(); ++p) img.rgb[p] = static_cast<unsigned char>((p * 7 + i) % 256);
      io::write_png(dir / "image.png", img);
    }
  }
}

}  // namespace affordmap::testing
