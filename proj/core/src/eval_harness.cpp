#include "affordmap/eval_harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <set>
#include <thread>
#include <tuple>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "affordmap/error.hpp"
#include "affordmap/interaction.hpp"
#include "affordmap/tensor_io.hpp"

namespace affordmap::eval {
namespace fs = std::filesystem;
namespace {

constexpr const char* kSplits[] = {"seen", "unseen"};

std::vector<fs::path> sorted_subdirs(const fs::path& dir) {
  std::vector<fs::path> out;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(dir, ec))
    if (entry.is_directory()) out.push_back(entry.path());
  std::sort(out.begin(), out.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });
  return out;
}

struct Outcome {
  std::optional<EvalRecord> record;
  std::optional<SampleFailure> failure;
  std::vector<std::string> stages;
};

Outcome evaluate_one(const SampleEntry& entry, const fusion::FusionConfig& cfg, fusion::Mode mode,
                     const EvalOptions& options) {
  Outcome out;
  std::string stage = "load";
  try {
    const auto start = std::chrono::steady_clock::now();
    const io::SampleBundle bundle = io::read_sample_bundle(entry.bundle_dir);
    stage = "pipeline";
    const fusion::FusionResult result = fusion::run_pipeline(bundle, cfg, mode);
    out.stages = result.stages;
    stage = "metrics";
    const SpatialMap gt = io::read_ground_truth(entry.gt_path);
    const SpatialMap pred =
        interaction::upsample_bilinear(result.affordance_map, gt.h(), gt.w());
    const metrics::MetricTriple m = metrics::evaluate_all(pred, gt, options.fixation_threshold);
    if (!std::isfinite(m.kld) || !std::isfinite(m.sim) || !std::isfinite(m.nss))
      raise(ErrorCode::kDegenerateMap, "non-finite metric value");
    if (options.on_sample) {
      stage = "output";
      options.on_sample(entry, result, pred);
    }
    const auto elapsed = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start);
    out.record = EvalRecord{entry.split, entry.verb, entry.object, entry.image_id, m,
                            result.selected_component, elapsed.count()};
  } catch (const Error& e) {
    out.failure = SampleFailure{entry.key(), e.stage().empty() ? stage : e.stage(), e.what()};
  } catch (const std::exception& e) {
    out.failure = SampleFailure{entry.key(), stage, e.what()};
  }
  return out;
}

metrics::MetricTriple mean_of(const std::vector<metrics::MetricTriple>& xs) {
  metrics::MetricTriple m;
  for (const auto& x : xs) {
    m.kld += x.kld;
    m.sim += x.sim;
    m.nss += x.nss;
  }
  const double n = static_cast<double>(xs.size());
  return {m.kld / n, m.sim / n, m.nss / n};
}

double round6(double v) { return std::round(v * 1e6) / 1e6; }

nlohmann::ordered_json triple_json(const std::optional<metrics::MetricTriple>& t) {
  if (!t) return nullptr;
  return {{"kld", round6(t->kld)}, {"sim", round6(t->sim)}, {"nss", round6(t->nss)}};
}

nlohmann::ordered_json config_json(const fusion::FusionConfig& c) {
  nlohmann::ordered_json j;
  j["k"] = c.k;
  j["fixation_quantile"] = c.fixation_quantile;
  j["consider_negated_components"] = c.consider_negated_components;
  j["blur_sigma"] = c.effective_sigma();
  j["roi_threshold"] = c.roi_threshold;
  j["roi_margin"] = c.roi_margin;
  j["working_size"] = c.working_size;
  j["layers"] = c.layers ? nlohmann::ordered_json(*c.layers) : nlohmann::ordered_json(nullptr);
  return j;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
  if (!out) raise(ErrorCode::kIo, "short write to " + path.string());
}

unsigned char to_byte(double v) {
  return static_cast<unsigned char>(std::clamp(std::lround(v), 0L, 255L));
}

}  // namespace

DatasetIndex index_dataset(const fs::path& root, const std::optional<std::string>& split) {
  std::error_code ec;
  if (!fs::is_directory(root, ec))
    raise(ErrorCode::kEmptyDataset, "dataset root " + root.string() + " is not a directory");
  if (split && *split != "seen" && *split != "unseen")
    raise(ErrorCode::kArgument, "split must be 'seen' or 'unseen'");

  DatasetIndex index;
  index.root = root;
  std::set<std::tuple<std::string, std::string, std::string>> seen_keys;
  const auto warn = [&](const fs::path& p, std::string reason) {
    const std::string rel = fs::relative(p, root, ec).generic_string();
    spdlog::warn("skipping {}: {}", rel, reason);
    index.warnings.push_back({rel, std::move(reason)});
  };

  for (const char* split_name : kSplits) {
    if (split && *split != split_name) continue;
    const fs::path split_dir = root / split_name;
    if (!fs::is_directory(split_dir, ec)) continue;
    for (const auto& verb_dir : sorted_subdirs(split_dir))
      for (const auto& object_dir : sorted_subdirs(verb_dir))
        for (const auto& sample_dir : sorted_subdirs(object_dir)) {
          SampleEntry e{split_name,
                        verb_dir.filename().string(),
                        object_dir.filename().string(),
                        sample_dir.filename().string(),
                        sample_dir,
                        {},
                        std::nullopt};
          if (fs::is_regular_file(sample_dir / "gt.npy", ec)) e.gt_path = sample_dir / "gt.npy";
          else if (fs::is_regular_file(sample_dir / "gt.png", ec)) e.gt_path = sample_dir / "gt.png";
          else {
            warn(sample_dir, "no gt.npy or gt.png");
            continue;
          }
          try {
            (void)io::read_sample_bundle(sample_dir);
          } catch (const Error& err) {
            warn(sample_dir, err.what());
            continue;
          }
          if (!seen_keys.emplace(e.verb, e.object, e.image_id).second) {
            warn(sample_dir, "duplicate (verb, object, image_id)");
            continue;
          }
          for (const char* name : {"image.jpg", "image.png"})
            if (fs::is_regular_file(sample_dir / name, ec)) {
              e.image_path = sample_dir / name;
              break;
            }
          index.samples.push_back(std::move(e));
        }
  }
  if (index.samples.empty())
    raise(ErrorCode::kEmptyDataset,
          fmt::format("no valid samples under {} ({} skipped)", root.string(), index.warnings.size()));
  return index;
}

void summarize(Report& report) {
  report.per_pair_macro.clear();
  report.micro.reset();
  report.macro.reset();
  if (report.per_sample.empty()) return;

  std::vector<metrics::MetricTriple> all;
  std::map<std::pair<std::string, std::string>, std::vector<metrics::MetricTriple>> by_pair;
  for (const auto& r : report.per_sample) {
    all.push_back(r.metrics);
    by_pair[{r.verb, r.object}].push_back(r.metrics);
  }
  report.micro = mean_of(all);
  std::vector<metrics::MetricTriple> pair_means;
  for (const auto& [key, xs] : by_pair) {
    const auto m = mean_of(xs);
    report.per_pair_macro[key] = {xs.size(), m};
    pair_means.push_back(m);
  }
  report.macro = mean_of(pair_means);
}

Report evaluate(const DatasetIndex& index, const fusion::FusionConfig& cfg, fusion::Mode mode,
                const EvalOptions& options) {
  cfg.validate();
  const std::size_t n = index.samples.size();
  std::vector<Outcome> outcomes(n);

  int jobs = options.jobs >= 1 ? options.jobs : static_cast<int>(std::thread::hardware_concurrency());
  jobs = std::clamp<int>(jobs, 1, static_cast<int>(std::max<std::size_t>(n, 1)));
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++)
      outcomes[i] = evaluate_one(index.samples[i], cfg, mode, options);
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(jobs);
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
  }

  Report report;
  report.mode = mode;
  report.config = cfg;
  report.indexed = n;
  report.warnings = index.warnings;
  for (auto& o : outcomes) {
    for (const auto& s : o.stages) ++report.stage_counts[s];
    if (o.record) report.per_sample.push_back(std::move(*o.record));
    if (o.failure) {
      spdlog::warn("sample {} failed at {}: {}", o.failure->key, o.failure->stage, o.failure->message);
      report.failures.push_back(std::move(*o.failure));
    }
  }
  if (report.per_sample.empty())
    raise(ErrorCode::kEvaluationFailed, fmt::format("all {} samples failed", n));
  summarize(report);
  return report;
}

std::string report_to_json(const Report& report) {
  nlohmann::ordered_json j;
  j["mode"] = fusion::to_string(report.mode);
  j["config"] = config_json(report.config);
  j["counts"] = {{"indexed", report.indexed},
                 {"evaluated", report.per_sample.size()},
                 {"failed", report.failures.size()},
                 {"skipped", report.warnings.size()}};
  j["micro"] = triple_json(report.micro);
  j["macro"] = triple_json(report.macro);
  auto pairs = nlohmann::ordered_json::array();
  for (const auto& [key, summary] : report.per_pair_macro) {
    auto p = triple_json(summary.mean);
    p["verb"] = key.first;
    p["object"] = key.second;
    p["n"] = summary.count;
    pairs.push_back(std::move(p));
  }
  j["per_pair_macro"] = std::move(pairs);
  j["stage_counts"] = report.stage_counts;
  auto samples = nlohmann::ordered_json::array();
  for (const auto& r : report.per_sample) {
    nlohmann::ordered_json s;
    s["split"] = r.split;
    s["verb"] = r.verb;
    s["object"] = r.object;
    s["image_id"] = r.image_id;
    s["kld"] = round6(r.metrics.kld);
    s["sim"] = round6(r.metrics.sim);
    s["nss"] = round6(r.metrics.nss);
    s["selected_component"] = r.selected_component;
    samples.push_back(std::move(s));
  }
  j["per_sample"] = std::move(samples);
  auto failures = nlohmann::ordered_json::array();
  for (const auto& f : report.failures)
    failures.push_back({{"sample", f.key}, {"stage", f.stage}, {"message", f.message}});
  j["failures"] = std::move(failures);
  auto warnings = nlohmann::ordered_json::array();
  for (const auto& w : report.warnings) warnings.push_back({{"path", w.path}, {"reason", w.reason}});
  j["warnings"] = std::move(warnings);
  return j.dump(2) + "\n";
}

std::string report_to_csv(const Report& report) {
  std::string out = "verb,object,image_id,kld,sim,nss,component,ms\n";
  for (const auto& r : report.per_sample)
    out += fmt::format("{},{},{},{:.6f},{:.6f},{:.6f},{},{:.6f}\n", r.verb, r.object, r.image_id,
                       r.metrics.kld, r.metrics.sim, r.metrics.nss, r.selected_component, r.elapsed_ms);
  return out;
}

void emit_report(const Report& report, const fs::path& out_dir, const std::vector<ReportFormat>& formats) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) raise(ErrorCode::kIo, "cannot create " + out_dir.string() + ": " + ec.message());
  for (ReportFormat f : formats) {
    if (f == ReportFormat::kJson) write_text(out_dir / "report.json", report_to_json(report));
    else write_text(out_dir / "report.csv", report_to_csv(report));
  }
}

Rgb jet_color(double m) {
  m = std::clamp(m, 0.0, 1.0);
  const auto channel = [m](double center) { return std::clamp(1.5 - std::abs(4.0 * m - center), 0.0, 1.0); };
  return {to_byte(255.0 * channel(3.0)), to_byte(255.0 * channel(2.0)), to_byte(255.0 * channel(1.0))};
}

Rgb diverging_color(double v) {
  v = std::clamp(v, -1.0, 1.0);
  const unsigned char fade = to_byte(255.0 * (1.0 - std::abs(v)));
  if (v >= 0.0) return {255, fade, fade};
  return {fade, fade, 255};
}

RgbImage render_overlay(const RgbImage& image, const SpatialMap& map, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) raise(ErrorCode::kArgument, "alpha must lie in [0, 1]");
  if (image.h != map.h() || image.w != map.w())
    raise(ErrorCode::kShapeMismatch,
          fmt::format("map {}x{} vs image {}x{}", map.h(), map.w(), image.h, image.w));
  const SpatialMap m = interaction::normalize_01(map);
  RgbImage out = image;
  for (int r = 0; r < image.h; ++r)
    for (int c = 0; c < image.w; ++c) {
      const double weight = alpha * m.at(r, c);
      if (weight == 0.0) continue;
      const Rgb color = jet_color(m.at(r, c));
      const std::size_t base = (static_cast<std::size_t>(r) * image.w + c) * 3;
      for (int ch = 0; ch < 3; ++ch)
        out.rgb[base + ch] = to_byte((1.0 - weight) * image.rgb[base + ch] + weight * color[ch]);
    }
  return out;
}

RgbImage render_sequential(const SpatialMap& map) {
  const SpatialMap m = interaction::normalize_01(map);
  RgbImage out{map.h(), map.w(), std::vector<unsigned char>(map.size() * 3)};
  for (std::size_t i = 0; i < map.size(); ++i) {
    const Rgb color = jet_color(m.values()[i]);
    std::copy(color.begin(), color.end(), out.rgb.begin() + static_cast<std::ptrdiff_t>(i * 3));
  }
  return out;
}

RgbImage render_signed(const SpatialMap& map) {
  float peak = 0.0f;
  for (float v : map.values()) peak = std::max(peak, std::abs(v));
  RgbImage out{map.h(), map.w(), std::vector<unsigned char>(map.size() * 3)};
  for (std::size_t i = 0; i < map.size(); ++i) {
    const double v = peak > 0.0f ? map.values()[i] / peak : 0.0;
    const Rgb color = diverging_color(v);
    std::copy(color.begin(), color.end(), out.rgb.begin() + static_cast<std::ptrdiff_t>(i * 3));
  }
  return out;
}

}  // namespace affordmap::eval
