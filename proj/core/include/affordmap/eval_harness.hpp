#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "affordmap/fusion.hpp"
#include "affordmap/metrics.hpp"
#include "affordmap/types.hpp"

namespace affordmap::eval {

struct SampleEntry {
  std::string split;
  std::string verb;
  std::string object;
  std::string image_id;
  std::filesystem::path bundle_dir;
  std::filesystem::path gt_path;
  /// image.jpg or image.png next to the bundle, when present.
  std::optional<std::filesystem::path> image_path;

  std::string key() const { return verb + "_" + object + "_" + image_id; }
};

struct IndexWarning {
  std::string path;  // relative to the dataset root
  std::string reason;
};

struct DatasetIndex {
  std::filesystem::path root;
  std::vector<SampleEntry> samples;
  std::vector<IndexWarning> warnings;
};

/// Walks root/{seen,unseen}/<verb>/<object>/<image_id>/ in lexicographic
/// order. Bundles that fail validation, lack gt.npy/gt.png, or repeat a
/// (verb, object, image_id) triple are skipped with a warning. `split`
/// restricts the walk to one split. Throws EmptyDatasetError when nothing
/// valid remains.
DatasetIndex index_dataset(const std::filesystem::path& root,
                           const std::optional<std::string>& split = std::nullopt);

struct EvalRecord {
  std::string split;
  std::string verb;
  std::string object;
  std::string image_id;
  metrics::MetricTriple metrics;
  int selected_component = -1;
  double elapsed_ms = 0.0;
};

struct SampleFailure {
  std::string key;
  std::string stage;
  std::string message;
};

struct PairSummary {
  std::size_t count = 0;
  metrics::MetricTriple mean;
};

struct Report {
  fusion::Mode mode = fusion::Mode::kInteractionXGeometry;
  fusion::FusionConfig config;
  std::size_t indexed = 0;
  std::vector<EvalRecord> per_sample;
  std::map<std::pair<std::string, std::string>, PairSummary> per_pair_macro;
  /// Mean over samples; empty when no sample succeeded.
  std::optional<metrics::MetricTriple> micro;
  /// Mean over (verb, object) pair means.
  std::optional<metrics::MetricTriple> macro;
  std::vector<SampleFailure> failures;
  std::vector<IndexWarning> warnings;
  std::map<std::string, std::size_t> stage_counts;
};

/// Recomputes micro, macro and per-pair means from per_sample.
void summarize(Report& report);

struct EvalOptions {
  /// Worker threads; values < 1 use the hardware concurrency.
  int jobs = 1;
  double fixation_threshold = metrics::kDefaultFixationThreshold;
  /// Called from worker threads after each successful sample with the
  /// prediction already resized to ground-truth resolution.
  std::function<void(const SampleEntry&, const fusion::FusionResult&, const SpatialMap&)> on_sample;
};

/// Runs the pipeline on every indexed sample and scores the prediction at
/// ground-truth resolution. Per-sample failures are recorded and excluded
/// from the aggregates. Throws EvaluationFailedError when every sample fails.
Report evaluate(const DatasetIndex& index, const fusion::FusionConfig& cfg, fusion::Mode mode,
                const EvalOptions& options = {});

enum class ReportFormat { kJson, kCsv };

/// report.json omits wall-clock timings; report.csv includes them.
std::string report_to_json(const Report& report);
std::string report_to_csv(const Report& report);

/// Writes report.json and/or report.csv into out_dir (created if needed).
void emit_report(const Report& report, const std::filesystem::path& out_dir,
                 const std::vector<ReportFormat>& formats = {ReportFormat::kJson, ReportFormat::kCsv});

using Rgb = std::array<unsigned char, 3>;

/// MATLAB-style jet for m in [0, 1]; m = 1 is dark red.
Rgb jet_color(double m);
/// White at 0, red toward +1, blue toward -1.
Rgb diverging_color(double v);

/// out = (1 - alpha*m) * image + alpha*m * jet(m), with m = normalize_01(map).
/// Throws ShapeMismatchError if the map and image sizes differ, ArgumentError
/// for alpha outside [0, 1].
RgbImage render_overlay(const RgbImage& image, const SpatialMap& map, double alpha);

/// Non-negative map rendered with jet after normalize_01.
RgbImage render_sequential(const SpatialMap& map);
/// Signed map scaled by its max magnitude and rendered with diverging_color.
RgbImage render_signed(const SpatialMap& map);

}  // namespace affordmap::eval
