#include "cli.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <optional>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "affordmap/error.hpp"
#include "affordmap/eval_harness.hpp"
#include "affordmap/fusion.hpp"
#include "affordmap/geometry.hpp"
#include "affordmap/image_io.hpp"
#include "affordmap/interaction.hpp"
#include "affordmap/tensor_io.hpp"

namespace affordmap::cli {
namespace fs = std::filesystem;
namespace {

void init_logging() {
  static std::once_flag once;
  std::call_once(once, [] {
    auto logger = spdlog::stderr_color_mt("affordmap");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("[%l] %v");
  });
  const char* env = std::getenv("AFFORDMAP_LOG");
  spdlog::level::level_enum level = spdlog::level::warn;
  if (env) {
    const std::string v = env;
    if (v == "error") level = spdlog::level::err;
    else if (v == "warn") level = spdlog::level::warn;
    else if (v == "info") level = spdlog::level::info;
    else if (v == "debug") level = spdlog::level::debug;
  }
  spdlog::set_level(level);
}

struct FusionFlags {
  int k = 3;
  double fixation_quantile = 0.8;
  std::optional<double> sigma;
  double roi_threshold = 0.4;
  double roi_margin = 0.1;
  std::vector<int> layers;
  int size = fusion::kReferenceWorkingSize;
  bool no_negated = false;
  std::string mode = "fusion";

  fusion::FusionConfig config() const {
    fusion::FusionConfig cfg;
    cfg.k = k;
    cfg.fixation_quantile = fixation_quantile;
    cfg.consider_negated_components = !no_negated;
    cfg.blur_sigma = sigma;
    cfg.roi_threshold = roi_threshold;
    cfg.roi_margin = roi_margin;
    cfg.working_size = size;
    if (!layers.empty()) cfg.layers = layers;
    cfg.validate();
    return cfg;
  }
};

void add_roi_flags(CLI::App* cmd, FusionFlags& f) {
  cmd->add_option("--k", f.k, "Number of PCA components (1-10)")->capture_default_str();
  cmd->add_option("--roi-threshold", f.roi_threshold, "ROI threshold relative to the attention peak")
      ->capture_default_str();
  cmd->add_option("--roi-margin", f.roi_margin, "ROI margin as a fraction of the box side")
      ->capture_default_str();
  cmd->add_option("--layers", f.layers, "Comma-separated attention layer indices (default: all)")
      ->delimiter(',');
}

void add_fusion_flags(CLI::App* cmd, FusionFlags& f) {
  add_roi_flags(cmd, f);
  cmd->add_option("--fixation-quantile", f.fixation_quantile,
                  "Quantile above which a component's ROI values form its fixation mask")
      ->capture_default_str();
  cmd->add_option("--sigma", f.sigma, "Blur sigma in working-resolution pixels (default: 3 * size / 224)");
  cmd->add_option("--size", f.size, "Working resolution of the fused map")->capture_default_str();
  cmd->add_flag("--no-negated", f.no_negated, "Do not score negated PCA components");
  cmd->add_option("--mode", f.mode, "interaction-only or fusion")
      ->check(CLI::IsMember({"interaction-only", "fusion"}))
      ->capture_default_str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
}

void make_dirs(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) raise(ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());
}

std::optional<fs::path> find_image(const fs::path& bundle_dir, const io::SampleMeta& meta) {
  std::error_code ec;
  for (const char* name : {"image.jpg", "image.png"})
    if (fs::is_regular_file(bundle_dir / name, ec)) return bundle_dir / name;
  if (!meta.image_path.empty()) {
    fs::path p = meta.image_path;
    if (p.is_relative()) p = bundle_dir / p;
    if (fs::is_regular_file(p, ec)) return p;
  }
  return std::nullopt;
}

RgbImage overlay_on(const std::optional<fs::path>& image_path, const SpatialMap& map, double alpha) {
  RgbImage base;
  if (image_path) {
    base = io::read_image(*image_path);
  } else {
    base = {map.h(), map.w(), std::vector<unsigned char>(map.size() * 3, 0)};
  }
  return eval::render_overlay(base, interaction::upsample_bilinear(map, base.h, base.w), alpha);
}

nlohmann::ordered_json scores_json(const std::vector<float>& scores) {
  auto arr = nlohmann::ordered_json::array();
  for (float s : scores) {
    if (std::isfinite(s)) arr.push_back(s);
    else arr.push_back(nullptr);
  }
  return arr;
}

int cmd_fuse(const std::string& bundle_dir, const std::string& out_dir, const FusionFlags& flags,
             double alpha, bool quiet, std::ostream& out) {
  const auto cfg = flags.config();
  const auto mode = fusion::parse_mode(flags.mode);
  const io::SampleBundle bundle = [&] {
    try {
      return io::read_sample_bundle(bundle_dir);
    } catch (const Error& e) {
      throw e.with_stage("load");
    }
  }();
  const fusion::FusionResult result = fusion::run_pipeline(bundle, cfg, mode);

  make_dirs(out_dir);
  const fs::path dir = out_dir;
  io::write_array(dir / "fused.npy", io::to_array(result.affordance_map));

  nlohmann::ordered_json j;
  j["mode"] = fusion::to_string(mode);
  j["verb"] = bundle.meta.verb;
  j["object"] = bundle.meta.object;
  j["selected_component"] = result.selected_component;
  j["selected_sign"] = result.selected_sign;
  j["component_scores"] = scores_json(result.component_scores);
  if (result.roi)
    j["roi"] = {{"row0", result.roi->row0}, {"col0", result.roi->col0},
                {"row1", result.roi->row1}, {"col1", result.roi->col1}};
  else
    j["roi"] = nullptr;
  j["explained_var"] = result.explained_var;
  j["stages"] = result.stages;
  j["config"] = {{"k", cfg.k},
                 {"fixation_quantile", cfg.fixation_quantile},
                 {"consider_negated_components", cfg.consider_negated_components},
                 {"blur_sigma", cfg.effective_sigma()},
                 {"roi_threshold", cfg.roi_threshold},
                 {"roi_margin", cfg.roi_margin},
                 {"working_size", cfg.working_size},
                 {"layers", cfg.layers ? nlohmann::ordered_json(*cfg.layers) : nlohmann::ordered_json(nullptr)}};
  write_text(dir / "result.json", j.dump(2) + "\n");

  io::write_png(dir / "overlay.png",
                overlay_on(find_image(bundle_dir, bundle.meta), result.affordance_map, alpha));
  if (!quiet)
    out << fmt::format("selected_component={} sign={} out={}\n", result.selected_component,
                       result.selected_sign, dir.string());
  return kExitOk;
}

int cmd_eval(const std::string& root, const std::string& out_dir, const FusionFlags& flags, int jobs,
             const std::vector<std::string>& formats, const std::string& split, bool overlays,
             double alpha, bool quiet, std::ostream& out) {
  const auto cfg = flags.config();
  const auto mode = fusion::parse_mode(flags.mode);
  std::vector<eval::ReportFormat> fmts;
  for (const auto& f : formats) fmts.push_back(f == "csv" ? eval::ReportFormat::kCsv : eval::ReportFormat::kJson);

  const auto index = eval::index_dataset(root, split == "all" ? std::nullopt : std::optional(split));
  make_dirs(out_dir);
  const fs::path overlay_dir = fs::path(out_dir) / "overlays";
  eval::EvalOptions options;
  options.jobs = jobs;
  if (overlays) {
    make_dirs(overlay_dir);
    options.on_sample = [&](const eval::SampleEntry& e, const fusion::FusionResult& r, const SpatialMap&) {
      if (!e.image_path) return;
      io::write_png(overlay_dir / (e.key() + ".png"), overlay_on(e.image_path, r.affordance_map, alpha));
    };
  }
  const eval::Report report = eval::evaluate(index, cfg, mode, options);
  eval::emit_report(report, out_dir, fmts);
  if (!quiet)
    out << fmt::format("KLD={:.6f} SIM={:.6f} NSS={:.6f} n={}\n", report.micro->kld, report.micro->sim,
                       report.micro->nss, report.per_sample.size());
  return kExitOk;
}

int cmd_pca_inspect(const std::string& bundle_dir, const std::string& out_dir, const FusionFlags& flags,
                    bool quiet, std::ostream& out) {
  if (flags.k < 1 || flags.k > 10) raise(ErrorCode::kArgument, fmt::format("k={} outside [1, 10]", flags.k));
  const io::SampleBundle bundle = io::read_sample_bundle(bundle_dir);
  std::optional<std::vector<int>> layers;
  if (!flags.layers.empty()) layers = flags.layers;
  const SpatialMap object_map = interaction::aggregate_layers(bundle.object_attention, layers);
  const geometry::Roi roi = geometry::roi_from_attention(object_map, flags.roi_threshold, flags.roi_margin);
  const geometry::PartBasis basis = geometry::pca_decompose(bundle.features, roi, flags.k);

  make_dirs(out_dir);
  const fs::path dir = out_dir;
  geometry::save_basis(dir / "basis.npy", dir / "basis.json", basis);
  io::NpyArray stacked{{static_cast<std::size_t>(basis.k), static_cast<std::size_t>(basis.grid_h),
                        static_cast<std::size_t>(basis.grid_w)},
                       {}};
  for (int i = 0; i < basis.k; ++i) {
    const auto& p = basis.projections[i];
    stacked.values.insert(stacked.values.end(), p.values().begin(), p.values().end());
    io::write_png(dir / fmt::format("component_{}.png", i), eval::render_signed(p));
  }
  io::write_array(dir / "projections.npy", stacked);
  if (!quiet) {
    out << fmt::format("k={} roi=({},{},{},{}) explained_var=[", basis.k, roi.row0, roi.col0, roi.row1, roi.col1);
    for (int i = 0; i < basis.k; ++i) out << (i ? "," : "") << fmt::format("{:.6f}", basis.explained_var[i]);
    out << "]\n";
  }
  return kExitOk;
}

int cmd_probe_sim(const std::string& bundle_dir, int row, int col, const std::string& out_path, bool quiet,
                  std::ostream& out) {
  const io::SampleBundle bundle = io::read_sample_bundle(bundle_dir);
  const auto& f = bundle.features;
  if (row < 0 || row >= f.grid_h() || col < 0 || col >= f.grid_w())
    raise(ErrorCode::kArgument,
          fmt::format("probe position ({}, {}) outside {}x{} grid", row, col, f.grid_h(), f.grid_w()));
  const SpatialMap sim = geometry::cosine_probe(f, f.patch(row, col));
  fs::path npy_path = out_path;
  if (npy_path.extension() != ".npy") npy_path += ".npy";
  if (npy_path.has_parent_path()) make_dirs(npy_path.parent_path());
  io::write_array(npy_path, io::to_array(sim));
  fs::path png_path = npy_path;
  png_path.replace_extension(".png");
  io::write_png(png_path, eval::render_signed(sim));
  if (!quiet) out << fmt::format("probe=({},{}) out={}\n", row, col, npy_path.string());
  return kExitOk;
}

int cmd_overlay(const std::string& image_path, const std::string& map_path, const std::string& out_path,
                double alpha, bool quiet, std::ostream& out) {
  const SpatialMap map = io::to_spatial_map(io::read_array(map_path));
  io::write_png(out_path, overlay_on(fs::path(image_path), map, alpha));
  if (!quiet) out << fmt::format("out={}\n", out_path);
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  init_logging();
  CLI::App app{"Training-free affordance maps from part geometry and interaction attention", "affordmap"};
  app.require_subcommand(1);
  app.fallthrough();
  bool quiet = false;
  std::optional<long> seed;
  app.add_flag("--quiet,-q", quiet, "Print nothing on stdout except errors");
  app.add_option("--seed", seed, "Reserved; the pipeline is deterministic");

  FusionFlags fusion_flags;
  double alpha = 0.5;
  std::string in_path, out_path, extra_path;

  auto* fuse = app.add_subcommand("fuse", "Fuse one sample bundle into an affordance map");
  fuse->add_option("bundle_dir", in_path, "Sample bundle directory")->required();
  fuse->add_option("out_dir", out_path, "Output directory")->required();
  add_fusion_flags(fuse, fusion_flags);
  fuse->add_option("--alpha", alpha, "Overlay opacity")->check(CLI::Range(0.0, 1.0))->capture_default_str();

  int jobs = 1;
  std::vector<std::string> formats{"json", "csv"};
  std::string split = "all";
  bool no_overlays = false;
  auto* evalc = app.add_subcommand("eval", "Evaluate a dataset of bundles against ground truth");
  evalc->add_option("dataset_root", in_path, "Dataset root with seen/ and/or unseen/")->required();
  evalc->add_option("out_dir", out_path, "Output directory")->required();
  add_fusion_flags(evalc, fusion_flags);
  evalc->add_option("--jobs", jobs, "Worker threads (0 = all cores)")->capture_default_str();
  evalc->add_option("--format", formats, "Report formats: json, csv")
      ->delimiter(',')
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();
  evalc->add_option("--split", split, "seen, unseen or all")
      ->check(CLI::IsMember({"seen", "unseen", "all"}))
      ->capture_default_str();
  evalc->add_flag("--no-overlays", no_overlays, "Skip writing overlays/<verb>_<object>_<id>.png");
  evalc->add_option("--alpha", alpha, "Overlay opacity")->check(CLI::Range(0.0, 1.0))->capture_default_str();

  auto* pca = app.add_subcommand("pca-inspect", "Write PCA part prototypes of the object ROI");
  pca->add_option("bundle_dir", in_path, "Sample bundle directory")->required();
  pca->add_option("out_dir", out_path, "Output directory")->required();
  add_roi_flags(pca, fusion_flags);

  int row = 0, col = 0;
  auto* probe = app.add_subcommand("probe-sim", "Cosine similarity of every patch to one probe patch");
  probe->add_option("bundle_dir", in_path, "Sample bundle directory")->required();
  probe->add_option("row", row, "Probe grid row")->required();
  probe->add_option("col", col, "Probe grid column")->required();
  probe->add_option("out_path", out_path, "Output .npy path (a .png is written alongside)")->required();

  auto* overlay = app.add_subcommand("overlay", "Blend a heatmap onto an image");
  overlay->add_option("image", in_path, "PNG or JPEG image")->required();
  overlay->add_option("map", extra_path, "Heatmap .npy")->required();
  overlay->add_option("out", out_path, "Output PNG")->required();
  overlay->add_option("--alpha", alpha, "Overlay opacity")->check(CLI::Range(0.0, 1.0))->capture_default_str();

  std::vector<std::string> argv_storage = args.empty() ? std::vector<std::string>{"affordmap"} : args;
  std::vector<char*> argv;
  for (auto& a : argv_storage) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  std::string stage;
  try {
    if (*fuse) return cmd_fuse(in_path, out_path, fusion_flags, alpha, quiet, out);
    if (*evalc)
      return cmd_eval(in_path, out_path, fusion_flags, jobs, formats, split, !no_overlays, alpha, quiet, out);
    if (*pca) return cmd_pca_inspect(in_path, out_path, fusion_flags, quiet, out);
    if (*probe) return cmd_probe_sim(in_path, row, col, out_path, quiet, out);
    if (*overlay) return cmd_overlay(in_path, extra_path, out_path, alpha, quiet, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return is_validation_error(e.code()) ? kExitUsage : kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace affordmap::cli
