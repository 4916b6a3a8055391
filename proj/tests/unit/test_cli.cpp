#include <fstream>
#include <iterator>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "affordmap/eval_harness.hpp"
#include "affordmap/fusion.hpp"
#include "affordmap/image_io.hpp"
#include "fixtures.hpp"

namespace affordmap::cli {
namespace {

namespace fs = std::filesystem;
using testing::TempDir;

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "affordmap");
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path write_mug(const TempDir& tmp, std::uint32_t seed = 42) {
  const auto dir = tmp / "bundle";
  io::write_sample_bundle(dir, testing::make_mug(seed).bundle);
  return dir;
}

TEST(CliFuse, WritesOutputs) {
  TempDir tmp;
  const auto bundle = write_mug(tmp);
  const CliRun r = invoke({"fuse", bundle.string(), (tmp / "out").string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  for (const char* f : {"fused.npy", "result.json", "overlay.png"}) EXPECT_TRUE(fs::exists(tmp / "out" / f)) << f;
  const auto fused = io::read_array(tmp / "out" / "fused.npy");
  EXPECT_EQ(fused.shape, (std::vector<std::size_t>{224, 224}));
  const auto j = nlohmann::json::parse(slurp(tmp / "out" / "result.json"));
  EXPECT_GE(j["selected_component"].get<int>(), 0);
  EXPECT_NE(r.out.find("selected_component="), std::string::npos);
}

TEST(CliFuse, MissingMetaIsUsageError) {
  TempDir tmp;
  const auto bundle = write_mug(tmp);
  fs::remove(bundle / "meta.json");
  const CliRun r = invoke({"fuse", bundle.string(), (tmp / "out").string()});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("meta.json"), std::string::npos);
}

TEST(CliFuse, InteractionOnlyHasNoComponent) {
  TempDir tmp;
  const auto bundle = write_mug(tmp);
  const CliRun r = invoke({"fuse", bundle.string(), (tmp / "out").string(), "--mode", "interaction-only", "--size", "64"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto j = nlohmann::json::parse(slurp(tmp / "out" / "result.json"));
  EXPECT_EQ(j["selected_component"].get<int>(), -1);
  EXPECT_EQ(io::read_array(tmp / "out" / "fused.npy").shape, (std::vector<std::size_t>{64, 64}));
}

TEST(CliFuse, BadOptionsExitTwo) {
  TempDir tmp;
  const auto bundle = write_mug(tmp);
  EXPECT_EQ(invoke({"fuse", bundle.string(), (tmp / "out").string(), "--k", "0"}).code, kExitUsage);
  EXPECT_EQ(invoke({"fuse", bundle.string(), (tmp / "out").string(), "--mode", "nope"}).code, kExitUsage);
  EXPECT_EQ(invoke({"fuse"}).code, kExitUsage);
  EXPECT_EQ(invoke({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(invoke({"--help"}).code, kExitOk);
}

TEST(CliEval, OracleGroundTruthGivesPerfectSim) {
  TempDir tmp;
  testing::write_synthetic_dataset(tmp / "data", 3, 11);
  for (const auto& s : eval::index_dataset(tmp / "data").samples) {
    const auto r = fusion::run_pipeline(io::read_sample_bundle(s.bundle_dir), fusion::FusionConfig{});
    io::write_array(s.gt_path, io::to_array(r.affordance_map));
  }
  const CliRun r = invoke({"eval", (tmp / "data").string(), (tmp / "out").string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("SIM=1.000000"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("n=3"), std::string::npos);
  EXPECT_TRUE(fs::exists(tmp / "out" / "report.json"));
  EXPECT_TRUE(fs::exists(tmp / "out" / "report.csv"));
  // Only the first sample has an image.
  EXPECT_EQ(std::distance(fs::directory_iterator(tmp / "out" / "overlays"), fs::directory_iterator{}), 1);
}

TEST(CliEval, JobsDoNotChangeReport) {
  TempDir tmp;
  testing::write_synthetic_dataset(tmp / "data", 6, 12);
  ASSERT_EQ(invoke({"eval", (tmp / "data").string(), (tmp / "a").string(), "--jobs", "1", "--no-overlays"}).code, kExitOk);
  ASSERT_EQ(invoke({"eval", (tmp / "data").string(), (tmp / "b").string(), "--jobs", "8", "--no-overlays"}).code, kExitOk);
  EXPECT_EQ(slurp(tmp / "a" / "report.json"), slurp(tmp / "b" / "report.json"));
  EXPECT_FALSE(fs::exists(tmp / "a" / "overlays"));
}

TEST(CliEval, EmptyRootIsUsageError) {
  TempDir tmp;
  fs::create_directories(tmp / "empty");
  EXPECT_EQ(invoke({"eval", (tmp / "empty").string(), (tmp / "out").string()}).code, kExitUsage);
}

TEST(CliEval, FormatSelection) {
  TempDir tmp;
  testing::write_synthetic_dataset(tmp / "data", 2, 13);
  ASSERT_EQ(invoke({"eval", (tmp / "data").string(), (tmp / "out").string(), "--format", "csv", "-q"}).code, kExitOk);
  EXPECT_TRUE(fs::exists(tmp / "out" / "report.csv"));
  EXPECT_FALSE(fs::exists(tmp / "out" / "report.json"));
}

TEST(CliPcaInspect, WritesComponentsAndBasis) {
  TempDir tmp;
  const auto bundle = write_mug(tmp);
  const CliRun r = invoke({"pca-inspect", bundle.string(), (tmp / "pca").string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  for (const char* f : {"component_0.png", "component_1.png", "component_2.png", "basis.npy", "basis.json", "projections.npy"})
    EXPECT_TRUE(fs::exists(tmp / "pca" / f)) << f;
  EXPECT_EQ(io::read_array(tmp / "pca" / "projections.npy").shape, (std::vector<std::size_t>{3, 16, 16}));
}

TEST(CliProbeSim, SelfSimilarityIsOne) {
  TempDir tmp;
  const auto bundle = write_mug(tmp);
  const CliRun r = invoke({"probe-sim", bundle.string(), "7", "10", (tmp / "probe.npy").string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto arr = io::read_array(tmp / "probe.npy");
  ASSERT_EQ(arr.shape, (std::vector<std::size_t>{16, 16}));
  EXPECT_NEAR(arr.values[7 * 16 + 10], 1.0f, 1e-6);
  EXPECT_TRUE(fs::exists(tmp / "probe.png"));
  EXPECT_EQ(invoke({"probe-sim", bundle.string(), "16", "0", (tmp / "bad.npy").string()}).code, kExitUsage);
}

TEST(CliOverlay, AlphaZeroReproducesImage) {
  TempDir tmp;
  RgbImage img{3, 4, {}};
  for (int i = 0; i < 36; ++i) img.rgb.push_back(static_cast<unsigned char>(i * 7));
  io::write_png(tmp / "img.png", img);
  io::write_array(tmp / "map.npy", io::to_array(SpatialMap(3, 4, std::vector<float>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11})));
  ASSERT_EQ(invoke({"overlay", (tmp / "img.png").string(), (tmp / "map.npy").string(), (tmp / "out.png").string(), "--alpha", "0"}).code, kExitOk);
  EXPECT_EQ(io::read_image(tmp / "out.png"), img);
}

TEST(CliGlobal, QuietSuppressesStdout) {
  TempDir tmp;
  const auto bundle = write_mug(tmp);
  const CliRun r = invoke({"-q", "fuse", bundle.string(), (tmp / "out").string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_TRUE(r.out.empty());
}

}  // namespace
}  // namespace affordmap::cli
