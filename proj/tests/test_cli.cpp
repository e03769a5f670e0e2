#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "depthpose/cli/commands.hpp"
#include "depthpose/cli/io.hpp"
#include "oracle.hpp"

using namespace depthpose;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result tool(std::vector<std::string> args) {
  args.insert(args.begin(), "depthpose");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::path(DEPTHPOSE_TEST_TMP) /
           ::testing::UnitTest::GetInstance()->current_test_info()->name();
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::string write(const std::string& name, const std::string& text) const {
    cli::write_text(path(name), text);
    return path(name);
  }

  // Noise-free synthetic pair written through the synth command.
  std::string synth(const json& scene, const std::string& name = "pair.json") const {
    json cfg = scene;
    cfg["format_version"] = 1;
    const auto cfg_path = write(name + ".cfg", cfg.dump());
    const Result r = tool({"synth", "--config", cfg_path, "--out", path(name)});
    EXPECT_EQ(r.code, 0) << r.err;
    return path(name);
  }

  static json load(const std::string& p) { return json::parse(cli::read_text(p)); }

  fs::path dir_;
};

Mat3 matrix(const json& j) { return cli::matrix_from_json(j); }

json affine_scene(int seed) {
  return {{"n_points", 100},
          {"seed", seed},
          {"depth_model",
           {{"kind", "affine_invariant"}, {"s1", 1.0}, {"s2", 1.5}, {"u", 0.3}, {"v", -0.2}}}};
}

}  // namespace

TEST_F(CliTest, SynthThenEstimateRecoversTruth) {
  const auto pair = synth(affine_scene(3));
  const Result r = tool({"estimate", "--pair", pair, "--solver", "3pt_suv", "--seed", "1",
                        "--out", path("report.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const json rep = load(path("report.json"));
  const json gt = load(pair)["meta"]["gt"];
  EXPECT_EQ(rep["format_version"], 1);
  EXPECT_EQ(rep["status"], "ok");
  EXPECT_LT(oracle::rot_angle_deg(matrix(rep["pose"]["R"]), matrix(gt["pose"]["R"])), 1e-6);
  const Vec3 t(rep["pose"]["t"][0], rep["pose"]["t"][1], rep["pose"]["t"][2]);
  const Vec3 t_gt(gt["pose"]["t"][0], gt["pose"]["t"][1], gt["pose"]["t"][2]);
  EXPECT_LT(oracle::dir_angle_deg(t, t_gt), 1e-6);
  EXPECT_NEAR(rep["s"].get<double>(), 1.5, 1e-6);
  EXPECT_NEAR(rep["u"].get<double>(), 0.3, 1e-6);
  EXPECT_NEAR(rep["v"].get<double>(), -0.2, 1e-6);
  EXPECT_EQ(rep["num_inliers"], 100);
  EXPECT_EQ(rep["inliers"].size(), 100u);
  EXPECT_FALSE(rep.contains("timing_us"));
}

TEST_F(CliTest, EstimateEverySolver) {
  // Scale-invariant depth keeps the zero-shift solvers exact too.
  json scene = affine_scene(4);
  scene["depth_model"] = {{"kind", "scale_invariant"}, {"s1", 1.2}, {"s2", 0.7}};
  const auto pair = synth(scene);
  for (SolverId id : all_solvers()) {
    const Result r = tool({"estimate", "--pair", pair, "--solver", std::string(to_string(id)),
                          "--iters", "100"});
    ASSERT_EQ(r.code, 0) << to_string(id) << ": " << r.err;
    const json rep = json::parse(r.out);
    EXPECT_EQ(rep["num_inliers"], 100) << to_string(id);
    if (traits(id).focal == FocalModel::kShared || traits(id).focal == FocalModel::kSeparate) {
      EXPECT_NEAR(rep["f1"].get<double>(), 600.0, 1e-4) << to_string(id);
    }
  }
}

TEST_F(CliTest, DepthFreePath) {
  const auto pair = synth(affine_scene(5));
  json pf = load(pair);
  for (auto& m : pf["matches"]) {
    m.erase("d1");
    m.erase("d2");
  }
  const auto bare = write("bare.json", pf.dump());

  const Result ok = tool({"estimate", "--pair", bare, "--solver", "7pt", "--iters", "200"});
  ASSERT_EQ(ok.code, 0) << ok.err;
  const json rep = json::parse(ok.out);
  ASSERT_TRUE(rep.contains("fundamental"));
  EXPECT_EQ(rep["fundamental"].size(), 9u);

  const Result bad = tool({"estimate", "--pair", bare, "--solver", "3pt_suv"});
  EXPECT_EQ(bad.code, 2);
  const json err = json::parse(bad.out);
  EXPECT_EQ(err["status"], "error");
  EXPECT_EQ(err["error"]["code"], "missing_depth");
}

TEST_F(CliTest, DomainErrorGoesToOutFile) {
  const auto pair = synth(affine_scene(6));
  json pf = load(pair);
  pf["matches"] = json::array({pf["matches"][0], pf["matches"][1]});
  const auto small = write("small.json", pf.dump());
  const Result r = tool({"estimate", "--pair", small, "--solver", "3pt_suv", "--out",
                        path("err.json")});
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(load(path("err.json"))["error"]["code"], "insufficient_correspondences");
}

TEST_F(CliTest, SolveMinimalSample) {
  const auto pair = synth(affine_scene(7));
  const Result r = tool({"solve", "--pair", pair, "--solver", "3pt_suv", "--sample", "0,4,7"});
  ASSERT_EQ(r.code, 0) << r.err;
  const json out = json::parse(r.out);
  const json gt = load(pair)["meta"]["gt"];
  ASSERT_LE(out["candidates"].size(), 4u);
  int matches = 0;
  for (const auto& c : out["candidates"]) {
    EXPECT_TRUE(c.contains("residual"));
    matches += oracle::rot_angle_deg(matrix(c["pose"]["R"]), matrix(gt["pose"]["R"])) < 1e-6 &&
               std::abs(c["s"].get<double>() - 1.5) < 1e-6;
  }
  EXPECT_EQ(matches, 1);

  EXPECT_EQ(tool({"solve", "--pair", pair, "--solver", "3pt_suv", "--sample", "0,4,4"}).code, 2);
  EXPECT_EQ(tool({"solve", "--pair", pair, "--solver", "3pt_suv", "--sample", "0,1,2,3"}).code, 2);
  EXPECT_EQ(tool({"solve", "--pair", pair, "--solver", "3pt_suv", "--sample", "0,1,999"}).code, 2);
  EXPECT_EQ(tool({"solve", "--pair", pair, "--solver", "3pt_suv", "--sample", "0,x,2"}).code, 1);

  const Result f = tool({"solve", "--pair", pair, "--solver", "7pt", "--sample", "0,1,2,3,4,5,6"});
  ASSERT_EQ(f.code, 0);
  EXPECT_GE(json::parse(f.out)["fundamentals"].size(), 1u);
}

TEST_F(CliTest, IoErrors) {
  EXPECT_EQ(tool({"estimate", "--pair", path("missing.json"), "--solver", "7pt"}).code, 1);
  const auto broken = write("broken.json", "{\"format_version\": 1, \"matches\": [");
  EXPECT_EQ(tool({"estimate", "--pair", broken, "--solver", "7pt"}).code, 1);
  const auto v2 = write("v2.json", R"({"format_version": 2, "matches": []})");
  EXPECT_EQ(tool({"estimate", "--pair", v2, "--solver", "7pt"}).code, 1);
  const auto extra = write("extra.json",
                           R"({"format_version": 1, "matches": [{"x1": 1, "y1": 2, "x2": 3, "y2": 4, "z": 0}]})");
  EXPECT_EQ(tool({"estimate", "--pair", extra, "--solver", "7pt"}).code, 1);
  const auto pair = synth(affine_scene(8));
  EXPECT_EQ(tool({"estimate", "--pair", pair, "--solver", "5pt"}).code, 1);
  EXPECT_EQ(tool({"estimate", "--pair", pair}).code, 1);
  EXPECT_EQ(tool({"frobnicate"}).code, 1);
  EXPECT_EQ(tool({}).code, 1);
  EXPECT_EQ(tool({"--help"}).code, 0);
  const auto cfg = write("nover.json", R"({"n_points": 10})");
  EXPECT_EQ(tool({"synth", "--config", cfg}).code, 1);
}

TEST_F(CliTest, PairFileRoundTrip) {
  const auto pair = synth(affine_scene(9));
  const cli::PairFile a = cli::read_pair_file(pair);
  const json again = cli::to_json(a);
  const auto copy = write("copy.json", again.dump(2));
  const cli::PairFile b = cli::read_pair_file(copy);
  ASSERT_EQ(a.matches.size(), b.matches.size());
  for (std::size_t i = 0; i < a.matches.size(); ++i) {
    EXPECT_EQ(a.matches[i].p.x, b.matches[i].p.x);
    EXPECT_EQ(a.matches[i].q.y, b.matches[i].q.y);
    EXPECT_EQ(a.matches[i].alpha, b.matches[i].alpha);
    EXPECT_EQ(a.matches[i].beta, b.matches[i].beta);
  }
  EXPECT_EQ(a.K1->f(), b.K1->f());
  EXPECT_EQ(a.K2->cy(), b.K2->cy());
  EXPECT_EQ(a.meta, b.meta);
  EXPECT_EQ(again, load(pair));
}

TEST_F(CliTest, ConfigRoundTrip) {
  SceneConfig s;
  s.n_points = 33;
  s.pixel_noise_sigma = 0.25;
  s.depth_model.kind = DepthKind::kAffineInvariant;
  s.depth_model.u = 0.1;
  s.seed = 0xfedcba9876543210ULL;
  const SceneConfig s2 = cli::scene_config_from_json(cli::to_json(s));
  EXPECT_EQ(cli::to_json(s2), cli::to_json(s));
  EXPECT_EQ(s2.seed, s.seed);

  RansacConfig r;
  r.max_iterations = 77;
  r.threshold_px = 1.25;
  r.seed = 42;
  r.lo_enabled = false;
  EXPECT_EQ(cli::to_json(cli::ransac_config_from_json(cli::to_json(r))), cli::to_json(r));
}

TEST_F(CliTest, NumbersRoundTrip) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> U(-1e3, 1e3);
  for (int i = 0; i < 1000; ++i) {
    const double x = U(rng) * std::pow(10.0, i % 20 - 10);
    EXPECT_EQ(std::stod(cli::format_double(x)), x);
  }
  EXPECT_EQ(cli::format_double(0.5), "0.5");
}

TEST_F(CliTest, EstimateIsDeterministic) {
  json scene = affine_scene(10);
  scene["pixel_noise_sigma"] = 1.0;
  scene["outlier_fraction"] = 0.3;
  const auto pair = synth(scene);
  for (const char* solver : {"3pt_suv", "4pt_suv_f12", "7pt"}) {
    const Result a = tool({"estimate", "--pair", pair, "--solver", solver, "--seed", "3",
                          "--iters", "200"});
    const Result b = tool({"estimate", "--pair", pair, "--solver", solver, "--seed", "3",
                          "--iters", "200"});
    ASSERT_EQ(a.code, 0) << a.err;
    EXPECT_EQ(a.out, b.out) << solver;
  }
  const Result t = tool({"estimate", "--pair", pair, "--solver", "3pt_suv", "--iters", "50",
                        "--timing"});
  EXPECT_TRUE(json::parse(t.out).contains("timing_us"));
}

TEST_F(CliTest, BenchOutputs) {
  const json grid{{"format_version", 1},
                  {"base",
                   {{"scene", {{"n_points", 60}, {"pixel_noise_sigma", 0.5}, {"seed", 4},
                               {"outlier_fraction", 0.2},
                               {"depth_model", {{"kind", "affine_invariant"}, {"u", 0.2}}}}},
                    {"ransac", {{"max_iterations", 60}, {"seed", 9}}}}},
                  {"cells",
                   {{{"solver", "3pt_suv"}},
                    {{"solver", "4pt_suv_f"}},
                    {{"solver", "7pt"}, {"scene", {{"pixel_noise_sigma", 1.0}}}}}}};
  const auto grid_path = write("grid.json", grid.dump());
  const Result a = tool({"bench", "--grid", grid_path, "--trials", "5", "--out-csv",
                        path("a.csv"), "--out-jsonl", path("a.jsonl")});
  ASSERT_EQ(a.code, 0) << a.err;
  const Result b = tool({"bench", "--grid", grid_path, "--trials", "5", "--out-csv",
                        path("b.csv"), "--out-jsonl", path("b.jsonl")});
  ASSERT_EQ(b.code, 0) << b.err;
  const std::string csv = cli::read_text(path("a.csv"));
  EXPECT_EQ(csv, cli::read_text(path("b.csv")));
  EXPECT_EQ(cli::read_text(path("a.jsonl")), cli::read_text(path("b.jsonl")));
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "format_version,cell,solver,noise_px,outlier_fraction,scene_seed,trials,"
            "failures,median_pose_error_deg,maa_pose,maa_focal,median_runtime_us");

  // Rows recomputed from the persisted per-trial records.
  const auto records = cli::read_trial_records(cli::read_text(path("a.jsonl")));
  ASSERT_EQ(records.size(), 15u);
  const auto cells = cli::bench_grid_from_json(grid);
  std::vector<BenchRow> rows;
  for (int c = 0; c < 3; ++c) {
    std::vector<TrialRecord> mine;
    for (const auto& t : records) {
      if (t.cell == c) mine.push_back(t);
    }
    rows.push_back(aggregate_cell(cells[static_cast<std::size_t>(c)], c, mine));
  }
  EXPECT_EQ(cli::bench_csv(rows, cells), csv);
  EXPECT_EQ(cells[2].scene.pixel_noise_sigma, 1.0);
  EXPECT_EQ(cells[2].scene.n_points, 60);

  // Threads do not change the output.
  const Result c = tool({"bench", "--grid", grid_path, "--trials", "5", "--threads", "3"});
  EXPECT_EQ(c.out, csv);
}

TEST_F(CliTest, ThreadsFromEnvironment) {
  ::setenv("DEPTHPOSE_THREADS", "4", 1);
  EXPECT_EQ(cli::threads_from_env(), 4);
  ::setenv("DEPTHPOSE_THREADS", "zero", 1);
  EXPECT_EQ(cli::threads_from_env(), 1);
  ::unsetenv("DEPTHPOSE_THREADS");
  EXPECT_EQ(cli::threads_from_env(), 1);
}
