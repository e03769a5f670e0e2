#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "depthpose/synthbench.hpp"
#include "oracle.hpp"
#include "recovery.hpp"

using namespace depthpose;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

double acos_deg(double c) { return std::acos(std::clamp(c, -1.0, 1.0)) / kDeg; }

SceneConfig affine_scene(std::uint64_t seed) {
  SceneConfig cfg;
  cfg.seed = seed;
  cfg.depth_model.kind = DepthKind::kAffineInvariant;
  cfg.depth_model.s1 = 2.0;
  cfg.depth_model.s2 = 3.0;
  cfg.depth_model.u = 0.4;
  cfg.depth_model.v = -0.2;
  return cfg;
}

// Fraction of errors strictly below k * max / n, averaged over k.
double maa_brute_force(const std::vector<double>& errors, double max, int n) {
  double sum = 0;
  for (int k = 1; k <= n; ++k) {
    int below = 0;
    for (double e : errors) below += e < k * max / n;
    sum += static_cast<double>(below) / static_cast<double>(errors.size());
  }
  return sum / n;
}

}  // namespace

TEST(GenerateScene, MetricForwardConsistency) {
  SceneConfig cfg;
  cfg.seed = 1;
  const ScenePair sc = generate_scene(cfg);
  ASSERT_EQ(sc.correspondences.size(), 200u);
  for (std::size_t i = 0; i < sc.correspondences.size(); ++i) {
    const auto& c = sc.correspondences[i];
    const Vec3 r = affine_depth_residual(sc.K1.normalize(c.p), sc.K2.normalize(c.q),
                                         *c.alpha, *c.beta, sc.gt_pose, {1, 0, 0});
    EXPECT_LT(r.norm(), 1e-10);
    // Metric depth is the true depth.
    EXPECT_EQ(*c.alpha, sc.gt_depths[i][0]);
    EXPECT_EQ(*c.beta, sc.gt_depths[i][1]);
    const ImagePoint px = c.p;
    EXPECT_GE(px.x, 0);
    EXPECT_LE(px.x, 640);
    EXPECT_GE(px.y, 0);
    EXPECT_LE(px.y, 480);
  }
  EXPECT_TRUE(is_rotation(sc.gt_pose.R));
  EXPECT_NEAR(rotation_error_deg(sc.gt_pose.R, Mat3::Identity()), 15.0, 1e-9);
  EXPECT_NEAR(sc.gt_pose.t.norm(), 1.0, 1e-12);
}

TEST(GenerateScene, AffineCorruptionRecordsScaleAndTranslation) {
  const ScenePair sc = generate_scene(affine_scene(2));
  EXPECT_DOUBLE_EQ(sc.gt_params.s, 1.5);
  EXPECT_EQ(sc.gt_params.u, 0.4);
  EXPECT_EQ(sc.gt_params.v, -0.2);
  // Recover T from one point: lambda q = eta R p + T.
  const auto& c = sc.correspondences[0];
  const double eta = sc.gt_depths[0][0], lambda = sc.gt_depths[0][1];
  const Vec3 T = lambda * sc.K2.normalize(c.q) - eta * sc.gt_pose.R * sc.K1.normalize(c.p);
  EXPECT_LT((sc.gt_pose.t - T / 2.0).norm(), 1e-9);
  for (std::size_t i = 0; i < sc.correspondences.size(); ++i) {
    EXPECT_NEAR(*sc.correspondences[i].alpha, sc.gt_depths[i][0] / 2.0 - 0.4, 1e-12);
    EXPECT_NEAR(*sc.correspondences[i].beta, sc.gt_depths[i][1] / 3.0 + 0.2, 1e-12);
  }
}

TEST(GenerateScene, OutlierCount) {
  SceneConfig cfg;
  cfg.outlier_fraction = 0.3;
  cfg.seed = 3;
  const ScenePair sc = generate_scene(cfg);
  EXPECT_EQ(std::count(sc.outlier_mask.begin(), sc.outlier_mask.end(), true), 60);
  for (std::size_t i = 0; i < sc.correspondences.size(); ++i) {
    const auto& c = sc.correspondences[i];
    const Vec3 r = affine_depth_residual(sc.K1.normalize(c.p), sc.K2.normalize(c.q),
                                         *c.alpha, *c.beta, sc.gt_pose, {1, 0, 0});
    if (!sc.outlier_mask[i]) EXPECT_LT(r.norm(), 1e-10);
  }
}

TEST(GenerateScene, DepthNoiseIsMultiplicative) {
  SceneConfig cfg;
  cfg.seed = 4;
  cfg.depth_model.depth_noise_sigma = 0.05;
  const ScenePair sc = generate_scene(cfg);
  double sum = 0, sum2 = 0;
  for (std::size_t i = 0; i < sc.correspondences.size(); ++i) {
    const double rel = *sc.correspondences[i].alpha / sc.gt_depths[i][0] - 1.0;
    sum += rel;
    sum2 += rel * rel;
  }
  const double n = static_cast<double>(sc.correspondences.size());
  EXPECT_NEAR(std::sqrt(sum2 / n - (sum / n) * (sum / n)), 0.05, 0.01);
}

TEST(GenerateScene, SeededAndDeterministic) {
  const ScenePair a = generate_scene(affine_scene(5));
  const ScenePair b = generate_scene(affine_scene(5));
  const ScenePair c = generate_scene(affine_scene(6));
  EXPECT_EQ(a.gt_pose.R, b.gt_pose.R);
  ASSERT_EQ(a.correspondences.size(), b.correspondences.size());
  for (std::size_t i = 0; i < a.correspondences.size(); ++i) {
    EXPECT_EQ(a.correspondences[i].p.x, b.correspondences[i].p.x);
    EXPECT_EQ(a.correspondences[i].beta, b.correspondences[i].beta);
  }
  EXPECT_NE(a.gt_pose.R, c.gt_pose.R);
}

TEST(GenerateScene, InvalidConfigs) {
  SceneConfig cfg;
  cfg.depth_range = {0.0, 5.0};
  EXPECT_THROW(generate_scene(cfg), DomainError);
  cfg = {};
  cfg.outlier_fraction = 1.0;
  EXPECT_THROW(generate_scene(cfg), DomainError);
  cfg = {};
  cfg.depth_model.s1 = 2.0;  // metric kind
  EXPECT_THROW(generate_scene(cfg), DomainError);
  cfg = {};
  cfg.depth_model.kind = DepthKind::kScaleInvariant;
  cfg.depth_model.u = 0.1;
  EXPECT_THROW(generate_scene(cfg), DomainError);
}

TEST(GenerateScene, NoOverlapIsInfeasible) {
  SceneConfig cfg;
  cfg.n_points = 10;
  cfg.baseline = 1000.0;
  try {
    generate_scene(cfg);
    FAIL();
  } catch (const DomainError& e) {
    EXPECT_EQ(e.code(), DomainError::Code::kInfeasible);
  }
}

// Exact scenes fed to the matching solver give back the ground truth.
TEST(GenerateScene, SolverClosure) {
  for (SolverId id : all_solvers()) {
    const auto& tr = traits(id);
    for (int trial = 0; trial < 30; ++trial) {
      SceneConfig cfg;
      cfg.n_points = tr.sample_size;
      cfg.seed = 100 + static_cast<std::uint64_t>(trial);
      cfg.f1 = 500;
      cfg.f2 = tr.focal == FocalModel::kSeparate ? 800 : 500;
      cfg.depth_model.s1 = 1.3;
      cfg.depth_model.s2 = 0.9;
      cfg.depth_model.kind = DepthKind::kScaleInvariant;
      const bool shifts = id == SolverId::k3ptSuv || id == SolverId::k4ptSuvF ||
                          id == SolverId::k4ptSuvF12;
      if (shifts) {
        cfg.depth_model.kind = DepthKind::kAffineInvariant;
        cfg.depth_model.u = 0.25;
        cfg.depth_model.v = -0.15;
      }
      const ScenePair sc = generate_scene(cfg);
      const auto res = solve_minimal(id, {sc.correspondences, sc.K1, sc.K2});
      oracle::Truth gt{sc.gt_pose.R, sc.gt_pose.t, sc.gt_params.s, sc.gt_params.u,
                       sc.gt_params.v, sc.K1.f(), sc.K2.f()};
      bool found = false;
      if (id == SolverId::k7pt) {
        // F in pixels with the principal points included.
        const Mat3 F = fundamental_from(sc.K1, sc.K2, sc.gt_pose);
        for (const auto& G : res.fundamentals) {
          found |= std::min((G - F).norm(), (G + F).norm()) < 1e-6;
        }
      } else {
        if (id == SolverId::kP3p) gt.t = sc.gt_pose.t;
        for (const auto& c : res.candidates) found |= oracle::matches_truth(id, c, gt);
      }
      EXPECT_TRUE(found) << to_string(id) << " trial " << trial;
    }
  }
}

TEST(Metrics, RotationError) {
  EXPECT_EQ(rotation_error_deg(Mat3::Identity(), Mat3::Identity()), 0.0);
  const Mat3 R = oracle::axis_angle({0.3, -1, 2}, 0.8);
  EXPECT_NEAR(rotation_error_deg(R, R * oracle::axis_angle({1, 0, 0}, 5 * kDeg)), 5.0, 1e-12);
  EXPECT_NEAR(rotation_error_deg(Mat3::Identity(), Vec3(1, -1, -1).asDiagonal().toDenseMatrix()),
              180.0, 1e-12);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> U(-1, 1);
  for (int i = 0; i < 1000; ++i) {
    const Mat3 A = oracle::axis_angle({U(rng), U(rng), U(rng)}, 3 * U(rng));
    const Mat3 B = oracle::axis_angle({U(rng), U(rng), U(rng)}, 3 * U(rng));
    const double ref = acos_deg(((A.transpose() * B).trace() - 1) / 2);
    EXPECT_NEAR(rotation_error_deg(A, B), ref, 1e-6);
  }
}

TEST(Metrics, TranslationError) {
  EXPECT_EQ(translation_error_deg({1, 2, 3}, {2, 4, 6}), 0.0);
  EXPECT_DOUBLE_EQ(translation_error_deg({1, 0, 0}, {0, 1, 0}), 90.0);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> U(-1, 1);
  for (int i = 0; i < 1000; ++i) {
    const Vec3 a(U(rng), U(rng), U(rng)), b(U(rng), U(rng), U(rng));
    const double ref = acos_deg(a.dot(b) / (a.norm() * b.norm()));
    // arccos itself loses digits near 0 and 180.
    if (ref < 0.1 || ref > 179.9) continue;
    EXPECT_NEAR(translation_error_deg(a, b), ref, 1e-9);
  }
  EXPECT_THROW(translation_error_deg(Vec3::Zero(), {1, 0, 0}), DomainError);
}

TEST(Metrics, PoseError) {
  const Pose gt{oracle::axis_angle({1, 1, 0}, 0.4), {0.2, 0.5, 1}};
  EXPECT_EQ(pose_error(gt, gt), 0.0);
  Pose est = gt;
  est.R = oracle::axis_angle({0, 0, 1}, 3 * kDeg) * gt.R;
  est.t = oracle::axis_angle(gt.t.cross(Vec3::UnitX()), 1 * kDeg) * gt.t;
  EXPECT_NEAR(pose_error(est, gt), 3.0, 1e-9);
  est.R = gt.R;
  EXPECT_NEAR(pose_error(est, gt), 1.0, 1e-9);

  const Pose rot_only{gt.R, Vec3::Zero()};
  EXPECT_EQ(pose_error({gt.R, Vec3(1e-8, 0, 0)}, rot_only), 0.0);
  EXPECT_EQ(pose_error({gt.R, Vec3(1e-3, 0, 0)}, rot_only), 180.0);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(-1, 1);
  for (int i = 0; i < 200; ++i) {
    const Pose a{oracle::axis_angle({U(rng), U(rng), U(rng)}, U(rng)), {U(rng), U(rng), U(rng)}};
    const Pose b{oracle::axis_angle({U(rng), U(rng), U(rng)}, U(rng)), {U(rng), U(rng), U(rng)}};
    const double ref = std::max(oracle::rot_angle_deg(a.R, b.R), oracle::dir_angle_deg(a.t, b.t));
    EXPECT_NEAR(pose_error(a, b), ref, 1e-9);
  }
}

TEST(Metrics, FocalError) {
  EXPECT_EQ(focal_error(500, 500), 0.0);
  EXPECT_DOUBLE_EQ(focal_error(550, 500), 0.1);
  EXPECT_DOUBLE_EQ(focal_error(450, 500), 0.1);
  EXPECT_DOUBLE_EQ(focal_error_geometric(0.1, 0.4), 0.2);
}

TEST(Metrics, MeanAverageAccuracy) {
  const std::vector<double> zeros(5, 0.0);
  EXPECT_EQ(mean_average_accuracy(zeros, 10.0), 1.0);
  const std::vector<double> big{11, 20, 180};
  EXPECT_EQ(mean_average_accuracy(big, 10.0), 0.0);
  const std::vector<double> mixed{0.5, 5.0, 50.0};
  // 0.5 is below all ten thresholds, 5 below thresholds 6..10 (strict).
  EXPECT_DOUBLE_EQ(mean_average_accuracy(mixed, 10.0), (10.0 + 5.0) / 30.0);
  EXPECT_DOUBLE_EQ(mean_average_accuracy(mixed, 10.0), maa_brute_force(mixed, 10.0, 10));

  std::mt19937_64 rng(4);
  std::exponential_distribution<double> E(0.2);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> errs(1 + trial % 37);
    for (auto& e : errs) e = trial % 5 == 0 ? std::round(E(rng)) : E(rng);
    const int bins = 1 + trial % 20;
    EXPECT_DOUBLE_EQ(mean_average_accuracy(errs, 10.0, bins), maa_brute_force(errs, 10.0, bins));
    // Growing every error never raises the score.
    std::vector<double> worse = errs;
    for (auto& e : worse) e += 0.3 * E(rng);
    EXPECT_LE(mean_average_accuracy(worse, 10.0, bins), mean_average_accuracy(errs, 10.0, bins));
  }
}

TEST(Metrics, Median) {
  EXPECT_EQ(median({3, 1, 2}), 2.0);
  EXPECT_EQ(median({4, 1, 3, 2}), 2.5);
  EXPECT_TRUE(std::isnan(median({})));
}

TEST(DepthKind, Names) {
  for (DepthKind k : {DepthKind::kMetric, DepthKind::kScaleInvariant, DepthKind::kAffineInvariant}) {
    EXPECT_EQ(parse_depth_kind(to_string(k)), k);
  }
  EXPECT_FALSE(parse_depth_kind("inverse"));
}

TEST(Benchmark, NoiseFreeCellIsExact) {
  BenchCell cell;
  cell.scene = affine_scene(7);
  cell.scene.n_points = 50;
  cell.ransac.max_iterations = 50;
  BenchOptions opt;
  opt.trials = 5;
  const auto res = run_benchmark(std::span(&cell, 1), opt);
  ASSERT_EQ(res.rows.size(), 1u);
  EXPECT_EQ(res.rows[0].trials, 5);
  EXPECT_EQ(res.rows[0].failures, 0);
  EXPECT_LT(res.rows[0].median_pose_error_deg, 1e-6);
  EXPECT_EQ(res.rows[0].maa_pose, 1.0);
  EXPECT_EQ(res.rows[0].median_runtime_us, 0.0);
}

TEST(Benchmark, PairedScenesAcrossSolvers) {
  std::vector<BenchCell> grid(3);
  const SolverId ids[] = {SolverId::k3ptSuv, SolverId::k7pt, SolverId::kP3p};
  for (int k = 0; k < 3; ++k) {
    grid[k].scene = affine_scene(8);
    grid[k].scene.n_points = 60;
    grid[k].scene.pixel_noise_sigma = 0.5;
    grid[k].solver = ids[k];
    grid[k].ransac.max_iterations = 40;
  }
  BenchOptions opt;
  opt.trials = 4;
  const auto res = run_benchmark(grid, opt);
  ASSERT_EQ(res.trials.size(), 12u);
  std::set<std::uint64_t> seeds;
  for (const auto& t : res.trials) {
    EXPECT_EQ(t.scene_seed, scene_seed_for(8, t.trial));
    seeds.insert(t.scene_seed);
  }
  EXPECT_EQ(seeds.size(), 4u);
  EXPECT_NE(ransac_seed_for(5, 0, 1), ransac_seed_for(5, 1, 1));
  EXPECT_NE(ransac_seed_for(5, 0, 1), ransac_seed_for(5, 0, 2));
}

TEST(Benchmark, AggregateMatchesRecomputation) {
  std::vector<BenchCell> grid(2);
  grid[0].scene = affine_scene(9);
  grid[0].scene.n_points = 80;
  grid[0].scene.pixel_noise_sigma = 1.0;
  grid[0].scene.outlier_fraction = 0.2;
  grid[0].ransac.max_iterations = 60;
  grid[1] = grid[0];
  grid[1].solver = SolverId::k4ptSuvF;
  BenchOptions opt;
  opt.trials = 9;
  const auto res = run_benchmark(grid, opt);
  ASSERT_EQ(res.rows.size(), 2u);
  for (int cell = 0; cell < 2; ++cell) {
    std::vector<double> errs, ferrs;
    int failures = 0;
    for (const auto& t : res.trials) {
      if (t.cell != cell) continue;
      errs.push_back(t.pose_error_deg);
      if (t.focal_error) ferrs.push_back(100.0 * *t.focal_error);
      failures += !t.success;
    }
    ASSERT_EQ(errs.size(), 9u);
    std::sort(errs.begin(), errs.end());
    const BenchRow& row = res.rows[static_cast<std::size_t>(cell)];
    EXPECT_EQ(row.median_pose_error_deg, errs[4]);
    EXPECT_EQ(row.maa_pose, maa_brute_force(errs, 10.0, 10));
    EXPECT_EQ(row.failures, failures);
    EXPECT_EQ(row.maa_focal.has_value(), cell == 1);
    if (cell == 1) EXPECT_DOUBLE_EQ(*row.maa_focal, maa_brute_force(ferrs, 10.0, 10));
  }
}

TEST(Benchmark, ThreadCountDoesNotChangeResults) {
  std::vector<BenchCell> grid(2);
  grid[0].scene = affine_scene(10);
  grid[0].scene.n_points = 60;
  grid[0].scene.pixel_noise_sigma = 1.0;
  grid[0].scene.outlier_fraction = 0.3;
  grid[0].ransac.max_iterations = 50;
  grid[1] = grid[0];
  grid[1].solver = SolverId::k3ptS00F12;
  grid[1].scene.depth_model = {1.0, 1.5, 0.0, 0.0, 0.0, DepthKind::kScaleInvariant};
  BenchOptions one, three;
  one.trials = three.trials = 6;
  three.threads = 3;
  const auto a = run_benchmark(grid, one);
  const auto b = run_benchmark(grid, three);
  ASSERT_EQ(a.trials.size(), b.trials.size());
  for (std::size_t i = 0; i < a.trials.size(); ++i) {
    EXPECT_EQ(a.trials[i].pose_error_deg, b.trials[i].pose_error_deg);
    EXPECT_EQ(a.trials[i].num_inliers, b.trials[i].num_inliers);
  }
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    EXPECT_EQ(a.rows[i].median_pose_error_deg, b.rows[i].median_pose_error_deg);
  }
}

TEST(Benchmark, FailuresAreCounted) {
  BenchCell cell;
  cell.scene.seed = 11;
  // Three matches cannot feed a four-point solver.
  cell.scene.n_points = 3;
  cell.solver = SolverId::k4ptSuvF;
  BenchOptions opt;
  opt.trials = 3;
  const auto res = run_benchmark(std::span(&cell, 1), opt);
  EXPECT_EQ(res.rows[0].failures, 3);
  EXPECT_EQ(res.rows[0].median_pose_error_deg, 180.0);
  for (const auto& t : res.trials) {
    EXPECT_FALSE(t.success);
    EXPECT_FALSE(t.error.empty());
  }
}
