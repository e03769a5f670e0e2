// Synthetic two-view scenes with MDE-style depth corruption, pose/focal
// metrics and a Monte-Carlo benchmark runner.
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "depthpose/robust.hpp"
#include "depthpose/solvers.hpp"
#include "depthpose/types.hpp"

namespace depthpose {

enum class DepthKind { kMetric, kScaleInvariant, kAffineInvariant };

std::string_view to_string(DepthKind kind);
std::optional<DepthKind> parse_depth_kind(std::string_view name);

/// Observed depths are alpha = eta / s1 - u and beta = lambda / s2 - v, each
/// then multiplied by (1 + N(0, depth_noise_sigma)).
struct DepthCorruption {
  double s1 = 1.0;
  double s2 = 1.0;
  double u = 0.0;
  double v = 0.0;
  double depth_noise_sigma = 0.0;
  DepthKind kind = DepthKind::kMetric;

  void validate() const;
};

struct SceneConfig {
  int n_points = 200;
  std::array<double, 2> depth_range{2.0, 10.0};
  double rotation_magnitude_deg = 15.0;
  double baseline = 1.0;
  double f1 = 600.0;
  double f2 = 600.0;
  std::array<int, 2> image_size{640, 480};
  double pixel_noise_sigma = 0.0;
  double outlier_fraction = 0.0;
  DepthCorruption depth_model;
  std::uint64_t seed = 0;

  void validate() const;
};

struct ScenePair {
  Pose gt_pose;
  DepthAffineParams gt_params;
  CameraIntrinsics K1{1.0};
  CameraIntrinsics K2{1.0};
  std::vector<Correspondence> correspondences;
  /// True depths (eta, lambda) per point; for outliers the pre-replacement
  /// values.
  std::vector<std::array<double, 2>> gt_depths;
  std::vector<bool> outlier_mask;
  std::uint64_t seed = 0;
};

/// Throws DomainError(kInfeasible) when the two frusta do not overlap enough
/// to place the points within a bounded number of attempts.
ScenePair generate_scene(const SceneConfig& config);

// ---------------------------------------------------------------------------
// Metrics

double rotation_error_deg(const Mat3& R_est, const Mat3& R_gt);
/// Throws DomainError(kInvalidArgument) on a zero vector.
double translation_error_deg(const Vec3& t_est, const Vec3& t_gt);
/// max(rotation, translation) error. With |t_gt| = 0 the translation term is
/// 0 if |t_est| < t_tol and 180 otherwise.
double pose_error(const Pose& est, const Pose& gt, double t_tol = 1e-6);
double focal_error(double f_est, double f_gt);
double focal_error_geometric(double err1, double err2);
/// Mean over tau_k = k * max_threshold / n_bins, k = 1..n_bins, of the
/// fraction of errors strictly below tau_k.
double mean_average_accuracy(std::span<const double> errors,
                             double max_threshold, int n_bins = 10);

// ---------------------------------------------------------------------------
// Benchmark

struct BenchCell {
  SceneConfig scene;
  SolverId solver = SolverId::k3ptSuv;
  RansacConfig ransac;
};

struct BenchOptions {
  int trials = 10;
  int threads = 1;
  /// Runtime columns stay 0 unless set, keeping outputs reproducible.
  bool measure_time = false;
};

struct TrialRecord {
  int cell = 0;
  int trial = 0;
  SolverId solver = SolverId::k3ptSuv;
  std::uint64_t scene_seed = 0;
  std::uint64_t ransac_seed = 0;
  bool success = false;
  std::string error;
  /// 180 on failure.
  double pose_error_deg = 180.0;
  /// Set for focal-estimating solvers; +inf on failure.
  std::optional<double> focal_error;
  int num_inliers = 0;
  double runtime_us = 0.0;
};

struct BenchRow {
  int cell = 0;
  SolverId solver = SolverId::k3ptSuv;
  double noise_px = 0.0;
  double outlier_fraction = 0.0;
  int trials = 0;
  int failures = 0;
  double median_pose_error_deg = 0.0;
  double maa_pose = 0.0;
  std::optional<double> maa_focal;
  double median_runtime_us = 0.0;
};

struct BenchmarkResult {
  std::vector<BenchRow> rows;
  std::vector<TrialRecord> trials;
};

/// Scene of trial k in a cell: its seed depends only on (scene.seed, k), so
/// cells that differ only in solver see identical scenes.
std::uint64_t scene_seed_for(std::uint64_t scene_seed, int trial);
std::uint64_t ransac_seed_for(std::uint64_t ransac_seed, int cell, int trial);

double median(std::vector<double> values);

BenchmarkResult run_benchmark(std::span<const BenchCell> grid,
                              const BenchOptions& options);

/// Aggregate the trials of one cell (used by run_benchmark; exposed so the
/// rows can be recomputed from persisted records).
BenchRow aggregate_cell(const BenchCell& cell, int cell_index,
                        std::span<const TrialRecord> trials);

}  // namespace depthpose
