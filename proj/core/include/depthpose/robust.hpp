// LO-RANSAC around the minimal solvers, with Sampson-error MSAC scoring.
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "depthpose/solvers.hpp"
#include "depthpose/types.hpp"

namespace depthpose {

struct RansacConfig {
  int max_iterations = 1000;
  double threshold_px = 2.0;
  std::uint64_t seed = 0;
  bool lo_enabled = true;
  int lo_max_refine_iters = 25;
  double confidence = 0.9999;
  /// Confidence-based stopping; off so the iteration budget stays fixed.
  bool early_exit = false;
  /// Refine f (or f1, f2) inside local optimization for focal solvers.
  bool refine_focal = true;
  /// Record wall-clock time in the report. Timing is the only
  /// non-deterministic report field.
  bool measure_time = true;

  void validate() const;
};

struct EstimateReport {
  SolverId solver = SolverId::k3ptSuv;
  PoseCandidate best;
  /// Set for the 7-point solver (pixel coordinates).
  std::optional<Mat3> fundamental;
  std::vector<bool> inlier_mask;
  /// Truncated Sampson sum in squared pixels (lower is better).
  double score = 0.0;
  int iterations_run = 0;
  int solver_calls = 0;
  double elapsed_us = 0.0;

  int num_inliers() const;
  std::vector<int> inlier_indices() const;
};

bool operator==(const EstimateReport& a, const EstimateReport& b);

// ---------------------------------------------------------------------------
// Epipolar geometry

/// E = [t]x R, Frobenius-normalized. Throws DomainError(kDegenerate) when
/// |t| < 1e-12 * scene_scale.
Mat3 essential_from_pose(const Pose& pose, double scene_scale = 1.0);

/// F = K2^-T E K1^-1, Frobenius-normalized.
Mat3 fundamental_from(const CameraIntrinsics& K1, const CameraIntrinsics& K2,
                      const Pose& pose);

/// (q^T F p)^2 / ((Fp)_1^2 + (Fp)_2^2 + (F^T q)_1^2 + (F^T q)_2^2); +inf when
/// the denominator vanishes.
double sampson_error(const Mat3& F, const ImagePoint& p, const ImagePoint& q);

struct MsacResult {
  double score = 0.0;
  std::vector<bool> inlier_mask;
  int num_inliers = 0;
};

/// Per point min(sampson, threshold^2); inlier iff sampson < threshold^2.
MsacResult score_msac(const Mat3& F, std::span<const Correspondence> corrs,
                      double threshold);

/// The four (R, t) factorizations of an essential matrix, |t| = 1.
std::vector<Pose> decompose_essential(const Mat3& E);

/// Factorization with the most points in front of both cameras; `corrs`
/// are in normalized coordinates.
std::optional<Pose> pose_from_essential(const Mat3& E,
                                        std::span<const Correspondence> corrs,
                                        const std::vector<bool>* mask = nullptr);

// ---------------------------------------------------------------------------
// Estimation problem: correspondences converted into the solver's
// coordinate frame plus the matching scoring units.

class EstimationProblem {
 public:
  EstimationProblem(SolverId solver, std::span<const Correspondence> pixels,
                    const std::optional<CameraIntrinsics>& K1,
                    const std::optional<CameraIntrinsics>& K2,
                    double threshold_px);

  SolverId solver() const { return solver_; }
  std::span<const Correspondence> prepared() const { return prepared_; }
  /// Threshold in scoring units (pixels, or normalized units when
  /// calibrated: threshold_px / mean focal).
  double threshold() const { return threshold_; }
  /// Scoring unit -> pixels.
  double unit_to_px() const { return unit_to_px_; }
  double scene_scale() const { return scene_scale_; }

  /// Fundamental matrix in scoring coordinates.
  Mat3 fundamental(const PoseCandidate& cand) const;
  bool is_pure_rotation(const PoseCandidate& cand) const;

  /// Per-point squared error in scoring units: Sampson through the
  /// composed F, or reprojection of lifted points for pure rotations.
  double point_error(const PoseCandidate& cand, std::size_t i) const;
  MsacResult score(const PoseCandidate& cand) const;
  MsacResult score(const Mat3& F) const;

 private:
  SolverId solver_;
  std::vector<Correspondence> prepared_;
  double threshold_;
  double unit_to_px_;
  double scene_scale_;
};

/// Levenberg-Marquardt on rotation, translation direction and (optionally)
/// focal lengths minimizing Sampson error over the masked inliers. Returns
/// the input unless the MSAC score improves. Depth parameters are kept.
PoseCandidate local_optimize(const EstimationProblem& problem,
                             const PoseCandidate& candidate,
                             const std::vector<bool>& inlier_mask,
                             const RansacConfig& config);

/// Linear 8-point refit of a fundamental matrix on the masked inliers;
/// returns the input unless the score improves.
Mat3 local_optimize_fundamental(const EstimationProblem& problem,
                                const Mat3& F,
                                const std::vector<bool>& inlier_mask);

/// Throws DomainError for unusable input or when every sample is
/// degenerate.
EstimateReport ransac_estimate(std::span<const Correspondence> corrs,
                               const std::optional<CameraIntrinsics>& K1,
                               const std::optional<CameraIntrinsics>& K2,
                               SolverId solver, const RansacConfig& config);

}  // namespace depthpose
