// Minimal solvers for two-view relative pose with monocular depth priors.
//
// The solvers in `depthpose::solvers` operate on pre-processed coordinates:
//   * calibrated solvers (3pt_suv, p3p) expect points on the normalized
//     image plane, i.e. K^-1 already applied;
//   * focal solvers (3pt_s00_f, 3pt_s00_f12, 4pt_suv_f, 4pt_suv_f12) expect
//     pixel coordinates with the principal point subtracted;
//   * the 7-point solver accepts any affine image coordinates.
// `solve_minimal` performs that pre-processing from pixel coordinates.
#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "depthpose/types.hpp"

namespace depthpose {

enum class SolverId {
  k3ptSuv,
  kP3p,
  k3ptS00F,
  k3ptS00F12,
  k4ptSuvF,
  k4ptSuvF12,
  k7pt,
};

enum class FocalModel { kKnown, kShared, kSeparate, kUncalibrated };

struct SolverTraits {
  SolverId id;
  std::string_view name;
  int sample_size;
  int max_solutions;
  FocalModel focal;
  // Number of leading sample points that need alpha / beta.
  int needs_alpha;
  int needs_beta;
};

const SolverTraits& traits(SolverId id);
std::string_view to_string(SolverId id);
std::optional<SolverId> parse_solver_id(std::string_view name);
std::span<const SolverId> all_solvers();

enum class SolveStatus { kOk, kDegenerate };

struct SolveResult {
  SolveStatus status = SolveStatus::kOk;
  /// Ascending algebraic residual.
  std::vector<PoseCandidate> candidates;
  /// Only filled by the 7-point solver; Frobenius-normalized.
  std::vector<Mat3> fundamentals;

  bool degenerate() const { return status == SolveStatus::kDegenerate; }
  std::size_t size() const {
    return candidates.empty() ? fundamentals.size() : candidates.size();
  }
};

struct MinimalSample {
  std::vector<Correspondence> correspondences;
  std::optional<CameraIntrinsics> intrinsics1;
  std::optional<CameraIntrinsics> intrinsics2;
};

namespace solvers {

/// Calibrated, unknown scale ratio and two shifts; 3 points with both depths.
SolveResult solve_3pt_suv(std::span<const Correspondence, 3> sample);

/// Calibrated, depth in image 1 only.
SolveResult solve_p3p(std::span<const Correspondence, 3> sample);

/// Shared unknown focal, zero shifts. Points 0 and 1 need both depths,
/// point 2 needs alpha only.
SolveResult solve_3pt_s00_f(std::span<const Correspondence, 3> sample);

/// Two unknown focals, zero shifts; 3 points with both depths.
SolveResult solve_3pt_s00_f12(std::span<const Correspondence, 3> sample);

/// Shared unknown focal, scale and two shifts; hidden variable f^2.
SolveResult solve_4pt_suv_f_eigen(std::span<const Correspondence, 4> sample);

/// Two unknown focals, scale and two shifts; hidden variable v.
SolveResult solve_4pt_suv_f12_eigen(std::span<const Correspondence, 4> sample);

/// Classic 7-point fundamental matrix; fills `fundamentals` only.
SolveResult solve_7pt(std::span<const Correspondence, 7> sample);

/// 3 x 6 system over [c v^2, c v, c, u^2, u, 1] with c = s^2.
EliminationSystem build_3pt_suv_system(std::span<const Correspondence, 3> sample);

/// 6 x 8 system over [1, c, c v, c v^2, u, u^2, f^2, c f^2].
EliminationSystem build_4pt_suv_f_system(std::span<const Correspondence, 4> sample);

/// 6 x 8 system over [1, c, c w2, c w2 v, c w2 v^2, w1, w1 u, w1 u^2] with
/// w_k = 1 / f_k^2.
EliminationSystem build_4pt_suv_f12_system(std::span<const Correspondence, 4> sample);

/// Dispatch on the raw (already pre-processed) coordinates.
SolveResult solve(SolverId id, std::span<const Correspondence> sample);

}  // namespace solvers

/// Checks arity, depth fields and intrinsics, converts pixel coordinates for
/// the chosen solver and runs it. Throws DomainError on contract violations.
SolveResult solve_minimal(SolverId id, const MinimalSample& sample);

/// Pixel -> solver coordinates for one correspondence.
Correspondence prepare_correspondence(SolverId id, const Correspondence& c,
                                      const std::optional<CameraIntrinsics>& K1,
                                      const std::optional<CameraIntrinsics>& K2);

/// Throws DomainError if the correspondences cannot feed the solver.
void check_solver_inputs(SolverId id, std::span<const Correspondence> corrs,
                         const std::optional<CameraIntrinsics>& K1,
                         const std::optional<CameraIntrinsics>& K2);

}  // namespace depthpose
