#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Cholesky>
#include <Eigen/Geometry>
#include <Eigen/SVD>

#include "depthpose/robust.hpp"
#include "depthpose/smallmath.hpp"

namespace depthpose {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool focal_estimated(SolverId id) {
  const FocalModel m = traits(id).focal;
  return m == FocalModel::kShared || m == FocalModel::kSeparate;
}

Mat3 inv_focal(double f) {
  return Eigen::Vector3d(1.0 / f, 1.0 / f, 1.0).asDiagonal();
}

// Model state optimized by local_optimize.
struct LoState {
  Mat3 R;
  Vec3 t;
  double f1;
  double f2;
};

}  // namespace

void RansacConfig::validate() const {
  if (max_iterations < 1) {
    throw DomainError(DomainError::Code::kInvalidArgument,
                      "max_iterations must be >= 1");
  }
  if (!(threshold_px > 0.0)) {
    throw DomainError(DomainError::Code::kInvalidArgument,
                      "threshold_px must be positive");
  }
  if (!(confidence > 0.0 && confidence < 1.0)) {
    throw DomainError(DomainError::Code::kInvalidArgument,
                      "confidence must lie in (0, 1)");
  }
}

int EstimateReport::num_inliers() const {
  return static_cast<int>(
      std::count(inlier_mask.begin(), inlier_mask.end(), true));
}

std::vector<int> EstimateReport::inlier_indices() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < inlier_mask.size(); ++i) {
    if (inlier_mask[i]) out.push_back(static_cast<int>(i));
  }
  return out;
}

bool operator==(const EstimateReport& a, const EstimateReport& b) {
  auto same_candidate = [](const PoseCandidate& x, const PoseCandidate& y) {
    return x.pose.R == y.pose.R && x.pose.t == y.pose.t &&
           x.depth.s == y.depth.s && x.depth.u == y.depth.u &&
           x.depth.v == y.depth.v && x.f1 == y.f1 && x.f2 == y.f2 &&
           x.residual == y.residual;
  };
  return a.solver == b.solver && same_candidate(a.best, b.best) &&
         a.fundamental == b.fundamental && a.inlier_mask == b.inlier_mask &&
         a.score == b.score && a.iterations_run == b.iterations_run &&
         a.solver_calls == b.solver_calls && a.elapsed_us == b.elapsed_us;
}

// ---------------------------------------------------------------------------

EstimationProblem::EstimationProblem(SolverId solver,
                                     std::span<const Correspondence> pixels,
                                     const std::optional<CameraIntrinsics>& K1,
                                     const std::optional<CameraIntrinsics>& K2,
                                     double threshold_px)
    : solver_(solver), threshold_(threshold_px), unit_to_px_(1.0),
      scene_scale_(1.0) {
  check_solver_inputs(solver, pixels, K1, K2);
  prepared_.reserve(pixels.size());
  for (const auto& c : pixels) {
    prepared_.push_back(prepare_correspondence(solver, c, K1, K2));
  }
  if (traits(solver).focal == FocalModel::kKnown) {
    unit_to_px_ = 0.5 * (K1->f() + K2->f());
    threshold_ = threshold_px / unit_to_px_;
  }
  std::vector<double> depths;
  for (const auto& c : prepared_) {
    if (c.alpha) depths.push_back(std::abs(*c.alpha));
  }
  if (!depths.empty()) {
    auto mid = depths.begin() + static_cast<std::ptrdiff_t>(depths.size() / 2);
    std::nth_element(depths.begin(), mid, depths.end());
    if (*mid > 0.0) scene_scale_ = *mid;
  }
}

Mat3 EstimationProblem::fundamental(const PoseCandidate& cand) const {
  Mat3 F = smallmath::skew(cand.pose.t) * cand.pose.R;
  if (focal_estimated(solver_)) {
    const double f1 = cand.f1.value_or(1.0);
    const double f2 = cand.f2.value_or(f1);
    F = inv_focal(f2) * F * inv_focal(f1);
  }
  const double n = F.norm();
  return n > 0.0 ? Mat3(F / n) : F;
}

bool EstimationProblem::is_pure_rotation(const PoseCandidate& cand) const {
  return cand.pose.t.norm() < 1e-9 * scene_scale_;
}

double EstimationProblem::point_error(const PoseCandidate& cand,
                                      std::size_t i) const {
  const Correspondence& m = prepared_[i];
  if (!is_pure_rotation(cand)) {
    return sampson_error(fundamental(cand), m.p, m.q);
  }
  // Sampson is undefined without a baseline: reproject the lifted point.
  if (!m.alpha) return kInf;
  double f1 = 1.0, f2 = 1.0;
  if (focal_estimated(solver_)) {
    f1 = cand.f1.value_or(1.0);
    f2 = cand.f2.value_or(f1);
  }
  const Vec3 X = lift_point(Vec3(m.p.x / f1, m.p.y / f1, 1.0), *m.alpha,
                            cand.depth.u, 1.0);
  const Vec3 Y = cand.pose.R * X + cand.pose.t;
  if (!(Y.z() > 0.0)) return kInf;
  const double dx = f2 * Y.x() / Y.z() - m.q.x;
  const double dy = f2 * Y.y() / Y.z() - m.q.y;
  return dx * dx + dy * dy;
}

MsacResult EstimationProblem::score(const PoseCandidate& cand) const {
  if (!is_pure_rotation(cand)) return score_msac(fundamental(cand), prepared_, threshold_);
  MsacResult r;
  const double t2 = threshold_ * threshold_;
  r.inlier_mask.assign(prepared_.size(), false);
  for (std::size_t i = 0; i < prepared_.size(); ++i) {
    const double e = point_error(cand, i);
    if (e < t2) {
      r.inlier_mask[i] = true;
      ++r.num_inliers;
      r.score += e;
    } else {
      r.score += t2;
    }
  }
  return r;
}

MsacResult EstimationProblem::score(const Mat3& F) const {
  return score_msac(F, prepared_, threshold_);
}

// ---------------------------------------------------------------------------

PoseCandidate local_optimize(const EstimationProblem& problem,
                             const PoseCandidate& candidate,
                             const std::vector<bool>& inlier_mask,
                             const RansacConfig& config) {
  const SolverId solver = problem.solver();
  if (solver == SolverId::k7pt || problem.is_pure_rotation(candidate)) {
    return candidate;
  }
  const auto corrs = problem.prepared();
  std::vector<std::size_t> inliers;
  for (std::size_t i = 0; i < inlier_mask.size() && i < corrs.size(); ++i) {
    if (inlier_mask[i]) inliers.push_back(i);
  }
  if (static_cast<int>(inliers.size()) < traits(solver).sample_size) {
    return candidate;
  }

  const FocalModel fm = traits(solver).focal;
  int n_focal = 0;
  if (config.refine_focal && fm == FocalModel::kShared) n_focal = 1;
  if (config.refine_focal && fm == FocalModel::kSeparate) n_focal = 2;
  const int n_params = 5 + n_focal;

  const double t_norm = candidate.pose.t.norm();
  const Vec3 t_dir = candidate.pose.t / t_norm;
  Vec3 helper = std::abs(t_dir.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  const Vec3 b1 = t_dir.cross(helper).normalized();
  const Vec3 b2 = t_dir.cross(b1);

  const bool has_focal = focal_estimated(solver);
  const LoState start{candidate.pose.R, candidate.pose.t,
                      has_focal ? candidate.f1.value_or(1.0) : 1.0,
                      has_focal ? candidate.f2.value_or(candidate.f1.value_or(1.0)) : 1.0};

  auto apply = [&](const LoState& s, const Eigen::VectorXd& d) {
    LoState out;
    out.R = smallmath::rotation_from_vector(d.head<3>()) * s.R;
    const Vec3 dir = s.t / s.t.norm();
    // Tangent basis is fixed at the start point; re-normalization keeps it
    // valid for small steps.
    out.t = t_norm * (dir + d(3) * b1 + d(4) * b2).normalized();
    out.f1 = s.f1;
    out.f2 = s.f2;
    if (n_focal >= 1) out.f1 = s.f1 * std::exp(d(5));
    if (n_focal == 1) out.f2 = out.f1;
    if (n_focal == 2) out.f2 = s.f2 * std::exp(d(6));
    return out;
  };

  // The inlier mask already applies the threshold. Truncating each residual
  // at the threshold as well would leave no gradient for a model whose
  // inliers have drifted just outside it, so the cap here is 10x looser and
  // only guards against stray points.
  const double cap = 100.0 * problem.threshold() * problem.threshold();
  auto residuals = [&](const LoState& s) {
    Mat3 F = smallmath::skew(s.t) * s.R;
    if (has_focal) F = inv_focal(s.f2) * F * inv_focal(s.f1);
    F /= F.norm();
    Eigen::VectorXd r(static_cast<Eigen::Index>(inliers.size()));
    for (std::size_t k = 0; k < inliers.size(); ++k) {
      const auto& m = corrs[inliers[k]];
      r(static_cast<Eigen::Index>(k)) =
          std::sqrt(std::min(sampson_error(F, m.p, m.q), cap));
    }
    return r;
  };

  LoState state = start;
  Eigen::VectorXd r = residuals(state);
  double cost = r.squaredNorm();
  double lambda = 1e-3;
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(n_params);
  for (int iter = 0; iter < config.lo_max_refine_iters; ++iter) {
    Eigen::MatrixXd J(r.size(), n_params);
    for (int k = 0; k < n_params; ++k) {
      Eigen::VectorXd d = zero;
      constexpr double h = 1e-7;
      d(k) = h;
      J.col(k) = (residuals(apply(state, d)) - r) / h;
    }
    const Eigen::MatrixXd JtJ = J.transpose() * J;
    const Eigen::VectorXd g = J.transpose() * r;
    bool improved = false;
    for (int attempt = 0; attempt < 8; ++attempt) {
      Eigen::MatrixXd H = JtJ;
      H.diagonal() += lambda * (JtJ.diagonal().array() + 1e-12).matrix();
      const Eigen::VectorXd step = H.ldlt().solve(-g);
      if (!step.allFinite()) break;
      const LoState trial = apply(state, step);
      const Eigen::VectorXd r_trial = residuals(trial);
      const double c_trial = r_trial.squaredNorm();
      if (c_trial < cost) {
        state = trial;
        r = r_trial;
        const double rel = (cost - c_trial) / std::max(cost, 1e-300);
        cost = c_trial;
        lambda = std::max(lambda * 0.1, 1e-12);
        improved = true;
        if (rel < 1e-10) iter = config.lo_max_refine_iters;
        break;
      }
      lambda *= 10.0;
    }
    if (!improved) break;
  }

  PoseCandidate refined = candidate;
  refined.pose.R = state.R;
  refined.pose.t = state.t;
  if (has_focal) {
    refined.f1 = state.f1;
    refined.f2 = state.f2;
  }
  const double before = problem.score(candidate).score;
  const double after = problem.score(refined).score;
  return after < before ? refined : candidate;
}

Mat3 local_optimize_fundamental(const EstimationProblem& problem,
                                const Mat3& F,
                                const std::vector<bool>& inlier_mask) {
  const auto corrs = problem.prepared();
  std::vector<std::size_t> inliers;
  for (std::size_t i = 0; i < inlier_mask.size() && i < corrs.size(); ++i) {
    if (inlier_mask[i]) inliers.push_back(i);
  }
  if (inliers.size() < 8) return F;

  auto normalizer = [&](bool first) {
    Vec2 mean = Vec2::Zero();
    for (std::size_t i : inliers) {
      const auto& pt = first ? corrs[i].p : corrs[i].q;
      mean += Vec2(pt.x, pt.y);
    }
    mean /= static_cast<double>(inliers.size());
    double dist = 0.0;
    for (std::size_t i : inliers) {
      const auto& pt = first ? corrs[i].p : corrs[i].q;
      dist += (Vec2(pt.x, pt.y) - mean).norm();
    }
    dist /= static_cast<double>(inliers.size());
    const double k = dist > 0.0 ? std::sqrt(2.0) / dist : 1.0;
    Mat3 T;
    T << k, 0.0, -k * mean.x(), 0.0, k, -k * mean.y(), 0.0, 0.0, 1.0;
    return T;
  };
  const Mat3 T1 = normalizer(true);
  const Mat3 T2 = normalizer(false);

  Eigen::Matrix<double, 9, 9> AtA = Eigen::Matrix<double, 9, 9>::Zero();
  for (std::size_t i : inliers) {
    const Vec3 x1 = T1 * Vec3(corrs[i].p.x, corrs[i].p.y, 1.0);
    const Vec3 x2 = T2 * Vec3(corrs[i].q.x, corrs[i].q.y, 1.0);
    Eigen::Matrix<double, 9, 1> a;
    a << x2(0) * x1(0), x2(0) * x1(1), x2(0), x2(1) * x1(0), x2(1) * x1(1),
        x2(1), x1(0), x1(1), 1.0;
    AtA += a * a.transpose();
  }
  Eigen::JacobiSVD<Eigen::Matrix<double, 9, 9>> svd(AtA, Eigen::ComputeFullV);
  const Eigen::Matrix<double, 9, 1> f = svd.matrixV().col(8);
  Mat3 Fn;
  Fn << f(0), f(1), f(2), f(3), f(4), f(5), f(6), f(7), f(8);
  Eigen::JacobiSVD<Mat3> s3(Fn, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Vec3 sv = s3.singularValues();
  sv(2) = 0.0;
  Fn = s3.matrixU() * sv.asDiagonal() * s3.matrixV().transpose();
  Mat3 refined = T2.transpose() * Fn * T1;
  refined /= refined.norm();
  Eigen::Index r, c;
  refined.cwiseAbs().maxCoeff(&r, &c);
  if (refined(r, c) < 0.0) refined = -refined;

  return problem.score(refined).score < problem.score(F).score ? refined : F;
}

// ---------------------------------------------------------------------------

EstimateReport ransac_estimate(std::span<const Correspondence> corrs,
                               const std::optional<CameraIntrinsics>& K1,
                               const std::optional<CameraIntrinsics>& K2,
                               SolverId solver, const RansacConfig& config) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();

  const int k = traits(solver).sample_size;
  if (static_cast<int>(corrs.size()) < k) {
    throw DomainError(DomainError::Code::kInsufficientCorrespondences,
                      std::string(to_string(solver)) + " needs at least " +
                          std::to_string(k) + " correspondences");
  }
  const EstimationProblem problem(solver, corrs, K1, K2, config.threshold_px);
  const auto prepared = problem.prepared();
  const std::size_t n = prepared.size();

  std::mt19937_64 rng(config.seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<std::size_t> idx(static_cast<std::size_t>(k));
  std::vector<Correspondence> sample(static_cast<std::size_t>(k));

  bool have_best = false;
  PoseCandidate best_cand;
  Mat3 best_F = Mat3::Zero();
  MsacResult best_msac;
  best_msac.score = kInf;

  EstimateReport report;
  report.solver = solver;

  auto consider_pose = [&](const PoseCandidate& cand) {
    MsacResult m = problem.score(cand);
    if (!(m.score < best_msac.score)) return;
    best_cand = cand;
    best_msac = std::move(m);
    have_best = true;
    if (config.lo_enabled) {
      const PoseCandidate refined =
          local_optimize(problem, best_cand, best_msac.inlier_mask, config);
      MsacResult mr = problem.score(refined);
      if (mr.score < best_msac.score) {
        best_cand = refined;
        best_msac = std::move(mr);
      }
    }
  };
  auto consider_fundamental = [&](const Mat3& F) {
    MsacResult m = problem.score(F);
    if (!(m.score < best_msac.score)) return;
    best_F = F;
    best_msac = std::move(m);
    have_best = true;
    if (config.lo_enabled) {
      const Mat3 refined =
          local_optimize_fundamental(problem, best_F, best_msac.inlier_mask);
      MsacResult mr = problem.score(refined);
      if (mr.score < best_msac.score) {
        best_F = refined;
        best_msac = std::move(mr);
      }
    }
  };

  int max_iter = config.max_iterations;
  for (int it = 0; it < max_iter; ++it) {
    for (int j = 0; j < k; ++j) {
      std::size_t cand;
      do {
        cand = pick(rng);
      } while (std::find(idx.begin(), idx.begin() + j, cand) !=
               idx.begin() + j);
      idx[static_cast<std::size_t>(j)] = cand;
      sample[static_cast<std::size_t>(j)] = prepared[cand];
    }
    ++report.solver_calls;
    report.iterations_run = it + 1;
    const SolveResult res = solvers::solve(solver, sample);
    if (res.degenerate()) continue;
    for (const auto& c : res.candidates) consider_pose(c);
    for (const auto& F : res.fundamentals) consider_fundamental(F);

    if (config.early_exit && have_best && best_msac.num_inliers > 0) {
      const double w = static_cast<double>(best_msac.num_inliers) /
                       static_cast<double>(n);
      const double p_good = std::pow(w, k);
      if (p_good >= 1.0) break;
      const double needed =
          std::log(1.0 - config.confidence) / std::log(1.0 - p_good);
      if (needed < static_cast<double>(it + 1)) break;
    }
  }

  if (!have_best) {
    throw DomainError(DomainError::Code::kDegenerate,
                      "no sample produced a valid model");
  }

  // Final polish.
  if (config.lo_enabled) {
    if (solver == SolverId::k7pt) {
      const Mat3 refined =
          local_optimize_fundamental(problem, best_F, best_msac.inlier_mask);
      MsacResult mr = problem.score(refined);
      if (mr.score < best_msac.score) {
        best_F = refined;
        best_msac = std::move(mr);
      }
    } else {
      const PoseCandidate refined =
          local_optimize(problem, best_cand, best_msac.inlier_mask, config);
      MsacResult mr = problem.score(refined);
      if (mr.score < best_msac.score) {
        best_cand = refined;
        best_msac = std::move(mr);
      }
    }
  }

  if (solver == SolverId::k7pt) {
    report.fundamental = best_F;
    if (K1 && K2) {
      // Recover a pose from E = K2^T F K1 in normalized coordinates.
      std::vector<Correspondence> normalized;
      normalized.reserve(n);
      for (const auto& c : corrs) {
        normalized.push_back(
            prepare_correspondence(SolverId::k3ptSuv, c, K1, K2));
      }
      const Mat3 E = K2->K().transpose() * best_F * K1->K();
      if (auto pose = pose_from_essential(E, normalized, &best_msac.inlier_mask)) {
        best_cand.pose = *pose;
      }
    }
  }

  report.best = best_cand;
  report.inlier_mask = best_msac.inlier_mask;
  report.score = best_msac.score * problem.unit_to_px() * problem.unit_to_px();
  if (config.measure_time) {
    report.elapsed_us = std::chrono::duration<double, std::micro>(
                            std::chrono::steady_clock::now() - start)
                            .count();
  }
  return report;
}

}  // namespace depthpose
