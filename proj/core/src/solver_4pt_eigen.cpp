// Focal-length solvers from four points with affine-invariant depths in both
// images, using all six pairwise length equations and one hidden variable.
//
// Pixels are centered and K = diag(f, f, 1). For a pair (i, j) write the xy
// parts a = b_i q_i - b_j q_j, d = q_i - q_j, e = a_i p_i - a_j p_j,
// g = p_i - p_j; the z parts of the shifted differences reduce to the depth
// differences because the shifts cancel.
#include <array>
#include <cmath>

#include <Eigen/LU>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "solver_common.hpp"

namespace depthpose::solvers {

namespace {

using detail::hom_focal;
using Matrix68 = Eigen::Matrix<double, 6, 8>;
using Matrix6 = Eigen::Matrix<double, 6, 6>;
using Vector6 = Eigen::Matrix<double, 6, 1>;

constexpr std::array<std::array<int, 2>, 6> kPairs{
    {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};

struct PairTerms {
  double aa, ad, dd;  // image 2, xy
  double ee, eg, gg;  // image 1, xy
  double dz_beta_sq, dz_alpha_sq;
};

PairTerms pair_terms(const Correspondence& ci, const Correspondence& cj) {
  const Vec2 qi(ci.q.x, ci.q.y), qj(cj.q.x, cj.q.y);
  const Vec2 pi(ci.p.x, ci.p.y), pj(cj.p.x, cj.p.y);
  const double ai = *ci.alpha, aj = *cj.alpha;
  const double bi = *ci.beta, bj = *cj.beta;
  const Vec2 a = bi * qi - bj * qj;
  const Vec2 d = qi - qj;
  const Vec2 e = ai * pi - aj * pj;
  const Vec2 g = pi - pj;
  return {a.dot(a), a.dot(d), d.dot(d),       e.dot(e),
          e.dot(g), g.dot(g), (bi - bj) * (bi - bj), (ai - aj) * (ai - aj)};
}

// Monomials [1, c, cv, cv^2, u, u^2, w, cw], w = f^2. The equation is the
// pair constraint multiplied by f^2:
//   c |a + v d|^2 + c w dz_b^2 = |e + u g|^2 + w dz_a^2.
Matrix68 shared_focal_matrix(std::span<const Correspondence, 4> sample) {
  Matrix68 M;
  for (int r = 0; r < 6; ++r) {
    const PairTerms t = pair_terms(sample[kPairs[r][0]], sample[kPairs[r][1]]);
    M.row(r) << -t.ee, t.aa, 2.0 * t.ad, t.dd, -2.0 * t.eg, -t.gg,
        -t.dz_alpha_sq, t.dz_beta_sq;
  }
  return M;
}

// Monomials [1, c, c w2, c w2 v, c w2 v^2, w1, w1 u, w1 u^2], w_k = 1/f_k^2:
//   c (w2 |a + v d|^2 + dz_b^2) = w1 |e + u g|^2 + dz_a^2.
Matrix68 two_focal_matrix(std::span<const Correspondence, 4> sample) {
  Matrix68 M;
  for (int r = 0; r < 6; ++r) {
    const PairTerms t = pair_terms(sample[kPairs[r][0]], sample[kPairs[r][1]]);
    M.row(r) << -t.dz_alpha_sq, t.dz_beta_sq, t.aa, 2.0 * t.ad, t.dd, -t.ee,
        -2.0 * t.eg, -t.gg;
  }
  return M;
}

// Null vector of a 6 x 6 matrix scaled so that its first entry is 1.
// Columns are equilibrated first since the monomials span several orders of
// magnitude (1/f^2 next to 1).
std::optional<Vector6> monomial_null_vector(const Matrix6& M) {
  Vector6 scale;
  for (int k = 0; k < 6; ++k) {
    const double n = M.col(k).norm();
    scale(k) = n > 0.0 ? 1.0 / n : 1.0;
  }
  Eigen::JacobiSVD<Matrix6> svd(M * scale.asDiagonal(), Eigen::ComputeFullV);
  Vector6 x = scale.asDiagonal() * svd.matrixV().col(5);
  if (!(std::abs(x(0)) > 1e-12)) return std::nullopt;
  x /= x(0);
  if (!x.allFinite()) return std::nullopt;
  return x;
}

double depth_scale(std::span<const Correspondence, 4> sample) {
  double m = 0.0;
  for (const auto& c : sample) m = std::max({m, std::abs(*c.alpha), std::abs(*c.beta)});
  return m;
}

struct LiftParams {
  double s, u, v, f1, f2;
};

std::optional<PoseCandidate> lift_and_align(
    std::span<const Correspondence, 4> sample, const LiftParams& prm,
    bool shared) {
  std::array<Vec3, 4> X, Y;
  for (int i = 0; i < 4; ++i) {
    const double di = *sample[i].alpha + prm.u;
    const double dj = *sample[i].beta + prm.v;
    if (!(di > 0.0) || !(dj > 0.0)) return std::nullopt;
    X[i] = lift_point(hom_focal(sample[i].p, prm.f1), *sample[i].alpha, prm.u,
                      1.0);
    Y[i] = lift_point(hom_focal(sample[i].q, prm.f2), *sample[i].beta, prm.v,
                      prm.s);
  }
  return detail::align_candidate(
      X, Y, {prm.s, prm.u, prm.v}, prm.f1,
      shared ? std::optional<double>(prm.f1) : std::optional<double>(prm.f2));
}

// Gauss-Newton on the six pair equations
//   c (W2 |a + v d|^2 + dz_b^2) - (W1 |e + u g|^2 + dz_a^2) = 0,  W = 1/f^2,
// to polish an eigen-solver root. W1 = W2 when shared.
void polish(std::span<const Correspondence, 4> sample, LiftParams& prm,
            bool shared) {
  struct Pair {
    Vec2 a, d, e, g;
    double dzb, dza;
  };
  std::array<Pair, 6> pairs;
  for (int r = 0; r < 6; ++r) {
    const auto& ci = sample[kPairs[r][0]];
    const auto& cj = sample[kPairs[r][1]];
    const Vec2 qi(ci.q.x, ci.q.y), qj(cj.q.x, cj.q.y);
    const Vec2 pi(ci.p.x, ci.p.y), pj(cj.p.x, cj.p.y);
    pairs[r] = {*ci.beta * qi - *cj.beta * qj, qi - qj,
                *ci.alpha * pi - *cj.alpha * pj, pi - pj,
                (*ci.beta - *cj.beta) * (*ci.beta - *cj.beta),
                (*ci.alpha - *cj.alpha) * (*ci.alpha - *cj.alpha)};
  }
  // x = [c, u, v, W1, W2]
  Eigen::Matrix<double, 5, 1> x;
  x << prm.s * prm.s, prm.u, prm.v, 1.0 / (prm.f1 * prm.f1),
      1.0 / (prm.f2 * prm.f2);
  const int n = shared ? 4 : 5;
  auto residuals = [&](const Eigen::Matrix<double, 5, 1>& y,
                       Eigen::Matrix<double, 6, 5>* J) {
    Vector6 r;
    const double W2 = shared ? y(3) : y(4);
    for (int k = 0; k < 6; ++k) {
      const Pair& P = pairs[k];
      const Vec2 qv = P.a + y(2) * P.d;
      const Vec2 pu = P.e + y(1) * P.g;
      r(k) = y(0) * (W2 * qv.squaredNorm() + P.dzb) -
             (y(3) * pu.squaredNorm() + P.dza);
      if (J) {
        J->row(k) << W2 * qv.squaredNorm() + P.dzb,
            -2.0 * y(3) * pu.dot(P.g), 2.0 * y(0) * W2 * qv.dot(P.d),
            -pu.squaredNorm() + (shared ? y(0) * qv.squaredNorm() : 0.0),
            y(0) * qv.squaredNorm();
      }
    }
    return r;
  };
  Eigen::Matrix<double, 6, 5> J;
  Vector6 r = residuals(x, &J);
  for (int it = 0; it < 3; ++it) {
    const Eigen::MatrixXd Jn = J.leftCols(n);
    const Eigen::VectorXd step = Jn.colPivHouseholderQr().solve(r);
    if (!step.allFinite()) break;
    Eigen::Matrix<double, 5, 1> trial = x;
    trial.head(n) -= step;
    if (shared) trial(4) = trial(3);
    Eigen::Matrix<double, 6, 5> Jt;
    const Vector6 rt = residuals(trial, &Jt);
    if (!(rt.norm() < r.norm())) break;
    x = trial;
    r = rt;
    J = Jt;
  }
  if (!(x(0) > 0.0) || !(x(3) > 0.0) || !(x(4) > 0.0)) return;
  prm = {std::sqrt(x(0)), x(1), x(2), 1.0 / std::sqrt(x(3)),
         1.0 / std::sqrt(shared ? x(3) : x(4))};
}

}  // namespace

EliminationSystem build_4pt_suv_f_system(
    std::span<const Correspondence, 4> sample) {
  return {shared_focal_matrix(sample),
          {"1", "c", "cv", "cv^2", "u", "u^2", "f^2", "cf^2"}};
}

EliminationSystem build_4pt_suv_f12_system(
    std::span<const Correspondence, 4> sample) {
  return {two_focal_matrix(sample),
          {"1", "c", "cw2", "cw2v", "cw2v^2", "w1", "w1u", "w1u^2"}};
}

static SolveResult solve_4pt_suv_f_eigen_scaled(std::span<const Correspondence, 4> sample) {
  const Matrix68 M = shared_focal_matrix(sample);

  // M(w) = M0 + w M1 over [1, c, cv, cv^2, u, u^2]; M1 is nonzero only in
  // the first two columns (w and c w).
  Matrix6 M0 = M.leftCols<6>();
  Matrix6 M1 = Matrix6::Zero();
  M1.col(0) = M.col(6);
  M1.col(1) = M.col(7);

  Eigen::PartialPivLU<Matrix6> lu(M0);
  if (!(lu.rcond() > 1e-14)) return detail::degenerate();

  // 1/w are the eigenvalues of A = -M0^-1 M1. A has four zero columns, so
  // its nonzero spectrum is that of the leading 2 x 2 block.
  const Eigen::Matrix<double, 6, 2> Z = lu.solve(M1.leftCols<2>());
  const Eigen::MatrixXd A = -Z.topRows<2>();
  const auto eig = smallmath::eig_real_small(A);

  SolveResult result;
  for (const auto& pair : eig.pairs) {
    if (!(std::abs(pair.value) > 0.0)) continue;
    const double w = 1.0 / pair.value;
    if (!(w > 0.0) || !std::isfinite(w)) continue;

    const auto x = monomial_null_vector(M0 + w * M1);
    if (!x) continue;
    const double c = (*x)(1);
    if (!(c > 0.0)) continue;
    // Read off the degree-one monomials; with noisy input the quadratic ones
    // are not exactly consistent and the polish below reconciles all six
    // equations.
    const double v = (*x)(2) / c;
    const double u = (*x)(4);

    const double f = std::sqrt(w);
    LiftParams prm{std::sqrt(c), u, v, f, f};
    polish(sample, prm, true);
    auto cand = lift_and_align(sample, prm, true);
    if (cand) result.candidates.push_back(*cand);
  }
  detail::sort_by_residual(result.candidates);
  detail::drop_dominated(result.candidates, depth_scale(sample));
  return result;
}

static SolveResult solve_4pt_suv_f12_eigen_scaled(
    std::span<const Correspondence, 4> sample) {
  const Matrix68 M = two_focal_matrix(sample);

  // M(v) over [1, c, c w2, w1, w1 u, w1 u^2]; only column 2 depends on v:
  //   col2(v) = M(:,2) + v M(:,3) + v^2 M(:,4).
  // det M(v) is linear in that column, hence a quadratic in v.
  Matrix6 base;
  base << M.leftCols<3>(), M.rightCols<3>();
  std::array<double, 3> det{};
  double col_scale = 0.0;
  for (int k = 0; k < 3; ++k) {
    Matrix6 Mk = base;
    Mk.col(2) = M.col(2 + k);
    det[k] = Eigen::PartialPivLU<Matrix6>(Mk).determinant();
    col_scale = std::max(col_scale, M.col(2 + k).norm());
  }
  double others = 1.0;
  for (int k : {0, 1, 3, 4, 5}) others *= base.col(k).norm();
  const double det_scale = others * col_scale;
  const double det_max =
      std::max({std::abs(det[0]), std::abs(det[1]), std::abs(det[2])});
  if (!(det_scale > 0.0) || !(det_max > 1e-14 * det_scale)) {
    return detail::degenerate();
  }

  const auto roots = smallmath::solve_quadratic(det[2], det[1], det[0]);

  SolveResult result;
  for (double v : roots) {
    Matrix6 Mv = base;
    Mv.col(2) = M.col(2) + v * M.col(3) + v * v * M.col(4);
    const auto x = monomial_null_vector(Mv);
    if (!x) continue;
    const double c = (*x)(1);
    if (!(c > 0.0)) continue;
    const double w2 = (*x)(2) / c;
    const double w1 = (*x)(3);
    if (!(w2 > 0.0) || !(w1 > 0.0)) continue;
    const double u = (*x)(4) / w1;

    LiftParams prm{std::sqrt(c), u, v, 1.0 / std::sqrt(w1),
                   1.0 / std::sqrt(w2)};
    polish(sample, prm, false);
    auto cand = lift_and_align(sample, prm, false);
    if (cand) result.candidates.push_back(*cand);
  }
  detail::sort_by_residual(result.candidates);
  detail::drop_dominated(result.candidates, depth_scale(sample));
  return result;
}

SolveResult solve_4pt_suv_f_eigen(std::span<const Correspondence, 4> sample) {
  return detail::solve_pixel_scaled(
      sample, [](auto s) { return solve_4pt_suv_f_eigen_scaled(s); });
}

SolveResult solve_4pt_suv_f12_eigen(std::span<const Correspondence, 4> sample) {
  return detail::solve_pixel_scaled(
      sample, [](auto s) { return solve_4pt_suv_f12_eigen_scaled(s); });
}

}  // namespace depthpose::solvers
