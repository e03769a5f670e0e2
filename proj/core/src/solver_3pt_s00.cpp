// Scale-invariant depth (zero shifts) with unknown focal lengths.
//
// Pixels are centered, K = diag(f, f, 1), and |K^-1 z|^2 = w |z_xy|^2 + z_z^2
// with w = 1 / f^2. Each pairwise length equation then reads
//   c (w Q_xy + Q_z) = w' P_xy + P_z,      c = s^2.
#include <array>
#include <cmath>
#include <limits>

#include <Eigen/LU>

#include "solver_common.hpp"

namespace depthpose::solvers {

namespace {

using detail::hom_focal;
using detail::Poly;
using detail::poly_add;
using detail::poly_eval;
using detail::poly_mul;
using detail::poly_scale;

Vec2 xy(const ImagePoint& pt) { return {pt.x, pt.y}; }

// Lift with K = diag(f, f, 1) and align; cheirality already checked.
std::optional<PoseCandidate> lift_and_align(
    std::span<const Correspondence, 3> sample, double s, double f1, double f2,
    const std::array<double, 3>& beta, bool shared) {
  std::array<Vec3, 3> X, Y;
  for (int i = 0; i < 3; ++i) {
    X[i] = lift_point(hom_focal(sample[i].p, f1), *sample[i].alpha, 0.0, 1.0);
    Y[i] = lift_point(hom_focal(sample[i].q, f2), beta[i], 0.0, s);
  }
  return detail::align_candidate(X, Y, {s, 0.0, 0.0}, f1,
                                 shared ? std::optional<double>(f1)
                                        : std::optional<double>(f2));
}

// Divides f by (k1 c + k0), discarding the remainder. The top part of the
// quotient comes from the leading coefficients, the bottom part from the
// constant end; the split with the smallest coefficient mismatch wins.
Poly<5> deflate_linear(const Poly<6>& f, double k1, double k0) {
  Poly<5> top{}, bottom{};
  if (k1 != 0.0) {
    top[4] = f[5] / k1;
    for (int i = 4; i >= 1; --i) top[i - 1] = (f[i] - k0 * top[i]) / k1;
  }
  if (k0 != 0.0) {
    bottom[0] = f[0] / k0;
    for (int i = 1; i <= 4; ++i) bottom[i] = (f[i] - k1 * bottom[i - 1]) / k0;
  }
  Poly<5> best{};
  double best_err = std::numeric_limits<double>::infinity();
  for (int m = 0; m <= 5; ++m) {
    if ((m < 5 && k1 == 0.0) || (m > 0 && k0 == 0.0)) continue;
    Poly<5> q;
    for (int i = 0; i < 5; ++i) q[i] = i < m ? bottom[i] : top[i];
    double err = 0.0;
    for (int j = 0; j <= 5; ++j) {
      const double hi = j >= 1 ? k1 * q[j - 1] : 0.0;
      const double lo = j <= 4 ? k0 * q[j] : 0.0;
      const double mag = std::abs(f[j]) + std::abs(hi) + std::abs(lo);
      if (mag > 0.0) err = std::max(err, std::abs(f[j] - hi - lo) / mag);
    }
    if (err < best_err) {
      best_err = err;
      best = q;
    }
  }
  return best;
}

// Two Newton steps on the undeflated polynomial.
double polish_root(const Poly<6>& f, double x) {
  for (int it = 0; it < 2; ++it) {
    double p = 0.0, dp = 0.0;
    for (int i = 5; i >= 0; --i) {
      dp = dp * x + p;
      p = p * x + f[i];
    }
    if (!(dp != 0.0) || !std::isfinite(p / dp)) break;
    x -= p / dp;
  }
  return x;
}

}  // namespace

static SolveResult solve_3pt_s00_f_scaled(std::span<const Correspondence, 3> sample) {
  const double a0 = *sample[0].alpha, a1 = *sample[1].alpha,
               a2 = *sample[2].alpha;
  const double b0 = *sample[0].beta, b1 = *sample[1].beta;
  const Vec2 p0 = xy(sample[0].p), p1 = xy(sample[1].p), p2 = xy(sample[2].p);
  const Vec2 q0 = xy(sample[0].q), q1 = xy(sample[1].q), q2 = xy(sample[2].q);

  // Pair (0, 1) fixes w = N(c) / D(c).
  const double Qxy = (b0 * q0 - b1 * q1).squaredNorm();
  const double Qz = (b0 - b1) * (b0 - b1);
  const double Pxy = (a0 * p0 - a1 * p1).squaredNorm();
  const double Pz = (a0 - a1) * (a0 - a1);
  const Poly<2> N{Pz, -Qz};
  const Poly<2> D{-Pxy, Qxy};

  // N identically zero (equal depths in both images for points 0 and 1)
  // leaves w unconstrained by this pair.
  const double depth_sq = std::max({a0 * a0, a1 * a1, b0 * b0, b1 * b1});
  if (!(std::max(Pz, Qz) > 1e-14 * depth_sq) ||
      !(std::max(Pxy, Qxy) > 0.0)) {
    return detail::degenerate();
  }

  // Pairs (0, 2) and (1, 2) with the unknown image-2 depth b of point 2:
  //   c [w |b_k q_k - b q2|^2 + (b_k - b)^2] = w P_k2xy + P_k2z.
  // Their difference is linear in b.
  const double P02xy = (a0 * p0 - a2 * p2).squaredNorm();
  const double P12xy = (a1 * p1 - a2 * p2).squaredNorm();
  const double P02z = (a0 - a2) * (a0 - a2);
  const double P12z = (a1 - a2) * (a1 - a2);
  const double K1 = b0 * b0 * q0.squaredNorm() - b1 * b1 * q1.squaredNorm();
  const double K2 = b0 * b0 - b1 * b1;
  const double L1 = (b0 * q0 - b1 * q1).dot(q2);
  const double L2 = b0 - b1;

  // b = Pn / (c Pd1), both numerators scaled by D.
  const Poly<3> Pn = poly_add(
      poly_mul(Poly<2>{0.0, 1.0},
               poly_add(poly_scale(N, K1), poly_scale(D, K2))),
      poly_add(poly_scale(N, -(P02xy - P12xy)),
               poly_scale(D, -(P02z - P12z))));
  const Poly<2> Pd1 =
      poly_scale(poly_add(poly_scale(N, L1), poly_scale(D, L2)), 2.0);

  // Equation for pair (0, 2) times D (c Pd1)^2 / c:
  //   N (b0^2 |q0|^2 c^2 Pd1^2 - 2 b0 (q0.q2) c Pd1 Pn + |q2|^2 Pn^2)
  // + D (b0^2 c^2 Pd1^2 - 2 b0 c Pd1 Pn + Pn^2)
  // - (N P02xy + D P02z) c Pd1^2 = 0.
  const Poly<2> cPoly{0.0, 1.0};
  const Poly<3> cPd1 = poly_mul(cPoly, Pd1);
  const Poly<5> cPd1_sq = poly_mul(cPd1, cPd1);
  const Poly<5> cPd1_Pn = poly_mul(cPd1, Pn);
  const Poly<5> Pn_sq = poly_mul(Pn, Pn);
  const double qq0 = q0.squaredNorm();
  const double q02 = q0.dot(q2);
  const double qq2 = q2.squaredNorm();

  const Poly<5> termN = poly_add(
      poly_add(poly_scale(cPd1_sq, b0 * b0 * qq0),
               poly_scale(cPd1_Pn, -2.0 * b0 * q02)),
      poly_scale(Pn_sq, qq2));
  const Poly<5> termD = poly_add(
      poly_add(poly_scale(cPd1_sq, b0 * b0), poly_scale(cPd1_Pn, -2.0 * b0)),
      Pn_sq);
  const Poly<4> Pd1_sq_c = poly_mul(cPoly, poly_mul(Pd1, Pd1));
  const Poly<2> rhs = poly_add(poly_scale(N, P02xy), poly_scale(D, P02z));

  const Poly<6> F = poly_add(
      poly_add(poly_mul(N, termN), poly_mul(D, termD)),
      poly_scale(poly_mul(rhs, Pd1_sq_c), -1.0));

  // F carries the spurious factor N(c) (w = 0, infinite focal length).
  const Poly<5> quartic = deflate_linear(F, -Qz, Pz);

  smallmath::RealRoots roots;
  try {
    roots = smallmath::solve_quartic(quartic[4], quartic[3], quartic[2],
                                     quartic[1], quartic[0]);
  } catch (const DomainError&) {
    return detail::degenerate();
  }

  // Newton on the three pair equations in (c, w, b); the elimination above
  // loses accuracy in w when the perspective effect is weak.
  auto refine = [&](double& c, double& w, double& b) {
    for (int it = 0; it < 3; ++it) {
      const Vec2 d0 = b0 * q0 - b * q2, d1 = b1 * q1 - b * q2;
      const double e0 = d0.squaredNorm(), e1 = d1.squaredNorm();
      const double z0 = (b0 - b) * (b0 - b), z1 = (b1 - b) * (b1 - b);
      const Vec3 r(c * (w * Qxy + Qz) - w * Pxy - Pz,
                   c * (w * e0 + z0) - w * P02xy - P02z,
                   c * (w * e1 + z1) - w * P12xy - P12z);
      Mat3 J;
      J << w * Qxy + Qz, c * Qxy - Pxy, 0.0,
          w * e0 + z0, c * e0 - P02xy,
          c * (-2.0 * w * d0.dot(q2) - 2.0 * (b0 - b)),
          w * e1 + z1, c * e1 - P12xy,
          c * (-2.0 * w * d1.dot(q2) - 2.0 * (b1 - b));
      const Vec3 step = J.fullPivLu().solve(r);
      if (!step.allFinite()) return;
      c -= step(0);
      w -= step(1);
      b -= step(2);
    }
  };

  SolveResult result;
  for (double c0 : roots) {
    double c = polish_root(F, c0);
    if (!(c > 0.0)) continue;
    const double d = poly_eval(D, c);
    if (d == 0.0) continue;
    double w = poly_eval(N, c) / d;
    if (!(w > 0.0)) continue;
    const double pd = c * poly_eval(Pd1, c);
    if (pd == 0.0) continue;
    double b = poly_eval(Pn, c) / pd;
    refine(c, w, b);
    if (!(c > 0.0) || !(w > 0.0)) continue;
    if (!(b > 0.0) || !(a0 > 0.0) || !(a1 > 0.0) || !(a2 > 0.0) ||
        !(b0 > 0.0) || !(b1 > 0.0)) {
      continue;
    }
    const double f = 1.0 / std::sqrt(w);
    auto cand = lift_and_align(sample, std::sqrt(c), f, f, {b0, b1, b}, true);
    if (cand) result.candidates.push_back(*cand);
  }
  detail::sort_by_residual(result.candidates);
  return result;
}

static SolveResult solve_3pt_s00_f12_scaled(std::span<const Correspondence, 3> sample) {
  constexpr std::array<std::array<int, 2>, 3> pairs{{{0, 1}, {0, 2}, {1, 2}}};
  // Unknowns x = [c w2, c, w1]; each pair gives
  //   Q_xy (c w2) + Q_z c - P_xy w1 = P_z.
  Mat3 A;
  Vec3 rhs;
  for (int r = 0; r < 3; ++r) {
    const auto& ci = sample[pairs[r][0]];
    const auto& cj = sample[pairs[r][1]];
    const double ai = *ci.alpha, aj = *cj.alpha;
    const double bi = *ci.beta, bj = *cj.beta;
    const Vec2 qd = bi * xy(ci.q) - bj * xy(cj.q);
    const Vec2 pd = ai * xy(ci.p) - aj * xy(cj.p);
    A(r, 0) = qd.squaredNorm();
    A(r, 1) = (bi - bj) * (bi - bj);
    A(r, 2) = -pd.squaredNorm();
    rhs(r) = (ai - aj) * (ai - aj);
  }

  // Column scales differ by ~f^2; equilibrate before the rank test.
  Vec3 col_scale;
  for (int k = 0; k < 3; ++k) {
    const double n = A.col(k).norm();
    if (!(n > 0.0)) return detail::degenerate();
    col_scale(k) = 1.0 / n;
  }
  const Mat3 As = A * col_scale.asDiagonal();
  Eigen::FullPivLU<Mat3> lu(As);
  lu.setThreshold(1e-10);
  if (!lu.isInvertible()) return detail::degenerate();
  const Vec3 x = col_scale.asDiagonal() * lu.solve(rhs);

  const double cw2 = x(0), c = x(1), w1 = x(2);
  SolveResult result;
  if (!(c > 0.0) || !(w1 > 0.0) || !(cw2 > 0.0)) return result;
  for (int i = 0; i < 3; ++i) {
    if (!(*sample[i].alpha > 0.0) || !(*sample[i].beta > 0.0)) return result;
  }
  const double s = std::sqrt(c);
  const double f1 = 1.0 / std::sqrt(w1);
  const double f2 = std::sqrt(c / cw2);
  auto cand = lift_and_align(
      sample, s, f1, f2,
      {*sample[0].beta, *sample[1].beta, *sample[2].beta}, false);
  if (cand) result.candidates.push_back(*cand);
  return result;
}

SolveResult solve_3pt_s00_f(std::span<const Correspondence, 3> sample) {
  return detail::solve_pixel_scaled(
      sample, [](auto s) { return solve_3pt_s00_f_scaled(s); });
}

SolveResult solve_3pt_s00_f12(std::span<const Correspondence, 3> sample) {
  return detail::solve_pixel_scaled(
      sample, [](auto s) { return solve_3pt_s00_f12_scaled(s); });
}

}  // namespace depthpose::solvers
