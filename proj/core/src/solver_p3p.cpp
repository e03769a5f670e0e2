// Perspective-three-point with the camera-1 depth lifted points as the
// known structure and camera-2 bearings as observations (Grunert's
// formulation: distances along the bearings satisfy the law of cosines for
// each pair of points, reduced to a quartic in s3 / s1).
#include <array>
#include <cmath>
#include <limits>

#include <Eigen/Geometry>
#include <Eigen/LU>

#include "solver_common.hpp"

namespace depthpose::solvers {

SolveResult solve_p3p(std::span<const Correspondence, 3> sample) {
  std::array<Vec3, 3> X, bearing;
  for (int i = 0; i < 3; ++i) {
    const double alpha = *sample[i].alpha;
    if (!(alpha > 0.0)) return {};
    X[i] = lift_point(detail::hom(sample[i].p), alpha, 0.0, 1.0);
    bearing[i] = detail::hom(sample[i].q).normalized();
  }

  const double scene = std::max({X[0].norm(), X[1].norm(), X[2].norm()});
  const double area = (X[1] - X[0]).cross(X[2] - X[0]).norm();
  if (!(area > 1e-12 * scene * scene)) return detail::degenerate();

  // a, b, c are the sides opposite to points 0, 1, 2.
  const double a2 = (X[1] - X[2]).squaredNorm();
  const double b2 = (X[0] - X[2]).squaredNorm();
  const double c2 = (X[0] - X[1]).squaredNorm();
  const double cos_a = bearing[1].dot(bearing[2]);
  const double cos_b = bearing[0].dot(bearing[2]);
  const double cos_g = bearing[0].dot(bearing[1]);

  const double K = (a2 - c2) / b2;
  const double ac_b = (a2 + c2) / b2;
  const double A4 = (K - 1.0) * (K - 1.0) - 4.0 * c2 / b2 * cos_a * cos_a;
  const double A3 = 4.0 * (K * (1.0 - K) * cos_b - (1.0 - ac_b) * cos_a * cos_g +
                           2.0 * c2 / b2 * cos_a * cos_a * cos_b);
  const double A2 =
      2.0 * (K * K - 1.0 + 2.0 * K * K * cos_b * cos_b +
             2.0 * (b2 - c2) / b2 * cos_a * cos_a -
             4.0 * ac_b * cos_a * cos_b * cos_g +
             2.0 * (b2 - a2) / b2 * cos_g * cos_g);
  const double A1 = 4.0 * (-K * (1.0 + K) * cos_b +
                           2.0 * a2 / b2 * cos_g * cos_g * cos_b -
                           (1.0 - ac_b) * cos_a * cos_g);
  const double A0 = (1.0 + K) * (1.0 + K) - 4.0 * a2 / b2 * cos_g * cos_g;

  smallmath::RealRoots roots;
  try {
    roots = smallmath::solve_quartic(A4, A3, A2, A1, A0);
  } catch (const DomainError&) {
    return detail::degenerate();
  }

  SolveResult result;
  for (double v : roots) {
    if (!(v > 0.0)) continue;
    const double denom_b = 1.0 + v * v - 2.0 * v * cos_b;
    if (!(denom_b > 0.0)) continue;
    const double s1_sq = b2 / denom_b;
    const double s1 = std::sqrt(s1_sq);

    double u = 0.0;
    const double den = 2.0 * (cos_g - v * cos_a);
    if (std::abs(den) > 1e-10) {
      u = ((K - 1.0) * v * v - 2.0 * K * cos_b * v + 1.0 + K) / den;
    } else {
      // u^2 - 2 cos_g u + 1 - c^2 / s1^2 = 0; keep the root that best
      // satisfies the remaining side.
      const auto us = smallmath::solve_quadratic(1.0, -2.0 * cos_g,
                                                 1.0 - c2 / s1_sq);
      double best = std::numeric_limits<double>::infinity();
      for (double ui : us) {
        const double err =
            std::abs(a2 - s1_sq * (ui * ui + v * v - 2.0 * ui * v * cos_a));
        if (err < best) {
          best = err;
          u = ui;
        }
      }
      if (!std::isfinite(best)) continue;
    }
    if (!(u > 0.0)) continue;

    // Newton on the three law-of-cosines equations in the bearing depths.
    Vec3 lam(s1, u * s1, v * s1);
    for (int it = 0; it < 3; ++it) {
      const Vec3 r(lam(1) * lam(1) + lam(2) * lam(2) -
                       2.0 * lam(1) * lam(2) * cos_a - a2,
                   lam(0) * lam(0) + lam(2) * lam(2) -
                       2.0 * lam(0) * lam(2) * cos_b - b2,
                   lam(0) * lam(0) + lam(1) * lam(1) -
                       2.0 * lam(0) * lam(1) * cos_g - c2);
      Mat3 J;
      J << 0.0, 2.0 * (lam(1) - lam(2) * cos_a), 2.0 * (lam(2) - lam(1) * cos_a),
          2.0 * (lam(0) - lam(2) * cos_b), 0.0, 2.0 * (lam(2) - lam(0) * cos_b),
          2.0 * (lam(0) - lam(1) * cos_g), 2.0 * (lam(1) - lam(0) * cos_g), 0.0;
      const Vec3 step = J.fullPivLu().solve(r);
      if (!step.allFinite()) break;
      lam -= step;
    }
    if (!(lam.minCoeff() > 0.0)) continue;
    const std::array<Vec3, 3> Y{lam(0) * bearing[0], lam(1) * bearing[1],
                                lam(2) * bearing[2]};
    auto cand = detail::align_candidate(X, Y, {}, std::nullopt, std::nullopt);
    if (cand) result.candidates.push_back(*cand);
  }
  detail::sort_by_residual(result.candidates);
  return result;
}

}  // namespace depthpose::solvers
