// Calibrated relative pose with affine-invariant depths in both images.
//
// Subtracting point pairs removes t, taking norms removes R. With c = s^2
// each pair (i, j) gives
//   c |a + v d|^2 = |e + u g|^2,
//   a = b_i q_i - b_j q_j, d = q_i - q_j, e = a_i p_i - a_j p_j, g = p_i - p_j,
// which is linear in [c v^2, c v, c, u^2, u, 1]. Gauss-Jordan on the 3 x 6
// system expresses c v^2, c v, c as quadratics g1, g2, g3 in u, and
// (c v)^2 = c * (c v^2) gives the quartic g2^2 - g1 g3 = 0.
#include <array>
#include <cmath>

#include "solver_common.hpp"

namespace depthpose::solvers {

namespace {

using detail::hom;
using Matrix36 = Eigen::Matrix<double, 3, 6>;

constexpr std::array<std::array<int, 2>, 3> kPairs{{{0, 1}, {0, 2}, {1, 2}}};

Matrix36 coefficient_matrix(std::span<const Correspondence, 3> sample) {
  std::array<Vec3, 3> p, q;
  for (int i = 0; i < 3; ++i) {
    p[i] = hom(sample[i].p);
    q[i] = hom(sample[i].q);
  }
  Matrix36 M;
  for (int r = 0; r < 3; ++r) {
    const int i = kPairs[r][0];
    const int j = kPairs[r][1];
    const double ai = *sample[i].alpha, aj = *sample[j].alpha;
    const double bi = *sample[i].beta, bj = *sample[j].beta;
    const Vec3 a = bi * q[i] - bj * q[j];
    const Vec3 d = q[i] - q[j];
    const Vec3 e = ai * p[i] - aj * p[j];
    const Vec3 g = p[i] - p[j];
    M.row(r) << d.dot(d), 2.0 * a.dot(d), a.dot(a), -g.dot(g),
        -2.0 * e.dot(g), -e.dot(e);
  }
  return M;
}

}  // namespace

EliminationSystem build_3pt_suv_system(
    std::span<const Correspondence, 3> sample) {
  return {coefficient_matrix(sample), {"cv^2", "cv", "c", "u^2", "u", "1"}};
}

SolveResult solve_3pt_suv(std::span<const Correspondence, 3> sample) {
  Matrix36 M = coefficient_matrix(sample);
  std::array<int, 3> pivots{};
  const int rank =
      smallmath::gauss_jordan_inplace(M, smallmath::kDefaultPivotTol, pivots);
  if (rank < 3 || pivots != std::array<int, 3>{0, 1, 2}) {
    return detail::degenerate();
  }

  // Row k reads  monomial_k + M(k,3) u^2 + M(k,4) u + M(k,5) = 0.
  const smallmath::QuadraticPoly g1{-M(0, 3), -M(0, 4), -M(0, 5)};
  const smallmath::QuadraticPoly g2{-M(1, 3), -M(1, 4), -M(1, 5)};
  const smallmath::QuadraticPoly g3{-M(2, 3), -M(2, 4), -M(2, 5)};

  const std::array<double, 5> quartic{
      g2.c2 * g2.c2 - g1.c2 * g3.c2,
      2.0 * g2.c2 * g2.c1 - (g1.c2 * g3.c1 + g1.c1 * g3.c2),
      g2.c1 * g2.c1 + 2.0 * g2.c2 * g2.c0 -
          (g1.c2 * g3.c0 + g1.c1 * g3.c1 + g1.c0 * g3.c2),
      2.0 * g2.c1 * g2.c0 - (g1.c1 * g3.c0 + g1.c0 * g3.c1),
      g2.c0 * g2.c0 - g1.c0 * g3.c0,
  };

  double g_scale = 0.0;
  for (const auto& g : {g1, g2, g3}) {
    g_scale = std::max({g_scale, std::abs(g.c2), std::abs(g.c1),
                        std::abs(g.c0)});
  }
  double q_scale = 0.0;
  for (double a : quartic) q_scale = std::max(q_scale, std::abs(a));

  smallmath::RealRoots roots;
  if (q_scale <= 1e-12 * g_scale * g_scale) {
    // The quartic vanishes identically: the shifts form a one-parameter
    // family (e.g. identical views, where any u = v fits). Report the
    // zero-shift member.
    roots.push(0.0);
  } else {
    roots = smallmath::solve_quartic(quartic[0], quartic[1], quartic[2],
                                     quartic[3], quartic[4]);
  }

  std::array<Vec3, 3> p, q;
  for (int i = 0; i < 3; ++i) {
    p[i] = hom(sample[i].p);
    q[i] = hom(sample[i].q);
  }

  SolveResult result;
  for (double u : roots) {
    const double c = g3(u);
    if (!(c > 0.0)) continue;
    const double v = g2(u) / c;
    const double s = std::sqrt(c);

    std::array<Vec3, 3> X, Y;
    bool in_front = true;
    for (int i = 0; i < 3; ++i) {
      const double di = *sample[i].alpha + u;
      const double dj = *sample[i].beta + v;
      if (!(di > 0.0) || !(dj > 0.0)) {
        in_front = false;
        break;
      }
      X[i] = lift_point(p[i], *sample[i].alpha, u, 1.0);
      Y[i] = lift_point(q[i], *sample[i].beta, v, s);
    }
    if (!in_front) continue;

    auto cand = detail::align_candidate(X, Y, {s, u, v}, std::nullopt,
                                        std::nullopt);
    if (cand) result.candidates.push_back(*cand);
  }
  detail::sort_by_residual(result.candidates);
  return result;
}

}  // namespace depthpose::solvers
