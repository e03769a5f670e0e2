// Seven-point fundamental matrix: two-dimensional nullspace of the epipolar
// constraints plus the cubic det(F) = 0.
#include <array>
#include <cmath>

#include <Eigen/LU>
#include <Eigen/SVD>

#include "solver_common.hpp"

namespace depthpose::solvers {

namespace {

// Similarity moving the centroid to the origin and the mean distance to
// sqrt(2).
Mat3 normalizing_transform(std::span<const ImagePoint> pts) {
  Vec2 mean = Vec2::Zero();
  for (const auto& p : pts) mean += Vec2(p.x, p.y);
  mean /= static_cast<double>(pts.size());
  double dist = 0.0;
  for (const auto& p : pts) dist += (Vec2(p.x, p.y) - mean).norm();
  dist /= static_cast<double>(pts.size());
  const double k = dist > 0.0 ? std::sqrt(2.0) / dist : 1.0;
  Mat3 T;
  T << k, 0.0, -k * mean.x(), 0.0, k, -k * mean.y(), 0.0, 0.0, 1.0;
  return T;
}

Mat3 to_matrix(const Eigen::Matrix<double, 9, 1>& f) {
  Mat3 F;
  F << f(0), f(1), f(2), f(3), f(4), f(5), f(6), f(7), f(8);
  return F;
}

}  // namespace

SolveResult solve_7pt(std::span<const Correspondence, 7> sample) {
  std::array<ImagePoint, 7> p, q;
  for (int i = 0; i < 7; ++i) {
    p[i] = sample[i].p;
    q[i] = sample[i].q;
  }
  const Mat3 T1 = normalizing_transform(p);
  const Mat3 T2 = normalizing_transform(q);

  Eigen::Matrix<double, 7, 9> A;
  for (int i = 0; i < 7; ++i) {
    const Vec3 x1 = T1 * Vec3(p[i].x, p[i].y, 1.0);
    const Vec3 x2 = T2 * Vec3(q[i].x, q[i].y, 1.0);
    A.row(i) << x2(0) * x1(0), x2(0) * x1(1), x2(0), x2(1) * x1(0),
        x2(1) * x1(1), x2(1), x1(0), x1(1), 1.0;
  }

  // Pad to 9 x 9 so the full V is available from a square SVD.
  Eigen::Matrix<double, 9, 9> A9 = Eigen::Matrix<double, 9, 9>::Zero();
  A9.topRows<7>() = A;
  Eigen::JacobiSVD<Eigen::Matrix<double, 9, 9>> svd(A9, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (!(sv(6) > 1e-10 * sv(0))) return detail::degenerate();

  const Mat3 F1 = to_matrix(svd.matrixV().col(7));
  const Mat3 F2 = to_matrix(svd.matrixV().col(8));

  // det(F2 + x (F1 - F2)) = c3 x^3 + c2 x^2 + c1 x + c0, recovered from
  // samples at x = 0, 1, -1, 2.
  const Mat3 dF = F1 - F2;
  auto det_at = [&](double x) { return (F2 + x * dF).determinant(); };
  const double d0 = det_at(0.0), d1 = det_at(1.0), dm1 = det_at(-1.0),
               d2 = det_at(2.0);
  const double c0 = d0;
  const double c2 = 0.5 * (d1 + dm1) - c0;
  const double odd = 0.5 * (d1 - dm1);       // c3 + c1
  const double t = d2 - 4.0 * c2 - c0;       // 8 c3 + 2 c1
  const double c3 = (t - 2.0 * odd) / 6.0;
  const double c1 = odd - c3;

  SolveResult result;
  for (double x : smallmath::solve_cubic(c3, c2, c1, c0)) {
    Mat3 F = T2.transpose() * (F2 + x * dF) * T1;
    const double n = F.norm();
    if (!(n > 0.0)) continue;
    F /= n;
    // Fix the sign for deterministic output.
    Eigen::Index r, c;
    F.cwiseAbs().maxCoeff(&r, &c);
    if (F(r, c) < 0.0) F = -F;
    result.fundamentals.push_back(F);
  }
  return result;
}

}  // namespace depthpose::solvers
