#include <cmath>
#include <limits>

#include <Eigen/LU>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "depthpose/robust.hpp"
#include "depthpose/smallmath.hpp"

namespace depthpose {

Mat3 essential_from_pose(const Pose& pose, double scene_scale) {
  if (!(pose.t.norm() >= 1e-12 * scene_scale)) {
    throw DomainError(DomainError::Code::kDegenerate,
                      "pure rotation has no essential matrix");
  }
  Mat3 E = smallmath::skew(pose.t) * pose.R;
  return E / E.norm();
}

Mat3 fundamental_from(const CameraIntrinsics& K1, const CameraIntrinsics& K2,
                      const Pose& pose) {
  Mat3 F = K2.K_inv().transpose() * essential_from_pose(pose) * K1.K_inv();
  return F / F.norm();
}

double sampson_error(const Mat3& F, const ImagePoint& p, const ImagePoint& q) {
  const Vec3 x1(p.x, p.y, 1.0);
  const Vec3 x2(q.x, q.y, 1.0);
  const Vec3 Fx1 = F * x1;
  const Vec3 Ftx2 = F.transpose() * x2;
  const double num = x2.dot(Fx1);
  const double den = Fx1(0) * Fx1(0) + Fx1(1) * Fx1(1) + Ftx2(0) * Ftx2(0) +
                     Ftx2(1) * Ftx2(1);
  // Relative to |F|^2 so that the value does not depend on the scale of F.
  if (!(den > 1e-20 * F.squaredNorm())) {
    return std::numeric_limits<double>::infinity();
  }
  return num * num / den;
}

MsacResult score_msac(const Mat3& F, std::span<const Correspondence> corrs,
                      double threshold) {
  MsacResult r;
  const double t2 = threshold * threshold;
  r.inlier_mask.assign(corrs.size(), false);
  for (std::size_t i = 0; i < corrs.size(); ++i) {
    const double e = sampson_error(F, corrs[i].p, corrs[i].q);
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

std::vector<Pose> decompose_essential(const Mat3& E) {
  Eigen::JacobiSVD<Mat3> svd(E, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 U = svd.matrixU();
  Mat3 V = svd.matrixV();
  if (U.determinant() < 0.0) U.col(2) *= -1.0;
  if (V.determinant() < 0.0) V.col(2) *= -1.0;
  Mat3 W;
  W << 0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0;
  const Mat3 Ra = U * W * V.transpose();
  const Mat3 Rb = U * W.transpose() * V.transpose();
  const Vec3 t = U.col(2);
  return {{Ra, t}, {Ra, -t}, {Rb, t}, {Rb, -t}};
}

std::optional<Pose> pose_from_essential(const Mat3& E,
                                        std::span<const Correspondence> corrs,
                                        const std::vector<bool>* mask) {
  int best_count = -1;
  std::optional<Pose> best;
  for (const Pose& pose : decompose_essential(E)) {
    int count = 0;
    for (std::size_t i = 0; i < corrs.size(); ++i) {
      if (mask && !(*mask)[i]) continue;
      const Vec3 x1(corrs[i].p.x, corrs[i].p.y, 1.0);
      const Vec3 x2(corrs[i].q.x, corrs[i].q.y, 1.0);
      // lambda2 x2 = lambda1 R x1 + t in the least-squares sense.
      Eigen::Matrix<double, 3, 2> A;
      A.col(0) = pose.R * x1;
      A.col(1) = -x2;
      const Eigen::Vector2d depths = A.colPivHouseholderQr().solve(-pose.t);
      if (depths(0) > 0.0 && depths(1) > 0.0) ++count;
    }
    if (count > best_count) {
      best_count = count;
      best = pose;
    }
  }
  return best;
}

}  // namespace depthpose
