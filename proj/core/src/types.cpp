#include "depthpose/types.hpp"

#include <Eigen/LU>

namespace depthpose {

const char* to_string(DomainError::Code code) {
  switch (code) {
    case DomainError::Code::kInvalidArgument:
      return "invalid_argument";
    case DomainError::Code::kMissingDepth:
      return "missing_depth";
    case DomainError::Code::kMissingIntrinsics:
      return "missing_intrinsics";
    case DomainError::Code::kInsufficientCorrespondences:
      return "insufficient_correspondences";
    case DomainError::Code::kDegenerate:
      return "degenerate";
    case DomainError::Code::kInfeasible:
      return "infeasible";
  }
  return "unknown";
}

bool Correspondence::is_valid() const {
  if (!p.is_finite() || !q.is_finite()) return false;
  if (alpha && !std::isfinite(*alpha)) return false;
  if (beta && !std::isfinite(*beta)) return false;
  return true;
}

CameraIntrinsics::CameraIntrinsics(double f, double cx, double cy)
    : f_(f), cx_(cx), cy_(cy) {
  if (!(f > 0.0) || !std::isfinite(f) || !std::isfinite(cx) ||
      !std::isfinite(cy)) {
    throw DomainError(DomainError::Code::kInvalidArgument,
                      "focal length must be positive and finite");
  }
}

Mat3 CameraIntrinsics::K() const {
  Mat3 K;
  K << f_, 0.0, cx_, 0.0, f_, cy_, 0.0, 0.0, 1.0;
  return K;
}

Mat3 CameraIntrinsics::K_inv() const {
  Mat3 Ki;
  Ki << 1.0 / f_, 0.0, -cx_ / f_, 0.0, 1.0 / f_, -cy_ / f_, 0.0, 0.0, 1.0;
  return Ki;
}

Vec3 CameraIntrinsics::normalize(const ImagePoint& pt) const {
  return {(pt.x - cx_) / f_, (pt.y - cy_) / f_, 1.0};
}

ImagePoint CameraIntrinsics::project(const Vec3& ray) const {
  return {f_ * ray.x() / ray.z() + cx_, f_ * ray.y() / ray.z() + cy_};
}

bool is_rotation(const Mat3& R, double tol) {
  if (!R.allFinite()) return false;
  if ((R.transpose() * R - Mat3::Identity()).cwiseAbs().maxCoeff() > tol)
    return false;
  return std::abs(R.determinant() - 1.0) <= tol;
}

Eigen::VectorXd EliminationSystem::evaluate(
    const Eigen::VectorXd& values) const {
  if (values.size() != coeffs.cols()) {
    throw DomainError(DomainError::Code::kInvalidArgument,
                      "monomial vector size mismatch");
  }
  return coeffs * values;
}

Vec3 normalize_point(const CameraIntrinsics& K, const ImagePoint& pt) {
  return K.normalize(pt);
}

Vec3 affine_depth_residual(const Vec3& p_n, const Vec3& q_n, double alpha,
                           double beta, const Pose& pose,
                           const DepthAffineParams& depth) {
  return lift_point(q_n, beta, depth.v, depth.s) -
         pose.R * lift_point(p_n, alpha, depth.u, 1.0) - pose.t;
}

}  // namespace depthpose
