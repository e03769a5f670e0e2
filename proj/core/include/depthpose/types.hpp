// Domain model shared by the minimal solvers, the robust estimator and the
// synthetic benchmark harness.
//
// Conventions: camera 1 is at the origin, camera 2 maps camera-1 points as
// Y = R * X + t. Depth-aware solvers recover t as a full 3-vector expressed in
// units of camera-1 depth divided by its unknown depth scale.
#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace depthpose {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Raised for precondition violations and estimation failures that callers
/// are expected to report (missing depth, too few matches, ...).
class DomainError : public std::runtime_error {
 public:
  enum class Code {
    kInvalidArgument,
    kMissingDepth,
    kMissingIntrinsics,
    kInsufficientCorrespondences,
    kDegenerate,
    kInfeasible,
  };

  DomainError(Code code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  Code code() const noexcept { return code_; }

 private:
  Code code_;
};

const char* to_string(DomainError::Code code);

struct ImagePoint {
  double x = 0.0;
  double y = 0.0;

  bool is_finite() const { return std::isfinite(x) && std::isfinite(y); }
};

/// A 2D-2D match, optionally carrying the monocular depth estimate of the
/// point in each image (alpha in image 1, beta in image 2).
struct Correspondence {
  ImagePoint p;
  ImagePoint q;
  std::optional<double> alpha;
  std::optional<double> beta;

  bool is_valid() const;
};

/// Square-pixel pinhole intrinsics K = [f 0 cx; 0 f cy; 0 0 1].
class CameraIntrinsics {
 public:
  explicit CameraIntrinsics(double f, double cx = 0.0, double cy = 0.0);

  double f() const { return f_; }
  double cx() const { return cx_; }
  double cy() const { return cy_; }

  Mat3 K() const;
  Mat3 K_inv() const;

  /// Pixel -> point on the normalized plane z = 1.
  Vec3 normalize(const ImagePoint& pt) const;
  /// Ray (any positive z) -> pixel.
  ImagePoint project(const Vec3& ray) const;
  /// Subtracts the principal point; focal solvers consume centered pixels.
  ImagePoint center(const ImagePoint& pt) const {
    return {pt.x - cx_, pt.y - cy_};
  }

 private:
  double f_;
  double cx_;
  double cy_;
};

/// Orthonormality and det(R) = +1 within tol.
bool is_rotation(const Mat3& R, double tol = 1e-9);

struct Pose {
  Mat3 R = Mat3::Identity();
  Vec3 t = Vec3::Zero();
};

/// s = s2 / s1, u and v are the depth shifts of image 1 and image 2.
struct DepthAffineParams {
  double s = 1.0;
  double u = 0.0;
  double v = 0.0;
};

struct PoseCandidate {
  Pose pose;
  DepthAffineParams depth;
  std::optional<double> f1;
  std::optional<double> f2;
  double residual = 0.0;
};

/// Dense coefficient matrix of a polynomial system that is linear in the
/// listed monomials; row k is constraint k.
struct EliminationSystem {
  Eigen::MatrixXd coeffs;
  std::vector<std::string> monomials;

  /// coeffs * values, values ordered like `monomials`.
  Eigen::VectorXd evaluate(const Eigen::VectorXd& values) const;
};

Vec3 normalize_point(const CameraIntrinsics& K, const ImagePoint& pt);

/// scale * (depth_est + shift) * dir.
inline Vec3 lift_point(const Vec3& dir, double depth_est, double shift,
                       double scale) {
  return scale * (depth_est + shift) * dir;
}

/// s(beta + v) q_n - (alpha + u) R p_n - t. Zero for an exact model.
Vec3 affine_depth_residual(const Vec3& p_n, const Vec3& q_n, double alpha,
                           double beta, const Pose& pose,
                           const DepthAffineParams& depth);

}  // namespace depthpose
