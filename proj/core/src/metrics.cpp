#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include <Eigen/Geometry>

#include "depthpose/synthbench.hpp"

namespace depthpose {

namespace {

double rad2deg(double r) { return r * 180.0 / std::numbers::pi; }

}  // namespace

double rotation_error_deg(const Mat3& R_est, const Mat3& R_gt) {
  // atan2 of the sine and cosine parts; same angle as arccos((tr - 1) / 2)
  // but without its loss of precision near 0 and 180 degrees.
  const Mat3 D = R_est.transpose() * R_gt;
  const Vec3 w(D(2, 1) - D(1, 2), D(0, 2) - D(2, 0), D(1, 0) - D(0, 1));
  return rad2deg(std::atan2(0.5 * w.norm(), 0.5 * (D.trace() - 1.0)));
}

double translation_error_deg(const Vec3& t_est, const Vec3& t_gt) {
  const double ne = t_est.norm();
  const double ng = t_gt.norm();
  if (!(ne > 0.0) || !(ng > 0.0)) {
    throw DomainError(DomainError::Code::kInvalidArgument,
                      "translation error needs nonzero vectors");
  }
  return rad2deg(std::atan2(t_est.cross(t_gt).norm(), t_est.dot(t_gt)));
}

double pose_error(const Pose& est, const Pose& gt, double t_tol) {
  const double er = rotation_error_deg(est.R, gt.R);
  double et;
  if (gt.t.norm() == 0.0) {
    et = est.t.norm() < t_tol ? 0.0 : 180.0;
  } else if (est.t.norm() == 0.0) {
    et = 180.0;
  } else {
    et = translation_error_deg(est.t, gt.t);
  }
  return std::max(er, et);
}

double focal_error(double f_est, double f_gt) {
  return std::abs(f_est - f_gt) / f_gt;
}

double focal_error_geometric(double err1, double err2) {
  return std::sqrt(err1 * err2);
}

double mean_average_accuracy(std::span<const double> errors,
                             double max_threshold, int n_bins) {
  if (n_bins < 1 || !(max_threshold > 0.0)) {
    throw DomainError(DomainError::Code::kInvalidArgument,
                      "mAA needs n_bins >= 1 and a positive threshold");
  }
  if (errors.empty()) return 0.0;
  std::vector<double> sorted(errors.begin(), errors.end());
  std::sort(sorted.begin(), sorted.end());
  double acc = 0.0;
  for (int k = 1; k <= n_bins; ++k) {
    const double tau = k * max_threshold / n_bins;
    const auto below = std::lower_bound(sorted.begin(), sorted.end(), tau) -
                       sorted.begin();
    acc += static_cast<double>(below) / static_cast<double>(sorted.size());
  }
  return acc / n_bins;
}

double median(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<long>(mid),
                   values.end());
  const double hi = values[mid];
  if (values.size() % 2 == 1) return hi;
  const double lo = *std::max_element(values.begin(),
                                      values.begin() + static_cast<long>(mid));
  return 0.5 * (lo + hi);
}

}  // namespace depthpose
