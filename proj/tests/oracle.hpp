// Test-only forward model. Written without the library's geometry helpers so
// recovered models can be checked against an independent construction.
#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "depthpose/types.hpp"

namespace oracle {

using depthpose::Correspondence;
using depthpose::Mat3;
using depthpose::Vec3;

inline Mat3 axis_angle(const Vec3& axis, double angle) {
  return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

// Chordal form: |A - B|_F = 2 sqrt(2) sin(theta / 2). Accurate near zero,
// where arccos of the trace is not.
inline double rot_angle_deg(const Mat3& A, const Mat3& B) {
  const double h = std::min(1.0, (A - B).norm() / (2.0 * std::sqrt(2.0)));
  return 2.0 * std::asin(h) * 180.0 / std::numbers::pi;
}

inline double dir_angle_deg(const Vec3& a, const Vec3& b) {
  const Vec3 an = a.normalized(), bn = b.normalized();
  return 2.0 * std::asin(std::min(1.0, 0.5 * (an - bn).norm())) * 180.0 /
         std::numbers::pi;
}

struct Truth {
  Mat3 R;
  Vec3 t;       // T / s1
  double s = 1;  // s2 / s1
  double u = 0;
  double v = 0;
  double f1 = 1;
  double f2 = 1;
};

struct Instance {
  Truth truth;
  std::vector<Correspondence> corrs;  // pixel or normalized coordinates
  std::vector<Vec3> X;                // camera-1 points (true depth)
};

struct Params {
  double s1 = 1.0;
  double s2 = 1.0;
  double u = 0.0;
  double v = 0.0;
  double f1 = 1.0;  // 1 -> normalized coordinates
  double f2 = 1.0;
  double rotation_deg = 20.0;
  double baseline = 1.0;
  double zmin = 2.0;
  double zmax = 8.0;
};

/// Points with positive depth in both cameras and a bounded field of view.
/// Coordinates are f * (x/z, y/z) (principal point at the origin).
inline Instance make(std::mt19937_64& rng, int n, const Params& prm) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  std::uniform_real_distribution<double> Z(prm.zmin, prm.zmax);
  Instance inst;
  const Vec3 axis = Vec3(U(rng), U(rng), U(rng)).normalized();
  const Mat3 R = axis_angle(axis, prm.rotation_deg * std::numbers::pi / 180.0);
  const Vec3 T = prm.baseline * Vec3(U(rng), U(rng), 0.3 * U(rng)).normalized();
  inst.truth = {R, T / prm.s1, prm.s2 / prm.s1, prm.u, prm.v, prm.f1, prm.f2};
  while (static_cast<int>(inst.X.size()) < n) {
    const double z = Z(rng);
    const Vec3 P(0.5 * z * U(rng), 0.5 * z * U(rng), z);
    const Vec3 Q = R * P + T;
    if (Q.z() < 0.5 * prm.zmin) continue;
    if (std::abs(Q.x() / Q.z()) > 0.8 || std::abs(Q.y() / Q.z()) > 0.8) continue;
    inst.X.push_back(P);
    Correspondence c;
    c.p = {prm.f1 * P.x() / P.z(), prm.f1 * P.y() / P.z()};
    c.q = {prm.f2 * Q.x() / Q.z(), prm.f2 * Q.y() / Q.z()};
    c.alpha = P.z() / prm.s1 - prm.u;
    c.beta = Q.z() / prm.s2 - prm.v;
    inst.corrs.push_back(c);
  }
  return inst;
}

}  // namespace oracle
