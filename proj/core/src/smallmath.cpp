#include "depthpose/smallmath.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>
#include <Eigen/SVD>

namespace depthpose::smallmath {

namespace {

constexpr double kLeadingTol = 1e-12;
// Slightly negative discriminants are treated as double roots.
constexpr double kDiscriminantTol = 1e-10;

void polish(RealRoots& roots, std::span<const double> coeffs) {
  RealRoots out;
  const int n = static_cast<int>(coeffs.size());
  for (double x : roots) {
    for (int it = 0; it < 2; ++it) {
      double p = coeffs[0];
      double dp = 0.0;
      for (int i = 1; i < n; ++i) {
        dp = dp * x + p;
        p = p * x + coeffs[i];
      }
      if (dp == 0.0 || !std::isfinite(dp)) break;
      const double step = p / dp;
      if (!std::isfinite(step)) break;
      x -= step;
    }
    out.push(x);
  }
  out.sort();
  roots = out;
}

double max_abs(std::initializer_list<double> values) {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  return m;
}

// Roots of x^2 + b x + c.
void monic_quadratic(double b, double c, RealRoots& out) {
  double disc = b * b - 4.0 * c;
  if (disc < 0.0) {
    if (disc < -kDiscriminantTol * (b * b + 4.0 * std::abs(c))) return;
    disc = 0.0;
  }
  const double sq = std::sqrt(disc);
  // Avoids cancellation in the smaller root.
  const double q = -0.5 * (b + (b >= 0.0 ? sq : -sq));
  if (q == 0.0) {
    out.push(0.0);
    out.push(0.0);
    return;
  }
  out.push(q);
  out.push(c / q);
}

// Roots of x^3 + a x^2 + b x + c.
void monic_cubic(double a, double b, double c, RealRoots& out) {
  const double Q = (a * a - 3.0 * b) / 9.0;
  const double R = (2.0 * a * a * a - 9.0 * a * b + 27.0 * c) / 54.0;
  const double Q3 = Q * Q * Q;
  if (R * R < Q3) {
    const double theta = std::acos(std::clamp(R / std::sqrt(Q3), -1.0, 1.0));
    const double m = -2.0 * std::sqrt(Q);
    out.push(m * std::cos(theta / 3.0) - a / 3.0);
    out.push(m * std::cos((theta + 2.0 * M_PI) / 3.0) - a / 3.0);
    out.push(m * std::cos((theta - 2.0 * M_PI) / 3.0) - a / 3.0);
    return;
  }
  double A = -std::copysign(std::cbrt(std::abs(R) + std::sqrt(R * R - Q3)), R);
  const double B = (A == 0.0) ? 0.0 : Q / A;
  out.push(A + B - a / 3.0);
}

}  // namespace

void RealRoots::sort() { std::sort(values_.begin(), values_.begin() + count_); }

int gauss_jordan_inplace(Eigen::Ref<Eigen::MatrixXd> m, double pivot_tol,
                         std::span<int> pivots) {
  const Eigen::Index rows = m.rows();
  const Eigen::Index cols = m.cols();
  const double threshold = pivot_tol * m.cwiseAbs().maxCoeff();
  Eigen::Index r = 0;
  for (Eigen::Index col = 0; col < cols && r < rows; ++col) {
    Eigen::Index best = r;
    double best_abs = std::abs(m(r, col));
    for (Eigen::Index i = r + 1; i < rows; ++i) {
      const double a = std::abs(m(i, col));
      if (a > best_abs) {
        best_abs = a;
        best = i;
      }
    }
    if (!(best_abs > threshold)) continue;
    if (best != r) m.row(best).swap(m.row(r));
    m.row(r) /= m(r, col);
    m(r, col) = 1.0;
    for (Eigen::Index i = 0; i < rows; ++i) {
      if (i == r) continue;
      const double factor = m(i, col);
      if (factor != 0.0) {
        m.row(i) -= factor * m.row(r);
        m(i, col) = 0.0;
      }
    }
    pivots[static_cast<std::size_t>(r)] = static_cast<int>(col);
    ++r;
  }
  return static_cast<int>(r);
}

GaussJordanResult gauss_jordan(const Eigen::MatrixXd& m, double pivot_tol) {
  GaussJordanResult result;
  result.reduced = m;
  std::vector<int> pivots(static_cast<std::size_t>(m.rows()), -1);
  if (m.size() == 0) return result;
  result.rank = gauss_jordan_inplace(result.reduced, pivot_tol, pivots);
  pivots.resize(static_cast<std::size_t>(result.rank));
  result.pivot_columns = std::move(pivots);
  return result;
}

double eval_poly(std::span<const double> coeffs, double x) {
  double p = 0.0;
  for (double c : coeffs) p = p * x + c;
  return p;
}

RealRoots solve_quadratic(double a2, double a1, double a0) {
  RealRoots roots;
  const double scale = max_abs({a2, a1, a0});
  if (scale == 0.0) return roots;
  const double tol = kLeadingTol * scale;
  if (std::abs(a2) <= tol) {
    if (std::abs(a1) <= tol) return roots;
    roots.push(-a0 / a1);
    return roots;
  }
  monic_quadratic(a1 / a2, a0 / a2, roots);
  const std::array<double, 3> c{a2, a1, a0};
  polish(roots, c);
  return roots;
}

RealRoots solve_cubic(double a3, double a2, double a1, double a0) {
  const double scale = max_abs({a3, a2, a1, a0});
  if (scale == 0.0) return {};
  if (std::abs(a3) <= kLeadingTol * scale) return solve_quadratic(a2, a1, a0);
  RealRoots roots;
  const double a = a2 / a3, b = a1 / a3, c = a0 / a3;
  monic_cubic(a, b, c, roots);
  const std::array<double, 4> coeffs{a3, a2, a1, a0};
  polish(roots, coeffs);
  // Same cancellation issue as the quartic: split off a dominant root.
  if (roots.size() > 0) {
    double r_max = 0.0;
    for (double x : roots) {
      if (std::abs(x) > std::abs(r_max)) r_max = x;
    }
    const double rest = std::sqrt(std::abs(c) / std::abs(r_max));
    if (std::abs(r_max) > 1e3 * rest) {
      RealRoots merged;
      merged.push(r_max);
      const double c0 = -c / r_max;
      const double c1 = (c0 - b) / r_max;
      RealRoots small;
      monic_quadratic(c1, c0, small);
      polish(small, coeffs);
      for (double x : small) merged.push(x);
      roots = merged;
    }
  }
  roots.sort();
  return roots;
}

RealRoots solve_quartic(double a4, double a3, double a2, double a1,
                        double a0) {
  const double scale = max_abs({a4, a3, a2, a1, a0});
  if (scale == 0.0 || !std::isfinite(scale)) {
    throw DomainError(DomainError::Code::kInvalidArgument,
                      "quartic is identically zero");
  }
  if (std::abs(a4) <= kLeadingTol * scale) return solve_cubic(a3, a2, a1, a0);

  const double b = a3 / a4;
  const double c = a2 / a4;
  const double d = a1 / a4;
  const double e = a0 / a4;

  // x = y - b/4 gives y^4 + p y^2 + q y + r.
  const double b2 = b * b;
  const double p = c - 3.0 * b2 / 8.0;
  const double q = d - b * c / 2.0 + b2 * b / 8.0;
  const double r = e - b * d / 4.0 + b2 * c / 16.0 - 3.0 * b2 * b2 / 256.0;

  RealRoots ys;
  // Resolvent cubic m^3 + p m^2 + (p^2/4 - r) m - q^2/8; its largest root is
  // positive whenever q != 0.
  RealRoots ms;
  monic_cubic(p, p * p / 4.0 - r, -q * q / 8.0, ms);
  double m = -std::numeric_limits<double>::infinity();
  for (double mi : ms) m = std::max(m, mi);

  const double q_scale =
      std::pow(std::abs(p), 1.5) + std::pow(std::abs(r), 0.75);
  if (!(m > 0.0) || std::abs(q) <= 1e-14 * q_scale) {
    // Biquadratic: z^2 + p z + r with z = y^2.
    RealRoots zs;
    monic_quadratic(p, r, zs);
    for (double z : zs) {
      if (z > 0.0) {
        const double sz = std::sqrt(z);
        ys.push(sz);
        ys.push(-sz);
      } else if (z > -1e-12 * (std::abs(p) + 1.0)) {
        ys.push(0.0);
      }
    }
  } else {
    const double sq2m = std::sqrt(2.0 * m);
    const double k = q / (2.0 * sq2m);
    monic_quadratic(sq2m, p / 2.0 + m - k, ys);
    monic_quadratic(-sq2m, p / 2.0 + m + k, ys);
  }

  RealRoots roots;
  for (double y : ys) roots.push(y - b / 4.0);
  const std::array<double, 5> coeffs{a4, a3, a2, a1, a0};
  polish(roots, coeffs);

  // The shift by b/4 cancels the small roots when one root dominates the
  // others by orders of magnitude. Divide out the dominant root, which the
  // closed form does get right, and solve the cubic that remains.
  if (roots.size() > 0) {
    double r_max = 0.0;
    for (double x : roots) {
      if (std::abs(x) > std::abs(r_max)) r_max = x;
    }
    const double rest = std::cbrt(std::abs(e) / std::abs(r_max));
    if (std::abs(r_max) > 1e3 * rest) {
      // Synthetic division from the constant term: stable for the largest
      // root.
      const double c0 = -e / r_max;
      const double c1 = (c0 - d) / r_max;
      const double c2 = (c1 - c) / r_max;
      RealRoots small;
      monic_cubic(c2, c1, c0, small);
      polish(small, coeffs);
      RealRoots merged;
      merged.push(r_max);
      for (double x : small) merged.push(x);
      roots = merged;
    }
  }
  roots.sort();
  return roots;
}

RealEigenResult eig_real_small(const Eigen::MatrixXd& A) {
  RealEigenResult result;
  const Eigen::Index k = A.rows();
  if (k != A.cols() || k == 0 || k > 8) {
    throw DomainError(DomainError::Code::kInvalidArgument,
                      "eig_real_small expects a square matrix of size <= 8");
  }
  if (k == 1) {
    result.pairs.push_back({A(0, 0), Eigen::VectorXd::Ones(1)});
    return result;
  }
  if (k == 2) {
    const double a = A(0, 0), b = A(0, 1), c = A(1, 0), d = A(1, 1);
    const double half_tr = 0.5 * (a + d);
    const double det = a * d - b * c;
    double disc = half_tr * half_tr - det;
    if (disc < 0.0) {
      // |imag| = sqrt(-disc); spectral radius = sqrt(det) for a complex pair.
      const double imag = std::sqrt(-disc);
      const double radius = std::sqrt(std::abs(det));
      if (imag >= 1e-8 * radius) return result;
      disc = 0.0;
    }
    const double sq = std::sqrt(disc);
    for (double lambda : {half_tr + sq, half_tr - sq}) {
      Eigen::VectorXd v(2);
      const Eigen::Vector2d r0(-b, a - lambda);
      const Eigen::Vector2d r1(d - lambda, -c);
      if (r0.squaredNorm() >= r1.squaredNorm()) {
        v << r0.x(), r0.y();
      } else {
        v << r1.x(), r1.y();
      }
      const double n = v.norm();
      if (n == 0.0) {
        v << 1.0, 0.0;
      } else {
        v /= n;
      }
      result.pairs.push_back({lambda, v});
    }
    return result;
  }

  Eigen::EigenSolver<Eigen::MatrixXd> es(A, true);
  if (es.info() != Eigen::Success) {
    result.converged = false;
    return result;
  }
  const auto& values = es.eigenvalues();
  const double radius = values.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < k; ++i) {
    if (std::abs(values[i].imag()) >= 1e-8 * std::max(radius, 1e-300)) continue;
    Eigen::VectorXd v = es.eigenvectors().col(i).real();
    const double n = v.norm();
    if (n > 0.0) v /= n;
    result.pairs.push_back({values[i].real(), v});
  }
  return result;
}

std::optional<RigidAlignment> rigid_align(std::span<const Vec3> X,
                                          std::span<const Vec3> Y) {
  const std::size_t n = X.size();
  if (n < 3 || Y.size() != n) return std::nullopt;

  Vec3 cx = Vec3::Zero();
  Vec3 cy = Vec3::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    cx += X[i];
    cy += Y[i];
  }
  cx /= static_cast<double>(n);
  cy /= static_cast<double>(n);

  Mat3 scatter = Mat3::Zero();
  Mat3 H = Mat3::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 dx = X[i] - cx;
    scatter += dx * dx.transpose();
    H += dx * (Y[i] - cy).transpose();
  }

  // Singular values of the centered X are the square roots of the scatter
  // eigenvalues (ascending). Rounding leaves eigenvalues near eps * ev[2] for
  // collinear input, so the ratio test is on the eigenvalues: singular value
  // ratio 1e-6.
  Eigen::SelfAdjointEigenSolver<Mat3> sx(scatter, Eigen::EigenvaluesOnly);
  const Vec3 ev = sx.eigenvalues().cwiseMax(0.0);
  if (!(ev[2] > 0.0) || ev[1] <= 1e-12 * ev[2]) return std::nullopt;

  Eigen::JacobiSVD<Mat3> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Mat3 U = svd.matrixU();
  const Mat3 V = svd.matrixV();
  Mat3 D = Mat3::Identity();
  if ((V * U.transpose()).determinant() < 0.0) D(2, 2) = -1.0;

  RigidAlignment out;
  out.R = V * D * U.transpose();
  out.t = cy - out.R * cx;
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sum += (Y[i] - out.R * X[i] - out.t).squaredNorm();
  }
  out.rms = std::sqrt(sum / static_cast<double>(n));
  return out;
}

Mat3 skew(const Vec3& v) {
  Mat3 S;
  S << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return S;
}

Mat3 rotation_from_vector(const Vec3& w) {
  const double angle = w.norm();
  if (angle < 1e-300) return Mat3::Identity();
  return Eigen::AngleAxisd(angle, w / angle).toRotationMatrix();
}

}  // namespace depthpose::smallmath
