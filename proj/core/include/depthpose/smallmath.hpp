// Fixed-size numerical kernels used by the minimal solvers.
#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "depthpose/types.hpp"

namespace depthpose::smallmath {

/// c2 * x^2 + c1 * x + c0.
struct QuadraticPoly {
  double c2 = 0.0;
  double c1 = 0.0;
  double c0 = 0.0;

  double operator()(double x) const { return (c2 * x + c1) * x + c0; }
};

/// Up to four real roots stored inline, ascending.
class RealRoots {
 public:
  void push(double r) {
    if (count_ < 4) values_[count_++] = r;
  }
  int size() const { return count_; }
  bool empty() const { return count_ == 0; }
  double operator[](int i) const { return values_[i]; }
  const double* begin() const { return values_.data(); }
  const double* end() const { return values_.data() + count_; }
  void sort();

 private:
  std::array<double, 4> values_{};
  int count_ = 0;
};

// ---------------------------------------------------------------------------
// Gauss-Jordan elimination

constexpr double kDefaultPivotTol = 1e-12;

/// Reduced row echelon form with partial pivoting. A pivot is accepted when
/// its magnitude exceeds pivot_tol * max|entry| of the input. Pivot column
/// indices are written to `pivots` (must hold rows() entries); returns rank.
int gauss_jordan_inplace(Eigen::Ref<Eigen::MatrixXd> m, double pivot_tol,
                         std::span<int> pivots);

struct GaussJordanResult {
  Eigen::MatrixXd reduced;
  int rank = 0;
  std::vector<int> pivot_columns;

  bool full_rank() const { return rank == reduced.rows(); }
};

GaussJordanResult gauss_jordan(const Eigen::MatrixXd& m,
                               double pivot_tol = kDefaultPivotTol);

// ---------------------------------------------------------------------------
// Real roots of low-degree polynomials. Coefficients are highest degree
// first. Leading coefficients below 1e-12 * max|a_i| are treated as zero and
// the problem falls back to the next lower degree. Every root is polished
// with two Newton steps on the input polynomial.

RealRoots solve_quadratic(double a2, double a1, double a0);
RealRoots solve_cubic(double a3, double a2, double a1, double a0);

/// Throws DomainError(kInvalidArgument) for the zero polynomial.
RealRoots solve_quartic(double a4, double a3, double a2, double a1, double a0);

/// Evaluates sum coeffs[i] * x^(n-1-i).
double eval_poly(std::span<const double> coeffs_high_first, double x);

// ---------------------------------------------------------------------------
// Small dense eigenproblems

struct RealEigenpair {
  double value = 0.0;
  Eigen::VectorXd vector;
};

struct RealEigenResult {
  std::vector<RealEigenpair> pairs;
  bool converged = true;
};

/// Real eigenpairs of a k x k matrix (k <= 8). Eigenvalues whose imaginary
/// part is below 1e-8 * spectral radius are reported as real. k = 2 uses
/// the characteristic quadratic, larger k a Hessenberg-QR iteration.
RealEigenResult eig_real_small(const Eigen::MatrixXd& A);

// ---------------------------------------------------------------------------
// Rigid alignment

struct RigidAlignment {
  Mat3 R = Mat3::Identity();
  Vec3 t = Vec3::Zero();
  double rms = 0.0;
};

/// Least-squares R, t with Y_i ~ R X_i + t (Kabsch with reflection fix).
/// Returns nullopt when X is collinear or |X| != |Y| or n < 3.
std::optional<RigidAlignment> rigid_align(std::span<const Vec3> X,
                                          std::span<const Vec3> Y);

Mat3 skew(const Vec3& v);

/// exp map of a rotation vector.
Mat3 rotation_from_vector(const Vec3& w);

}  // namespace depthpose::smallmath
