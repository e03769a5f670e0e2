#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "depthpose/smallmath.hpp"
#include "depthpose/solvers.hpp"

namespace depthpose::solvers::detail {

/// Focal solvers work on pixels rescaled to unit RMS radius, so that
/// 1 / f^2 is of order one. The returned focal lengths are mapped back.
template <std::size_t N, typename Solve>
SolveResult solve_pixel_scaled(std::span<const Correspondence, N> sample,
                               Solve&& solve) {
  double sum = 0.0;
  for (const auto& c : sample) {
    sum += c.p.x * c.p.x + c.p.y * c.p.y + c.q.x * c.q.x + c.q.y * c.q.y;
  }
  const double rms = std::sqrt(sum / (2.0 * N));
  if (!(rms > 0.0) || !std::isfinite(rms)) return solve(sample);
  const double k = 1.0 / rms;
  std::array<Correspondence, N> scaled;
  for (std::size_t i = 0; i < N; ++i) {
    scaled[i] = sample[i];
    scaled[i].p = {k * sample[i].p.x, k * sample[i].p.y};
    scaled[i].q = {k * sample[i].q.x, k * sample[i].q.y};
  }
  SolveResult res = solve(std::span<const Correspondence, N>(scaled));
  for (auto& c : res.candidates) {
    if (c.f1) *c.f1 /= k;
    if (c.f2) *c.f2 /= k;
  }
  return res;
}

inline Vec3 hom(const ImagePoint& pt) { return {pt.x, pt.y, 1.0}; }

/// K^-1 * (x, y, 1) for K = diag(f, f, 1).
inline Vec3 hom_focal(const ImagePoint& pt, double f) {
  return {pt.x / f, pt.y / f, 1.0};
}

/// Aligns lifted camera-1 points X to camera-2 points Y and packages the
/// result. The residual is max_i |Y_i - R X_i - t|.
inline std::optional<PoseCandidate> align_candidate(
    std::span<const Vec3> X, std::span<const Vec3> Y,
    const DepthAffineParams& depth, std::optional<double> f1,
    std::optional<double> f2) {
  const auto rigid = smallmath::rigid_align(X, Y);
  if (!rigid) return std::nullopt;
  PoseCandidate cand;
  cand.pose.R = rigid->R;
  cand.pose.t = rigid->t;
  cand.depth = depth;
  cand.f1 = f1;
  cand.f2 = f2;
  double worst = 0.0;
  for (std::size_t i = 0; i < X.size(); ++i) {
    worst = std::max(worst, (Y[i] - rigid->R * X[i] - rigid->t).norm());
  }
  cand.residual = worst;
  return cand;
}

inline void sort_by_residual(std::vector<PoseCandidate>& cands) {
  std::stable_sort(cands.begin(), cands.end(),
                   [](const PoseCandidate& a, const PoseCandidate& b) {
                     return a.residual < b.residual;
                   });
}

/// Drops candidates whose residual is far above the best one. On exact data
/// the true root satisfies the equations to rounding while a spurious root
/// of an over-constrained system does not; on noisy data all residuals are
/// comparable and nothing is dropped. `scale` is the depth scale of the sample.
inline void drop_dominated(std::vector<PoseCandidate>& cands, double scale) {
  if (cands.size() < 2) return;
  const double keep = 1e4 * cands.front().residual + 1e-8 * scale;
  std::erase_if(cands, [&](const PoseCandidate& c) { return c.residual > keep; });
}

inline SolveResult degenerate() {
  SolveResult r;
  r.status = SolveStatus::kDegenerate;
  return r;
}

// Dense polynomial helpers, coefficients lowest degree first.
template <std::size_t N>
using Poly = std::array<double, N>;

template <std::size_t A, std::size_t B>
Poly<A + B - 1> poly_mul(const Poly<A>& a, const Poly<B>& b) {
  Poly<A + B - 1> out{};
  for (std::size_t i = 0; i < A; ++i)
    for (std::size_t j = 0; j < B; ++j) out[i + j] += a[i] * b[j];
  return out;
}

template <std::size_t A, std::size_t B>
Poly<(A > B ? A : B)> poly_add(const Poly<A>& a, const Poly<B>& b) {
  Poly<(A > B ? A : B)> out{};
  for (std::size_t i = 0; i < A; ++i) out[i] += a[i];
  for (std::size_t i = 0; i < B; ++i) out[i] += b[i];
  return out;
}

template <std::size_t A>
Poly<A> poly_scale(const Poly<A>& a, double k) {
  Poly<A> out{};
  for (std::size_t i = 0; i < A; ++i) out[i] = a[i] * k;
  return out;
}

template <std::size_t A>
double poly_eval(const Poly<A>& a, double x) {
  double r = 0.0;
  for (std::size_t i = A; i-- > 0;) r = r * x + a[i];
  return r;
}

}  // namespace depthpose::solvers::detail
