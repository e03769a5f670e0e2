#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "depthpose/smallmath.hpp"
#include "depthpose/synthbench.hpp"

namespace depthpose {

namespace {

Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Vec3 v;
  do {
    v = Vec3(n(rng), n(rng), n(rng));
  } while (v.norm() < 1e-8);
  return v.normalized();
}

bool inside(const ImagePoint& pt, const std::array<int, 2>& size) {
  return pt.x >= 0.0 && pt.y >= 0.0 && pt.x <= size[0] && pt.y <= size[1];
}

}  // namespace

std::string_view to_string(DepthKind kind) {
  switch (kind) {
    case DepthKind::kMetric:
      return "metric";
    case DepthKind::kScaleInvariant:
      return "scale_invariant";
    case DepthKind::kAffineInvariant:
      return "affine_invariant";
  }
  return "unknown";
}

std::optional<DepthKind> parse_depth_kind(std::string_view name) {
  for (auto k : {DepthKind::kMetric, DepthKind::kScaleInvariant,
                 DepthKind::kAffineInvariant}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

void DepthCorruption::validate() const {
  auto fail = [](const std::string& msg) {
    throw DomainError(DomainError::Code::kInvalidArgument, msg);
  };
  if (!(s1 > 0.0) || !(s2 > 0.0)) fail("depth scales must be positive");
  if (!std::isfinite(u) || !std::isfinite(v)) fail("depth shifts must be finite");
  if (!(depth_noise_sigma >= 0.0)) fail("depth_noise_sigma must be >= 0");
  if (kind == DepthKind::kMetric && (s1 != 1.0 || s2 != 1.0 || u != 0.0 || v != 0.0)) {
    fail("metric depth requires s1 = s2 = 1 and u = v = 0");
  }
  if (kind == DepthKind::kScaleInvariant && (u != 0.0 || v != 0.0)) {
    fail("scale-invariant depth requires u = v = 0");
  }
}

void SceneConfig::validate() const {
  auto fail = [](const std::string& msg) {
    throw DomainError(DomainError::Code::kInvalidArgument, msg);
  };
  if (n_points < 1) fail("n_points must be >= 1");
  if (!(depth_range[0] > 0.0) || !(depth_range[1] >= depth_range[0])) {
    fail("depth_range must satisfy 0 < min <= max");
  }
  if (!(outlier_fraction >= 0.0 && outlier_fraction < 1.0)) {
    fail("outlier_fraction must lie in [0, 1)");
  }
  if (!(f1 > 0.0) || !(f2 > 0.0)) fail("focal lengths must be positive");
  if (image_size[0] < 1 || image_size[1] < 1) fail("image_size must be positive");
  if (!(pixel_noise_sigma >= 0.0)) fail("pixel_noise_sigma must be >= 0");
  if (!(baseline >= 0.0)) fail("baseline must be >= 0");
  if (!std::isfinite(rotation_magnitude_deg)) fail("rotation must be finite");
  depth_model.validate();
}

ScenePair generate_scene(const SceneConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  ScenePair out;
  out.seed = config.seed;
  out.K1 = CameraIntrinsics(config.f1, 0.5 * config.image_size[0],
                            0.5 * config.image_size[1]);
  out.K2 = CameraIntrinsics(config.f2, 0.5 * config.image_size[0],
                            0.5 * config.image_size[1]);

  const double angle = config.rotation_magnitude_deg * std::numbers::pi / 180.0;
  const Mat3 R = smallmath::rotation_from_vector(angle * random_unit(rng));
  const Vec3 T = config.baseline * random_unit(rng);

  const auto& dm = config.depth_model;
  out.gt_pose.R = R;
  out.gt_pose.t = T / dm.s1;
  out.gt_params = {dm.s2 / dm.s1, dm.u, dm.v};

  const auto n = static_cast<std::size_t>(config.n_points);
  std::vector<Vec3> X;
  X.reserve(n);
  const long max_attempts = 1000L * config.n_points + 10000L;
  long attempts = 0;
  const double dmin = config.depth_range[0];
  const double dmax = config.depth_range[1];
  while (X.size() < n) {
    if (++attempts > max_attempts) {
      throw DomainError(DomainError::Code::kInfeasible,
                        "camera frusta do not overlap at the configured depths");
    }
    const ImagePoint px{unit(rng) * config.image_size[0],
                        unit(rng) * config.image_size[1]};
    const double eta = dmin + (dmax - dmin) * unit(rng);
    const Vec3 P = eta * out.K1.normalize(px);
    const Vec3 Q = R * P + T;
    if (!(Q.z() > 1e-6 * dmin)) continue;
    if (!inside(out.K2.project(Q), config.image_size)) continue;
    X.push_back(P);
  }

  std::normal_distribution<double> pixel_noise(
      0.0, config.pixel_noise_sigma > 0.0 ? config.pixel_noise_sigma : 1.0);
  std::normal_distribution<double> depth_noise(
      0.0, dm.depth_noise_sigma > 0.0 ? dm.depth_noise_sigma : 1.0);

  out.correspondences.resize(n);
  out.gt_depths.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 Q = R * X[i] + T;
    Correspondence& c = out.correspondences[i];
    c.p = out.K1.project(X[i]);
    c.q = out.K2.project(Q);
    if (config.pixel_noise_sigma > 0.0) {
      c.p.x += pixel_noise(rng);
      c.p.y += pixel_noise(rng);
      c.q.x += pixel_noise(rng);
      c.q.y += pixel_noise(rng);
    }
    const double eta = X[i].z();
    const double lambda = Q.z();
    out.gt_depths[i] = {eta, lambda};
    double alpha = eta / dm.s1 - dm.u;
    double beta = lambda / dm.s2 - dm.v;
    if (dm.depth_noise_sigma > 0.0) {
      alpha *= 1.0 + depth_noise(rng);
      beta *= 1.0 + depth_noise(rng);
    }
    c.alpha = alpha;
    c.beta = beta;
  }

  // Exactly round(fraction * n) outliers at random positions.
  out.outlier_mask.assign(n, false);
  const auto n_out = static_cast<std::size_t>(
      std::llround(config.outlier_fraction * static_cast<double>(n)));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = 0; i < n_out; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(order[i], order[pick(rng)]);
    const std::size_t k = order[i];
    out.outlier_mask[k] = true;
    out.correspondences[k].q = {unit(rng) * config.image_size[0],
                                unit(rng) * config.image_size[1]};
  }
  return out;
}

}  // namespace depthpose
