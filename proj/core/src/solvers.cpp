#include "depthpose/solvers.hpp"

#include <array>
#include <string>

namespace depthpose {

namespace {

constexpr std::array<SolverTraits, 7> kTraits{{
    {SolverId::k3ptSuv, "3pt_suv", 3, 4, FocalModel::kKnown, 3, 3},
    {SolverId::kP3p, "p3p", 3, 4, FocalModel::kKnown, 3, 0},
    {SolverId::k3ptS00F, "3pt_s00_f", 3, 4, FocalModel::kShared, 3, 2},
    {SolverId::k3ptS00F12, "3pt_s00_f12", 3, 1, FocalModel::kSeparate, 3, 3},
    {SolverId::k4ptSuvF, "4pt_suv_f", 4, 2, FocalModel::kShared, 4, 4},
    {SolverId::k4ptSuvF12, "4pt_suv_f12", 4, 2, FocalModel::kSeparate, 4, 4},
    {SolverId::k7pt, "7pt", 7, 3, FocalModel::kUncalibrated, 0, 0},
}};

constexpr std::array<SolverId, 7> kAll{
    SolverId::k3ptSuv,  SolverId::kP3p,      SolverId::k3ptS00F,
    SolverId::k3ptS00F12, SolverId::k4ptSuvF, SolverId::k4ptSuvF12,
    SolverId::k7pt};

}  // namespace

const SolverTraits& traits(SolverId id) {
  return kTraits[static_cast<std::size_t>(id)];
}

std::string_view to_string(SolverId id) { return traits(id).name; }

std::optional<SolverId> parse_solver_id(std::string_view name) {
  for (const auto& t : kTraits) {
    if (t.name == name) return t.id;
  }
  return std::nullopt;
}

std::span<const SolverId> all_solvers() { return kAll; }

namespace solvers {

SolveResult solve(SolverId id, std::span<const Correspondence> sample) {
  if (static_cast<int>(sample.size()) != traits(id).sample_size) {
    throw DomainError(DomainError::Code::kInvalidArgument,
                      std::string(to_string(id)) + " expects " +
                          std::to_string(traits(id).sample_size) +
                          " correspondences");
  }
  switch (id) {
    case SolverId::k3ptSuv:
      return solve_3pt_suv(sample.first<3>());
    case SolverId::kP3p:
      return solve_p3p(sample.first<3>());
    case SolverId::k3ptS00F:
      return solve_3pt_s00_f(sample.first<3>());
    case SolverId::k3ptS00F12:
      return solve_3pt_s00_f12(sample.first<3>());
    case SolverId::k4ptSuvF:
      return solve_4pt_suv_f_eigen(sample.first<4>());
    case SolverId::k4ptSuvF12:
      return solve_4pt_suv_f12_eigen(sample.first<4>());
    case SolverId::k7pt:
      return solve_7pt(sample.first<7>());
  }
  return {};
}

}  // namespace solvers

void check_solver_inputs(SolverId id, std::span<const Correspondence> corrs,
                         const std::optional<CameraIntrinsics>& K1,
                         const std::optional<CameraIntrinsics>& K2) {
  const SolverTraits& t = traits(id);
  if (t.focal == FocalModel::kKnown && (!K1 || !K2)) {
    throw DomainError(DomainError::Code::kMissingIntrinsics,
                      std::string(t.name) + " needs both camera intrinsics");
  }
  for (std::size_t i = 0; i < corrs.size(); ++i) {
    if (!corrs[i].is_valid()) {
      throw DomainError(DomainError::Code::kInvalidArgument,
                        "correspondence " + std::to_string(i) +
                            " has non-finite values");
    }
  }
  if (t.needs_alpha > 0) {
    for (std::size_t i = 0; i < corrs.size(); ++i) {
      if (!corrs[i].alpha) {
        throw DomainError(DomainError::Code::kMissingDepth,
                          std::string(t.name) + " needs depth d1 on match " +
                              std::to_string(i));
      }
    }
  }
  if (t.needs_beta > 0) {
    for (std::size_t i = 0; i < corrs.size(); ++i) {
      if (!corrs[i].beta) {
        throw DomainError(DomainError::Code::kMissingDepth,
                          std::string(t.name) + " needs depth d2 on match " +
                              std::to_string(i));
      }
    }
  }
}

Correspondence prepare_correspondence(
    SolverId id, const Correspondence& c,
    const std::optional<CameraIntrinsics>& K1,
    const std::optional<CameraIntrinsics>& K2) {
  Correspondence out = c;
  switch (traits(id).focal) {
    case FocalModel::kKnown: {
      const Vec3 p = K1->normalize(c.p);
      const Vec3 q = K2->normalize(c.q);
      out.p = {p.x(), p.y()};
      out.q = {q.x(), q.y()};
      break;
    }
    case FocalModel::kShared:
    case FocalModel::kSeparate:
      if (K1) out.p = K1->center(c.p);
      if (K2) out.q = K2->center(c.q);
      break;
    case FocalModel::kUncalibrated:
      break;
  }
  return out;
}

SolveResult solve_minimal(SolverId id, const MinimalSample& sample) {
  const SolverTraits& t = traits(id);
  const auto& corrs = sample.correspondences;
  if (static_cast<int>(corrs.size()) != t.sample_size) {
    throw DomainError(DomainError::Code::kInvalidArgument,
                      std::string(t.name) + " expects exactly " +
                          std::to_string(t.sample_size) + " correspondences");
  }
  // Only the leading points need the per-solver depth fields.
  for (int i = 0; i < t.sample_size; ++i) {
    const auto& c = corrs[static_cast<std::size_t>(i)];
    if (!c.is_valid()) {
      throw DomainError(DomainError::Code::kInvalidArgument,
                        "non-finite correspondence");
    }
    if (i < t.needs_alpha && !c.alpha) {
      throw DomainError(DomainError::Code::kMissingDepth,
                        std::string(t.name) + " needs depth d1");
    }
    if (i < t.needs_beta && !c.beta) {
      throw DomainError(DomainError::Code::kMissingDepth,
                        std::string(t.name) + " needs depth d2");
    }
  }
  if (t.focal == FocalModel::kKnown &&
      (!sample.intrinsics1 || !sample.intrinsics2)) {
    throw DomainError(DomainError::Code::kMissingIntrinsics,
                      std::string(t.name) + " needs both camera intrinsics");
  }
  std::vector<Correspondence> prepared;
  prepared.reserve(corrs.size());
  for (const auto& c : corrs) {
    prepared.push_back(prepare_correspondence(id, c, sample.intrinsics1,
                                              sample.intrinsics2));
  }
  return solvers::solve(id, prepared);
}

}  // namespace depthpose
