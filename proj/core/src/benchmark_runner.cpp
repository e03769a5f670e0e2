#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "depthpose/synthbench.hpp"

namespace depthpose {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

bool estimates_focal(SolverId id) {
  const FocalModel m = traits(id).focal;
  return m == FocalModel::kShared || m == FocalModel::kSeparate;
}

TrialRecord run_trial(const BenchCell& cell, int cell_index, int trial,
                      bool measure_time) {
  TrialRecord rec;
  rec.cell = cell_index;
  rec.trial = trial;
  rec.solver = cell.solver;
  rec.scene_seed = scene_seed_for(cell.scene.seed, trial);
  rec.ransac_seed = ransac_seed_for(cell.ransac.seed, cell_index, trial);
  if (estimates_focal(cell.solver)) {
    rec.focal_error = std::numeric_limits<double>::infinity();
  }

  SceneConfig scene_cfg = cell.scene;
  scene_cfg.seed = rec.scene_seed;
  RansacConfig ransac_cfg = cell.ransac;
  ransac_cfg.seed = rec.ransac_seed;
  ransac_cfg.measure_time = measure_time;

  try {
    const ScenePair pair = generate_scene(scene_cfg);
    const EstimateReport report = ransac_estimate(
        pair.correspondences, pair.K1, pair.K2, cell.solver, ransac_cfg);
    rec.success = true;
    rec.pose_error_deg = pose_error(report.best.pose, pair.gt_pose);
    rec.num_inliers = report.num_inliers();
    rec.runtime_us = measure_time ? report.elapsed_us : 0.0;
    if (estimates_focal(cell.solver) && report.best.f1) {
      const double f1 = *report.best.f1;
      const double f2 = report.best.f2.value_or(f1);
      rec.focal_error =
          focal_error_geometric(focal_error(f1, pair.K1.f()),
                                focal_error(f2, pair.K2.f()));
    }
  } catch (const DomainError& e) {
    rec.success = false;
    rec.error = e.what();
    rec.pose_error_deg = 180.0;
  }
  return rec;
}

}  // namespace

std::uint64_t scene_seed_for(std::uint64_t scene_seed, int trial) {
  return splitmix64(scene_seed ^ splitmix64(static_cast<std::uint64_t>(trial)));
}

std::uint64_t ransac_seed_for(std::uint64_t ransac_seed, int cell, int trial) {
  std::uint64_t h = splitmix64(ransac_seed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(cell));
  return splitmix64(h ^ (static_cast<std::uint64_t>(trial) << 1));
}

BenchRow aggregate_cell(const BenchCell& cell, int cell_index,
                        std::span<const TrialRecord> trials) {
  BenchRow row;
  row.cell = cell_index;
  row.solver = cell.solver;
  row.noise_px = cell.scene.pixel_noise_sigma;
  row.outlier_fraction = cell.scene.outlier_fraction;
  row.trials = static_cast<int>(trials.size());

  std::vector<double> pose_errs, focal_errs, runtimes;
  for (const auto& t : trials) {
    if (!t.success) ++row.failures;
    pose_errs.push_back(t.pose_error_deg);
    runtimes.push_back(t.runtime_us);
    if (t.focal_error) focal_errs.push_back(*t.focal_error * 100.0);
  }
  if (!trials.empty()) {
    row.median_pose_error_deg = median(pose_errs);
    row.maa_pose = mean_average_accuracy(pose_errs, 10.0);
    row.median_runtime_us = median(runtimes);
  }
  // Focal mAA over percentage errors, 10% cap.
  if (estimates_focal(cell.solver) && !focal_errs.empty()) {
    row.maa_focal = mean_average_accuracy(focal_errs, 10.0);
  }
  return row;
}

BenchmarkResult run_benchmark(std::span<const BenchCell> grid,
                              const BenchOptions& options) {
  if (options.trials < 1) {
    throw DomainError(DomainError::Code::kInvalidArgument,
                      "trials must be >= 1");
  }
  for (const auto& cell : grid) {
    cell.scene.validate();
    cell.ransac.validate();
  }
  const std::size_t trials = static_cast<std::size_t>(options.trials);
  const std::size_t total = grid.size() * trials;

  BenchmarkResult out;
  out.trials.resize(total);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t job = next++; job < total; job = next++) {
      const std::size_t c = job / trials;
      const int k = static_cast<int>(job % trials);
      out.trials[job] =
          run_trial(grid[c], static_cast<int>(c), k, options.measure_time);
    }
  };
  const int n_threads = std::max(1, options.threads);
  if (n_threads == 1 || total <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  for (std::size_t c = 0; c < grid.size(); ++c) {
    out.rows.push_back(aggregate_cell(
        grid[c], static_cast<int>(c),
        std::span<const TrialRecord>(out.trials).subspan(c * trials, trials)));
  }
  return out;
}

}  // namespace depthpose
