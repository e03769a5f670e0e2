#include "depthpose/cli/commands.hpp"

#include <cstdlib>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "depthpose/cli/io.hpp"

namespace depthpose::cli {

using nlohmann::json;

namespace {

struct EstimateArgs {
  std::string pair, solver, out;
  double threshold = 2.0;
  int iters = 1000;
  std::uint64_t seed = 0;
  bool no_lo = false;
  bool no_refine_focal = false;
  bool timing = false;
};

struct SolveArgs {
  std::string pair, solver, sample, out;
};

struct SynthArgs {
  std::string config, out;
};

struct BenchArgs {
  std::string grid, out_csv, out_jsonl;
  int trials = 10;
  int threads = 1;
  bool timing = false;
};

SolverId solver_or_throw(const std::string& name) {
  const auto id = parse_solver_id(name);
  if (!id) throw IoError("unknown solver '" + name + "'");
  return *id;
}

void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
  } else {
    write_text(path, text);
  }
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

int cmd_estimate(const EstimateArgs& a, std::ostream& out) {
  const SolverId solver = solver_or_throw(a.solver);
  const PairFile pf = read_pair_file(a.pair);
  RansacConfig cfg;
  cfg.max_iterations = a.iters;
  cfg.threshold_px = a.threshold;
  cfg.seed = a.seed;
  cfg.lo_enabled = !a.no_lo;
  cfg.refine_focal = !a.no_refine_focal;
  cfg.measure_time = a.timing;
  const EstimateReport report =
      ransac_estimate(pf.matches, pf.K1, pf.K2, solver, cfg);
  emit(a.out, dump(report_to_json(report, cfg, a.timing)), out);
  return kExitOk;
}

std::vector<int> parse_indices(const std::string& text) {
  std::vector<int> idx;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) {
      throw IoError("--sample: '" + item + "' is not an integer");
    }
    idx.push_back(v);
  }
  return idx;
}

int cmd_solve(const SolveArgs& a, std::ostream& out) {
  const SolverId solver = solver_or_throw(a.solver);
  const PairFile pf = read_pair_file(a.pair);
  const std::vector<int> idx = parse_indices(a.sample);
  const int k = traits(solver).sample_size;
  if (static_cast<int>(idx.size()) != k) {
    throw DomainError(DomainError::Code::kInvalidArgument,
                      std::string(to_string(solver)) + " takes exactly " +
                          std::to_string(k) + " indices");
  }
  if (std::set<int>(idx.begin(), idx.end()).size() != idx.size()) {
    throw DomainError(DomainError::Code::kInvalidArgument,
                      "--sample indices must be distinct");
  }
  MinimalSample sample;
  sample.intrinsics1 = pf.K1;
  sample.intrinsics2 = pf.K2;
  for (int i : idx) {
    if (i < 0 || i >= static_cast<int>(pf.matches.size())) {
      throw DomainError(DomainError::Code::kInvalidArgument,
                        "--sample index " + std::to_string(i) + " out of range");
    }
    sample.correspondences.push_back(pf.matches[static_cast<std::size_t>(i)]);
  }
  const SolveResult res = solve_minimal(solver, sample);

  json j;
  j["format_version"] = kFormatVersion;
  j["solver"] = std::string(to_string(solver));
  j["sample"] = idx;
  j["status"] = res.degenerate() ? "degenerate" : "ok";
  json cands = json::array();
  for (const auto& c : res.candidates) cands.push_back(candidate_to_json(c, solver));
  j["candidates"] = cands;
  if (solver == SolverId::k7pt) {
    json fs = json::array();
    for (const auto& F : res.fundamentals) fs.push_back(matrix_to_json(F));
    j["fundamentals"] = fs;
  }
  emit(a.out, dump(j), out);
  return kExitOk;
}

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  const json cfg_json = parse_json(read_text(a.config), a.config);
  if (!cfg_json.is_object() || cfg_json.value("format_version", 0) != kFormatVersion) {
    throw IoError(a.config + ": expected \"format_version\": 1");
  }
  const SceneConfig cfg = scene_config_from_json(cfg_json);
  const ScenePair scene = generate_scene(cfg);
  emit(a.out, dump(to_json(pair_file_from_scene(scene, cfg))), out);
  return kExitOk;
}

int cmd_bench(const BenchArgs& a, std::ostream& out) {
  const std::vector<BenchCell> grid =
      bench_grid_from_json(parse_json(read_text(a.grid), a.grid));
  BenchOptions opt;
  opt.trials = a.trials;
  opt.threads = a.threads;
  if (const char* env = std::getenv("DEPTHPOSE_THREADS"); env && *env) {
    opt.threads = threads_from_env();
  }
  opt.measure_time = a.timing;
  const BenchmarkResult res = run_benchmark(grid, opt);
  const std::string csv = bench_csv(res.rows, grid);
  emit(a.out_csv, csv, out);
  if (!a.out_jsonl.empty()) write_text(a.out_jsonl, bench_jsonl(res.trials));
  return kExitOk;
}

void write_error(std::ostream& out, std::ostream& err, const std::string& code,
                 const std::string& message, const std::string& path) {
  err << "error: " << message << "\n";
  const json j{{"format_version", kFormatVersion},
               {"status", "error"},
               {"error", {{"code", code}, {"message", message}}}};
  try {
    emit(path, dump(j), out);
  } catch (const IoError&) {
    out << dump(j);
  }
}

}  // namespace

int threads_from_env() {
  const char* env = std::getenv("DEPTHPOSE_THREADS");
  if (!env) return 1;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (end == env || *end != '\0' || n < 1) return 1;
  return static_cast<int>(std::min<long>(n, 256));
}

int run(int argc, const char* const* argv, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Two-view relative pose with monocular depth priors"};
  app.require_subcommand(1);

  EstimateArgs est;
  auto* c_est = app.add_subcommand("estimate", "LO-RANSAC pose estimate");
  c_est->add_option("--pair", est.pair, "pair file (JSON)")->required();
  c_est->add_option("--solver", est.solver, "minimal solver")->required();
  c_est->add_option("--threshold", est.threshold, "inlier threshold, px");
  c_est->add_option("--iters", est.iters, "RANSAC iterations");
  c_est->add_option("--seed", est.seed, "sampling seed");
  c_est->add_option("--out", est.out, "report path (stdout if omitted)");
  c_est->add_flag("--no-lo", est.no_lo, "disable local optimization");
  c_est->add_flag("--no-refine-focal", est.no_refine_focal,
                  "keep focal lengths fixed during local optimization");
  c_est->add_flag("--timing", est.timing, "include wall-clock time");

  SolveArgs sol;
  auto* c_sol = app.add_subcommand("solve", "run one minimal solver");
  c_sol->add_option("--pair", sol.pair, "pair file (JSON)")->required();
  c_sol->add_option("--solver", sol.solver, "minimal solver")->required();
  c_sol->add_option("--sample", sol.sample, "indices, e.g. 0,4,7")->required();
  c_sol->add_option("--out", sol.out, "output path (stdout if omitted)");

  SynthArgs syn;
  auto* c_syn = app.add_subcommand("synth", "generate a synthetic pair file");
  c_syn->add_option("--config", syn.config, "scene config (JSON)")->required();
  c_syn->add_option("--out", syn.out, "pair file path (stdout if omitted)");

  BenchArgs ben;
  auto* c_ben = app.add_subcommand("bench", "Monte-Carlo benchmark");
  c_ben->add_option("--grid", ben.grid, "grid file (JSON)")->required();
  c_ben->add_option("--trials", ben.trials, "trials per cell");
  c_ben->add_option("--out-csv", ben.out_csv, "per-cell CSV (stdout if omitted)");
  c_ben->add_option("--out-jsonl", ben.out_jsonl, "per-trial JSONL");
  c_ben->add_option("--threads", ben.threads,
                    "worker threads (DEPTHPOSE_THREADS overrides)");
  c_ben->add_flag("--timing", ben.timing, "fill runtime columns");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitIo;
  }

  std::string out_path;
  if (c_est->parsed()) out_path = est.out;
  if (c_sol->parsed()) out_path = sol.out;
  try {
    if (c_est->parsed()) return cmd_estimate(est, out);
    if (c_sol->parsed()) return cmd_solve(sol, out);
    if (c_syn->parsed()) return cmd_synth(syn, out);
    if (c_ben->parsed()) return cmd_bench(ben, out);
  } catch (const DomainError& e) {
    write_error(out, err, to_string(e.code()), e.what(), out_path);
    return kExitDomain;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitIo;
}

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace depthpose::cli
