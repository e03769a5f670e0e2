#include "depthpose/cli/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace depthpose::cli {

using nlohmann::json;

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& what) {
  if (!j.is_object()) throw IoError(what + " must be a JSON object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& item : j.items()) {
    if (!ok.count(item.key())) {
      throw IoError("unknown key '" + item.key() + "' in " + what);
    }
  }
}

void check_version(const json& j, const std::string& what) {
  if (!j.is_object() || !j.contains("format_version") ||
      j.at("format_version") != kFormatVersion) {
    throw IoError(what + ": expected \"format_version\": 1");
  }
}

double finite_number(const json& j, const std::string& what) {
  if (!j.is_number()) throw IoError(what + " must be a number");
  const double x = j.get<double>();
  if (!std::isfinite(x)) throw IoError(what + " must be finite");
  return x;
}

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

json camera_to_json(const CameraIntrinsics& K) {
  return {{"f", K.f()}, {"cx", K.cx()}, {"cy", K.cy()}};
}

CameraIntrinsics camera_from_json(const json& j, const std::string& what) {
  check_keys(j, {"f", "cx", "cy"}, what);
  return CameraIntrinsics(finite_number(j.at("f"), what + ".f"),
                          j.contains("cx") ? finite_number(j["cx"], what + ".cx") : 0.0,
                          j.contains("cy") ? finite_number(j["cy"], what + ".cy") : 0.0);
}

json nullable(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

}  // namespace

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("failed reading '" + path + "'");
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("failed writing '" + path + "'");
}

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw IoError(what + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Pair files

PairFile pair_file_from_json(const json& j) {
  try {
    check_version(j, "pair file");
    check_keys(j, {"format_version", "cameras", "matches", "meta"}, "pair file");
    PairFile pf;
    if (j.contains("cameras")) {
      const json& cams = j["cameras"];
      check_keys(cams, {"K1", "K2"}, "cameras");
      if (cams.contains("K1")) pf.K1 = camera_from_json(cams["K1"], "K1");
      if (cams.contains("K2")) pf.K2 = camera_from_json(cams["K2"], "K2");
    }
    if (!j.contains("matches") || !j["matches"].is_array()) {
      throw IoError("pair file needs a \"matches\" array");
    }
    for (std::size_t i = 0; i < j["matches"].size(); ++i) {
      const json& m = j["matches"][i];
      const std::string what = "match " + std::to_string(i);
      check_keys(m, {"x1", "y1", "x2", "y2", "d1", "d2"}, what);
      Correspondence c;
      c.p = {finite_number(m.at("x1"), what + ".x1"),
             finite_number(m.at("y1"), what + ".y1")};
      c.q = {finite_number(m.at("x2"), what + ".x2"),
             finite_number(m.at("y2"), what + ".y2")};
      if (m.contains("d1") && !m["d1"].is_null()) {
        c.alpha = finite_number(m["d1"], what + ".d1");
      }
      if (m.contains("d2") && !m["d2"].is_null()) {
        c.beta = finite_number(m["d2"], what + ".d2");
      }
      pf.matches.push_back(c);
    }
    if (j.contains("meta")) pf.meta = j["meta"];
    return pf;
  } catch (const json::exception& e) {
    throw IoError(std::string("pair file: ") + e.what());
  }
}

json to_json(const PairFile& pf) {
  json j;
  j["format_version"] = kFormatVersion;
  json cams = json::object();
  if (pf.K1) cams["K1"] = camera_to_json(*pf.K1);
  if (pf.K2) cams["K2"] = camera_to_json(*pf.K2);
  j["cameras"] = cams;
  json matches = json::array();
  for (const auto& c : pf.matches) {
    json m{{"x1", c.p.x}, {"y1", c.p.y}, {"x2", c.q.x}, {"y2", c.q.y}};
    if (c.alpha) m["d1"] = *c.alpha;
    if (c.beta) m["d2"] = *c.beta;
    matches.push_back(std::move(m));
  }
  j["matches"] = std::move(matches);
  j["meta"] = pf.meta;
  return j;
}

PairFile read_pair_file(const std::string& path) {
  return pair_file_from_json(parse_json(read_text(path), path));
}

// ---------------------------------------------------------------------------
// Configs

SceneConfig scene_config_from_json(const json& j) {
  try {
    check_keys(j,
               {"format_version", "n_points", "depth_range",
                "rotation_magnitude_deg", "baseline", "f1", "f2", "image_size",
                "pixel_noise_sigma", "outlier_fraction", "depth_model", "seed"},
               "scene config");
    SceneConfig c;
    read_opt(j, "n_points", c.n_points);
    read_opt(j, "depth_range", c.depth_range);
    read_opt(j, "rotation_magnitude_deg", c.rotation_magnitude_deg);
    read_opt(j, "baseline", c.baseline);
    read_opt(j, "f1", c.f1);
    read_opt(j, "f2", c.f2);
    read_opt(j, "image_size", c.image_size);
    read_opt(j, "pixel_noise_sigma", c.pixel_noise_sigma);
    read_opt(j, "outlier_fraction", c.outlier_fraction);
    read_opt(j, "seed", c.seed);
    if (j.contains("depth_model")) {
      const json& d = j["depth_model"];
      check_keys(d, {"s1", "s2", "u", "v", "depth_noise_sigma", "kind"},
                 "depth_model");
      read_opt(d, "s1", c.depth_model.s1);
      read_opt(d, "s2", c.depth_model.s2);
      read_opt(d, "u", c.depth_model.u);
      read_opt(d, "v", c.depth_model.v);
      read_opt(d, "depth_noise_sigma", c.depth_model.depth_noise_sigma);
      if (d.contains("kind")) {
        const auto kind = parse_depth_kind(d["kind"].get<std::string>());
        if (!kind) throw IoError("unknown depth kind " + d["kind"].dump());
        c.depth_model.kind = *kind;
      }
    }
    return c;
  } catch (const json::exception& e) {
    throw IoError(std::string("scene config: ") + e.what());
  }
}

json to_json(const SceneConfig& c) {
  return {{"n_points", c.n_points},
          {"depth_range", c.depth_range},
          {"rotation_magnitude_deg", c.rotation_magnitude_deg},
          {"baseline", c.baseline},
          {"f1", c.f1},
          {"f2", c.f2},
          {"image_size", c.image_size},
          {"pixel_noise_sigma", c.pixel_noise_sigma},
          {"outlier_fraction", c.outlier_fraction},
          {"depth_model",
           {{"s1", c.depth_model.s1},
            {"s2", c.depth_model.s2},
            {"u", c.depth_model.u},
            {"v", c.depth_model.v},
            {"depth_noise_sigma", c.depth_model.depth_noise_sigma},
            {"kind", std::string(to_string(c.depth_model.kind))}}},
          {"seed", c.seed}};
}

RansacConfig ransac_config_from_json(const json& j) {
  try {
    check_keys(j,
               {"max_iterations", "threshold_px", "seed", "lo_enabled",
                "lo_max_refine_iters", "confidence", "early_exit",
                "refine_focal"},
               "ransac config");
    RansacConfig c;
    read_opt(j, "max_iterations", c.max_iterations);
    read_opt(j, "threshold_px", c.threshold_px);
    read_opt(j, "seed", c.seed);
    read_opt(j, "lo_enabled", c.lo_enabled);
    read_opt(j, "lo_max_refine_iters", c.lo_max_refine_iters);
    read_opt(j, "confidence", c.confidence);
    read_opt(j, "early_exit", c.early_exit);
    read_opt(j, "refine_focal", c.refine_focal);
    return c;
  } catch (const json::exception& e) {
    throw IoError(std::string("ransac config: ") + e.what());
  }
}

json to_json(const RansacConfig& c) {
  return {{"max_iterations", c.max_iterations},
          {"threshold_px", c.threshold_px},
          {"seed", c.seed},
          {"lo_enabled", c.lo_enabled},
          {"lo_max_refine_iters", c.lo_max_refine_iters},
          {"confidence", c.confidence},
          {"early_exit", c.early_exit},
          {"refine_focal", c.refine_focal}};
}

// ---------------------------------------------------------------------------
// Reports

json matrix_to_json(const Mat3& M) {
  json a = json::array();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) a.push_back(M(r, c));
  }
  return a;
}

Mat3 matrix_from_json(const json& j) {
  if (!j.is_array() || j.size() != 9) {
    throw IoError("expected a row-major 3x3 matrix (9 numbers)");
  }
  Mat3 M;
  for (int k = 0; k < 9; ++k) M(k / 3, k % 3) = finite_number(j[k], "matrix entry");
  return M;
}

json pose_to_json(const Pose& pose) {
  return {{"R", matrix_to_json(pose.R)},
          {"t", {pose.t.x(), pose.t.y(), pose.t.z()}}};
}

Pose pose_from_json(const json& j) {
  try {
    Pose p;
    p.R = matrix_from_json(j.at("R"));
    const json& t = j.at("t");
    if (!t.is_array() || t.size() != 3) throw IoError("t must have 3 entries");
    p.t = Vec3(finite_number(t[0], "t"), finite_number(t[1], "t"),
               finite_number(t[2], "t"));
    return p;
  } catch (const json::exception& e) {
    throw IoError(std::string("pose: ") + e.what());
  }
}

json candidate_to_json(const PoseCandidate& cand, SolverId solver) {
  json j{{"pose", pose_to_json(cand.pose)}};
  const SolverTraits& t = traits(solver);
  if (t.needs_alpha > 0 && solver != SolverId::kP3p) {
    j["s"] = cand.depth.s;
    j["u"] = cand.depth.u;
    j["v"] = cand.depth.v;
  }
  if (cand.f1) j["f1"] = *cand.f1;
  if (cand.f2) j["f2"] = *cand.f2;
  j["residual"] = cand.residual;
  return j;
}

PairFile pair_file_from_scene(const ScenePair& scene, const SceneConfig& cfg) {
  PairFile pf;
  pf.K1 = scene.K1;
  pf.K2 = scene.K2;
  pf.matches = scene.correspondences;
  json outliers = json::array();
  for (std::size_t i = 0; i < scene.outlier_mask.size(); ++i) {
    if (scene.outlier_mask[i]) outliers.push_back(i);
  }
  pf.meta = {{"gt",
              {{"pose", pose_to_json(scene.gt_pose)},
               {"s", scene.gt_params.s},
               {"u", scene.gt_params.u},
               {"v", scene.gt_params.v},
               {"f1", scene.K1.f()},
               {"f2", scene.K2.f()},
               {"outliers", outliers}}},
             {"config", to_json(cfg)}};
  return pf;
}

json report_to_json(const EstimateReport& r, const RansacConfig& cfg,
                    bool with_timing) {
  json j;
  j["format_version"] = kFormatVersion;
  j["status"] = "ok";
  j["solver"] = std::string(to_string(r.solver));
  const json cand = candidate_to_json(r.best, r.solver);
  for (const auto& item : cand.items()) {
    if (item.key() != "residual") j[item.key()] = item.value();
  }
  if (r.fundamental) j["fundamental"] = matrix_to_json(*r.fundamental);
  j["inliers"] = r.inlier_indices();
  j["num_inliers"] = r.num_inliers();
  j["num_matches"] = r.inlier_mask.size();
  j["score"] = r.score;
  j["iterations"] = r.iterations_run;
  j["solver_calls"] = r.solver_calls;
  j["ransac"] = to_json(cfg);
  if (with_timing) j["timing_us"] = r.elapsed_us;
  return j;
}

// ---------------------------------------------------------------------------
// Benchmarks

std::vector<BenchCell> bench_grid_from_json(const json& j) {
  try {
    check_version(j, "grid file");
    check_keys(j, {"format_version", "base", "cells"}, "grid file");
    json base_scene = json::object(), base_ransac = json::object();
    if (j.contains("base")) {
      check_keys(j["base"], {"scene", "ransac"}, "grid base");
      if (j["base"].contains("scene")) base_scene = j["base"]["scene"];
      if (j["base"].contains("ransac")) base_ransac = j["base"]["ransac"];
    }
    if (!j.contains("cells") || !j["cells"].is_array() || j["cells"].empty()) {
      throw IoError("grid file needs a non-empty \"cells\" array");
    }
    std::vector<BenchCell> grid;
    for (const json& c : j["cells"]) {
      check_keys(c, {"solver", "scene", "ransac"}, "grid cell");
      BenchCell cell;
      const auto name = c.at("solver").get<std::string>();
      const auto id = parse_solver_id(name);
      if (!id) throw IoError("unknown solver '" + name + "'");
      cell.solver = *id;
      json scene = base_scene, ransac = base_ransac;
      if (c.contains("scene")) scene.merge_patch(c["scene"]);
      if (c.contains("ransac")) ransac.merge_patch(c["ransac"]);
      cell.scene = scene_config_from_json(scene);
      cell.ransac = ransac_config_from_json(ransac);
      grid.push_back(cell);
    }
    return grid;
  } catch (const json::exception& e) {
    throw IoError(std::string("grid file: ") + e.what());
  }
}

std::string bench_csv(const std::vector<BenchRow>& rows,
                      const std::vector<BenchCell>& grid) {
  std::ostringstream out;
  out << "format_version,cell,solver,noise_px,outlier_fraction,scene_seed,"
         "trials,failures,median_pose_error_deg,maa_pose,maa_focal,"
         "median_runtime_us\n";
  for (const auto& r : rows) {
    out << kFormatVersion << ',' << r.cell << ',' << to_string(r.solver) << ','
        << format_double(r.noise_px) << ',' << format_double(r.outlier_fraction)
        << ',' << grid[static_cast<std::size_t>(r.cell)].scene.seed << ','
        << r.trials << ',' << r.failures << ','
        << format_double(r.median_pose_error_deg) << ','
        << format_double(r.maa_pose) << ','
        << (r.maa_focal ? format_double(*r.maa_focal) : std::string()) << ','
        << format_double(r.median_runtime_us) << '\n';
  }
  return out.str();
}

std::string bench_jsonl(const std::vector<TrialRecord>& trials) {
  std::string out;
  for (const auto& t : trials) {
    json j{{"format_version", kFormatVersion},
           {"cell", t.cell},
           {"trial", t.trial},
           {"solver", std::string(to_string(t.solver))},
           {"scene_seed", t.scene_seed},
           {"ransac_seed", t.ransac_seed},
           {"success", t.success},
           {"pose_error_deg", t.pose_error_deg},
           {"num_inliers", t.num_inliers},
           {"runtime_us", t.runtime_us}};
    if (!t.error.empty()) j["error"] = t.error;
    // Infinite focal error (failed trial) is written as null.
    if (t.focal_error) j["focal_error"] = nullable(*t.focal_error);
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<TrialRecord> read_trial_records(const std::string& jsonl) {
  std::vector<TrialRecord> out;
  std::istringstream in(jsonl);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const json j = parse_json(line, "trial record line " + std::to_string(line_no));
    try {
      check_version(j, "trial record");
      TrialRecord t;
      t.cell = j.at("cell").get<int>();
      t.trial = j.at("trial").get<int>();
      const auto id = parse_solver_id(j.at("solver").get<std::string>());
      if (!id) throw IoError("unknown solver in trial record");
      t.solver = *id;
      t.scene_seed = j.at("scene_seed").get<std::uint64_t>();
      t.ransac_seed = j.at("ransac_seed").get<std::uint64_t>();
      t.success = j.at("success").get<bool>();
      t.pose_error_deg = j.at("pose_error_deg").get<double>();
      t.num_inliers = j.at("num_inliers").get<int>();
      t.runtime_us = j.at("runtime_us").get<double>();
      if (j.contains("error")) t.error = j["error"].get<std::string>();
      if (j.contains("focal_error")) {
        t.focal_error = j["focal_error"].is_null()
                            ? std::numeric_limits<double>::infinity()
                            : j["focal_error"].get<double>();
      }
      out.push_back(std::move(t));
    } catch (const json::exception& e) {
      throw IoError("trial record line " + std::to_string(line_no) + ": " +
                    e.what());
    }
  }
  return out;
}

}  // namespace depthpose::cli
