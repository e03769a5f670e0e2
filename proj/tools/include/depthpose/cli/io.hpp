// JSON / CSV formats of the command-line tool. Every format carries a
// top-level "format_version": 1.
#pragma once

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "depthpose/robust.hpp"
#include "depthpose/synthbench.hpp"

namespace depthpose::cli {

inline constexpr int kFormatVersion = 1;

/// Unreadable file, malformed JSON or a schema violation (exit code 1).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PairFile {
  std::optional<CameraIntrinsics> K1;
  std::optional<CameraIntrinsics> K2;
  std::vector<Correspondence> matches;
  nlohmann::json meta = nlohmann::json::object();
};

std::string read_text(const std::string& path);
/// Writes atomically enough for tests: truncates and checks the stream.
void write_text(const std::string& path, const std::string& text);
nlohmann::json parse_json(const std::string& text, const std::string& what);

PairFile pair_file_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PairFile& pf);
PairFile read_pair_file(const std::string& path);

SceneConfig scene_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SceneConfig& cfg);
RansacConfig ransac_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RansacConfig& cfg);

/// Pair file for a synthetic scene, ground truth under meta.gt.
PairFile pair_file_from_scene(const ScenePair& scene, const SceneConfig& cfg);

nlohmann::json pose_to_json(const Pose& pose);
Pose pose_from_json(const nlohmann::json& j);
nlohmann::json candidate_to_json(const PoseCandidate& cand, SolverId solver);
nlohmann::json matrix_to_json(const Mat3& M);
Mat3 matrix_from_json(const nlohmann::json& j);

nlohmann::json report_to_json(const EstimateReport& report,
                              const RansacConfig& cfg, bool with_timing);

/// Grid file: {"format_version": 1, "base": {"scene": {...}, "ransac":
/// {...}}, "cells": [{"solver": "...", "scene": {...}, "ransac": {...}}]}.
/// Per-cell objects are merged over "base".
std::vector<BenchCell> bench_grid_from_json(const nlohmann::json& j);

std::string bench_csv(const std::vector<BenchRow>& rows,
                      const std::vector<BenchCell>& grid);
std::string bench_jsonl(const std::vector<TrialRecord>& trials);
std::vector<TrialRecord> read_trial_records(const std::string& jsonl);

/// Shortest decimal string that round-trips to the same double.
std::string format_double(double x);

}  // namespace depthpose::cli
