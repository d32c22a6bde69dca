#pragma once

#include <string>
#include <vector>

#include "kinefit/camera.hpp"
#include "kinefit/energy.hpp"
#include "kinefit/sim_eval.hpp"
#include "kinefit/smoothing.hpp"
#include "kinefit/solver.hpp"
#include "kinefit/tracking.hpp"

namespace kinefit {

// Prediction streams are JSON Lines, one frame per line:
//   {"t": seconds, "u": [[px,py] x21], "omega": [x21], "x": [[x,y,z] x21]}
// Joint order: wrist, then per finger thumb..pinky: MCP, PIP, DIP, tip.
// On load, x is re-normalized to the middle-MCP-origin / unit-wrist-distance
// convention when it deviates from it.
std::vector<TimedPrediction> read_prediction_stream(const std::string& path);
void write_prediction_stream(const std::string& path,
                             const std::vector<TimedPrediction>& stream);

struct GroundTruthFrame {
  double timestamp = 0.0;
  HandPose pose;
  JointMatrix joints = JointMatrix::Zero();
  JointMatrix2d joints_2d = JointMatrix2d::Zero();
};

std::vector<GroundTruthFrame> read_ground_truth_stream(const std::string& path);
void write_ground_truth_stream(const std::string& path,
                               const std::vector<GroundTruthFrame>& stream);

std::vector<TrackedFrame> read_trajectory(const std::string& path);
void write_trajectory(const std::string& path,
                      const std::vector<TrackedFrame>& frames);

// Headerless CSV, one "threshold,fraction" row per threshold.
void write_pck_csv(const std::string& path, const PckCurve& curve);
PckCurve read_pck_csv(const std::string& path);

enum class RunMode { Track, Simulate, Evaluate, Calibrate };

struct RunConfig {
  std::string skeleton_path;  // resolved relative to the config file
  CameraIntrinsics intrinsics;
  SolverConfig solver;
  OneEuroParams filter;
  bool filter_2d = true;
  bool filter_3d = true;

  TrackerConfig tracker_config() const;
};

// Parses a JSON run config. Missing sections fall back to defaults; a
// "mode" field, when present, must name one of track/simulate/evaluate/
// calibrate. The skeleton file must exist.
RunConfig load_run_config(const std::string& path);

// Environment variable consulted by the CLI when --config is omitted.
inline constexpr const char* kConfigEnvVar = "KINEFIT_CONFIG";

}  // namespace kinefit
