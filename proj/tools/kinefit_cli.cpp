// kinefit command-line front end: simulate / track / evaluate / calibrate.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "kinefit/io.hpp"

namespace {

// Exit codes, also documented in the README:
//   0 success, 2 io/missing file, 3 parse error, 4 schema error,
//   5 invalid input, 6 degenerate input, 7 insufficient data,
//   8 solver diverged, 9 invalid motion script.
// CLI usage errors (unknown flag etc.) use CLI11's own nonzero codes.
int exit_code_for(kinefit::ErrorCode code) {
  using kinefit::ErrorCode;
  switch (code) {
    case ErrorCode::IoError: return 2;
    case ErrorCode::ParseError: return 3;
    case ErrorCode::SchemaError: return 4;
    case ErrorCode::InvalidInput:
    case ErrorCode::BehindCamera:
    case ErrorCode::InvalidTimestamp: return 5;
    case ErrorCode::DegenerateInput: return 6;
    case ErrorCode::InsufficientData: return 7;
    case ErrorCode::SolverDiverged: return 8;
    case ErrorCode::ScriptInvalid: return 9;
  }
  return 1;
}

std::string derive_gt_path(const std::string& out_path) {
  std::filesystem::path p(out_path);
  const std::string extension = p.extension().string();
  p.replace_extension();
  return p.string() + ".gt" + extension;
}

std::vector<double> parse_thresholds(const std::string& csv) {
  std::vector<double> thresholds;
  std::size_t pos = 0;
  while (pos < csv.size()) {
    std::size_t next = csv.find(',', pos);
    if (next == std::string::npos) next = csv.size();
    thresholds.push_back(std::stod(csv.substr(pos, next - pos)));
    pos = next + 1;
  }
  return thresholds;
}

struct JointStreamFrame {
  kinefit::JointMatrix joints;
  kinefit::JointMatrix2d joints_2d;
};

// Both trajectory and ground-truth files carry "joints" and "joints_2d";
// evaluate only needs those.
std::vector<JointStreamFrame> read_joint_stream(const std::string& path) {
  std::vector<JointStreamFrame> frames;
  // Reuse the trajectory reader when possible, else the ground-truth reader.
  try {
    for (const kinefit::TrackedFrame& f : kinefit::read_trajectory(path))
      frames.push_back({f.joints_world, f.joints_2d});
    return frames;
  } catch (const kinefit::Error& e) {
    if (e.code() != kinefit::ErrorCode::SchemaError) throw;
  }
  frames.clear();
  for (const kinefit::GroundTruthFrame& f :
       kinefit::read_ground_truth_stream(path))
    frames.push_back({f.joints, f.joints_2d});
  return frames;
}

int run_simulate(const std::string& config_path, const std::string& script_path,
                 const std::string& noise_path, const std::string& out_path,
                 const std::string& gt_out_path, double fps) {
  const kinefit::RunConfig config = kinefit::load_run_config(config_path);
  const kinefit::Skeleton skeleton =
      kinefit::Skeleton::load_json(config.skeleton_path);
  const kinefit::MotionScript script =
      kinefit::MotionScript::load_json(script_path);
  const kinefit::NoiseSpec noise = kinefit::NoiseSpec::load_json(noise_path);

  const std::vector<kinefit::SimFrame> frames = kinefit::synthesize_predictions(
      skeleton, config.intrinsics, script, noise, fps);

  std::vector<kinefit::TimedPrediction> predictions;
  std::vector<kinefit::GroundTruthFrame> ground_truth;
  predictions.reserve(frames.size());
  ground_truth.reserve(frames.size());
  for (const kinefit::SimFrame& frame : frames) {
    predictions.push_back({frame.t, frame.prediction});
    ground_truth.push_back(
        {frame.t, frame.gt_pose, frame.gt_joints, frame.gt_joints_2d});
  }
  kinefit::write_prediction_stream(out_path, predictions);
  kinefit::write_ground_truth_stream(
      gt_out_path.empty() ? derive_gt_path(out_path) : gt_out_path, ground_truth);
  return 0;
}

int run_track(const std::string& config_path, const std::string& predictions_path,
              const std::string& out_path) {
  const kinefit::RunConfig config = kinefit::load_run_config(config_path);
  const kinefit::Skeleton skeleton =
      kinefit::Skeleton::load_json(config.skeleton_path);
  const std::vector<kinefit::TimedPrediction> stream =
      kinefit::read_prediction_stream(predictions_path);
  const std::vector<kinefit::TrackedFrame> frames = kinefit::track_sequence(
      skeleton, config.intrinsics, config.tracker_config(), stream);
  kinefit::write_trajectory(out_path, frames);
  return 0;
}

int run_evaluate(const std::string& est_path, const std::string& gt_path,
                 const std::string& mode, const std::string& out_path,
                 const std::string& thresholds_csv, bool apply_depth_normalize) {
  const std::vector<JointStreamFrame> est = read_joint_stream(est_path);
  const std::vector<kinefit::GroundTruthFrame> gt =
      kinefit::read_ground_truth_stream(gt_path);

  kinefit::PckCurve curve;
  if (mode == "3d") {
    std::vector<kinefit::JointMatrix> est_joints, gt_joints;
    std::vector<double> gt_root_z;
    for (const JointStreamFrame& f : est) est_joints.push_back(f.joints);
    for (const kinefit::GroundTruthFrame& f : gt) {
      gt_joints.push_back(f.joints);
      gt_root_z.push_back(f.joints(kinefit::kWrist, 2));
    }
    if (apply_depth_normalize) {
      if (est_joints.size() != gt_root_z.size())
        throw kinefit::Error(kinefit::ErrorCode::InvalidInput,
                             "streams differ in length");
      est_joints = kinefit::depth_normalize(est_joints, gt_root_z);
    }
    curve = kinefit::pck3d(est_joints, gt_joints,
                           thresholds_csv.empty()
                               ? kinefit::default_pck_thresholds_3d()
                               : parse_thresholds(thresholds_csv));
  } else if (mode == "2d") {
    std::vector<kinefit::JointMatrix2d> est_joints, gt_joints;
    for (const JointStreamFrame& f : est) est_joints.push_back(f.joints_2d);
    for (const kinefit::GroundTruthFrame& f : gt) gt_joints.push_back(f.joints_2d);
    curve = kinefit::pck2d(est_joints, gt_joints,
                           thresholds_csv.empty()
                               ? kinefit::default_pck_thresholds_2d()
                               : parse_thresholds(thresholds_csv));
  } else {
    throw kinefit::Error(kinefit::ErrorCode::InvalidInput,
                         "mode must be 2d or 3d, got '" + mode + "'");
  }
  kinefit::write_pck_csv(out_path, curve);
  return 0;
}

int run_calibrate(const std::string& predictions_path,
                  const std::string& skeleton_in, const std::string& skeleton_out) {
  const kinefit::Skeleton template_skeleton =
      kinefit::Skeleton::load_json(skeleton_in);
  const std::vector<kinefit::TimedPrediction> stream =
      kinefit::read_prediction_stream(predictions_path);
  std::vector<kinefit::JointMatrix2d> detections;
  detections.reserve(stream.size());
  for (const kinefit::TimedPrediction& timed : stream)
    detections.push_back(timed.prediction.u);
  const kinefit::Skeleton calibrated =
      kinefit::calibrate_bone_lengths(detections, template_skeleton);
  calibrated.save_json(skeleton_out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kinefit: kinematic 3D hand-pose fitting from 2D/3D keypoint "
               "predictions"};
  app.require_subcommand(1);

  std::string config_path, script_path, noise_path, out_path, gt_out_path;
  std::string predictions_path, est_path, gt_path, mode = "3d";
  std::string skeleton_in, skeleton_out, thresholds_csv;
  double fps = 50.0;
  bool apply_depth_normalize = false;

  CLI::App* simulate =
      app.add_subcommand("simulate", "Synthesize a prediction stream from a "
                                     "motion script");
  simulate->add_option("--config", config_path, "Run config JSON")
      ->envname(kinefit::kConfigEnvVar)
      ->required();
  simulate->add_option("--script", script_path, "Motion script JSON")->required();
  simulate->add_option("--noise", noise_path, "Noise spec JSON")->required();
  simulate->add_option("--out", out_path, "Output prediction stream (JSONL)")
      ->required();
  simulate->add_option("--gt-out", gt_out_path,
                       "Output ground-truth stream (default: <out>.gt.jsonl)");
  simulate->add_option("--fps", fps, "Sampling rate, frames per second");

  CLI::App* track = app.add_subcommand(
      "track", "Fit the kinematic model to a prediction stream");
  track->add_option("--config", config_path, "Run config JSON")
      ->envname(kinefit::kConfigEnvVar)
      ->required();
  track->add_option("--predictions", predictions_path, "Prediction stream (JSONL)")
      ->required();
  track->add_option("--out", out_path, "Output trajectory (JSONL)")->required();

  CLI::App* evaluate =
      app.add_subcommand("evaluate", "Compute a PCK curve from two streams");
  evaluate->add_option("--est", est_path, "Estimated stream (trajectory JSONL)")
      ->required();
  evaluate->add_option("--gt", gt_path, "Ground-truth stream (JSONL)")->required();
  evaluate->add_option("--mode", mode, "2d or 3d")->required();
  evaluate->add_option("--out", out_path, "Output CSV (threshold,fraction)")
      ->required();
  evaluate->add_option("--thresholds", thresholds_csv,
                       "Comma-separated thresholds (mm for 3d, px for 2d)");
  evaluate->add_flag("--depth-normalize", apply_depth_normalize,
                     "Shift estimated global z to match ground-truth root depth");

  CLI::App* calibrate = app.add_subcommand(
      "calibrate", "Adapt skeleton bone lengths from 2D detections");
  calibrate
      ->add_option("--predictions", predictions_path,
                   "Prediction stream with >= 30 frames")
      ->required();
  calibrate->add_option("--skeleton-in", skeleton_in, "Template skeleton JSON")
      ->required();
  calibrate->add_option("--skeleton-out", skeleton_out, "Calibrated skeleton JSON")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed())
      return run_simulate(config_path, script_path, noise_path, out_path,
                          gt_out_path, fps);
    if (track->parsed()) return run_track(config_path, predictions_path, out_path);
    if (evaluate->parsed())
      return run_evaluate(est_path, gt_path, mode, out_path, thresholds_csv,
                          apply_depth_normalize);
    if (calibrate->parsed())
      return run_calibrate(predictions_path, skeleton_in, skeleton_out);
  } catch (const kinefit::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
