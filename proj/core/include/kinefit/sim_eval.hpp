#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kinefit/camera.hpp"
#include "kinefit/energy.hpp"
#include "kinefit/hand_model.hpp"

namespace kinefit {

// Keyframed ground-truth motion. Sampling interpolates linearly in t and
// theta and spherically in the global rotation.
struct MotionScript {
  struct Keyframe {
    double t = 0.0;  // seconds, strictly increasing across keyframes
    HandPose pose;
  };

  std::vector<Keyframe> keyframes;

  // Timestamps strictly increasing, poses finite and within joint limits.
  void validate(const Skeleton& skeleton) const;

  double start_time() const;
  double end_time() const;
  HandPose sample(double t) const;

  static MotionScript from_json_string(const std::string& text);
  static MotionScript load_json(const std::string& path);
  std::string to_json_string() const;
  void save_json(const std::string& path) const;
};

// Detector-noise model for the simulator. Occlusion collapses the joint's
// confidence to zero and corrupts its 2D maximum.
struct NoiseSpec {
  double sigma_2d = 0.0;       // pixels
  double sigma_3d = 0.0;       // normalized units
  double omega_lo = 1.0;
  double omega_hi = 1.0;
  double occlusion_prob = 0.0;
  std::uint64_t seed = 0;

  void validate() const;

  static NoiseSpec from_json_string(const std::string& text);
  static NoiseSpec load_json(const std::string& path);
  std::string to_json_string() const;
  void save_json(const std::string& path) const;
};

struct SimFrame {
  double t = 0.0;
  FramePrediction prediction;
  HandPose gt_pose;
  JointMatrix gt_joints = JointMatrix::Zero();
  JointMatrix2d gt_joints_2d = JointMatrix2d::Zero();
};

// Stand-in for a learned detector: samples the script at the given rate,
// projects ground-truth joints and emits noisy predictions in the normalized
// root-relative convention. Fully deterministic for a given seed. Throws
// Error(ScriptInvalid) naming the frame if a joint falls behind the camera.
std::vector<SimFrame> synthesize_predictions(const Skeleton& skeleton,
                                             const CameraIntrinsics& cam,
                                             const MotionScript& script,
                                             const NoiseSpec& noise, double fps);

// Percentage of correct keypoints: fraction of (frame, joint) pairs whose
// error is within each threshold radius (circle in 2D, sphere in 3D).
struct PckCurve {
  std::vector<double> thresholds;  // mm for 3D, px for 2D
  std::vector<double> fractions;   // non-decreasing, in [0, 1]
};

std::vector<double> default_pck_thresholds_3d();  // 5..100 mm step 5
std::vector<double> default_pck_thresholds_2d();  // 1..30 px step 1

// 3D PCK; estimates and ground truth in meters, thresholds in millimeters.
PckCurve pck3d(const std::vector<JointMatrix>& estimated,
               const std::vector<JointMatrix>& ground_truth,
               const std::vector<double>& thresholds_mm);

// 2D PCK; positions and thresholds in pixels.
PckCurve pck2d(const std::vector<JointMatrix2d>& estimated,
               const std::vector<JointMatrix2d>& ground_truth,
               const std::vector<double>& thresholds_px);

// Per frame, shifts every estimated joint by (0, 0, gt_root_z - est_root_z)
// so the root depth error becomes exactly zero; x and y are untouched.
// Isolates articulation error from global depth error.
std::vector<JointMatrix> depth_normalize(const std::vector<JointMatrix>& estimated,
                                         const std::vector<double>& gt_root_z);

}  // namespace kinefit
