#pragma once

#include <optional>
#include <vector>

#include "kinefit/camera.hpp"
#include "kinefit/energy.hpp"
#include "kinefit/smoothing.hpp"
#include "kinefit/solver.hpp"

namespace kinefit {

// Axis-aligned square region, pixels.
struct BBox {
  double cx = 0.0;
  double cy = 0.0;
  double side = 0.0;
};

inline constexpr double kBboxPadFactor = 2.2;
inline constexpr double kBboxMinSide = 32.0;  // pixels

// First-frame box: centered, side equal to the image height.
BBox initial_bbox(int width, int height);

// Square centered at the detection centroid with side pad_factor * max
// extent, floored at kBboxMinSide and shifted to stay on the image.
// Detections entirely outside the image reset to the first-frame box.
BBox update_bbox(const JointMatrix2d& detections, int width, int height);

struct TrackerConfig {
  SolverConfig solver;
  OneEuroParams filter;
  bool filter_2d = true;
  bool filter_3d = true;
};

struct TrackedFrame {
  double timestamp = 0.0;
  HandPose pose;
  JointMatrix joints_world = JointMatrix::Zero();
  JointMatrix2d joints_2d = JointMatrix2d::Zero();  // projection of joints_world
  double energy = 0.0;
  BBox bbox;
  bool degraded = false;  // solver diverged; pose reused from previous frame
};

// Carry-over state between frames of one tracked stream.
struct TrackerState {
  HandPose prev_pose;
  ParamVector prev_velocity = ParamVector::Zero();
  BBox bbox;
  PalmFrame zbar;
  int frame_index = 0;
  std::optional<JointMatrix2d> prev_detections;
};

// One tracker instance per stream; instances are independent, so distinct
// streams may run on distinct threads.
class Tracker {
 public:
  Tracker(Skeleton skeleton, CameraIntrinsics cam, TrackerConfig config);

  TrackedFrame process(const FramePrediction& prediction, double timestamp);

  const TrackerState& state() const { return state_; }
  const Skeleton& skeleton() const { return skeleton_; }

 private:
  Skeleton skeleton_;
  CameraIntrinsics cam_;
  TrackerConfig config_;
  TrackerState state_;
  OneEuroFilter filter_2d_;
  OneEuroFilter filter_3d_;
};

std::vector<TrackedFrame> track_sequence(const Skeleton& skeleton,
                                         const CameraIntrinsics& cam,
                                         const TrackerConfig& config,
                                         const std::vector<TimedPrediction>& stream);

}  // namespace kinefit
