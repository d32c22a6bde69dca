#include "kinefit/tracking.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace kinefit {

namespace {

double clamp_center(double value, double side, double image_dim) {
  const double lo = side / 2.0;
  const double hi = image_dim - side / 2.0;
  if (lo > hi) return image_dim / 2.0;  // box larger than the image
  return std::clamp(value, lo, hi);
}

}  // namespace

BBox initial_bbox(int width, int height) {
  return {width / 2.0, height / 2.0, static_cast<double>(height)};
}

BBox update_bbox(const JointMatrix2d& detections, int width, int height) {
  bool any_inside = false;
  for (int j = 0; j < kJointCount; ++j) {
    const double x = detections(j, 0), y = detections(j, 1);
    if (std::isfinite(x) && std::isfinite(y) && x >= 0.0 && x < width &&
        y >= 0.0 && y < height) {
      any_inside = true;
      break;
    }
  }
  if (!any_inside) return initial_bbox(width, height);  // lost track: reset

  const Vec2 min = detections.colwise().minCoeff().transpose();
  const Vec2 max = detections.colwise().maxCoeff().transpose();
  const Vec2 centroid = detections.colwise().mean().transpose();
  const double extent = std::max(max.x() - min.x(), max.y() - min.y());

  BBox box;
  box.side = std::clamp(kBboxPadFactor * extent, kBboxMinSide,
                        static_cast<double>(std::min(width, height)));
  box.cx = clamp_center(centroid.x(), box.side, width);
  box.cy = clamp_center(centroid.y(), box.side, height);
  return box;
}

Tracker::Tracker(Skeleton skeleton, CameraIntrinsics cam, TrackerConfig config)
    : skeleton_(std::move(skeleton)),
      cam_(std::move(cam)),
      config_(std::move(config)),
      filter_2d_(2 * kJointCount, config_.filter),
      filter_3d_(3 * kJointCount, config_.filter) {
  cam_.validate();
  config_.solver.validate();
  state_.zbar = model_palm_frame(skeleton_);
  state_.bbox = initial_bbox(cam_.width, cam_.height);
}

TrackedFrame Tracker::process(const FramePrediction& prediction,
                              double timestamp) {
  FramePrediction pred = prediction;
  if (config_.filter_2d) {
    Eigen::VectorXd flat(2 * kJointCount);
    for (int j = 0; j < kJointCount; ++j)
      flat.segment<2>(2 * j) = pred.u.row(j).transpose();
    flat = filter_2d_.step(flat, timestamp);
    for (int j = 0; j < kJointCount; ++j)
      pred.u.row(j) = flat.segment<2>(2 * j).transpose();
  }
  if (config_.filter_3d) {
    Eigen::VectorXd flat(3 * kJointCount);
    for (int j = 0; j < kJointCount; ++j)
      flat.segment<3>(3 * j) = pred.x.row(j).transpose();
    flat = filter_3d_.step(flat, timestamp);
    for (int j = 0; j < kJointCount; ++j)
      pred.x.row(j) = flat.segment<3>(3 * j).transpose();
  }

  const bool first_frame = state_.frame_index == 0;
  TrackedFrame frame;
  frame.timestamp = timestamp;
  frame.bbox = first_frame ? initial_bbox(cam_.width, cam_.height)
                           : update_bbox(*state_.prev_detections, cam_.width,
                                         cam_.height);

  FrameContext context;
  context.zbar = state_.zbar;
  if (!first_frame) {
    context.prev_pose = state_.prev_pose;
    context.prev_velocity = state_.prev_velocity;
  }

  try {
    const SolveResult result =
        solve_frame(skeleton_, pred, cam_, config_.solver, context);
    frame.pose = result.pose;
    frame.energy = result.energy;
  } catch (const SolverDivergedError& diverged) {
    frame.degraded = true;
    frame.pose =
        first_frame ? diverged.last_finite_iterate : state_.prev_pose;
    frame.energy = std::numeric_limits<double>::quiet_NaN();
  }

  frame.joints_world = forward_kinematics(skeleton_, frame.pose);
  for (int j = 0; j < kJointCount; ++j) {
    const Vec3 p = frame.joints_world.row(j).transpose();
    if (p.z() > kMinProjectionDepth) {
      frame.joints_2d.row(j) = project(cam_, p).transpose();
    } else {
      frame.joints_2d.row(j).setConstant(
          std::numeric_limits<double>::quiet_NaN());
      frame.degraded = true;
    }
  }

  state_.prev_velocity =
      first_frame ? ParamVector::Zero() : pose_delta(frame.pose, state_.prev_pose);
  state_.prev_pose = frame.pose;
  state_.prev_detections = pred.u;
  state_.bbox = frame.bbox;
  ++state_.frame_index;
  return frame;
}

std::vector<TrackedFrame> track_sequence(const Skeleton& skeleton,
                                         const CameraIntrinsics& cam,
                                         const TrackerConfig& config,
                                         const std::vector<TimedPrediction>& stream) {
  Tracker tracker(skeleton, cam, config);
  std::vector<TrackedFrame> frames;
  frames.reserve(stream.size());
  for (const TimedPrediction& timed : stream)
    frames.push_back(tracker.process(timed.prediction, timed.timestamp));
  return frames;
}

}  // namespace kinefit
