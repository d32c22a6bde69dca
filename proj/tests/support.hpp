#pragma once

// Shared test helpers: finite-difference oracles, pose/prediction generators.

#include <cmath>
#include <random>

#include "kinefit/camera.hpp"
#include "kinefit/energy.hpp"
#include "kinefit/hand_model.hpp"

namespace kinefit::testing {

// Central finite differences of a scalar function over the 26 parameters.
// Independent of the analytic-gradient path it checks.
template <typename F>
ParamVector fd_gradient(F&& f, const ParamVector& at, double h) {
  ParamVector grad;
  for (int i = 0; i < kParamCount; ++i) {
    ParamVector plus = at;
    ParamVector minus = at;
    plus[i] += h;
    minus[i] -= h;
    grad[i] = (f(plus) - f(minus)) / (2.0 * h);
  }
  return grad;
}

inline PoseJacobian fd_jacobian(const Skeleton& skeleton, const HandPose& pose,
                                double h) {
  PoseJacobian jac;
  const ParamVector at = pose.to_params();
  for (int i = 0; i < kParamCount; ++i) {
    ParamVector plus = at;
    ParamVector minus = at;
    plus[i] += h;
    minus[i] -= h;
    const JointMatrix mp = forward_kinematics(skeleton, HandPose::from_params(plus));
    const JointMatrix mm = forward_kinematics(skeleton, HandPose::from_params(minus));
    for (int j = 0; j < kJointCount; ++j)
      for (int c = 0; c < 3; ++c)
        jac(3 * j + c, i) = (mp(j, c) - mm(j, c)) / (2.0 * h);
  }
  return jac;
}

// |a - b| <= tol * max(1, |a|, |b|)
inline bool close_rel(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

inline bool gradients_match(const ParamVector& analytic, const ParamVector& fd,
                            double tol) {
  for (int i = 0; i < kParamCount; ++i)
    if (!close_rel(analytic[i], fd[i], tol)) return false;
  return true;
}

// Natural in-limits pose in front of the camera.
inline HandPose random_pose(std::mt19937_64& rng, const Skeleton& skeleton) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  HandPose pose;
  pose.translation = Vec3(0.24 * (unit(rng) - 0.5), 0.2 * (unit(rng) - 0.5),
                          0.35 + 0.3 * unit(rng));
  pose.rotation = Vec3(1.6 * (unit(rng) - 0.5), 1.6 * (unit(rng) - 0.5),
                       2.0 * (unit(rng) - 0.5));
  for (int d = 0; d < kThetaCount; ++d) {
    const double lo = skeleton.theta_min()[d];
    const double hi = skeleton.theta_max()[d];
    pose.articulation[d] = lo + (hi - lo) * (0.05 + 0.9 * unit(rng));
  }
  return pose;
}

// Exact (noise-free) prediction of a pose: projected maxima, unit
// confidences, normalized root-relative positions.
inline FramePrediction exact_prediction(const Skeleton& skeleton,
                                        const CameraIntrinsics& cam,
                                        const HandPose& pose) {
  const JointMatrix joints = forward_kinematics(skeleton, pose);
  FramePrediction pred;
  const double scale =
      (joints.row(kWrist) - joints.row(kMiddleMcp)).norm();
  pred.x = (joints.rowwise() - joints.row(kMiddleMcp)) / scale;
  for (int j = 0; j < kJointCount; ++j)
    pred.u.row(j) = project(cam, joints.row(j).transpose()).transpose();
  pred.omega.setOnes();
  return pred;
}

}  // namespace kinefit::testing
