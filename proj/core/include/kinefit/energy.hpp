#pragma once

#include <Eigen/Core>

#include "kinefit/camera.hpp"
#include "kinefit/hand_model.hpp"
#include "kinefit/types.hpp"

namespace kinefit {

// Per-frame detector output: 2D heatmap maxima u (pixels) with confidences
// omega, and root-relative 3D positions x normalized so the middle-MCP joint
// sits at the origin and the wrist->middle-MCP distance is 1.
struct FramePrediction {
  JointMatrix2d u = JointMatrix2d::Zero();
  Eigen::Matrix<double, kJointCount, 1> omega =
      Eigen::Matrix<double, kJointCount, 1>::Ones();
  JointMatrix x = JointMatrix::Zero();

  // Checks the ingestion invariants (finite, omega >= 0 with at least one
  // positive entry). Construction itself is unchecked so synthetic edge
  // cases remain expressible.
  void validate() const;

  // Shifts the middle-MCP row to the origin and rescales so the wrist row
  // has unit norm. No-op when the convention already holds to 1e-9.
  void renormalize();
};

struct TimedPrediction {
  double timestamp = 0.0;  // seconds
  FramePrediction prediction;
};

// User-specific root-relative targets z_j in meters; consecutive rows obey
// the skeleton's bone lengths by construction.
struct RelativeTargets {
  JointMatrix z = JointMatrix::Zero();
};

// Eq-style fitting energies carry incompatible units (px^2, m^2, rad^2), so
// the total is a weighted sum. Defaults balance 100 px against 1 m-ish
// residuals and are configurable.
struct EnergyWeights {
  double w2d = 1e-4;
  double w3d = 1.0;
  double wlimits = 10.0;
  double wtemp = 0.1;

  void validate() const;
};

struct EnergyTerm {
  double value = 0.0;
  ParamVector gradient = ParamVector::Zero();
};

// Rescales the predicted relative positions bone-by-bone to the skeleton's
// bone lengths, root-to-leaf:
//   z_j = z_p(j) + bone_length(j) / |x_j - x_p(j)| * (x_j - x_p(j)).
// Throws Error(DegenerateInput) naming the joint when a predicted bone has
// zero length.
RelativeTargets normalize_targets(const Skeleton& skeleton,
                                  const FramePrediction& pred);

// sum_j omega_j |project(M_j) - u_j|^2. A joint at or behind the camera
// plane contributes a large constant penalty with a gradient pushing it
// toward positive depth instead of failing.
EnergyTerm e2d(const Skeleton& skeleton, const HandPose& pose,
               const FramePrediction& pred, const CameraIntrinsics& cam);

// sum_j |(M_j - M_root) - z_j|^2. Exactly invariant to the global
// translation: the root-relative differences never touch t.
EnergyTerm e3d(const Skeleton& skeleton, const HandPose& pose,
               const RelativeTargets& targets);

// |max(0, theta - theta_max, theta_min - theta)|^2, one-sided quadratic
// outside the limits, zero inside, subgradient 0 exactly at a limit.
EnergyTerm elimits(const Skeleton& skeleton, const HandPose& pose);

// |prev_velocity - (pose - prev_pose)|^2 with the global-rotation entries of
// the backward difference wrapped to (-pi, pi].
EnergyTerm etemp(const HandPose& pose, const HandPose& prev_pose,
                 const ParamVector& prev_velocity);

// Weighted sum of the four terms; gradients combine the same way.
EnergyTerm total_energy(const Skeleton& skeleton, const HandPose& pose,
                        const FramePrediction& pred,
                        const RelativeTargets& targets,
                        const CameraIntrinsics& cam, const EnergyWeights& weights,
                        const HandPose& prev_pose,
                        const ParamVector& prev_velocity);

// Solver-facing evaluation: value, gradient and the Gauss-Newton normal
// matrix (first derivatives only) in one pass over a shared pose evaluation.
// Value-only calls (with_derivatives = false) skip the Jacobian for line
// searches.
struct EnergyEval {
  double value = 0.0;
  ParamVector gradient = ParamVector::Zero();
  Eigen::Matrix<double, kParamCount, kParamCount> curvature =
      Eigen::Matrix<double, kParamCount, kParamCount>::Zero();
};

EnergyEval evaluate_total_energy(const Skeleton& skeleton, const HandPose& pose,
                                 const FramePrediction& pred,
                                 const RelativeTargets& targets,
                                 const CameraIntrinsics& cam,
                                 const EnergyWeights& weights,
                                 const HandPose& prev_pose,
                                 const ParamVector& prev_velocity,
                                 bool with_derivatives);

}  // namespace kinefit
