#include "kinefit/energy.hpp"

#include <cmath>
#include <string>

namespace kinefit {

namespace {

// A joint at or behind the camera plane would break the projection; instead
// it contributes a near-constant penalty whose gradient pushes the joint
// toward positive depth.
constexpr double kBehindPenalty = 1e4;
constexpr double kBehindSlope = 1e4;

struct TermAccumulator {
  double value = 0.0;
  ParamVector gradient = ParamVector::Zero();
  Eigen::Matrix<double, kParamCount, kParamCount> curvature =
      Eigen::Matrix<double, kParamCount, kParamCount>::Zero();
};

void accumulate_e2d(const PoseEval& eval, const FramePrediction& pred,
                    const CameraIntrinsics& cam, bool with_derivatives,
                    TermAccumulator& acc) {
  for (int j = 0; j < kJointCount; ++j) {
    const double omega = pred.omega[j];
    if (omega == 0.0) continue;
    const Vec3 p = eval.world.row(j).transpose();
    if (!(p.z() > kMinProjectionDepth)) {
      acc.value += omega * (kBehindPenalty +
                            kBehindSlope * (kMinProjectionDepth - p.z()));
      if (with_derivatives)
        acc.gradient -=
            omega * kBehindSlope * eval.jac.row(3 * j + 2).transpose();
      continue;
    }
    const Vec2 residual = project(cam, p) - pred.u.row(j).transpose();
    acc.value += omega * residual.squaredNorm();
    if (with_derivatives) {
      const Eigen::Matrix<double, 2, kParamCount> a =
          project_jacobian(cam, p) * eval.jac.block<3, kParamCount>(3 * j, 0);
      acc.gradient += 2.0 * omega * (a.transpose() * residual);
      acc.curvature += 2.0 * omega * (a.transpose() * a);
    }
  }
}

void accumulate_e3d(const PoseEval& eval, const RelativeTargets& targets,
                    bool with_derivatives, TermAccumulator& acc) {
  // Root-relative differences are formed in the root frame, so the global
  // translation never enters: the term and its gradient are exactly
  // t-invariant.
  for (int j = 0; j < kJointCount; ++j) {
    const Vec3 rel = eval.global_rotation *
                     (eval.root_frame.row(j) - eval.root_frame.row(kWrist))
                         .transpose();
    const Vec3 residual = rel - targets.z.row(j).transpose();
    acc.value += residual.squaredNorm();
    if (with_derivatives) {
      const Eigen::Matrix<double, 3, kParamCount> b =
          eval.jac.block<3, kParamCount>(3 * j, 0) -
          eval.jac.block<3, kParamCount>(3 * kWrist, 0);
      acc.gradient += 2.0 * (b.transpose() * residual);
      acc.curvature += 2.0 * (b.transpose() * b);
    }
  }
}

void accumulate_elimits(const Skeleton& skeleton, const HandPose& pose,
                        TermAccumulator& acc) {
  for (int d = 0; d < kThetaCount; ++d) {
    const double theta = pose.articulation[d];
    const double over = theta - skeleton.theta_max()[d];
    const double under = skeleton.theta_min()[d] - theta;
    // At most one side can be violated; exactly at a limit both are <= 0 and
    // the subgradient is 0.
    if (over > 0.0) {
      acc.value += over * over;
      acc.gradient[6 + d] += 2.0 * over;
      acc.curvature(6 + d, 6 + d) += 2.0;
    } else if (under > 0.0) {
      acc.value += under * under;
      acc.gradient[6 + d] -= 2.0 * under;
      acc.curvature(6 + d, 6 + d) += 2.0;
    }
  }
}

void accumulate_etemp(const HandPose& pose, const HandPose& prev_pose,
                      const ParamVector& prev_velocity, TermAccumulator& acc) {
  const ParamVector residual = prev_velocity - pose_delta(pose, prev_pose);
  acc.value += residual.squaredNorm();
  acc.gradient -= 2.0 * residual;
  acc.curvature.diagonal().array() += 2.0;
}

EnergyTerm to_term(const TermAccumulator& acc) {
  return {acc.value, acc.gradient};
}

}  // namespace

void FramePrediction::validate() const {
  if (!u.allFinite() || !omega.allFinite() || !x.allFinite())
    throw Error(ErrorCode::InvalidInput, "prediction has non-finite entries");
  if ((omega.array() < 0.0).any())
    throw Error(ErrorCode::InvalidInput, "confidences must be non-negative");
  if (!(omega.array() > 0.0).any())
    throw Error(ErrorCode::InvalidInput,
                "at least one confidence must be positive");
}

void FramePrediction::renormalize() {
  const Vec3 mid = x.row(kMiddleMcp).transpose();
  const double scale = (x.row(kWrist) - x.row(kMiddleMcp)).norm();
  if (scale < 1e-12)
    throw Error(ErrorCode::DegenerateInput,
                "wrist and middle-MCP predictions coincide");
  if (mid.norm() <= 1e-9 && std::abs(scale - 1.0) <= 1e-9) return;
  x = (x.rowwise() - mid.transpose()) / scale;
}

void EnergyWeights::validate() const {
  for (double w : {w2d, w3d, wlimits, wtemp})
    if (!(w >= 0.0) || !std::isfinite(w))
      throw Error(ErrorCode::InvalidInput,
                  "energy weights must be non-negative and finite");
}

RelativeTargets normalize_targets(const Skeleton& skeleton,
                                  const FramePrediction& pred) {
  RelativeTargets targets;
  targets.z.row(kWrist).setZero();
  for (int j = 1; j < kJointCount; ++j) {
    const int p = skeleton.joint(j).parent;
    const Vec3 d = (pred.x.row(j) - pred.x.row(p)).transpose();
    const double len = d.norm();
    if (len < 1e-12)
      throw Error(ErrorCode::DegenerateInput,
                  "zero-length predicted bone at " + skeleton.joint(j).name);
    targets.z.row(j) =
        targets.z.row(p) +
        (skeleton.joint(j).bone_length / len) * d.transpose();
  }
  return targets;
}

EnergyTerm e2d(const Skeleton& skeleton, const HandPose& pose,
               const FramePrediction& pred, const CameraIntrinsics& cam) {
  const PoseEval eval = evaluate_pose(skeleton, pose, true);
  TermAccumulator acc;
  accumulate_e2d(eval, pred, cam, true, acc);
  return to_term(acc);
}

EnergyTerm e3d(const Skeleton& skeleton, const HandPose& pose,
               const RelativeTargets& targets) {
  const PoseEval eval = evaluate_pose(skeleton, pose, true);
  TermAccumulator acc;
  accumulate_e3d(eval, targets, true, acc);
  return to_term(acc);
}

EnergyTerm elimits(const Skeleton& skeleton, const HandPose& pose) {
  if (!pose.all_finite())
    throw Error(ErrorCode::InvalidInput, "hand pose has non-finite parameters");
  TermAccumulator acc;
  accumulate_elimits(skeleton, pose, acc);
  return to_term(acc);
}

EnergyTerm etemp(const HandPose& pose, const HandPose& prev_pose,
                 const ParamVector& prev_velocity) {
  TermAccumulator acc;
  accumulate_etemp(pose, prev_pose, prev_velocity, acc);
  return to_term(acc);
}

EnergyTerm total_energy(const Skeleton& skeleton, const HandPose& pose,
                        const FramePrediction& pred,
                        const RelativeTargets& targets,
                        const CameraIntrinsics& cam, const EnergyWeights& weights,
                        const HandPose& prev_pose,
                        const ParamVector& prev_velocity) {
  const EnergyEval eval = evaluate_total_energy(
      skeleton, pose, pred, targets, cam, weights, prev_pose, prev_velocity,
      true);
  return {eval.value, eval.gradient};
}

EnergyEval evaluate_total_energy(const Skeleton& skeleton, const HandPose& pose,
                                 const FramePrediction& pred,
                                 const RelativeTargets& targets,
                                 const CameraIntrinsics& cam,
                                 const EnergyWeights& weights,
                                 const HandPose& prev_pose,
                                 const ParamVector& prev_velocity,
                                 bool with_derivatives) {
  const PoseEval pose_eval = evaluate_pose(skeleton, pose, with_derivatives);

  TermAccumulator t2d, t3d, tlim, ttemp;
  accumulate_e2d(pose_eval, pred, cam, with_derivatives, t2d);
  accumulate_e3d(pose_eval, targets, with_derivatives, t3d);
  accumulate_elimits(skeleton, pose, tlim);
  accumulate_etemp(pose, prev_pose, prev_velocity, ttemp);

  EnergyEval total;
  total.value = weights.w2d * t2d.value + weights.w3d * t3d.value +
                weights.wlimits * tlim.value + weights.wtemp * ttemp.value;
  if (with_derivatives) {
    total.gradient = weights.w2d * t2d.gradient + weights.w3d * t3d.gradient +
                     weights.wlimits * tlim.gradient +
                     weights.wtemp * ttemp.gradient;
    total.curvature = weights.w2d * t2d.curvature + weights.w3d * t3d.curvature +
                      weights.wlimits * tlim.curvature +
                      weights.wtemp * ttemp.curvature;
  }
  return total;
}

}  // namespace kinefit
