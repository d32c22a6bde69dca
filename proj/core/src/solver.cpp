#include "kinefit/solver.hpp"

#include <Eigen/Geometry>
#include <Eigen/Cholesky>
#include <Eigen/SVD>

#include <cmath>

namespace kinefit {

PalmFrame palm_frame(const JointMatrix& points, const Skeleton&) {
  PalmFrame frame;
  const Vec3 root = points.row(kWrist).transpose();
  for (int k = 0; k < 4; ++k) {
    const Vec3 d = points.row(kNonThumbMcps[k]).transpose() - root;
    const double len = d.norm();
    if (len < 1e-9)
      throw Error(ErrorCode::DegenerateInput,
                  "degenerate palm: MCP joint coincides with the root");
    frame.Z.col(k) = d / len;
  }
  frame.Z.col(4) = frame.Z.col(0).cross(frame.Z.col(3));
  return frame;
}

PalmFrame model_palm_frame(const Skeleton& skeleton) {
  return palm_frame(forward_kinematics(skeleton, HandPose{}), skeleton);
}

Mat3 procrustes_rotation(const PalmFrame& zbar, const PalmFrame& ztilde,
                         bool* ill_conditioned) {
  const Mat3 covariance = ztilde.Z * zbar.Z.transpose();
  Eigen::JacobiSVD<Mat3> svd(covariance,
                             Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (ill_conditioned)
    *ill_conditioned = svd.singularValues()[1] < 1e-9;
  const Mat3 u = svd.matrixU();
  const Mat3 v = svd.matrixV();
  Vec3 signs(1.0, 1.0, (u * v.transpose()).determinant());
  return u * signs.asDiagonal() * v.transpose();
}

void SolverConfig::validate() const {
  if (max_iters < 1)
    throw Error(ErrorCode::InvalidInput, "max_iters must be at least 1");
  if (!(step_size > 0.0))
    throw Error(ErrorCode::InvalidInput, "step_size must be positive");
  if (!(step_decay > 0.0) || step_decay > 1.0)
    throw Error(ErrorCode::InvalidInput, "step_decay must be in (0, 1]");
  if (!(grad_tol >= 0.0))
    throw Error(ErrorCode::InvalidInput, "grad_tol must be non-negative");
  weights.validate();
}

HandPose initialize_frame(const FrameContext& context, const Skeleton& skeleton,
                          const FramePrediction& pred) {
  HandPose init;
  if (context.prev_pose) {
    init = *context.prev_pose;
  } else {
    init.translation = Vec3(0.0, 0.0, 0.45);  // open hand on the optical axis
  }
  const Vec3 reference =
      context.prev_pose ? context.prev_pose->rotation : Vec3::Zero();
  try {
    const PalmFrame ztilde = palm_frame(pred.x, skeleton);
    const Mat3 rotation = procrustes_rotation(context.zbar, ztilde);
    init.rotation = matrix_to_euler_near(rotation, reference);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DegenerateInput) throw;
    init.rotation = reference;  // degenerate predicted palm
  }
  return init;
}

namespace {

// Natural parameter blocks: translation, rotation, one 4-DOF chain per
// finger. Scaling the gradient by the inverse of the Gauss-Newton normal
// matrix restricted to these blocks evens out both the px^2-vs-rad^2
// conditioning gap and the strong in-chain couplings, while cross-block
// coupling stays with the outer gradient iteration.
constexpr struct { int offset; int size; } kParamBlocks[] = {
    {0, 3}, {3, 3}, {6, 4}, {10, 4}, {14, 4}, {18, 4}, {22, 4}};

ParamVector block_scaled_direction(const EnergyEval& eval) {
  ParamVector direction = ParamVector::Zero();
  for (const auto& block : kParamBlocks) {
    const auto b =
        eval.curvature.block(block.offset, block.offset, block.size, block.size);
    const double damping = 1e-8 * std::max(b.diagonal().maxCoeff(), 0.0) + 1e-12;
    Eigen::MatrixXd regularized = b;
    regularized.diagonal().array() += damping;
    direction.segment(block.offset, block.size) = regularized.ldlt().solve(
        eval.gradient.segment(block.offset, block.size));
  }
  return direction;
}

// Block-scaled gradient descent with Armijo backtracking. A non-null mask
// restricts the step to a parameter subset; a step along a masked direction
// still descends the full objective.
template <typename EvalFn>
int descend(EvalFn&& evaluate, HandPose& pose, EnergyEval& eval, int max_iters,
            const SolverConfig& config, const ParamVector* mask = nullptr) {
  constexpr double kArmijoC = 1e-4;
  constexpr double kMinStep = 1e-14;

  int iterations = 0;
  while (iterations < max_iters && eval.gradient.norm() >= config.grad_tol) {
    ParamVector direction = block_scaled_direction(eval);
    if (mask) direction.array() *= mask->array();
    const double slope = eval.gradient.dot(direction);
    if (!(slope > 0.0)) break;

    const ParamVector params = pose.to_params();
    double step = config.step_size;
    bool accepted = false;
    HandPose trial;
    while (step > kMinStep) {
      trial = HandPose::from_params(params - step * direction);
      const double trial_energy = evaluate(trial, false).value;
      if (std::isfinite(trial_energy) &&
          trial_energy <= eval.value - kArmijoC * step * slope) {
        accepted = true;
        break;
      }
      step *= config.step_decay;
    }
    if (!accepted) break;  // no admissible descent step: stalled at a minimum

    pose = trial;
    ++iterations;
    eval = evaluate(pose, true);
    if (!std::isfinite(eval.value) || !eval.gradient.allFinite())
      throw SolverDivergedError("non-finite energy during descent", pose);
  }
  return iterations;
}

}  // namespace

SolveResult solve_frame(const Skeleton& skeleton, const FramePrediction& pred,
                        const CameraIntrinsics& cam, const SolverConfig& config,
                        const FrameContext& context) {
  config.validate();
  cam.validate();

  const RelativeTargets targets = normalize_targets(skeleton, pred);
  HandPose pose = initialize_frame(context, skeleton, pred);

  // The temporal term needs a previous time step; on the first frame it is
  // disabled rather than anchored to the initialization.
  EnergyWeights weights = config.weights;
  HandPose prev_pose = pose;
  ParamVector prev_velocity = ParamVector::Zero();
  if (context.prev_pose) {
    prev_pose = *context.prev_pose;
    prev_velocity = context.prev_velocity;
  } else {
    weights.wtemp = 0.0;
  }

  auto evaluate_with = [&](const EnergyWeights& w, const HandPose& at,
                           bool with_derivatives) {
    return evaluate_total_energy(skeleton, at, pred, targets, cam, w,
                                 prev_pose, prev_velocity, with_derivatives);
  };
  auto evaluate_total = [&](const HandPose& at, bool with_derivatives) {
    return evaluate_with(weights, at, with_derivatives);
  };

  EnergyEval eval = evaluate_total(pose, true);
  if (!std::isfinite(eval.value) || !eval.gradient.allFinite())
    throw SolverDivergedError("non-finite energy at initialization", pose);
  const double initial_energy = eval.value;

  SolveResult result;

  // Articulation pre-fit on the 3D term alone. The 2D term cannot tell a
  // finger curling toward the camera from one bending away (both shorten the
  // projection), and with a far-from-target articulation its gradient
  // dominates and commits the descent to the mirror basin. The relative 3D
  // targets are free of that ambiguity, so rotation and articulation are
  // first pulled toward them; the full energy then refines everything.
  const int prefit_budget = (2 * config.max_iters) / 5;
  if (weights.w3d > 0.0 && prefit_budget > 0) {
    EnergyWeights prefit = weights;
    prefit.w2d = 0.0;
    prefit.wtemp = 0.0;
    auto evaluate_prefit = [&](const HandPose& at, bool with_derivatives) {
      return evaluate_with(prefit, at, with_derivatives);
    };
    EnergyEval prefit_eval = evaluate_prefit(pose, true);
    result.iterations += descend(evaluate_prefit, pose, prefit_eval,
                                 prefit_budget, config);
    eval = evaluate_total(pose, true);
    if (!std::isfinite(eval.value) || !eval.gradient.allFinite())
      throw SolverDivergedError("non-finite energy after pre-fit", pose);
  }

  // Translation-only pass on the total energy: with articulation settled the
  // 2D residuals collapse onto t, so the later joint refinement no longer
  // bends fingers to absorb a translation error.
  const int translation_budget = (3 * config.max_iters) / 20;
  if (translation_budget > 0 && result.iterations < config.max_iters) {
    ParamVector translation_mask = ParamVector::Zero();
    translation_mask.segment<3>(0).setOnes();
    result.iterations += descend(
        evaluate_total, pose, eval,
        std::min(translation_budget, config.max_iters - result.iterations),
        config, &translation_mask);
  }

  result.iterations += descend(evaluate_total, pose, eval,
                               config.max_iters - result.iterations, config);

  // The total energy may rise transiently across the pre-fit hand-off; the
  // returned pose still never exceeds the energy at initialization.
  if (eval.value > initial_energy) {
    pose = initialize_frame(context, skeleton, pred);
    eval = evaluate_total(pose, true);
  }

  result.pose = pose;
  result.energy = eval.value;
  result.grad_norm = eval.gradient.norm();
  return result;
}

}  // namespace kinefit
