#pragma once

#include <Eigen/Core>

#include <optional>

#include "kinefit/energy.hpp"
#include "kinefit/hand_model.hpp"
#include "kinefit/types.hpp"

namespace kinefit {

// 3x5 matrix Z = [y1 y2 y3 y4 n]: unit directions from the root to the four
// non-thumb MCP joints (index..pinky) and the approximate palm-plane normal
// n = y1 x y4.
struct PalmFrame {
  Eigen::Matrix<double, 3, 5> Z = Eigen::Matrix<double, 3, 5>::Zero();
};

// Builds a palm frame from 21 joint positions (model points or predictions).
// Throws Error(DegenerateInput) when an MCP coincides with the root.
PalmFrame palm_frame(const JointMatrix& points, const Skeleton& skeleton);

// Palm frame of the model at identity global rotation; computed once per
// skeleton at tracking start.
PalmFrame model_palm_frame(const Skeleton& skeleton);

// Closed-form minimizer of |R * Zbar - Ztilde|_F over SO(3) via the SVD of
// Ztilde * Zbar^T. The optional flag reports a rank-deficient covariance
// (sigma_2 < 1e-9); the SVD solution is still returned.
Mat3 procrustes_rotation(const PalmFrame& zbar, const PalmFrame& ztilde,
                         bool* ill_conditioned = nullptr);

struct SolverConfig {
  int max_iters = 50;       // 50 covers the real-time path; 200 the accuracy path
  double step_size = 1.0;
  double step_decay = 0.5;  // backtracking halving factor, in (0, 1]
  double grad_tol = 1e-9;
  EnergyWeights weights;

  void validate() const;
};

// The slice of tracker state the per-frame solve needs. No prev_pose means
// first frame.
struct FrameContext {
  std::optional<HandPose> prev_pose;
  ParamVector prev_velocity = ParamVector::Zero();
  PalmFrame zbar;
};

// First frame: neutral open hand (theta = 0) on the optical axis 0.45 m from
// the camera plane. Later frames: t and theta carried over from the previous
// solution. The global rotation is always re-initialized from the relative
// 3D predictions by solving the Orthogonal Procrustes alignment of the palm
// frames; a degenerate predicted palm falls back to the previous rotation.
HandPose initialize_frame(const FrameContext& context, const Skeleton& skeleton,
                          const FramePrediction& pred);

struct SolveResult {
  HandPose pose;
  double energy = 0.0;
  int iterations = 0;
  double grad_norm = 0.0;
};

class SolverDivergedError : public Error {
 public:
  SolverDivergedError(const std::string& message, HandPose last_iterate)
      : Error(ErrorCode::SolverDiverged, message),
        last_finite_iterate(std::move(last_iterate)) {}

  HandPose last_finite_iterate;
};

// Minimizes the total fitting energy for one frame: normalize targets,
// initialize, pre-fit rotation/articulation on the 3D and limit terms, then
// descend on the full energy until max_iters or |grad| < grad_tol.
// Backtracking keeps each descent monotone and the result never exceeds the
// energy at initialization. Throws SolverDivergedError (carrying the last
// finite iterate) if the energy turns non-finite.
SolveResult solve_frame(const Skeleton& skeleton, const FramePrediction& pred,
                        const CameraIntrinsics& cam, const SolverConfig& config,
                        const FrameContext& context);

}  // namespace kinefit
