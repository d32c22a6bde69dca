#pragma once

#include <Eigen/Core>

#include <string>
#include <vector>

#include "kinefit/types.hpp"

namespace kinefit {

// 26-parameter hand state: global root translation t (meters), global root
// rotation R as intrinsic XYZ Euler angles (radians), and 20 articulation
// angles for the 15 articulated finger joints.
struct HandPose {
  Vec3 translation = Vec3::Zero();
  Vec3 rotation = Vec3::Zero();
  ThetaVector articulation = ThetaVector::Zero();

  ParamVector to_params() const;
  static HandPose from_params(const ParamVector& params);

  bool all_finite() const;
};

// Backward difference current - previous over the 26 parameters, with the
// three global-rotation components wrapped to (-pi, pi].
ParamVector pose_delta(const HandPose& current, const HandPose& previous);

// Rotation matrix for intrinsic XYZ Euler angles: R = Rx(a) * Ry(b) * Rz(c).
Mat3 euler_to_matrix(const Vec3& euler_xyz);

// Inverse of euler_to_matrix. The XYZ decomposition has two branches; the
// one whose angles are closest to `reference` (after wrapping) is returned,
// which keeps Euler trajectories continuous across frames.
Vec3 matrix_to_euler_near(const Mat3& rotation, const Vec3& reference);

// One rotational degree of freedom of an articulated joint.
struct JointDof {
  Vec3 axis = Vec3::UnitX();  // unit vector in the parent joint's frame
  int theta_index = 0;        // index into HandPose::articulation
  double min_rad = 0.0;
  double max_rad = 0.0;
};

struct SkeletonJoint {
  std::string name;
  int parent = -1;            // -1 for the root (wrist)
  double bone_length = 0.0;   // meters, distance to parent; 0 for the root
  Vec3 rest_offset = Vec3::Zero();  // unit direction from parent at rest
  std::vector<JointDof> dofs;       // 0, 1 or 2 entries
};

// Kinematic tree: one root (wrist) plus 5 fingers x 4 joints, 20 rotational
// DOFs spread over the 15 articulated joints. Immutable after construction;
// all operations on it are pure functions.
class Skeleton {
 public:
  static Skeleton from_joints(std::vector<SkeletonJoint> joints);

  // Built-in average adult hand (also shipped as data/default_hand.json).
  static Skeleton default_hand();

  static Skeleton from_json_string(const std::string& text);
  static Skeleton load_json(const std::string& path);
  std::string to_json_string() const;
  void save_json(const std::string& path) const;

  const SkeletonJoint& joint(int index) const { return joints_[index]; }
  const std::vector<SkeletonJoint>& joints() const { return joints_; }

  const ThetaVector& theta_min() const { return theta_min_; }
  const ThetaVector& theta_max() const { return theta_max_; }

  // Strict ancestry test used for Jacobian locality.
  bool is_ancestor(int ancestor, int joint) const;

  Skeleton with_bone_lengths(const Eigen::Matrix<double, kJointCount, 1>& lengths) const;

 private:
  Skeleton() = default;
  void validate() const;
  void build_limit_vectors();

  std::vector<SkeletonJoint> joints_;
  ThetaVector theta_min_ = ThetaVector::Zero();
  ThetaVector theta_max_ = ThetaVector::Zero();
};

// Absolute 3D joint positions, one row per joint, meters.
using JointPositions = JointMatrix;

// Kinematic-tree traversal mapping pose parameters to the 21 absolute joint
// positions. Throws Error(InvalidInput) on non-finite parameters.
JointPositions forward_kinematics(const Skeleton& skeleton, const HandPose& pose);

// Analytic 63x26 derivative of all joint positions w.r.t. all parameters.
// Row layout: 3 rows (x, y, z) per joint in joint order; column layout
// matches HandPose::to_params (t, R, theta).
PoseJacobian jacobian(const Skeleton& skeleton, const HandPose& pose);

// Internal evaluation shared by the energy terms and the solver: positions
// in the root (pre-global-transform) frame, world positions, the global
// rotation matrix, and per-DOF world-frame axes/pivots.
struct PoseEval {
  JointMatrix root_frame;   // q_j: articulated positions, identity global pose
  JointMatrix world;        // t + R * q_j
  Mat3 global_rotation;
  PoseJacobian jac;         // filled only when requested
  bool has_jacobian = false;
};

PoseEval evaluate_pose(const Skeleton& skeleton, const HandPose& pose,
                       bool with_jacobian);

// Per-user bone-length adaptation from >= 30 frames of 2D detections of a
// hand held parallel to the image plane. Relative bone lengths are averaged
// over the frames; absolute scale is anchored so the wrist->middle-MCP
// length equals the template's.
Skeleton calibrate_bone_lengths(const std::vector<JointMatrix2d>& detections,
                                const Skeleton& template_skeleton);

}  // namespace kinefit
