#include "kinefit/hand_model.hpp"

#include <Eigen/Geometry>
#include <nlohmann/json.hpp>

#include <array>
#include <cmath>
#include <fstream>
#include <sstream>

namespace kinefit {

namespace {

using json = nlohmann::ordered_json;

Mat3 rot_x(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 m;
  m << 1, 0, 0, 0, c, -s, 0, s, c;
  return m;
}

Mat3 rot_y(double b) {
  const double c = std::cos(b), s = std::sin(b);
  Mat3 m;
  m << c, 0, s, 0, 1, 0, -s, 0, c;
  return m;
}

Mat3 rot_z(double c) {
  const double cc = std::cos(c), sc = std::sin(c);
  Mat3 m;
  m << cc, -sc, 0, sc, cc, 0, 0, 0, 1;
  return m;
}

Mat3 drot_x(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 m;
  m << 0, 0, 0, 0, -s, -c, 0, c, -s;
  return m;
}

Mat3 drot_y(double b) {
  const double c = std::cos(b), s = std::sin(b);
  Mat3 m;
  m << -s, 0, c, 0, 0, 0, -c, 0, -s;
  return m;
}

Mat3 drot_z(double c) {
  const double cc = std::cos(c), sc = std::sin(c);
  Mat3 m;
  m << -sc, -cc, 0, cc, -sc, 0, 0, 0, 0;
  return m;
}

double wrap_to(double angle, double reference) {
  return reference + wrap_angle(angle - reference);
}

}  // namespace

ParamVector HandPose::to_params() const {
  ParamVector p;
  p.segment<3>(0) = translation;
  p.segment<3>(3) = rotation;
  p.segment<kThetaCount>(6) = articulation;
  return p;
}

HandPose HandPose::from_params(const ParamVector& params) {
  HandPose pose;
  pose.translation = params.segment<3>(0);
  pose.rotation = params.segment<3>(3);
  pose.articulation = params.segment<kThetaCount>(6);
  return pose;
}

bool HandPose::all_finite() const {
  return translation.allFinite() && rotation.allFinite() &&
         articulation.allFinite();
}

ParamVector pose_delta(const HandPose& current, const HandPose& previous) {
  ParamVector d = current.to_params() - previous.to_params();
  for (int k = 3; k < 6; ++k) d[k] = wrap_angle(d[k]);
  return d;
}

Mat3 euler_to_matrix(const Vec3& e) {
  return rot_x(e.x()) * rot_y(e.y()) * rot_z(e.z());
}

Vec3 matrix_to_euler_near(const Mat3& r, const Vec3& reference) {
  // R = Rx(a) Ry(b) Rz(c)  =>  R(0,2) = sin b. Two branches: b and pi - b.
  const double sb = std::clamp(r(0, 2), -1.0, 1.0);
  const double b0 = std::asin(sb);
  std::array<Vec3, 2> candidates;
  int n_candidates = 0;
  for (double b : {b0, M_PI - b0}) {
    const double cb = std::cos(b);
    Vec3 e;
    if (std::abs(cb) > 1e-9) {
      e.x() = std::atan2(-r(1, 2) / cb, r(2, 2) / cb);
      e.y() = b;
      e.z() = std::atan2(-r(0, 1) / cb, r(0, 0) / cb);
    } else {
      // Gimbal lock: only a -+ c is determined; keep c at the reference.
      e.z() = reference.z();
      if (sb > 0) {
        e.y() = M_PI / 2.0;
        e.x() = std::atan2(r(1, 0), r(1, 1)) - e.z();
      } else {
        e.y() = -M_PI / 2.0;
        e.x() = e.z() - std::atan2(r(1, 0), r(1, 1));
      }
    }
    for (int k = 0; k < 3; ++k) e[k] = wrap_to(e[k], reference[k]);
    candidates[n_candidates++] = e;
  }
  if ((candidates[0] - reference).squaredNorm() <=
      (candidates[1] - reference).squaredNorm())
    return candidates[0];
  return candidates[1];
}

Skeleton Skeleton::from_joints(std::vector<SkeletonJoint> joints) {
  Skeleton s;
  s.joints_ = std::move(joints);
  s.validate();
  // Renormalize directions so downstream invariants are exact.
  for (int j = 1; j < kJointCount; ++j)
    s.joints_[j].rest_offset.normalize();
  for (auto& joint : s.joints_)
    for (auto& dof : joint.dofs) dof.axis.normalize();
  s.build_limit_vectors();
  return s;
}

void Skeleton::validate() const {
  if (static_cast<int>(joints_.size()) != kJointCount)
    throw Error(ErrorCode::SchemaError, "skeleton must have exactly 21 joints");
  std::array<bool, kThetaCount> theta_seen{};
  int dof_count = 0;
  for (int j = 0; j < kJointCount; ++j) {
    const SkeletonJoint& joint = joints_[j];
    if (joint.name != kJointNames[j])
      throw Error(ErrorCode::SchemaError,
                  "joint " + std::to_string(j) + " must be named '" +
                      kJointNames[j] + "', got '" + joint.name + "'");
    if (j == 0) {
      if (joint.parent != -1)
        throw Error(ErrorCode::SchemaError, "wrist must be the root joint");
    } else {
      if (joint.parent < 0 || joint.parent >= j)
        throw Error(ErrorCode::SchemaError,
                    "parent of " + joint.name + " must precede it");
      if (!(joint.bone_length > 0.0))
        throw Error(ErrorCode::SchemaError,
                    "bone length of " + joint.name + " must be positive");
      if (std::abs(joint.rest_offset.norm() - 1.0) > 1e-6)
        throw Error(ErrorCode::SchemaError,
                    "rest offset of " + joint.name + " must be a unit vector");
    }
    const bool is_tip = j > 0 && j % 4 == 0;
    if ((j == 0 || is_tip) && !joint.dofs.empty())
      throw Error(ErrorCode::SchemaError,
                  joint.name + " must not carry articulation DOFs");
    if (joint.dofs.size() > 2)
      throw Error(ErrorCode::SchemaError,
                  joint.name + " has more than two DOFs");
    for (const JointDof& dof : joint.dofs) {
      if (dof.theta_index < 0 || dof.theta_index >= kThetaCount)
        throw Error(ErrorCode::SchemaError, "theta_index out of range");
      if (theta_seen[dof.theta_index])
        throw Error(ErrorCode::SchemaError, "duplicate theta_index");
      theta_seen[dof.theta_index] = true;
      if (!(dof.min_rad <= dof.max_rad))
        throw Error(ErrorCode::SchemaError, "angle limits must satisfy min <= max");
      if (std::abs(dof.axis.norm() - 1.0) > 1e-6)
        throw Error(ErrorCode::SchemaError, "DOF axis must be a unit vector");
      ++dof_count;
    }
  }
  if (dof_count != kThetaCount)
    throw Error(ErrorCode::SchemaError, "articulation DOFs must total 20");
}

void Skeleton::build_limit_vectors() {
  for (const SkeletonJoint& joint : joints_) {
    for (const JointDof& dof : joint.dofs) {
      theta_min_[dof.theta_index] = dof.min_rad;
      theta_max_[dof.theta_index] = dof.max_rad;
    }
  }
}

bool Skeleton::is_ancestor(int ancestor, int joint) const {
  int p = joints_[joint].parent;
  while (p >= 0) {
    if (p == ancestor) return true;
    p = joints_[p].parent;
  }
  return false;
}

Skeleton Skeleton::with_bone_lengths(
    const Eigen::Matrix<double, kJointCount, 1>& lengths) const {
  std::vector<SkeletonJoint> joints = joints_;
  for (int j = 1; j < kJointCount; ++j) joints[j].bone_length = lengths[j];
  return from_joints(std::move(joints));
}

Skeleton Skeleton::default_hand() {
  // Average adult hand, flat open rest pose in the z = 0 plane, fingers
  // toward -y (up in image coordinates), thumb toward +x.
  struct FingerSpec {
    double splay_deg;              // rest direction angle from -y toward +x
    std::array<double, 4> bones;   // wrist->MCP, MCP->PIP, PIP->DIP, DIP->tip
    double mcp_flex_min, mcp_flex_max;
    double mcp_abd;                // symmetric abduction limit
  };
  constexpr double kDeg = M_PI / 180.0;
  const std::array<FingerSpec, 5> fingers = {{
      {50.0, {0.040, 0.045, 0.032, 0.030}, -10.0 * kDeg, 60.0 * kDeg, 45.0 * kDeg},
      {10.0, {0.092, 0.045, 0.026, 0.024}, -10.0 * kDeg, 90.0 * kDeg, 25.0 * kDeg},
      {0.0,  {0.090, 0.050, 0.030, 0.026}, -10.0 * kDeg, 90.0 * kDeg, 25.0 * kDeg},
      {-10.0, {0.085, 0.046, 0.028, 0.026}, -10.0 * kDeg, 90.0 * kDeg, 25.0 * kDeg},
      {-20.0, {0.080, 0.037, 0.021, 0.022}, -10.0 * kDeg, 90.0 * kDeg, 25.0 * kDeg},
  }};
  const double flex_min = -10.0 * kDeg;
  const double flex_max = 90.0 * kDeg;

  std::vector<SkeletonJoint> joints(kJointCount);
  joints[0] = {kJointNames[0], -1, 0.0, Vec3::Zero(), {}};

  int theta = 0;
  for (int f = 0; f < 5; ++f) {
    const FingerSpec& spec = fingers[f];
    const double phi = spec.splay_deg * kDeg;
    const Vec3 dir(std::sin(phi), -std::cos(phi), 0.0);
    const Vec3 flex_axis(std::cos(phi), std::sin(phi), 0.0);
    const Vec3 abd_axis = Vec3::UnitZ();
    const int base = 1 + 4 * f;

    joints[base] = {kJointNames[base], kWrist, spec.bones[0], dir,
                    {{flex_axis, theta, spec.mcp_flex_min, spec.mcp_flex_max},
                     {abd_axis, theta + 1, -spec.mcp_abd, spec.mcp_abd}}};
    joints[base + 1] = {kJointNames[base + 1], base, spec.bones[1], dir,
                        {{flex_axis, theta + 2, flex_min, flex_max}}};
    joints[base + 2] = {kJointNames[base + 2], base + 1, spec.bones[2], dir,
                        {{flex_axis, theta + 3, flex_min, flex_max}}};
    joints[base + 3] = {kJointNames[base + 3], base + 2, spec.bones[3], dir, {}};
    theta += 4;
  }
  return from_joints(std::move(joints));
}

namespace {

json skeleton_to_json(const Skeleton& skeleton) {
  json doc;
  doc["joints"] = json::array();
  for (int j = 0; j < kJointCount; ++j) {
    const SkeletonJoint& joint = skeleton.joint(j);
    json entry;
    entry["name"] = joint.name;
    if (joint.parent < 0)
      entry["parent"] = nullptr;
    else
      entry["parent"] = skeleton.joint(joint.parent).name;
    entry["bone_length_m"] = joint.bone_length;
    entry["rest_offset"] = {joint.rest_offset.x(), joint.rest_offset.y(),
                            joint.rest_offset.z()};
    entry["dofs"] = json::array();
    for (const JointDof& dof : joint.dofs) {
      json d;
      d["axis"] = {dof.axis.x(), dof.axis.y(), dof.axis.z()};
      d["theta_index"] = dof.theta_index;
      d["min_rad"] = dof.min_rad;
      d["max_rad"] = dof.max_rad;
      entry["dofs"].push_back(d);
    }
    doc["joints"].push_back(entry);
  }
  return doc;
}

Vec3 vec3_from_json(const json& arr, const char* what) {
  if (!arr.is_array() || arr.size() != 3)
    throw Error(ErrorCode::SchemaError,
                std::string(what) + " must be an array of 3 numbers");
  return {arr[0].get<double>(), arr[1].get<double>(), arr[2].get<double>()};
}

}  // namespace

Skeleton Skeleton::from_json_string(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError,
                std::string("skeleton JSON parse error: ") + e.what());
  }
  try {
    if (!doc.contains("joints") || !doc["joints"].is_array())
      throw Error(ErrorCode::SchemaError, "skeleton JSON must contain a joints array");
    std::vector<SkeletonJoint> joints;
    std::vector<std::string> names;
    for (const json& entry : doc["joints"]) {
      SkeletonJoint joint;
      joint.name = entry.at("name").get<std::string>();
      const json& parent = entry.at("parent");
      if (parent.is_null()) {
        joint.parent = -1;
      } else {
        const std::string parent_name = parent.get<std::string>();
        joint.parent = -1;
        for (int k = 0; k < static_cast<int>(names.size()); ++k)
          if (names[k] == parent_name) joint.parent = k;
        if (joint.parent < 0)
          throw Error(ErrorCode::SchemaError,
                      "parent '" + parent_name + "' of joint '" + joint.name +
                          "' does not precede it");
      }
      joint.bone_length = entry.at("bone_length_m").get<double>();
      joint.rest_offset = vec3_from_json(entry.at("rest_offset"), "rest_offset");
      for (const json& d : entry.at("dofs")) {
        JointDof dof;
        dof.axis = vec3_from_json(d.at("axis"), "dof axis");
        dof.theta_index = d.at("theta_index").get<int>();
        dof.min_rad = d.at("min_rad").get<double>();
        dof.max_rad = d.at("max_rad").get<double>();
        joint.dofs.push_back(dof);
      }
      joints.push_back(std::move(joint));
      names.push_back(joints.back().name);
    }
    return from_joints(std::move(joints));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaError,
                std::string("skeleton JSON schema error: ") + e.what());
  }
}

Skeleton Skeleton::load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open skeleton file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return from_json_string(buffer.str());
}

std::string Skeleton::to_json_string() const {
  return skeleton_to_json(*this).dump(2) + "\n";
}

void Skeleton::save_json(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write skeleton file: " + path);
  out << to_json_string();
}

namespace {

// Traversal state shared by FK and the analytic Jacobian.
struct Traversal {
  JointMatrix q = JointMatrix::Zero();       // positions in the root frame
  std::array<Vec3, kThetaCount> axis_root;   // DOF axes in the root frame
  std::array<int, kThetaCount> pivot_joint;  // joint owning each DOF
};

Traversal traverse(const Skeleton& skeleton, const HandPose& pose) {
  Traversal tr;
  std::array<Mat3, kJointCount> orient;
  orient[0] = Mat3::Identity();
  tr.q.row(0).setZero();
  for (int j = 1; j < kJointCount; ++j) {
    const SkeletonJoint& joint = skeleton.joint(j);
    const int p = joint.parent;
    tr.q.row(j) = tr.q.row(p) +
                  (joint.bone_length * (orient[p] * joint.rest_offset)).transpose();
    Mat3 frame = orient[p];
    for (const JointDof& dof : joint.dofs) {
      tr.axis_root[dof.theta_index] = frame * dof.axis;
      tr.pivot_joint[dof.theta_index] = j;
      frame = frame * Eigen::AngleAxisd(pose.articulation[dof.theta_index],
                                        dof.axis).toRotationMatrix();
    }
    orient[j] = frame;
  }
  return tr;
}

}  // namespace

PoseEval evaluate_pose(const Skeleton& skeleton, const HandPose& pose,
                       bool with_jacobian) {
  if (!pose.all_finite())
    throw Error(ErrorCode::InvalidInput, "hand pose has non-finite parameters");

  PoseEval eval;
  const Traversal tr = traverse(skeleton, pose);
  eval.root_frame = tr.q;
  eval.global_rotation = euler_to_matrix(pose.rotation);
  eval.world = (tr.q * eval.global_rotation.transpose()).rowwise() +
               pose.translation.transpose();

  if (!with_jacobian) return eval;

  eval.jac.setZero();
  const Mat3 rx = rot_x(pose.rotation.x());
  const Mat3 ry = rot_y(pose.rotation.y());
  const Mat3 rz = rot_z(pose.rotation.z());
  const std::array<Mat3, 3> drot = {
      drot_x(pose.rotation.x()) * ry * rz,
      rx * drot_y(pose.rotation.y()) * rz,
      rx * ry * drot_z(pose.rotation.z()),
  };

  for (int j = 0; j < kJointCount; ++j) {
    const int row = 3 * j;
    eval.jac.block<3, 3>(row, 0).setIdentity();
    const Vec3 q_j = tr.q.row(j).transpose();
    for (int k = 0; k < 3; ++k)
      eval.jac.block<3, 1>(row, 3 + k) = drot[k] * q_j;
    // Articulation: a DOF moves exactly the joints strictly below its joint.
    int ancestor = skeleton.joint(j).parent;
    while (ancestor > 0) {
      for (const JointDof& dof : skeleton.joint(ancestor).dofs) {
        const Vec3 arm = q_j - tr.q.row(ancestor).transpose();
        eval.jac.block<3, 1>(row, 6 + dof.theta_index) =
            eval.global_rotation *
            tr.axis_root[dof.theta_index].cross(arm);
      }
      ancestor = skeleton.joint(ancestor).parent;
    }
  }
  eval.has_jacobian = true;
  return eval;
}

JointPositions forward_kinematics(const Skeleton& skeleton, const HandPose& pose) {
  return evaluate_pose(skeleton, pose, false).world;
}

PoseJacobian jacobian(const Skeleton& skeleton, const HandPose& pose) {
  return evaluate_pose(skeleton, pose, true).jac;
}

Skeleton calibrate_bone_lengths(const std::vector<JointMatrix2d>& detections,
                                const Skeleton& template_skeleton) {
  if (detections.size() < 30)
    throw Error(ErrorCode::InsufficientData,
                "bone-length calibration needs at least 30 frames, got " +
                    std::to_string(detections.size()));

  Eigen::Matrix<double, kJointCount, 1> ratio_sum =
      Eigen::Matrix<double, kJointCount, 1>::Zero();
  for (const JointMatrix2d& frame : detections) {
    const double anchor =
        (frame.row(kMiddleMcp) - frame.row(kWrist)).norm();
    if (anchor < 1e-12)
      throw Error(ErrorCode::DegenerateInput,
                  "zero-length measured bone at middle_mcp");
    for (int j = 1; j < kJointCount; ++j) {
      const int p = template_skeleton.joint(j).parent;
      const double len = (frame.row(j) - frame.row(p)).norm();
      if (len < 1e-12)
        throw Error(ErrorCode::DegenerateInput,
                    "zero-length measured bone at " +
                        template_skeleton.joint(j).name);
      ratio_sum[j] += len / anchor;
    }
  }

  const double anchor_length = template_skeleton.joint(kMiddleMcp).bone_length;
  Eigen::Matrix<double, kJointCount, 1> lengths =
      Eigen::Matrix<double, kJointCount, 1>::Zero();
  for (int j = 1; j < kJointCount; ++j)
    lengths[j] = ratio_sum[j] / static_cast<double>(detections.size()) *
                 anchor_length;
  return template_skeleton.with_bone_lengths(lengths);
}

}  // namespace kinefit
