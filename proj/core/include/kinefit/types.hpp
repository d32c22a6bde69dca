#pragma once

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace kinefit {

// 21-joint hand layout. Joint order is fixed everywhere (files, matrices,
// streams): wrist first, then per finger thumb..pinky the chain MCP, PIP,
// DIP, tip.
inline constexpr int kJointCount = 21;
inline constexpr int kParamCount = 26;  // t(3) + R(3) + theta(20)
inline constexpr int kThetaCount = 20;

inline constexpr int kWrist = 0;

enum class Finger { Thumb = 0, Index = 1, Middle = 2, Ring = 3, Pinky = 4 };

constexpr int mcp_joint(Finger f) { return 1 + 4 * static_cast<int>(f); }
constexpr int pip_joint(Finger f) { return 2 + 4 * static_cast<int>(f); }
constexpr int dip_joint(Finger f) { return 3 + 4 * static_cast<int>(f); }
constexpr int tip_joint(Finger f) { return 4 + 4 * static_cast<int>(f); }

inline constexpr int kMiddleMcp = 9;  // mcp_joint(Finger::Middle)
inline constexpr std::array<int, 4> kNonThumbMcps = {5, 9, 13, 17};

inline constexpr std::array<const char*, kJointCount> kJointNames = {
    "wrist",                                                    //
    "thumb_mcp",  "thumb_pip",  "thumb_dip",  "thumb_tip",      //
    "index_mcp",  "index_pip",  "index_dip",  "index_tip",      //
    "middle_mcp", "middle_pip", "middle_dip", "middle_tip",     //
    "ring_mcp",   "ring_pip",   "ring_dip",   "ring_tip",       //
    "pinky_mcp",  "pinky_pip",  "pinky_dip",  "pinky_tip",      //
};

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using ParamVector = Eigen::Matrix<double, kParamCount, 1>;
using ThetaVector = Eigen::Matrix<double, kThetaCount, 1>;
using JointMatrix = Eigen::Matrix<double, kJointCount, 3>;    // meters
using JointMatrix2d = Eigen::Matrix<double, kJointCount, 2>;  // pixels
using PoseJacobian = Eigen::Matrix<double, 3 * kJointCount, kParamCount>;

enum class ErrorCode {
  InvalidInput,
  BehindCamera,
  DegenerateInput,
  InsufficientData,
  InvalidTimestamp,
  ScriptInvalid,
  ParseError,
  SchemaError,
  IoError,
  SolverDiverged,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// Wraps an angle to (-pi, pi].
inline double wrap_angle(double radians) {
  double a = std::remainder(radians, 2.0 * M_PI);
  if (a <= -M_PI) a += 2.0 * M_PI;  // remainder gives [-pi, pi]; want (-pi, pi]
  return a;
}

}  // namespace kinefit
