#pragma once

#include <Eigen/Core>

#include "kinefit/types.hpp"

namespace kinefit {

// Ideal pinhole camera. World frame equals camera frame: x right, y down,
// z along the optical axis into the scene. No lens distortion; undistortion
// is a preprocessing concern.
struct CameraIntrinsics {
  double fx = 500.0;
  double fy = 500.0;
  double cx = 320.0;
  double cy = 240.0;
  int width = 640;
  int height = 480;

  void validate() const;
};

inline constexpr double kMinProjectionDepth = 1e-6;  // meters

// Perspective projection (fx*x/z + cx, fy*y/z + cy).
// Throws Error(BehindCamera) when p.z() <= kMinProjectionDepth.
Vec2 project(const CameraIntrinsics& cam, const Vec3& p);

// Analytic 2x3 derivative of project at p. Same precondition as project.
Eigen::Matrix<double, 2, 3> project_jacobian(const CameraIntrinsics& cam,
                                             const Vec3& p);

}  // namespace kinefit
