#include "kinefit/camera.hpp"

#include <cmath>

namespace kinefit {

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0))
    throw Error(ErrorCode::InvalidInput, "camera focal lengths must be positive");
  if (width <= 0 || height <= 0)
    throw Error(ErrorCode::InvalidInput, "camera image size must be positive");
  if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height))
    throw Error(ErrorCode::InvalidInput, "camera principal point outside image");
}

Vec2 project(const CameraIntrinsics& cam, const Vec3& p) {
  if (!(p.z() > kMinProjectionDepth))
    throw Error(ErrorCode::BehindCamera, "point at or behind the camera plane");
  return {cam.fx * p.x() / p.z() + cam.cx, cam.fy * p.y() / p.z() + cam.cy};
}

Eigen::Matrix<double, 2, 3> project_jacobian(const CameraIntrinsics& cam,
                                             const Vec3& p) {
  if (!(p.z() > kMinProjectionDepth))
    throw Error(ErrorCode::BehindCamera, "point at or behind the camera plane");
  const double inv_z = 1.0 / p.z();
  Eigen::Matrix<double, 2, 3> jac;
  jac << cam.fx * inv_z, 0.0, -cam.fx * p.x() * inv_z * inv_z,
         0.0, cam.fy * inv_z, -cam.fy * p.y() * inv_z * inv_z;
  return jac;
}

}  // namespace kinefit
