#pragma once

// Internal JSON helpers shared by the stream and script serializers.

#include <nlohmann/json.hpp>

#include <cmath>
#include <limits>
#include <vector>

#include "kinefit/hand_model.hpp"
#include "kinefit/types.hpp"

namespace kinefit::detail {

using ordered_json = nlohmann::ordered_json;

// NaN has no JSON representation; null stands in for it.
inline double json_double(const ordered_json& value) {
  if (value.is_null()) return std::numeric_limits<double>::quiet_NaN();
  return value.get<double>();
}

inline ordered_json pose_to_json(const HandPose& pose) {
  ordered_json p;
  p["t"] = {pose.translation.x(), pose.translation.y(), pose.translation.z()};
  p["R"] = {pose.rotation.x(), pose.rotation.y(), pose.rotation.z()};
  p["theta"] = std::vector<double>(pose.articulation.data(),
                                   pose.articulation.data() + kThetaCount);
  return p;
}

inline HandPose pose_from_json(const ordered_json& p) {
  HandPose pose;
  const ordered_json& t = p.at("t");
  const ordered_json& r = p.at("R");
  const ordered_json& theta = p.at("theta");
  if (!t.is_array() || t.size() != 3 || !r.is_array() || r.size() != 3 ||
      !theta.is_array() || theta.size() != kThetaCount)
    throw Error(ErrorCode::SchemaError, "malformed pose object");
  for (int k = 0; k < 3; ++k) {
    pose.translation[k] = json_double(t[k]);
    pose.rotation[k] = json_double(r[k]);
  }
  for (int k = 0; k < kThetaCount; ++k)
    pose.articulation[k] = json_double(theta[k]);
  return pose;
}

}  // namespace kinefit::detail
