#include "kinefit/sim_eval.hpp"

#include <Eigen/Geometry>
#include <nlohmann/json.hpp>

#include "json_detail.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

namespace kinefit {

namespace {

using json = nlohmann::ordered_json;
using detail::pose_from_json;
using detail::pose_to_json;

constexpr double kOcclusionSigma2d = 40.0;  // pixels

}  // namespace

void MotionScript::validate(const Skeleton& skeleton) const {
  if (keyframes.empty())
    throw Error(ErrorCode::ScriptInvalid, "motion script has no keyframes");
  double prev_t = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < keyframes.size(); ++i) {
    const Keyframe& kf = keyframes[i];
    if (!(kf.t > prev_t))
      throw Error(ErrorCode::ScriptInvalid,
                  "keyframe timestamps must be strictly increasing");
    prev_t = kf.t;
    if (!kf.pose.all_finite())
      throw Error(ErrorCode::ScriptInvalid,
                  "keyframe " + std::to_string(i) + " has non-finite pose");
    for (int d = 0; d < kThetaCount; ++d) {
      const double theta = kf.pose.articulation[d];
      if (theta < skeleton.theta_min()[d] || theta > skeleton.theta_max()[d])
        throw Error(ErrorCode::ScriptInvalid,
                    "keyframe " + std::to_string(i) +
                        " violates joint limits at theta index " +
                        std::to_string(d));
    }
  }
}

double MotionScript::start_time() const { return keyframes.front().t; }
double MotionScript::end_time() const { return keyframes.back().t; }

HandPose MotionScript::sample(double t) const {
  if (keyframes.empty())
    throw Error(ErrorCode::ScriptInvalid, "motion script has no keyframes");
  if (t <= keyframes.front().t) return keyframes.front().pose;
  if (t >= keyframes.back().t) return keyframes.back().pose;

  std::size_t hi = 1;
  while (keyframes[hi].t < t) ++hi;
  const Keyframe& a = keyframes[hi - 1];
  const Keyframe& b = keyframes[hi];
  const double alpha = (t - a.t) / (b.t - a.t);

  HandPose pose;
  pose.translation =
      (1.0 - alpha) * a.pose.translation + alpha * b.pose.translation;
  pose.articulation =
      (1.0 - alpha) * a.pose.articulation + alpha * b.pose.articulation;

  const Eigen::Quaterniond qa(euler_to_matrix(a.pose.rotation));
  const Eigen::Quaterniond qb(euler_to_matrix(b.pose.rotation));
  const Mat3 rotation = qa.slerp(alpha, qb).toRotationMatrix();
  // Reference keeps the sampled Euler trajectory on the same branch as the
  // authored keyframes.
  Vec3 reference = a.pose.rotation;
  for (int k = 0; k < 3; ++k)
    reference[k] += alpha * wrap_angle(b.pose.rotation[k] - a.pose.rotation[k]);
  pose.rotation = matrix_to_euler_near(rotation, reference);
  return pose;
}

MotionScript MotionScript::from_json_string(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError,
                std::string("motion script parse error: ") + e.what());
  }
  try {
    MotionScript script;
    for (const json& kf : doc.at("keyframes"))
      script.keyframes.push_back({kf.at("t").get<double>(),
                                  pose_from_json(kf.at("pose"))});
    return script;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaError,
                std::string("motion script schema error: ") + e.what());
  }
}

MotionScript MotionScript::load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open motion script: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return from_json_string(buffer.str());
}

std::string MotionScript::to_json_string() const {
  json doc;
  doc["keyframes"] = json::array();
  for (const Keyframe& kf : keyframes) {
    json entry;
    entry["t"] = kf.t;
    entry["pose"] = pose_to_json(kf.pose);
    doc["keyframes"].push_back(entry);
  }
  return doc.dump(2) + "\n";
}

void MotionScript::save_json(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write motion script: " + path);
  out << to_json_string();
}

void NoiseSpec::validate() const {
  if (!(sigma_2d >= 0.0) || !(sigma_3d >= 0.0))
    throw Error(ErrorCode::InvalidInput, "noise sigmas must be non-negative");
  if (!(0.0 <= omega_lo && omega_lo <= omega_hi && omega_hi <= 1.0))
    throw Error(ErrorCode::InvalidInput,
                "omega_range must satisfy 0 <= lo <= hi <= 1");
  if (!(occlusion_prob >= 0.0 && occlusion_prob <= 1.0))
    throw Error(ErrorCode::InvalidInput, "occlusion_prob must be in [0, 1]");
}

NoiseSpec NoiseSpec::from_json_string(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError,
                std::string("noise spec parse error: ") + e.what());
  }
  try {
    NoiseSpec spec;
    spec.sigma_2d = doc.value("sigma_2d", 0.0);
    spec.sigma_3d = doc.value("sigma_3d", 0.0);
    if (doc.contains("omega_range")) {
      const json& range = doc["omega_range"];
      if (!range.is_array() || range.size() != 2)
        throw Error(ErrorCode::SchemaError, "omega_range must be [lo, hi]");
      spec.omega_lo = range[0].get<double>();
      spec.omega_hi = range[1].get<double>();
    }
    spec.occlusion_prob = doc.value("occlusion_prob", 0.0);
    spec.seed = doc.value("seed", std::uint64_t{0});
    spec.validate();
    return spec;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaError,
                std::string("noise spec schema error: ") + e.what());
  }
}

NoiseSpec NoiseSpec::load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open noise spec: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return from_json_string(buffer.str());
}

std::string NoiseSpec::to_json_string() const {
  json doc;
  doc["sigma_2d"] = sigma_2d;
  doc["sigma_3d"] = sigma_3d;
  doc["omega_range"] = {omega_lo, omega_hi};
  doc["occlusion_prob"] = occlusion_prob;
  doc["seed"] = seed;
  return doc.dump(2) + "\n";
}

void NoiseSpec::save_json(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write noise spec: " + path);
  out << to_json_string();
}

std::vector<SimFrame> synthesize_predictions(const Skeleton& skeleton,
                                             const CameraIntrinsics& cam,
                                             const MotionScript& script,
                                             const NoiseSpec& noise, double fps) {
  script.validate(skeleton);
  noise.validate();
  cam.validate();
  if (!(fps > 0.0))
    throw Error(ErrorCode::InvalidInput, "fps must be positive");

  std::mt19937_64 rng(noise.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<SimFrame> frames;
  const double t0 = script.start_time();
  const double t_end = script.end_time();
  for (int k = 0;; ++k) {
    const double t = t0 + k / fps;
    if (t > t_end + 1e-9) break;

    SimFrame frame;
    frame.t = t;
    frame.gt_pose = script.sample(t);
    frame.gt_joints = forward_kinematics(skeleton, frame.gt_pose);
    for (int j = 0; j < kJointCount; ++j) {
      if (!(frame.gt_joints(j, 2) > kMinProjectionDepth))
        throw Error(ErrorCode::ScriptInvalid,
                    "joint behind camera at frame " + std::to_string(k));
      frame.gt_joints_2d.row(j) =
          project(cam, frame.gt_joints.row(j).transpose()).transpose();
    }

    const double scale =
        (frame.gt_joints.row(kWrist) - frame.gt_joints.row(kMiddleMcp)).norm();
    const JointMatrix x_exact =
        (frame.gt_joints.rowwise() - frame.gt_joints.row(kMiddleMcp)) / scale;

    FramePrediction& pred = frame.prediction;
    // Fixed per-joint draw order keeps streams seed-deterministic regardless
    // of parameter values.
    for (int j = 0; j < kJointCount; ++j) {
      const double n_u0 = gauss(rng), n_u1 = gauss(rng);
      const double n_x0 = gauss(rng), n_x1 = gauss(rng), n_x2 = gauss(rng);
      const double w = unit(rng);
      const double occlusion_draw = unit(rng);
      const double o0 = gauss(rng), o1 = gauss(rng);

      pred.u(j, 0) = frame.gt_joints_2d(j, 0) + noise.sigma_2d * n_u0;
      pred.u(j, 1) = frame.gt_joints_2d(j, 1) + noise.sigma_2d * n_u1;
      pred.x(j, 0) = x_exact(j, 0) + noise.sigma_3d * n_x0;
      pred.x(j, 1) = x_exact(j, 1) + noise.sigma_3d * n_x1;
      pred.x(j, 2) = x_exact(j, 2) + noise.sigma_3d * n_x2;
      pred.omega[j] = noise.omega_lo + w * (noise.omega_hi - noise.omega_lo);
      if (occlusion_draw < noise.occlusion_prob) {
        pred.omega[j] = 0.0;
        pred.u(j, 0) += kOcclusionSigma2d * o0;
        pred.u(j, 1) += kOcclusionSigma2d * o1;
      }
    }
    pred.renormalize();
    frames.push_back(std::move(frame));
  }
  return frames;
}

namespace {

PckCurve pck_from_errors(std::vector<double> errors,
                         std::vector<double> thresholds) {
  for (double& e : errors)
    if (std::isnan(e)) e = std::numeric_limits<double>::infinity();
  std::sort(errors.begin(), errors.end());
  std::sort(thresholds.begin(), thresholds.end());

  PckCurve curve;
  curve.thresholds = std::move(thresholds);
  curve.fractions.reserve(curve.thresholds.size());
  const double total = static_cast<double>(errors.size());
  for (double threshold : curve.thresholds) {
    const auto it =
        std::upper_bound(errors.begin(), errors.end(), threshold);
    curve.fractions.push_back(
        static_cast<double>(it - errors.begin()) / total);
  }
  return curve;
}

}  // namespace

std::vector<double> default_pck_thresholds_3d() {
  std::vector<double> thresholds;
  for (int mm = 5; mm <= 100; mm += 5) thresholds.push_back(mm);
  return thresholds;
}

std::vector<double> default_pck_thresholds_2d() {
  std::vector<double> thresholds;
  for (int px = 1; px <= 30; ++px) thresholds.push_back(px);
  return thresholds;
}

PckCurve pck3d(const std::vector<JointMatrix>& estimated,
               const std::vector<JointMatrix>& ground_truth,
               const std::vector<double>& thresholds_mm) {
  if (estimated.size() != ground_truth.size())
    throw Error(ErrorCode::InvalidInput,
                "estimated and ground-truth streams differ in length");
  if (estimated.empty())
    throw Error(ErrorCode::InvalidInput, "empty streams");
  std::vector<double> errors;
  errors.reserve(estimated.size() * kJointCount);
  for (std::size_t f = 0; f < estimated.size(); ++f)
    for (int j = 0; j < kJointCount; ++j)
      errors.push_back(
          (estimated[f].row(j) - ground_truth[f].row(j)).norm() * 1000.0);
  return pck_from_errors(std::move(errors), thresholds_mm);
}

PckCurve pck2d(const std::vector<JointMatrix2d>& estimated,
               const std::vector<JointMatrix2d>& ground_truth,
               const std::vector<double>& thresholds_px) {
  if (estimated.size() != ground_truth.size())
    throw Error(ErrorCode::InvalidInput,
                "estimated and ground-truth streams differ in length");
  if (estimated.empty())
    throw Error(ErrorCode::InvalidInput, "empty streams");
  std::vector<double> errors;
  errors.reserve(estimated.size() * kJointCount);
  for (std::size_t f = 0; f < estimated.size(); ++f)
    for (int j = 0; j < kJointCount; ++j)
      errors.push_back((estimated[f].row(j) - ground_truth[f].row(j)).norm());
  return pck_from_errors(std::move(errors), thresholds_px);
}

std::vector<JointMatrix> depth_normalize(const std::vector<JointMatrix>& estimated,
                                         const std::vector<double>& gt_root_z) {
  if (estimated.size() != gt_root_z.size())
    throw Error(ErrorCode::InvalidInput,
                "estimated stream and root-depth stream differ in length");
  std::vector<JointMatrix> adjusted = estimated;
  for (std::size_t f = 0; f < adjusted.size(); ++f) {
    const double est_root_z = adjusted[f](kWrist, 2);
    // (z - est_root_z) + gt_root_z makes the root depth match exactly.
    for (int j = 0; j < kJointCount; ++j)
      adjusted[f](j, 2) = (adjusted[f](j, 2) - est_root_z) + gt_root_z[f];
  }
  return adjusted;
}

}  // namespace kinefit
