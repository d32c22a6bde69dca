#include "kinefit/io.hpp"

#include <nlohmann/json.hpp>

#include "json_detail.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

namespace kinefit {

namespace {

using json = nlohmann::ordered_json;
using detail::json_double;
using detail::pose_from_json;
using detail::pose_to_json;

template <int Cols>
json rows_to_json(const Eigen::Matrix<double, kJointCount, Cols>& m) {
  json rows = json::array();
  for (int j = 0; j < kJointCount; ++j) {
    json row = json::array();
    for (int c = 0; c < Cols; ++c) {
      const double v = m(j, c);
      if (std::isnan(v))
        row.push_back(nullptr);
      else
        row.push_back(v);
    }
    rows.push_back(row);
  }
  return rows;
}

template <int Cols>
Eigen::Matrix<double, kJointCount, Cols> rows_from_json(const json& rows,
                                                        const char* what) {
  if (!rows.is_array() || rows.size() != kJointCount)
    throw Error(ErrorCode::SchemaError,
                std::string("expected 21 joints in ") + what + ", got " +
                    std::to_string(rows.is_array() ? rows.size() : 0));
  Eigen::Matrix<double, kJointCount, Cols> m;
  for (int j = 0; j < kJointCount; ++j) {
    const json& row = rows[j];
    if (!row.is_array() || row.size() != Cols)
      throw Error(ErrorCode::SchemaError,
                  std::string("joint row in ") + what + " must have " +
                      std::to_string(Cols) + " entries");
    for (int c = 0; c < Cols; ++c) m(j, c) = json_double(row[c]);
  }
  return m;
}

std::vector<double> vector_from_json(const json& arr, const char* what) {
  if (!arr.is_array() || arr.size() != kJointCount)
    throw Error(ErrorCode::SchemaError,
                std::string("expected 21 entries in ") + what + ", got " +
                    std::to_string(arr.is_array() ? arr.size() : 0));
  std::vector<double> values(kJointCount);
  for (int j = 0; j < kJointCount; ++j) values[j] = json_double(arr[j]);
  return values;
}

// Applies fn to each non-empty line; errors are rethrown with the 1-based
// line number prefixed.
template <typename Fn>
void for_each_line(const std::string& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open file: " + path);
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    json doc;
    try {
      doc = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::ParseError,
                  path + ":" + std::to_string(line_number) + ": " + e.what());
    }
    try {
      fn(doc);
    } catch (const Error& e) {
      throw Error(e.code(), path + ":" + std::to_string(line_number) + ": " +
                                e.what());
    } catch (const json::exception& e) {
      throw Error(ErrorCode::SchemaError,
                  path + ":" + std::to_string(line_number) + ": " + e.what());
    }
  }
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write file: " + path);
  return out;
}

}  // namespace

std::vector<TimedPrediction> read_prediction_stream(const std::string& path) {
  std::vector<TimedPrediction> stream;
  for_each_line(path, [&](const json& doc) {
    TimedPrediction timed;
    timed.timestamp = doc.at("t").get<double>();
    timed.prediction.u = rows_from_json<2>(doc.at("u"), "u");
    const std::vector<double> omega = vector_from_json(doc.at("omega"), "omega");
    for (int j = 0; j < kJointCount; ++j) timed.prediction.omega[j] = omega[j];
    timed.prediction.x = rows_from_json<3>(doc.at("x"), "x");
    timed.prediction.validate();
    timed.prediction.renormalize();
    stream.push_back(std::move(timed));
  });
  return stream;
}

void write_prediction_stream(const std::string& path,
                             const std::vector<TimedPrediction>& stream) {
  std::ofstream out = open_out(path);
  for (const TimedPrediction& timed : stream) {
    json doc;
    doc["t"] = timed.timestamp;
    doc["u"] = rows_to_json<2>(timed.prediction.u);
    doc["omega"] = std::vector<double>(
        timed.prediction.omega.data(), timed.prediction.omega.data() + kJointCount);
    doc["x"] = rows_to_json<3>(timed.prediction.x);
    out << doc.dump() << '\n';
  }
}

std::vector<GroundTruthFrame> read_ground_truth_stream(const std::string& path) {
  std::vector<GroundTruthFrame> stream;
  for_each_line(path, [&](const json& doc) {
    GroundTruthFrame frame;
    frame.timestamp = doc.at("t").get<double>();
    frame.pose = pose_from_json(doc.at("pose"));
    frame.joints = rows_from_json<3>(doc.at("joints"), "joints");
    frame.joints_2d = rows_from_json<2>(doc.at("joints_2d"), "joints_2d");
    stream.push_back(std::move(frame));
  });
  return stream;
}

void write_ground_truth_stream(const std::string& path,
                               const std::vector<GroundTruthFrame>& stream) {
  std::ofstream out = open_out(path);
  for (const GroundTruthFrame& frame : stream) {
    json doc;
    doc["t"] = frame.timestamp;
    doc["pose"] = pose_to_json(frame.pose);
    doc["joints"] = rows_to_json<3>(frame.joints);
    doc["joints_2d"] = rows_to_json<2>(frame.joints_2d);
    out << doc.dump() << '\n';
  }
}

std::vector<TrackedFrame> read_trajectory(const std::string& path) {
  std::vector<TrackedFrame> frames;
  for_each_line(path, [&](const json& doc) {
    TrackedFrame frame;
    frame.timestamp = doc.at("t").get<double>();
    frame.pose = pose_from_json(doc.at("pose"));
    frame.joints_world = rows_from_json<3>(doc.at("joints"), "joints");
    frame.joints_2d = rows_from_json<2>(doc.at("joints_2d"), "joints_2d");
    frame.energy = json_double(doc.at("energy"));
    const json& bbox = doc.at("bbox");
    frame.bbox = {bbox.at("cx").get<double>(), bbox.at("cy").get<double>(),
                  bbox.at("side").get<double>()};
    frame.degraded = doc.at("degraded").get<bool>();
    frames.push_back(std::move(frame));
  });
  return frames;
}

void write_trajectory(const std::string& path,
                      const std::vector<TrackedFrame>& frames) {
  std::ofstream out = open_out(path);
  for (const TrackedFrame& frame : frames) {
    json doc;
    doc["t"] = frame.timestamp;
    doc["pose"] = pose_to_json(frame.pose);
    doc["joints"] = rows_to_json<3>(frame.joints_world);
    doc["joints_2d"] = rows_to_json<2>(frame.joints_2d);
    if (std::isnan(frame.energy))
      doc["energy"] = nullptr;
    else
      doc["energy"] = frame.energy;
    doc["bbox"] = {{"cx", frame.bbox.cx}, {"cy", frame.bbox.cy},
                   {"side", frame.bbox.side}};
    doc["degraded"] = frame.degraded;
    out << doc.dump() << '\n';
  }
}

void write_pck_csv(const std::string& path, const PckCurve& curve) {
  std::ofstream out = open_out(path);
  char buffer[96];
  for (std::size_t i = 0; i < curve.thresholds.size(); ++i) {
    std::snprintf(buffer, sizeof(buffer), "%.17g,%.17g\n", curve.thresholds[i],
                  curve.fractions[i]);
    out << buffer;
  }
}

PckCurve read_pck_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open file: " + path);
  PckCurve curve;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    double threshold = 0.0, fraction = 0.0;
    if (std::sscanf(line.c_str(), "%lf,%lf", &threshold, &fraction) != 2)
      throw Error(ErrorCode::ParseError,
                  path + ":" + std::to_string(line_number) +
                      ": expected 'threshold,fraction'");
    curve.thresholds.push_back(threshold);
    curve.fractions.push_back(fraction);
  }
  return curve;
}

TrackerConfig RunConfig::tracker_config() const {
  TrackerConfig config;
  config.solver = solver;
  config.filter = filter;
  config.filter_2d = filter_2d;
  config.filter_3d = filter_3d;
  return config;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open config file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();

  json doc;
  try {
    doc = json::parse(buffer.str());
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError,
                std::string("config parse error: ") + e.what());
  }

  RunConfig config;
  try {
    if (doc.contains("skeleton")) {
      std::filesystem::path skeleton = doc["skeleton"].get<std::string>();
      if (skeleton.is_relative())
        skeleton = std::filesystem::path(path).parent_path() / skeleton;
      config.skeleton_path = skeleton.string();
    }
    if (doc.contains("intrinsics")) {
      const json& cam = doc["intrinsics"];
      config.intrinsics.fx = cam.value("fx", config.intrinsics.fx);
      config.intrinsics.fy = cam.value("fy", config.intrinsics.fy);
      config.intrinsics.cx = cam.value("cx", config.intrinsics.cx);
      config.intrinsics.cy = cam.value("cy", config.intrinsics.cy);
      config.intrinsics.width = cam.value("width", config.intrinsics.width);
      config.intrinsics.height = cam.value("height", config.intrinsics.height);
    }
    if (doc.contains("solver")) {
      const json& solver = doc["solver"];
      config.solver.max_iters = solver.value("max_iters", config.solver.max_iters);
      config.solver.step_size = solver.value("step_size", config.solver.step_size);
      config.solver.step_decay =
          solver.value("step_decay", config.solver.step_decay);
      config.solver.grad_tol = solver.value("grad_tol", config.solver.grad_tol);
    }
    if (doc.contains("weights")) {
      const json& weights = doc["weights"];
      config.solver.weights.w2d = weights.value("w2d", config.solver.weights.w2d);
      config.solver.weights.w3d = weights.value("w3d", config.solver.weights.w3d);
      config.solver.weights.wlimits =
          weights.value("wlimits", config.solver.weights.wlimits);
      config.solver.weights.wtemp =
          weights.value("wtemp", config.solver.weights.wtemp);
    }
    if (doc.contains("filter")) {
      const json& filter = doc["filter"];
      config.filter.min_cutoff =
          filter.value("min_cutoff", config.filter.min_cutoff);
      config.filter.beta = filter.value("beta", config.filter.beta);
      config.filter.d_cutoff = filter.value("d_cutoff", config.filter.d_cutoff);
      config.filter_2d = filter.value("filter_2d", config.filter_2d);
      config.filter_3d = filter.value("filter_3d", config.filter_3d);
    }
    if (doc.contains("mode")) {
      const std::string mode = doc["mode"].get<std::string>();
      if (mode != "track" && mode != "simulate" && mode != "evaluate" &&
          mode != "calibrate")
        throw Error(ErrorCode::SchemaError, "unknown mode: " + mode);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaError,
                std::string("config schema error: ") + e.what());
  }

  config.intrinsics.validate();
  config.solver.validate();
  config.filter.validate();

  if (config.skeleton_path.empty())
    throw Error(ErrorCode::SchemaError, "config must name a skeleton file");
  if (!std::filesystem::exists(config.skeleton_path))
    throw Error(ErrorCode::IoError,
                "skeleton file does not exist: " + config.skeleton_path);
  return config;
}

}  // namespace kinefit
