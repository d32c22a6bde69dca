#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <unistd.h>

#include "kinefit/io.hpp"
#include "support.hpp"

using namespace kinefit;

namespace {

const Skeleton& skel() {
  static const Skeleton s = Skeleton::default_hand();
  return s;
}

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("kinefit_io_test_" + std::to_string(::getpid()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

std::vector<TimedPrediction> sample_stream(int frames, uint64_t seed) {
  std::mt19937_64 rng(seed);
  CameraIntrinsics cam;
  std::vector<TimedPrediction> stream;
  for (int f = 0; f < frames; ++f) {
    TimedPrediction timed;
    timed.timestamp = f / 50.0;
    timed.prediction =
        testing::exact_prediction(skel(), cam, testing::random_pose(rng, skel()));
    stream.push_back(timed);
  }
  return stream;
}

}  // namespace

TEST_CASE("prediction streams round-trip losslessly") {
  TempDir dir;
  const auto stream = sample_stream(7, 1);
  const std::string path = dir.file("pred.jsonl");
  write_prediction_stream(path, stream);
  const auto back = read_prediction_stream(path);
  REQUIRE(back.size() == stream.size());
  for (std::size_t f = 0; f < stream.size(); ++f) {
    CHECK(back[f].timestamp == stream[f].timestamp);
    CHECK(back[f].prediction.u == stream[f].prediction.u);
    CHECK(back[f].prediction.omega == stream[f].prediction.omega);
    CHECK(back[f].prediction.x == stream[f].prediction.x);
  }

  // a second write of what was read is byte-identical
  const std::string path2 = dir.file("pred2.jsonl");
  write_prediction_stream(path2, back);
  std::ifstream a(path), b(path2);
  std::stringstream sa, sb;
  sa << a.rdbuf();
  sb << b.rdbuf();
  CHECK(sa.str() == sb.str());
}

TEST_CASE("wrong joint count is a schema error naming the line") {
  TempDir dir;
  const std::string path = dir.file("short.jsonl");
  {
    auto stream = sample_stream(2, 2);
    write_prediction_stream(path, stream);
    // truncate u on line 2 to 20 joints
    std::ifstream in(path);
    std::string line1, line2;
    std::getline(in, line1);
    std::getline(in, line2);
    in.close();
    auto doc = nlohmann::json::parse(line2);
    doc["u"].erase(20);
    std::ofstream out(path);
    out << line1 << '\n' << doc.dump() << '\n';
  }
  CHECK_THROWS_WITH_AS(read_prediction_stream(path), doctest::Contains(":2:"),
                       Error);
  try {
    read_prediction_stream(path);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SchemaError);
  }
}

TEST_CASE("malformed JSON is a parse error naming the line") {
  TempDir dir;
  const std::string path = dir.file("broken.jsonl");
  {
    auto stream = sample_stream(1, 3);
    write_prediction_stream(path, stream);
    std::ofstream out(path, std::ios::app);
    out << "{not json\n";
  }
  CHECK_THROWS_WITH_AS(read_prediction_stream(path), doctest::Contains(":2:"),
                       Error);
  try {
    read_prediction_stream(path);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ParseError);
  }
}

TEST_CASE("off-convention x is re-normalized on load") {
  TempDir dir;
  auto stream = sample_stream(3, 4);
  for (auto& timed : stream) timed.prediction.x *= 2.0;  // break the convention
  const std::string path = dir.file("scaled.jsonl");
  write_prediction_stream(path, stream);
  const auto back = read_prediction_stream(path);
  for (const auto& timed : back) {
    CHECK(std::abs(timed.prediction.x.row(kWrist).norm() - 1.0) < 1e-12);
    CHECK(timed.prediction.x.row(kMiddleMcp).norm() == 0.0);
  }
}

TEST_CASE("missing file is an io error") {
  CHECK_THROWS_AS(read_prediction_stream("/nonexistent/path.jsonl"), Error);
  try {
    read_prediction_stream("/nonexistent/path.jsonl");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::IoError);
  }
}

TEST_CASE("ground-truth and trajectory streams round-trip") {
  TempDir dir;
  std::mt19937_64 rng(5);
  CameraIntrinsics cam;

  std::vector<GroundTruthFrame> gt;
  std::vector<TrackedFrame> trajectory;
  for (int f = 0; f < 4; ++f) {
    const HandPose pose = testing::random_pose(rng, skel());
    GroundTruthFrame frame;
    frame.timestamp = f * 0.02;
    frame.pose = pose;
    frame.joints = forward_kinematics(skel(), pose);
    for (int j = 0; j < kJointCount; ++j)
      frame.joints_2d.row(j) =
          project(cam, frame.joints.row(j).transpose()).transpose();
    gt.push_back(frame);

    TrackedFrame tracked;
    tracked.timestamp = frame.timestamp;
    tracked.pose = pose;
    tracked.joints_world = frame.joints;
    tracked.joints_2d = frame.joints_2d;
    tracked.energy = 0.25 * f;
    tracked.bbox = {320.0, 240.0, 480.0};
    tracked.degraded = f == 2;
    trajectory.push_back(tracked);
  }

  write_ground_truth_stream(dir.file("gt.jsonl"), gt);
  const auto gt_back = read_ground_truth_stream(dir.file("gt.jsonl"));
  REQUIRE(gt_back.size() == gt.size());
  for (std::size_t f = 0; f < gt.size(); ++f) {
    CHECK(gt_back[f].pose.to_params() == gt[f].pose.to_params());
    CHECK(gt_back[f].joints == gt[f].joints);
    CHECK(gt_back[f].joints_2d == gt[f].joints_2d);
  }

  write_trajectory(dir.file("traj.jsonl"), trajectory);
  const auto traj_back = read_trajectory(dir.file("traj.jsonl"));
  REQUIRE(traj_back.size() == trajectory.size());
  for (std::size_t f = 0; f < trajectory.size(); ++f) {
    CHECK(traj_back[f].pose.to_params() == trajectory[f].pose.to_params());
    CHECK(traj_back[f].joints_world == trajectory[f].joints_world);
    CHECK(traj_back[f].energy == trajectory[f].energy);
    CHECK(traj_back[f].bbox.side == trajectory[f].bbox.side);
    CHECK(traj_back[f].degraded == trajectory[f].degraded);
  }
}

TEST_CASE("pck csv round-trips at full precision") {
  TempDir dir;
  PckCurve curve;
  curve.thresholds = {5.0, 10.0, 15.0};
  curve.fractions = {1.0 / 3.0, 0.9950248756218906, 1.0};
  write_pck_csv(dir.file("pck.csv"), curve);
  const PckCurve back = read_pck_csv(dir.file("pck.csv"));
  REQUIRE(back.thresholds.size() == 3);
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(back.thresholds[k] == curve.thresholds[k]);
    CHECK(back.fractions[k] == curve.fractions[k]);
  }
}

TEST_CASE("run config parses sections and resolves the skeleton path") {
  TempDir dir;
  skel().save_json(dir.file("hand.json"));
  {
    std::ofstream out(dir.file("config.json"));
    out << R"({
      "skeleton": "hand.json",
      "intrinsics": {"fx": 600.0, "fy": 610.0, "cx": 321.0, "cy": 239.0, "width": 640, "height": 480},
      "solver": {"max_iters": 120, "step_size": 0.8, "step_decay": 0.6, "grad_tol": 1e-8},
      "weights": {"w2d": 2e-4, "w3d": 1.5, "wlimits": 8.0, "wtemp": 0.05},
      "filter": {"min_cutoff": 1.5, "beta": 0.25, "d_cutoff": 0.9, "filter_2d": false, "filter_3d": true},
      "mode": "track"
    })";
  }
  const RunConfig config = load_run_config(dir.file("config.json"));
  CHECK(config.skeleton_path == dir.file("hand.json"));
  CHECK(config.intrinsics.fx == 600.0);
  CHECK(config.solver.max_iters == 120);
  CHECK(config.solver.weights.w3d == 1.5);
  CHECK(config.filter.beta == 0.25);
  CHECK_FALSE(config.filter_2d);
  CHECK(config.filter_3d);
  CHECK_NOTHROW(Skeleton::load_json(config.skeleton_path));
}

TEST_CASE("run config defaults apply when sections are missing") {
  TempDir dir;
  skel().save_json(dir.file("hand.json"));
  {
    std::ofstream out(dir.file("config.json"));
    out << R"({"skeleton": "hand.json"})";
  }
  const RunConfig config = load_run_config(dir.file("config.json"));
  CHECK(config.solver.weights.w2d == 1e-4);
  CHECK(config.solver.weights.wtemp == 0.1);
  CHECK(config.intrinsics.fx == 500.0);
  CHECK(config.filter.min_cutoff == 1.0);
}

TEST_CASE("run config errors") {
  TempDir dir;
  skel().save_json(dir.file("hand.json"));

  {
    std::ofstream out(dir.file("no_skeleton.json"));
    out << R"({"intrinsics": {}})";
  }
  CHECK_THROWS_AS(load_run_config(dir.file("no_skeleton.json")), Error);

  {
    std::ofstream out(dir.file("missing_ref.json"));
    out << R"({"skeleton": "absent.json"})";
  }
  CHECK_THROWS_AS(load_run_config(dir.file("missing_ref.json")), Error);

  {
    std::ofstream out(dir.file("bad_mode.json"));
    out << R"({"skeleton": "hand.json", "mode": "train"})";
  }
  CHECK_THROWS_AS(load_run_config(dir.file("bad_mode.json")), Error);
  try {
    load_run_config(dir.file("bad_mode.json"));
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SchemaError);
  }
}
