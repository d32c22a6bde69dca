// End-to-end checks of the command-line surface: spawns the real binary.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <unistd.h>

#include "kinefit/io.hpp"

using namespace kinefit;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("kinefit_cli_test_" + std::to_string(::getpid()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

int run(const std::string& args) {
  const std::string command =
      std::string(KINEFIT_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(command.c_str());
  return WEXITSTATUS(status);
}

std::string write_config(const TempDir& dir) {
  const std::string path = dir.file("config.json");
  std::ofstream out(path);
  out << R"({
    "skeleton": ")" << KINEFIT_DATA_DIR << R"(/default_hand.json",
    "solver": {"max_iters": 60},
    "filter": {"filter_2d": false, "filter_3d": false}
  })";
  return path;
}

}  // namespace

TEST_CASE("simulate, track, evaluate pipeline produces a sane PCK file") {
  TempDir dir;
  const std::string config = write_config(dir);
  CHECK(run("simulate --config " + config + " --script " + KINEFIT_DATA_DIR +
            "/scripts/wave.json --noise " + KINEFIT_DATA_DIR +
            "/noise_zero.json --out " + dir.file("pred.jsonl")) == 0);
  CHECK(std::filesystem::exists(dir.file("pred.jsonl")));
  CHECK(std::filesystem::exists(dir.file("pred.gt.jsonl")));

  CHECK(run("track --config " + config + " --predictions " +
            dir.file("pred.jsonl") + " --out " + dir.file("traj.jsonl")) == 0);
  CHECK(run("evaluate --est " + dir.file("traj.jsonl") + " --gt " +
            dir.file("pred.gt.jsonl") + " --mode 3d --out " +
            dir.file("pck.csv")) == 0);

  const PckCurve curve = read_pck_csv(dir.file("pck.csv"));
  REQUIRE_FALSE(curve.thresholds.empty());
  CHECK(curve.thresholds.front() == 5.0);  // first row is the 5 mm threshold
  CHECK(curve.fractions.front() >= 0.99);
}

TEST_CASE("track with an empty predictions file writes an empty trajectory") {
  TempDir dir;
  const std::string config = write_config(dir);
  std::ofstream(dir.file("empty.jsonl")).close();
  CHECK(run("track --config " + config + " --predictions " +
            dir.file("empty.jsonl") + " --out " + dir.file("traj.jsonl")) == 0);
  CHECK(read_trajectory(dir.file("traj.jsonl")).empty());
}

TEST_CASE("evaluate with mismatched stream lengths exits with the invalid-input code") {
  TempDir dir;
  const std::string config = write_config(dir);
  REQUIRE(run("simulate --config " + config + " --script " + KINEFIT_DATA_DIR +
              "/scripts/wave.json --noise " + KINEFIT_DATA_DIR +
              "/noise_zero.json --out " + dir.file("pred.jsonl")) == 0);
  REQUIRE(run("track --config " + config + " --predictions " +
              dir.file("pred.jsonl") + " --out " + dir.file("traj.jsonl")) == 0);

  // drop the last ground-truth line
  const auto gt = read_ground_truth_stream(dir.file("pred.gt.jsonl"));
  write_ground_truth_stream(dir.file("short.gt.jsonl"),
                            {gt.begin(), gt.end() - 1});
  CHECK(run("evaluate --est " + dir.file("traj.jsonl") + " --gt " +
            dir.file("short.gt.jsonl") + " --mode 3d --out " +
            dir.file("pck.csv")) == 5);
}

TEST_CASE("missing input files exit with the io code") {
  TempDir dir;
  const std::string config = write_config(dir);
  CHECK(run("track --config " + config +
            " --predictions /nonexistent.jsonl --out " +
            dir.file("traj.jsonl")) == 2);
  CHECK(run("track --config /nonexistent_config.json --predictions x --out y") == 2);
}

TEST_CASE("unknown flags exit nonzero") {
  CHECK(run("track --no-such-flag") != 0);
  CHECK(run("frobnicate") != 0);
}

TEST_CASE("calibrate writes a skeleton derived from the stream") {
  TempDir dir;
  const std::string config = write_config(dir);
  // fronto-parallel wave-like stream: zero-noise wave script keeps the palm
  // parallel to the image plane (rotation about the optical axis only)
  REQUIRE(run("simulate --config " + config + " --script " + KINEFIT_DATA_DIR +
              "/scripts/wave.json --noise " + KINEFIT_DATA_DIR +
              "/noise_zero.json --out " + dir.file("pred.jsonl")) == 0);
  CHECK(run("calibrate --predictions " + dir.file("pred.jsonl") +
            " --skeleton-in " + KINEFIT_DATA_DIR +
            "/default_hand.json --skeleton-out " + dir.file("cal.json")) == 0);
  CHECK_NOTHROW(Skeleton::load_json(dir.file("cal.json")));
}

TEST_CASE("the KINEFIT_CONFIG environment variable supplies the config") {
  TempDir dir;
  const std::string config = write_config(dir);
  std::ofstream(dir.file("empty.jsonl")).close();
  const std::string command = "KINEFIT_CONFIG=" + config + " " +
                              std::string(KINEFIT_CLI_PATH) +
                              " track --predictions " + dir.file("empty.jsonl") +
                              " --out " + dir.file("traj.jsonl") +
                              " > /dev/null 2>&1";
  CHECK(WEXITSTATUS(std::system(command.c_str())) == 0);
}
