#include <benchmark/benchmark.h>

#include <random>

#include "kinefit/energy.hpp"
#include "kinefit/sim_eval.hpp"
#include "kinefit/solver.hpp"

using namespace kinefit;

namespace {

const Skeleton& skel() {
  static const Skeleton s = Skeleton::default_hand();
  return s;
}

HandPose bench_pose() {
  HandPose pose;
  pose.translation = Vec3(0.02, -0.01, 0.48);
  pose.rotation = Vec3(0.3, -0.4, 0.2);
  pose.articulation.setConstant(0.35);
  for (int d : {1, 5, 9, 13, 17}) pose.articulation[d] = 0.05;
  return pose;
}

FramePrediction bench_prediction() {
  CameraIntrinsics cam;
  const JointMatrix joints = forward_kinematics(skel(), bench_pose());
  FramePrediction pred;
  const double scale = (joints.row(kWrist) - joints.row(kMiddleMcp)).norm();
  pred.x = (joints.rowwise() - joints.row(kMiddleMcp)) / scale;
  for (int j = 0; j < kJointCount; ++j)
    pred.u.row(j) = project(cam, joints.row(j).transpose()).transpose();
  return pred;
}

}  // namespace

static void BM_ForwardKinematics(benchmark::State& state) {
  const HandPose pose = bench_pose();
  for (auto _ : state)
    benchmark::DoNotOptimize(forward_kinematics(skel(), pose));
}
BENCHMARK(BM_ForwardKinematics);

static void BM_Jacobian(benchmark::State& state) {
  const HandPose pose = bench_pose();
  for (auto _ : state) benchmark::DoNotOptimize(jacobian(skel(), pose));
}
BENCHMARK(BM_Jacobian);

static void BM_TotalEnergyWithGradient(benchmark::State& state) {
  CameraIntrinsics cam;
  const HandPose pose = bench_pose();
  const FramePrediction pred = bench_prediction();
  const RelativeTargets targets = normalize_targets(skel(), pred);
  const EnergyWeights weights;
  for (auto _ : state)
    benchmark::DoNotOptimize(evaluate_total_energy(
        skel(), pose, pred, targets, cam, weights, pose, ParamVector::Zero(),
        true));
}
BENCHMARK(BM_TotalEnergyWithGradient);

static void BM_TotalEnergyValueOnly(benchmark::State& state) {
  CameraIntrinsics cam;
  const HandPose pose = bench_pose();
  const FramePrediction pred = bench_prediction();
  const RelativeTargets targets = normalize_targets(skel(), pred);
  const EnergyWeights weights;
  for (auto _ : state)
    benchmark::DoNotOptimize(evaluate_total_energy(
        skel(), pose, pred, targets, cam, weights, pose, ParamVector::Zero(),
        false));
}
BENCHMARK(BM_TotalEnergyValueOnly);

static void BM_ProcrustesRotation(benchmark::State& state) {
  const PalmFrame zbar = model_palm_frame(skel());
  PalmFrame ztilde;
  ztilde.Z = euler_to_matrix(Vec3(0.3, -0.2, 0.5)) * zbar.Z;
  for (auto _ : state)
    benchmark::DoNotOptimize(procrustes_rotation(zbar, ztilde));
}
BENCHMARK(BM_ProcrustesRotation);

static void BM_SolveFrame(benchmark::State& state) {
  CameraIntrinsics cam;
  const FramePrediction pred = bench_prediction();
  FrameContext context;
  context.zbar = model_palm_frame(skel());
  SolverConfig config;
  config.max_iters = static_cast<int>(state.range(0));
  config.grad_tol = 0.0;  // run the full budget
  for (auto _ : state)
    benchmark::DoNotOptimize(solve_frame(skel(), pred, cam, config, context));
}
BENCHMARK(BM_SolveFrame)->Arg(10)->Arg(50)->Arg(200);

BENCHMARK_MAIN();
