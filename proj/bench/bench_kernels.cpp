// OpenMP kernels against their single-threaded references.

#include "radarfield/model.hpp"
#include "radarfield/nearest_neighbor.hpp"
#include "radarfield/sampling.hpp"
#include "radarfield/synthetic.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace radarfield;

namespace {

const Aabb kBox(Vec3(-4, -4, -1), Vec3(4, 4, 3));

std::vector<Vec3> random_points(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Vec3> out(n);
  for (auto& p : out) p = kBox.min + Vec3(u(rng), u(rng), u(rng)).cwiseProduct(kBox.max - kBox.min);
  return out;
}

RadarField& bench_model() {
  static RadarField model = [] {
    RadarField m(kBox, ModelConfig{}, 3);
    for (const auto& p : random_points(20000, 4)) m.grid().materialize(p);
    return m;
  }();
  return model;
}

void BM_SdfEval(benchmark::State& state) {
  const auto x = random_points(static_cast<std::size_t>(state.range(0)), 1);
  std::vector<double> d(x.size());
  std::vector<Vec3> n(x.size());
  const auto& model = bench_model();
  for (auto _ : state) {
    model.evaluate_sdf(x, d, n);
    benchmark::DoNotOptimize(d.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_SdfEvalSerial(benchmark::State& state) {
  const auto x = random_points(static_cast<std::size_t>(state.range(0)), 1);
  std::vector<double> d(x.size());
  std::vector<Vec3> n(x.size());
  const auto& model = bench_model();
  for (auto _ : state) {
    model.evaluate_sdf_serial(x, d, n);
    benchmark::DoNotOptimize(d.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_Nearest(benchmark::State& state) {
  const auto pts = random_points(100000, 2);
  const auto q = random_points(static_cast<std::size_t>(state.range(0)), 3);
  for (auto _ : state) benchmark::DoNotOptimize(nearest_distances(q, pts, NnMethod::Indexed));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_NearestSerial(benchmark::State& state) {
  const auto pts = random_points(100000, 2);
  const auto q = random_points(static_cast<std::size_t>(state.range(0)), 3);
  for (auto _ : state) benchmark::DoNotOptimize(nearest_distances_serial(q, pts));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

std::vector<PointCloudFrame> bench_frames() {
  std::vector<PointCloudFrame> frames(10);
  for (std::size_t f = 0; f < frames.size(); ++f) {
    frames[f].sensor_pose.translation = Vec3(static_cast<double>(f) - 10.0, 0, 2);
    frames[f].points = random_points(2000, 10 + f);
    frames[f].intensities.assign(2000, 0.5);
    frames[f].origins.assign(2000, frames[f].sensor_pose.translation);
  }
  return frames;
}

void BM_SamplePool(benchmark::State& state) {
  const auto frames = bench_frames();
  for (auto _ : state) benchmark::DoNotOptimize(build_sample_pool(frames, SamplerConfig{}, 1));
}

void BM_SamplePoolSerial(benchmark::State& state) {
  const auto frames = bench_frames();
  for (auto _ : state) benchmark::DoNotOptimize(build_sample_pool_serial(frames, SamplerConfig{}, 1));
}

synth::SceneDescription bench_scene() {
  synth::SceneDescription d;
  synth::Primitive plane, sphere;
  sphere.kind = synth::Primitive::Kind::Sphere;
  sphere.center = Vec3(0, 0, 1);
  d.scene.primitives = {plane, sphere};
  d.scene.bounds = kBox;
  return d;
}

void BM_SimulateFrame(benchmark::State& state) {
  const auto d = bench_scene();
  const auto pose = synth::look_at(Vec3(5, 0, 3), Vec3::Zero());
  for (auto _ : state) benchmark::DoNotOptimize(synth::simulate_frame(d.scene, d.radar, pose, 0.0, 1));
}

void BM_SimulateFrameSerial(benchmark::State& state) {
  const auto d = bench_scene();
  const auto pose = synth::look_at(Vec3(5, 0, 3), Vec3::Zero());
  for (auto _ : state) benchmark::DoNotOptimize(synth::simulate_frame_serial(d.scene, d.radar, pose, 0.0, 1));
}

}  // namespace

BENCHMARK(BM_SdfEval)->Arg(4096)->Arg(32768)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SdfEvalSerial)->Arg(4096)->Arg(32768)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Nearest)->Arg(10000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_NearestSerial)->Arg(10000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SamplePool)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SamplePoolSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SimulateFrame)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SimulateFrameSerial)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
