#include "angiorecon/critic.hpp"
#include "angiorecon/phantom.hpp"
#include "angiorecon/reconstruct.hpp"
#include "angiorecon/render.hpp"
#include "angiorecon/rng.hpp"
#include "angiorecon/voxel.hpp"

#include <benchmark/benchmark.h>

namespace ar = angiorecon;

namespace {

ar::VoxelGrid noise_grid(int w) {
  ar::CounterRng rng(1);
  std::vector<double> v(static_cast<std::size_t>(w) * w * w);
  for (double& x : v) x = rng.uniform(0.0, 0.3);
  return ar::VoxelGrid(w, std::move(v));
}

void BM_CastRays(benchmark::State& state) {
  const int w = static_cast<int>(state.range(0));
  const auto g = ar::ImagingGeometry::standard();
  for (auto _ : state) {
    benchmark::DoNotOptimize(ar::cast_rays(ar::ViewAngles::degrees(30, 0), g, w, 32, 32, ar::ProjectionModel::perspective, 1));
  }
}
BENCHMARK(BM_CastRays)->Arg(32)->Arg(64);

void BM_ProjectSoft(benchmark::State& state) {
  const int w = static_cast<int>(state.range(0));
  const auto rays = ar::cast_rays(ar::ViewAngles::degrees(30, 0), ar::ImagingGeometry::standard(), w, 32, 32);
  const auto grid = noise_grid(w);
  for (auto _ : state) benchmark::DoNotOptimize(ar::project_soft(grid, rays, 1));
}
BENCHMARK(BM_ProjectSoft)->Arg(32)->Arg(64);

void BM_Backward(benchmark::State& state) {
  const int w = static_cast<int>(state.range(0));
  const auto rays = ar::cast_rays(ar::ViewAngles::degrees(30, 0), ar::ImagingGeometry::standard(), w, 32, 32);
  const auto grid = noise_grid(w);
  const std::vector<double> d(rays.ray_count(), 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(ar::backward(grid, rays, d, 1));
}
BENCHMARK(BM_Backward)->Arg(32)->Arg(64);

void BM_Voxelize(benchmark::State& state) {
  const auto tubes = ar::generate_phantom({}).segments;
  const auto g = ar::ImagingGeometry::standard();
  const int w = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(ar::voxelize_tubes(tubes, w, g, 1));
}
BENCHMARK(BM_Voxelize)->Arg(32)->Arg(64);

void BM_CriticStep(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::vector<Eigen::VectorXd> real, fake;
  ar::CounterRng rng(2);
  for (int i = 0; i < n; ++i) {
    real.push_back(Eigen::VectorXd::Constant(ar::kCriticInput, rng.uniform()));
    fake.push_back(Eigen::VectorXd::Constant(ar::kCriticInput, rng.uniform()));
  }
  auto p = ar::CriticParams::random(3);
  for (auto _ : state) {
    ar::critic_ascent_step(p, ar::critic_wd(real, fake, p).gradient, ar::CriticOptimizer{});
  }
}
BENCHMARK(BM_CriticStep)->Arg(16)->Arg(64);

void BM_WeakIteration(benchmark::State& state) {
  const auto g = ar::ImagingGeometry::standard();
  const auto views = ar::default_views();
  const auto gt = ar::voxelize_tubes(ar::generate_phantom({}).segments, 32, g, 1);
  const std::array<ar::SilhouetteImage, 2> targets{
      ar::project_soft(gt, ar::cast_rays(views[0], g, 32, 32, 32)),
      ar::project_soft(gt, ar::cast_rays(views[1], g, 32, 32, 32))};
  ar::ReconstructionConfig cfg;
  cfg.max_iters = 100;
  for (auto _ : state) benchmark::DoNotOptimize(ar::reconstruct_weak(targets, g, cfg));
  state.SetItemsProcessed(state.iterations() * cfg.max_iters);
}
BENCHMARK(BM_WeakIteration)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
