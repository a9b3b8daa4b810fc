#include <benchmark/benchmark.h>

#include "geodrift/ba.hpp"
#include "geodrift/io.hpp"
#include "geodrift/pgo.hpp"
#include "geodrift/regression.hpp"
#include "geodrift/sim.hpp"
#include "instances.hpp"

namespace geodrift {
namespace {

void BM_Sim3ExpLog(benchmark::State& state) {
  testing::RandomPoses rng(1);
  const Sim3Tangent xi = rng.tangent(0.0, 3.0);
  for (auto _ : state) benchmark::DoNotOptimize(log_sim3(exp_sim3(xi)));
}
BENCHMARK(BM_Sim3ExpLog);

void BM_Sim3Compose(benchmark::State& state) {
  testing::RandomPoses rng(2);
  const Sim3 a = rng.sim3(), b = rng.sim3();
  for (auto _ : state) benchmark::DoNotOptimize(a * b);
}
BENCHMARK(BM_Sim3Compose);

void BM_PoseGraphOptimize(benchmark::State& state) {
  for (auto _ : state) {
    state.PauseTiming();
    PoseGraph g = testing::random_pose_graph(static_cast<unsigned>(state.iterations()));
    state.ResumeTiming();
    benchmark::DoNotOptimize(g.optimize());
  }
}
BENCHMARK(BM_PoseGraphOptimize)->Unit(benchmark::kMicrosecond);

void BM_BundleAdjustWindow(benchmark::State& state) {
  const testing::BaInstance base = testing::random_ba_instance(3, 0.2, 0.3);
  const BaProblemSpec spec = make_ba_spec(base.scene, base.window, BaOptions{});
  for (auto _ : state) {
    state.PauseTiming();
    Scene scene = base.scene;
    state.ResumeTiming();
    benchmark::DoNotOptimize(optimize_ba(scene, spec));
  }
}
BENCHMARK(BM_BundleAdjustWindow)->Unit(benchmark::kMillisecond);

// Full pipeline (Ours) over a canned scenario; argument = keyframes.
void BM_PipelineDemo(benchmark::State& state) {
  ScenarioSpec spec = canned_scenario("demo", 1);
  spec.keyframes = static_cast<int>(state.range(0));
  const Scenario scenario = generate(spec);
  for (auto _ : state) benchmark::DoNotOptimize(run_ablation(scenario, Ablation::kOurs).ate.average);
}
BENCHMARK(BM_PipelineDemo)->Arg(50)->Arg(100)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace geodrift

int main(int argc, char** argv) {
  geodrift::configure_logging();
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
