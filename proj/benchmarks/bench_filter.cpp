#include <benchmark/benchmark.h>

#include <memory>

#include "vguide/filter.hpp"
#include "vguide/sim.hpp"

using namespace vguide;

namespace {

struct Fixture {
  JointPlant plant{};
  FilterParams params{};
  SinusoidGait gait{0.25, 0.8};
  GuideSpec guide = make_shape(GuideShape::constant, {}, AssistanceFactor(0.25), 0.8);
  TrajectoryContext traj{&gait, DeadbeatSpline::zero(0.25, 0.8)};
  FilterWorkspace ws;
};

void BM_EvalHOmega(benchmark::State& state) {
  Fixture f;
  f.params.horizon_grid_n = static_cast<int>(state.range(0));
  JointState x{f.gait.q(0.1) + 0.02, f.gait.dq(0.1) - 0.5};
  for (auto _ : state) {
    auto bv = eval_h_omega(f.params, f.plant, f.guide, f.traj, x, 0.1, &f.ws);
    benchmark::DoNotOptimize(bv);
  }
}
BENCHMARK(BM_EvalHOmega)->Arg(16)->Arg(32)->Arg(64)->Arg(128);

void BM_FilterTick(benchmark::State& state) {
  Fixture f;
  JointState x{f.gait.q(0.3) + 0.03, f.gait.dq(0.3) + 0.4};
  std::optional<BarrierValue> prev;
  for (auto _ : state) {
    auto out = filter_torque(f.params, f.plant, f.guide, f.traj, x, 0.3, prev, &f.ws);
    prev = out.barrier;
    benchmark::DoNotOptimize(out);
  }
}
BENCHMARK(BM_FilterTick);

void BM_FlowUnderBackup(benchmark::State& state) {
  Fixture f;
  f.params.flow_dt = 1e-3;
  JointState x{f.gait.q(0.0) + 0.02, f.gait.dq(0.0)};
  for (auto _ : state) {
    auto samples = flow_under_backup(f.params, f.plant, f.traj, x, 0.0, 20.0, &f.ws);
    benchmark::DoNotOptimize(samples);
  }
}
BENCHMARK(BM_FlowUnderBackup);

void BM_Episode(benchmark::State& state) {
  JointSetup js;
  js.gait = std::make_shared<SinusoidGait>(0.25, 0.8);
  js.guide_factory = make_guide_factory(GuideShape::constant, {}, 0.8);
  EpisodeConfig cfg;
  cfg.n_steps = 2;
  cfg.control_dt = 2e-3;
  cfg.xi_schedule = {{0.0, 0.5}};
  for (auto _ : state) {
    auto res = run_episode(cfg, js);
    benchmark::DoNotOptimize(res);
  }
  state.SetItemsProcessed(state.iterations() *
                          static_cast<long>(2 * 0.8 / cfg.control_dt));
}
BENCHMARK(BM_Episode)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
