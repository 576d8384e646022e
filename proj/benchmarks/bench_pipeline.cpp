#include <benchmark/benchmark.h>

#include "totr/alignment.hpp"
#include "totr/cycles.hpp"
#include "totr/predictor.hpp"
#include "totr/regression.hpp"
#include "totr/synth.hpp"

using namespace totr;

namespace {

struct Setup {
  SynthMotion synth;
  ReferenceCycle ref;
  Skeleton skel = Skeleton::default_upper_body();
};

Setup make_setup(std::size_t period) {
  SynthConfig sc;
  sc.cycle_count = 2;
  sc.base_period_frames = period;
  sc.period_jitter_fraction = 0.0;
  Setup s{generate_motion(sc), {}, sc.skeleton};
  const MotionSequence angles = to_joint_angles(s.synth.motion, s.skel).angles;
  const std::vector<MotionSequence> cycle{angles.slice(s.synth.boundaries[0], s.synth.boundaries[1])};
  s.ref = build_reference(cycle, period);
  return s;
}

// One online update: DTW selection, contraction and back-transform.
// Coefficient values do not affect the cost, so random rank-13 models stand in.
void BM_OnlineUpdate(benchmark::State& state) {
  const Setup s = make_setup(static_cast<std::size_t>(state.range(0)));
  CoefficientCollection coll;
  coll.config.update_stride_frames = 1;
  coll.reference_frames = s.ref.length_frames;
  coll.extended_reference = extend_reference(s.ref, coll.config.past_frames());
  const std::size_t L = coll.config.past_frames(), S = s.skel.segment_count();
  const std::size_t n = model_count(coll.extended_reference.frame_count(), coll.config);
  for (std::size_t i = 0; i < n; ++i) {
    coll.entries.push_back({L - 1 + i * coll.config.model_stride_frames, random_factors({S, 3}, {S, 3}, 13, i), 0.0});
  }
  OnlinePredictor online(coll, s.skel);
  const std::size_t J = s.skel.joint_count();
  const std::size_t T = s.synth.motion.frame_count();
  auto pose = [&](std::size_t t) {
    const Tensor f = slice_frames(s.synth.motion.frames, t % T, t % T + 1);
    return Tensor({J, 3}, {f.data().begin(), f.data().end()});
  };
  std::size_t t = 0;
  for (; t < L - 1; ++t) (void)online.push(t, pose(t));
  for (auto _ : state) {
    benchmark::DoNotOptimize(online.push(t, pose(t)));
    ++t;
  }
  state.counters["reference_frames"] = static_cast<double>(coll.extended_reference.frame_count());
}
BENCHMARK(BM_OnlineUpdate)->Arg(360)->Arg(4200)->Unit(benchmark::kMillisecond);

// DTW of a 4 s window against the extended reference.
void BM_Locate(benchmark::State& state) {
  const Setup s = make_setup(static_cast<std::size_t>(state.range(0)));
  const MotionSequence ext = extend_reference(s.ref, 240);
  const MotionSequence window = ext.slice(100, 340);
  for (auto _ : state) benchmark::DoNotOptimize(locate_in_reference(window, ext));
}
BENCHMARK(BM_Locate)->Arg(360)->Arg(4200)->Unit(benchmark::kMillisecond);

// One rank-R model fit on a 4 s window pair, from a random start.
void BM_FitModel(benchmark::State& state) {
  const Setup s = make_setup(360);
  PipelineConfig cfg;
  cfg.regression.rank = static_cast<std::size_t>(state.range(0));
  const MotionSequence ext = extend_reference(s.ref, cfg.past_frames());
  const auto [x, y] = training_pair(ext, s.ref.length_frames, cfg.past_frames() + 50, cfg);
  std::size_t sweeps = 0;
  for (auto _ : state) {
    const FitResult r = fit(x, y, cfg.regression);
    sweeps = r.sweeps;
    benchmark::DoNotOptimize(r.factors);
  }
  state.counters["sweeps"] = static_cast<double>(sweeps);
}
BENCHMARK(BM_FitModel)->Arg(5)->Arg(13)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
