#pragma once

#include "totr/cycles.hpp"
#include "totr/predictor.hpp"
#include "totr/synth.hpp"

namespace totr::test {

/// Small pipeline: 10 Hz, 2 s past, 1 s future, a 40-frame reference cycle
/// cut from noiseless synthetic motion.
struct Fixture {
  Skeleton skel = Skeleton::default_upper_body();
  SynthMotion synth;
  ReferenceCycle ref;
  MotionSequence ext;
  PipelineConfig cfg;
};

inline Fixture make_fixture(std::size_t rank = 3, double penalty = 1.0) {
  Fixture f;
  SynthConfig sc;
  sc.cycle_count = 4;
  sc.base_period_frames = 40;
  sc.period_jitter_fraction = 0.0;
  sc.noise_std_cm = 0.0;
  sc.frame_rate = 10.0;
  sc.skeleton = f.skel;
  f.synth = generate_motion(sc);
  const MotionSequence angles = to_joint_angles(f.synth.motion, f.skel).angles;
  std::vector<MotionSequence> cycles;
  for (std::size_t c = 0; c + 1 < f.synth.boundaries.size(); ++c) {
    cycles.push_back(angles.slice(f.synth.boundaries[c], f.synth.boundaries[c + 1]));
  }
  f.ref = build_reference(cycles, 40);
  f.cfg.past_seconds = 2.0;
  f.cfg.future_seconds = 1.0;
  f.cfg.frame_rate = 10.0;
  f.cfg.model_stride_frames = 2;
  f.cfg.update_stride_frames = 5;
  f.cfg.regression.rank = rank;
  f.cfg.regression.penalty = penalty;
  f.cfg.regression.max_sweeps = 200;
  f.cfg.regression.tolerance = 1e-9;
  f.ext = extend_reference(f.ref, f.cfg.past_frames());
  return f;
}

}  // namespace totr::test
