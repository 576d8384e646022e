#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "totr/kinematics.hpp"

namespace totr {

/// Generator settings for repetitive upper-body motion.
///
/// The motion shape is fixed; `seed` drives the period jitter, the per-frame
/// segment length jitter and the coordinate noise.
struct SynthConfig {
  std::size_t cycle_count = 8;
  std::size_t base_period_frames = 360;
  double period_jitter_fraction = 0.1;  ///< each cycle lasts base * (1 + u), |u| <= fraction
  double noise_std_cm = 0.5;            ///< i.i.d. Gaussian noise on every coordinate
  double length_jitter_fraction = 0.0;  ///< per-frame segment lengths L * (1 + u), |u| <= fraction
  Skeleton skeleton = Skeleton::default_upper_body();
  std::uint64_t seed = 1;
  double frame_rate = 60.0;

  void validate() const;
};

struct SynthMotion {
  MotionSequence motion;  ///< Cartesian, T x J x 3
  /// cycle_count + 1 frames; cycle c spans [boundaries[c], boundaries[c + 1]).
  /// Half a base period of lead-in precedes the first boundary and follows
  /// the last one.
  std::vector<std::size_t> boundaries;
  Tensor segment_lengths;  ///< T x S true per-frame lengths before noise
};

/// The segment angle that peaks once per cycle at the cycle boundaries.
struct SynthChannel {
  std::size_t segment = 0;
  std::size_t axis = 2;
};

/// The segment ending at "right_hand" (the last segment when absent), z axis.
SynthChannel primary_channel(const Skeleton& skel);

SynthMotion generate_motion(const SynthConfig& cfg);

}  // namespace totr
