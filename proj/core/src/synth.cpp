#include "totr/synth.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <string>

#include "totr/error.hpp"

namespace totr {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Polar angle from +z and azimuth in the xy plane, each a constant plus two
/// harmonics of the cycle phase.
struct SegmentPath {
  double polar0 = 0.0, azimuth0 = 0.0;
  double polar_amp = 0.0, azimuth_amp = 0.0;
  double polar_shift[2] = {0.0, 0.0};
  double azimuth_shift[2] = {0.0, 0.0};

  [[nodiscard]] double polar(double phase) const {
    return polar0 + polar_amp * (std::cos(kTwoPi * phase + polar_shift[0]) +
                                 std::cos(2.0 * kTwoPi * phase + polar_shift[1]) / 6.0);
  }
  [[nodiscard]] double azimuth(double phase) const {
    return azimuth0 + azimuth_amp * (std::sin(kTwoPi * phase + azimuth_shift[0]) +
                                     std::sin(2.0 * kTwoPi * phase + azimuth_shift[1]) / 3.0);
  }
};

struct Rest {
  double polar, azimuth, amp;
};

const std::map<std::string, Rest>& rest_pose() {
  static const std::map<std::string, Rest> pose{
      {"spine", {0.15, std::numbers::pi / 2, 0.05}},
      {"neck", {0.10, std::numbers::pi / 2, 0.05}},
      {"head", {0.20, std::numbers::pi / 2, 0.08}},
      {"left_shoulder", {std::numbers::pi / 2, std::numbers::pi, 0.05}},
      {"right_shoulder", {std::numbers::pi / 2, 0.0, 0.05}},
      {"left_elbow", {2.55, 0.75 * std::numbers::pi, 0.30}},
      {"right_elbow", {2.45, 0.30, 0.35}},
      {"left_hand", {1.90, std::numbers::pi / 2 + 0.3, 0.35}},
      {"right_hand", {1.60, std::numbers::pi / 2, 0.50}},
  };
  return pose;
}

std::vector<SegmentPath> motion_shape(const Skeleton& skel, std::size_t primary) {
  // Fixed stream: the shape does not depend on the config seed.
  std::mt19937_64 rng(0x5eedULL);
  std::uniform_real_distribution<double> shift(-std::numbers::pi, std::numbers::pi);
  std::vector<SegmentPath> paths(skel.segment_count());
  for (std::size_t s = 0; s < paths.size(); ++s) {
    const auto& name = skel.joints()[skel.segments()[s]].name;
    const auto it = rest_pose().find(name);
    const Rest rest = it != rest_pose().end()
                          ? it->second
                          : Rest{1.2 + 0.1 * static_cast<double>(s % 5), 0.7 * static_cast<double>(s), 0.25};
    SegmentPath& p = paths[s];
    p.polar0 = rest.polar;
    p.azimuth0 = rest.azimuth;
    p.polar_amp = rest.amp;
    p.azimuth_amp = 0.8 * rest.amp;
    for (int h = 0; h < 2; ++h) {
      p.polar_shift[h] = shift(rng);
      p.azimuth_shift[h] = shift(rng);
    }
  }
  // The primary channel's polar angle (its z direction angle) peaks at phase 0.
  paths[primary].polar_shift[0] = 0.0;
  paths[primary].polar_shift[1] = 0.0;
  return paths;
}

}  // namespace

void SynthConfig::validate() const {
  if (cycle_count == 0) throw DataError("cycle_count must be >= 1");
  if (base_period_frames < 8) throw DataError("base_period_frames must be >= 8");
  if (!(period_jitter_fraction >= 0.0 && period_jitter_fraction < 0.5)) {
    throw DataError("period_jitter_fraction must lie in [0, 0.5)");
  }
  if (!(length_jitter_fraction >= 0.0 && length_jitter_fraction < 0.5)) {
    throw DataError("length_jitter_fraction must lie in [0, 0.5)");
  }
  if (!(noise_std_cm >= 0.0) || !std::isfinite(noise_std_cm)) throw DataError("noise_std_cm must be >= 0");
  if (!(frame_rate > 0.0)) throw DataError("frame_rate must be > 0");
  if (skeleton.segment_count() == 0) throw DataError("skeleton has no segments");
  for (double l : skeleton.segment_lengths()) {
    if (!(l > 0.0)) throw DataError("skeleton segment lengths must be > 0");
  }
}

SynthChannel primary_channel(const Skeleton& skel) {
  if (skel.segment_count() == 0) throw DataError("skeleton has no segments");
  for (std::size_t s = 0; s < skel.segment_count(); ++s) {
    if (skel.joints()[skel.segments()[s]].name == "right_hand") return {s, 2};
  }
  return {skel.segment_count() - 1, 2};
}

SynthMotion generate_motion(const SynthConfig& cfg) {
  cfg.validate();
  const Skeleton& skel = cfg.skeleton;
  const std::size_t J = skel.joint_count();
  const std::size_t S = skel.segment_count();
  const std::size_t base = cfg.base_period_frames;
  const std::size_t lead = base / 2;

  std::mt19937_64 period_rng(cfg.seed);
  std::mt19937_64 length_rng(cfg.seed ^ 0x6c656e677468ULL);
  std::mt19937_64 noise_rng(cfg.seed ^ 0x6e6f697365ULL);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  const auto b = static_cast<double>(base);
  const auto shortest = static_cast<std::size_t>(std::ceil(b * (1.0 - cfg.period_jitter_fraction)));
  const auto longest = static_cast<std::size_t>(std::floor(b * (1.0 + cfg.period_jitter_fraction)));
  SynthMotion out;
  out.boundaries.push_back(lead);
  for (std::size_t c = 0; c < cfg.cycle_count; ++c) {
    auto len = static_cast<std::size_t>(std::llround(b * (1.0 + cfg.period_jitter_fraction * unit(period_rng))));
    len = std::clamp(len, std::max<std::size_t>(shortest, 2), std::max(longest, shortest));
    out.boundaries.push_back(out.boundaries.back() + len);
  }
  const std::size_t T = out.boundaries.back() + lead + 1;

  auto phase_at = [&](std::size_t t) {
    const auto& bd = out.boundaries;
    if (t < bd.front()) return (static_cast<double>(t) - static_cast<double>(bd.front())) / b;
    if (t >= bd.back()) return static_cast<double>(cfg.cycle_count) + static_cast<double>(t - bd.back()) / b;
    std::size_t c = 0;
    while (bd[c + 1] <= t) ++c;
    return static_cast<double>(c) + static_cast<double>(t - bd[c]) / static_cast<double>(bd[c + 1] - bd[c]);
  };

  const auto paths = motion_shape(skel, primary_channel(skel).segment);
  const std::vector<double> rest_lengths = skel.segment_lengths();
  out.segment_lengths = Tensor({T, S});
  Tensor frames({T, J, 3});
  for (std::size_t t = 0; t < T; ++t) {
    const double phase = phase_at(t);
    const std::size_t root = skel.root();
    frames({t, root, 0}) = 0.02 * std::sin(kTwoPi * phase);
    frames({t, root, 1}) = 0.01 * std::cos(kTwoPi * phase);
    frames({t, root, 2}) = 1.0 + 0.01 * std::sin(2.0 * kTwoPi * phase);
    for (std::size_t s = 0; s < S; ++s) {
      const std::size_t joint = skel.segments()[s];
      const std::size_t parent = *skel.joints()[joint].parent;
      double len = rest_lengths[s];
      if (cfg.length_jitter_fraction > 0.0) len *= 1.0 + cfg.length_jitter_fraction * unit(length_rng);
      out.segment_lengths({t, s}) = len;
      const double polar = paths[s].polar(phase);
      const double azimuth = paths[s].azimuth(phase);
      const double dir[3] = {std::sin(polar) * std::cos(azimuth), std::sin(polar) * std::sin(azimuth),
                             std::cos(polar)};
      for (std::size_t v = 0; v < 3; ++v) frames({t, joint, v}) = frames({t, parent, v}) + len * dir[v];
    }
  }
  if (cfg.noise_std_cm > 0.0) {
    std::normal_distribution<double> noise(0.0, cfg.noise_std_cm / 100.0);
    for (std::size_t i = 0; i < frames.size(); ++i) frames[i] += noise(noise_rng);
  }
  out.motion = {std::move(frames), cfg.frame_rate, MotionSpace::Cartesian, std::nullopt};
  return out;
}

}  // namespace totr
