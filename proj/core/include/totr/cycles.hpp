#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "totr/kinematics.hpp"

namespace totr {

/// Low-pass filter: forward real FFT, zero every bin k > floor(cutoff * T/2),
/// inverse FFT. The DC bin is always kept.
std::vector<double> smooth_signal(std::span<const double> signal, double cutoff = 0.05);

/// Half-open frame range [begin, end).
struct FrameRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  [[nodiscard]] std::size_t length() const { return end - begin; }
  friend bool operator==(const FrameRange&, const FrameRange&) = default;
};

struct PeakOptions {
  /// Threshold = mean + threshold_sd * standard deviation of the signal.
  double threshold_sd = 0.5;
  /// Minimum peak spacing as a fraction of the expected peak period. The
  /// period is estimated from the dominant non-DC frequency of the signal
  /// unless given explicitly.
  double min_distance_fraction = 0.25;
  std::optional<double> expected_period;
};

/// Strict local maxima above the adaptive threshold; plateaus count once at
/// their first sample. Of two peaks closer than the minimum distance the
/// higher one is kept.
std::vector<std::size_t> find_peaks(std::span<const double> signal, const PeakOptions& options = {});

/// Groups peaks into cycles: cycle c spans [peak[c*n], peak[(c+1)*n]) for
/// n = peaks_per_cycle. Throws DataError when fewer than n + 1 peaks exist.
std::vector<FrameRange> detect_cycles(std::span<const double> smoothed, std::size_t peaks_per_cycle,
                                      const PeakOptions& options = {});

/// Dominant period in frames from the largest non-DC FFT magnitude.
double dominant_period(std::span<const double> signal);

/// Linear interpolation of every channel onto `target_frames` equispaced
/// points from the first to the last frame; endpoints are kept exactly.
MotionSequence resample_cycle(const MotionSequence& cycle, std::size_t target_frames);

struct ReferenceCycle {
  MotionSequence angles;
  std::size_t length_frames = 0;
  std::size_t source_cycle_count = 0;
  /// T_ref x S x 3 per-timestep standard deviation (population, divisor n).
  Tensor per_timestep_std;
};

/// Resamples every cycle to `target_frames` and averages per timestep.
/// The root track, when present on all cycles, is averaged the same way.
ReferenceCycle build_reference(std::span<const MotionSequence> cycles, std::size_t target_frames);

/// Median of the cycle lengths, rounded half up.
std::size_t median_length(std::span<const FrameRange> cycles);

/// The last `prefix_frames` frames of the reference followed by the whole
/// reference.
MotionSequence extend_reference(const ReferenceCycle& ref, std::size_t prefix_frames);

struct PrepOptions {
  std::size_t segment = 0;  ///< angle channel used for segmentation
  std::size_t axis = 2;
  std::size_t peaks_per_cycle = 1;
  double cutoff = 0.05;
  PeakOptions peaks;
  /// Indices into the detected cycles; all of them when empty.
  std::vector<std::size_t> cycle_selection;
  /// Reference length; the median selected cycle length when unset.
  std::optional<std::size_t> target_frames;
};

struct Preparation {
  Skeleton skeleton;  ///< input skeleton with median segment lengths
  MotionSequence angles;
  std::vector<FrameRange> cycles;  ///< every detected cycle
  std::vector<std::size_t> selected;
  ReferenceCycle reference;
};

/// Cartesian motion to reference cycle: joint angles, smoothing of one angle
/// channel, cycle detection, then the mean of the selected cycles.
Preparation prepare_reference(const MotionSequence& cartesian, const Skeleton& skel, const PrepOptions& options);

}  // namespace totr
