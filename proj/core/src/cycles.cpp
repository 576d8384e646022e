#include "totr/cycles.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <numeric>

#include "totr/error.hpp"

namespace totr {

namespace {

struct PlanDestroy {
  void operator()(fftw_plan p) const { fftw_destroy_plan(p); }
};
using Plan = std::unique_ptr<std::remove_pointer_t<fftw_plan>, PlanDestroy>;

/// Half spectrum (T/2 + 1 bins) of a real signal.
std::vector<std::complex<double>> forward(std::span<const double> signal) {
  const int n = static_cast<int>(signal.size());
  std::vector<double> in(signal.begin(), signal.end());
  std::vector<std::complex<double>> out(signal.size() / 2 + 1);
  Plan plan(fftw_plan_dft_r2c_1d(n, in.data(), reinterpret_cast<fftw_complex*>(out.data()), FFTW_ESTIMATE));
  fftw_execute(plan.get());
  return out;
}

std::vector<double> inverse(std::vector<std::complex<double>> spectrum, std::size_t n) {
  std::vector<double> out(n);
  Plan plan(fftw_plan_dft_c2r_1d(static_cast<int>(n), reinterpret_cast<fftw_complex*>(spectrum.data()), out.data(),
                                 FFTW_ESTIMATE));
  fftw_execute(plan.get());
  for (auto& v : out) v /= static_cast<double>(n);
  return out;
}

}  // namespace

std::vector<double> smooth_signal(std::span<const double> signal, double cutoff) {
  if (signal.size() < 4) throw DataError("smoothing needs at least 4 samples");
  if (!(cutoff > 0.0 && cutoff <= 1.0)) throw DataError("cutoff must lie in (0, 1]");
  auto spectrum = forward(signal);
  const auto keep = static_cast<std::size_t>(std::floor(cutoff * static_cast<double>(signal.size() / 2)));
  for (std::size_t k = keep + 1; k < spectrum.size(); ++k) spectrum[k] = 0.0;
  return inverse(std::move(spectrum), signal.size());
}

double dominant_period(std::span<const double> signal) {
  if (signal.size() < 4) throw DataError("period estimation needs at least 4 samples");
  const auto spectrum = forward(signal);
  std::size_t best = 1;
  for (std::size_t k = 2; k < spectrum.size(); ++k) {
    if (std::abs(spectrum[k]) > std::abs(spectrum[best])) best = k;
  }
  return static_cast<double>(signal.size()) / static_cast<double>(best);
}

std::vector<std::size_t> find_peaks(std::span<const double> signal, const PeakOptions& options) {
  const std::size_t n = signal.size();
  if (n < 3) return {};
  const double mean = std::accumulate(signal.begin(), signal.end(), 0.0) / static_cast<double>(n);
  double var = 0.0;
  for (double v : signal) var += (v - mean) * (v - mean);
  const double threshold = mean + options.threshold_sd * std::sqrt(var / static_cast<double>(n));

  std::vector<std::size_t> candidates;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (!(signal[i] > signal[i - 1]) || signal[i] <= threshold) continue;
    std::size_t j = i;
    while (j + 1 < n && signal[j + 1] == signal[i]) ++j;
    if (j + 1 < n && signal[j + 1] < signal[i]) candidates.push_back(i);
    i = j;
  }

  const double period = options.expected_period ? *options.expected_period : dominant_period(signal);
  const double min_distance = options.min_distance_fraction * period;

  std::vector<std::size_t> by_height = candidates;
  std::stable_sort(by_height.begin(), by_height.end(),
                   [&](std::size_t a, std::size_t b) { return signal[a] > signal[b]; });
  std::vector<std::size_t> kept;
  for (auto c : by_height) {
    const bool close = std::any_of(kept.begin(), kept.end(), [&](std::size_t k) {
      return std::abs(static_cast<double>(k) - static_cast<double>(c)) < min_distance;
    });
    if (!close) kept.push_back(c);
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

std::vector<FrameRange> detect_cycles(std::span<const double> smoothed, std::size_t peaks_per_cycle,
                                      const PeakOptions& options) {
  if (peaks_per_cycle < 1) throw DataError("peaks_per_cycle must be at least 1");
  const auto peaks = find_peaks(smoothed, options);
  if (peaks.size() < peaks_per_cycle + 1) {
    throw DataError("found " + std::to_string(peaks.size()) + " peaks, fewer than one complete cycle of " +
                    std::to_string(peaks_per_cycle));
  }
  std::vector<FrameRange> cycles;
  for (std::size_t i = 0; i + peaks_per_cycle < peaks.size(); i += peaks_per_cycle) {
    cycles.push_back({peaks[i], peaks[i + peaks_per_cycle]});
  }
  return cycles;
}

MotionSequence resample_cycle(const MotionSequence& cycle, std::size_t target_frames) {
  if (target_frames < 2) throw DataError("resampling target must be at least 2 frames");
  const std::size_t T = cycle.frame_count();
  if (T < 2) throw DataError("cycle must have at least 2 frames");

  auto resample = [&](const Tensor& t) {
    Shape shape = t.shape();
    shape[0] = target_frames;
    Tensor out(shape);
    if (T == target_frames) return t;
    const std::size_t channels = t.size() / T;
    const double step = static_cast<double>(T - 1) / static_cast<double>(target_frames - 1);
    for (std::size_t i = 0; i < target_frames; ++i) {
      const double pos = static_cast<double>(i) * step;
      auto lo = std::min(static_cast<std::size_t>(pos), T - 2);
      double frac = pos - static_cast<double>(lo);
      if (i == target_frames - 1) {
        lo = T - 2;
        frac = 1.0;
      }
      for (std::size_t c = 0; c < channels; ++c) {
        const double a = t[c * T + lo];
        const double b = t[c * T + lo + 1];
        out[c * target_frames + i] = frac == 1.0 ? b : a + frac * (b - a);
      }
    }
    return out;
  };

  MotionSequence out{resample(cycle.frames), cycle.frame_rate, cycle.space, std::nullopt};
  if (cycle.root_track) out.root_track = resample(*cycle.root_track);
  return out;
}

ReferenceCycle build_reference(std::span<const MotionSequence> cycles, std::size_t target_frames) {
  if (cycles.empty()) throw DataError("no cycles given for the reference");
  for (const auto& c : cycles) {
    if (c.space != MotionSpace::JointAngle) throw DataError("reference cycles must be in joint-angle space");
    if (c.frames.order() != cycles.front().frames.order() ||
        !std::equal(c.frames.shape().begin() + 1, c.frames.shape().end(), cycles.front().frames.shape().begin() + 1)) {
      throw ShapeError("reference cycles have different channel layouts");
    }
  }
  std::vector<MotionSequence> resampled;
  for (const auto& c : cycles) resampled.push_back(resample_cycle(c, target_frames));
  const bool with_root = std::all_of(cycles.begin(), cycles.end(), [](const auto& c) { return c.root_track.has_value(); });

  const auto n = static_cast<double>(resampled.size());
  auto mean_of = [&](auto get) {
    Tensor sum(get(resampled.front()).shape());
    for (const auto& r : resampled) {
      const Tensor& t = get(r);
      for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += t[i];
    }
    for (auto& v : sum.data()) v /= n;
    return sum;
  };

  ReferenceCycle ref;
  ref.length_frames = target_frames;
  ref.source_cycle_count = resampled.size();
  ref.angles = {mean_of([](const MotionSequence& m) -> const Tensor& { return m.frames; }), cycles.front().frame_rate,
                MotionSpace::JointAngle, std::nullopt};
  if (with_root) ref.angles.root_track = mean_of([](const MotionSequence& m) -> const Tensor& { return *m.root_track; });

  ref.per_timestep_std = Tensor(ref.angles.frames.shape());
  for (const auto& r : resampled) {
    for (std::size_t i = 0; i < r.frames.size(); ++i) {
      const double d = r.frames[i] - ref.angles.frames[i];
      ref.per_timestep_std[i] += d * d;
    }
  }
  for (auto& v : ref.per_timestep_std.data()) v = std::sqrt(v / n);
  return ref;
}

std::size_t median_length(std::span<const FrameRange> cycles) {
  if (cycles.empty()) throw DataError("no cycles to take a median length of");
  std::vector<std::size_t> lengths;
  for (const auto& c : cycles) lengths.push_back(c.length());
  std::sort(lengths.begin(), lengths.end());
  const std::size_t n = lengths.size();
  if (n % 2) return lengths[n / 2];
  return (lengths[n / 2 - 1] + lengths[n / 2] + 1) / 2;
}

MotionSequence extend_reference(const ReferenceCycle& ref, std::size_t prefix_frames) {
  const std::size_t T = ref.angles.frame_count();
  if (prefix_frames > T) throw DataError("extension of " + std::to_string(prefix_frames) +
                                         " frames exceeds the reference length " + std::to_string(T));
  if (prefix_frames == 0) return ref.angles;
  return concatenate(ref.angles.slice(T - prefix_frames, T), ref.angles);
}

Preparation prepare_reference(const MotionSequence& cartesian, const Skeleton& skel, const PrepOptions& options) {
  if (options.segment >= skel.segment_count() || options.axis > 2) throw DataError("segmentation channel out of range");
  Preparation out;
  out.skeleton = fix_segment_lengths(cartesian, skel);
  out.angles = to_joint_angles(cartesian, skel).angles;
  const std::size_t T = out.angles.frame_count();
  std::vector<double> channel(T);
  for (std::size_t t = 0; t < T; ++t) channel[t] = out.angles.frames({t, options.segment, options.axis});
  out.cycles = detect_cycles(smooth_signal(channel, options.cutoff), options.peaks_per_cycle, options.peaks);

  out.selected = options.cycle_selection;
  if (out.selected.empty()) {
    out.selected.resize(out.cycles.size());
    std::iota(out.selected.begin(), out.selected.end(), std::size_t{0});
  }
  std::vector<MotionSequence> chosen;
  std::vector<FrameRange> ranges;
  for (auto c : out.selected) {
    if (c >= out.cycles.size()) {
      throw DataError("cycle " + std::to_string(c) + " selected but only " + std::to_string(out.cycles.size()) +
                      " cycles were detected");
    }
    ranges.push_back(out.cycles[c]);
    chosen.push_back(out.angles.slice(out.cycles[c].begin, out.cycles[c].end));
  }
  out.reference = build_reference(chosen, options.target_frames.value_or(median_length(ranges)));
  return out;
}

}  // namespace totr
