#include "totr/alignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "totr/error.hpp"

namespace totr {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double frame_cost(const double* a, const double* b, std::size_t channels) {
  double s = 0.0;
  for (std::size_t c = 0; c < channels; ++c) {
    const double d = a[c] - b[c];
    s += d * d;
  }
  return std::sqrt(s);
}

void check_inputs(std::size_t qn, std::size_t rn, std::size_t channels, std::size_t qsize, std::size_t rsize) {
  if (qn == 0 || rn == 0) throw DataError("DTW inputs must contain at least one frame");
  if (channels == 0) throw ShapeError("DTW needs at least one channel");
  if (qsize != qn * channels || rsize != rn * channels) throw ShapeError("DTW channel counts differ");
}

bool outside_band(std::size_t i, std::size_t j, std::size_t qn, std::size_t rn, std::optional<std::size_t> band) {
  if (!band) return false;
  const double centre = qn > 1 ? static_cast<double>(i) * static_cast<double>(rn - 1) / static_cast<double>(qn - 1) : 0.0;
  return std::abs(static_cast<double>(j) - centre) > static_cast<double>(*band);
}

/// One DP row update; shared by the full-matrix and the rolling variant so
/// both produce bit-identical accumulated costs.
void accumulate_row(const double* qrow, const std::vector<double>& ref, std::size_t rn, std::size_t channels,
                    const double* prev, double* cur, std::size_t i, std::size_t qn, const DtwOptions& opt) {
  const std::optional<std::size_t> band = opt.open_begin ? std::nullopt : opt.band;
  for (std::size_t j = 0; j < rn; ++j) {
    if (outside_band(i, j, qn, rn, band)) {
      cur[j] = kInf;
      continue;
    }
    const double c = frame_cost(qrow, ref.data() + j * channels, channels);
    double best;
    if (i == 0) {
      if (opt.open_begin || j == 0) {
        best = 0.0;
      } else {
        best = cur[j - 1];
      }
    } else {
      best = prev[j];
      if (j > 0) best = std::min({best, prev[j - 1], cur[j - 1]});
    }
    cur[j] = c + best;
  }
}

std::size_t cheapest_end(const double* last_row, std::size_t rn) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < rn; ++j) {
    if (last_row[j] < last_row[best]) best = j;
  }
  return best;
}

}  // namespace

WarpResult dtw(const std::vector<double>& query, std::size_t query_frames, const std::vector<double>& reference,
               std::size_t reference_frames, std::size_t channels, const DtwOptions& options) {
  const std::size_t qn = query_frames, rn = reference_frames;
  check_inputs(qn, rn, channels, query.size(), reference.size());

  std::vector<double> acc(qn * rn);
  for (std::size_t i = 0; i < qn; ++i) {
    accumulate_row(query.data() + i * channels, reference, rn, channels, i ? acc.data() + (i - 1) * rn : nullptr,
                   acc.data() + i * rn, i, qn, options);
  }

  WarpResult out;
  const double* last = acc.data() + (qn - 1) * rn;
  out.matched_end = options.open_end ? cheapest_end(last, rn) : rn - 1;
  out.distance = last[out.matched_end];
  if (!std::isfinite(out.distance)) throw NumericError("no admissible warping path within the band");

  std::size_t i = qn - 1, j = out.matched_end;
  out.path.emplace_back(i, j);
  while (i > 0 || j > 0) {
    if (i == 0) {
      if (options.open_begin) break;
      --j;
    } else if (j == 0) {
      --i;
    } else {
      const double diag = acc[(i - 1) * rn + j - 1];
      const double left = acc[i * rn + j - 1];
      const double up = acc[(i - 1) * rn + j];
      if (diag <= left && diag <= up) {
        --i;
        --j;
      } else if (left <= up) {
        --j;
      } else {
        --i;
      }
    }
    out.path.emplace_back(i, j);
  }
  std::reverse(out.path.begin(), out.path.end());
  return out;
}

std::vector<double> flatten_frames(const Tensor& frames) {
  const std::size_t T = frames.extent(0);
  const std::size_t channels = frames.size() / T;
  std::vector<double> out(frames.size());
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t t = 0; t < T; ++t) out[t * channels + c] = frames[c * T + t];
  }
  return out;
}

std::size_t locate_in_reference(const std::vector<double>& window, std::size_t window_frames,
                                const std::vector<double>& extended_ref, std::size_t ref_frames, std::size_t channels) {
  check_inputs(window_frames, ref_frames, channels, window.size(), extended_ref.size());
  if (window_frames > ref_frames) throw ShapeError("window is longer than the extended reference");
  const DtwOptions opt{.open_begin = true, .open_end = true, .band = std::nullopt};
  std::vector<double> prev(ref_frames), cur(ref_frames);
  for (std::size_t i = 0; i < window_frames; ++i) {
    accumulate_row(window.data() + i * channels, extended_ref, ref_frames, channels, i ? prev.data() : nullptr,
                   cur.data(), i, window_frames, opt);
    std::swap(prev, cur);
  }
  return cheapest_end(prev.data(), ref_frames);
}

std::size_t locate_in_reference(const MotionSequence& window, const MotionSequence& extended_ref) {
  if (window.space != MotionSpace::JointAngle || extended_ref.space != MotionSpace::JointAngle) {
    throw DataError("alignment expects joint-angle sequences");
  }
  if (window.frames.order() != extended_ref.frames.order() ||
      !std::equal(window.frames.shape().begin() + 1, window.frames.shape().end(),
                  extended_ref.frames.shape().begin() + 1)) {
    throw ShapeError("window and reference joint/axis layouts differ");
  }
  const std::size_t channels = window.frames.size() / window.frame_count();
  const auto q = flatten_frames(window.frames);
  const auto r = flatten_frames(extended_ref.frames);
  return locate_in_reference(q, window.frame_count(), r, extended_ref.frame_count(), channels);
}

}  // namespace totr
