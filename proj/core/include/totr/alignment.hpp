#pragma once

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "totr/kinematics.hpp"

namespace totr {

struct WarpResult {
  double distance = 0.0;
  /// (query_frame, reference_frame) pairs from the first to the last query frame.
  std::vector<std::pair<std::size_t, std::size_t>> path;
  std::size_t matched_end = 0;
};

struct DtwOptions {
  /// Query frame 0 may align with any reference frame (subsequence start).
  bool open_begin = false;
  /// The last query frame may align with any reference frame; the cheapest
  /// end wins, ties go to the smaller reference index.
  bool open_end = false;
  /// Optional Sakoe-Chiba band half-width in frames, measured against the
  /// diagonal. Ignored for open-begin alignments.
  std::optional<std::size_t> band;
};

/// Dynamic time warping of two row-major sequences (frames x channels) with
/// the symmetric step pattern {(1,0), (0,1), (1,1)}, unit weights and the
/// Euclidean distance between frames as local cost. Every cell on the path
/// contributes its cost once.
///
/// The backtrack prefers the diagonal step, then the reference step, then
/// the query step, so paths are deterministic.
WarpResult dtw(const std::vector<double>& query, std::size_t query_frames, const std::vector<double>& reference,
               std::size_t reference_frames, std::size_t channels, const DtwOptions& options = {});

/// Frames x (channels x 3) row-major copy of a motion tensor.
std::vector<double> flatten_frames(const Tensor& frames);

/// Reference frame matched with the last window frame under open-begin,
/// open-end DTW against the extended reference.
std::size_t locate_in_reference(const MotionSequence& window, const MotionSequence& extended_ref);

/// Same, on pre-flattened frames (the online path flattens the reference once).
std::size_t locate_in_reference(const std::vector<double>& window, std::size_t window_frames,
                                const std::vector<double>& extended_ref, std::size_t ref_frames, std::size_t channels);

}  // namespace totr
