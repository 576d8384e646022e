#pragma once

#include <array>
#include <cstddef>
#include <deque>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "totr/error.hpp"
#include "totr/kinematics.hpp"
#include "totr/regression.hpp"

namespace totr {

/// How the absolute root position evolves over the predicted horizon.
enum class RootPolicy {
  Hold,    ///< keep the last observed root position
  Linear,  ///< extrapolate the last observed root velocity
};

struct PipelineConfig {
  double past_seconds = 4.0;
  double future_seconds = 1.0;
  std::size_t model_stride_frames = 2;
  std::size_t update_stride_frames = 60;
  double frame_rate = 60.0;
  RegressionConfig regression = [] {
    RegressionConfig r;
    r.rank = 13;
    r.penalty = 50.0;
    return r;
  }();
  RootPolicy root_policy = RootPolicy::Hold;

  [[nodiscard]] std::size_t past_frames() const;
  [[nodiscard]] std::size_t future_frames() const;
  void validate() const;
};

/// One fitted model. `time_index` is the extended-reference frame of the
/// last input frame: the model maps frames [t - L + 1, t] to frames
/// [t - L + 1 + K, t + K], L and K being the past and future frame counts.
struct CollectionEntry {
  std::size_t time_index = 0;
  CpFactors factors;
  double residual_variance = 0.0;
};

struct CoefficientCollection {
  PipelineConfig config;
  /// Extended reference the models were fitted on (joint-angle space).
  MotionSequence extended_reference;
  /// Length of the underlying reference cycle; the extended reference is
  /// this plus the past-frame prefix.
  std::size_t reference_frames = 0;
  std::vector<CollectionEntry> entries;
};

/// Frame index into an extended reference that wraps around the cycle:
/// indices past the end continue at the start of the (un-extended) cycle.
std::size_t wrap_extended_index(std::size_t index, std::size_t extended_frames, std::size_t reference_frames);

/// Input/output tensors of the model ending at `time_index`.
std::pair<Tensor, Tensor> training_pair(const MotionSequence& extended_ref, std::size_t reference_frames,
                                        std::size_t time_index, const PipelineConfig& cfg);

/// Fits one model every `model_stride_frames` frames along the extended
/// reference, starting with the first position that has a full past window.
/// The output window shifts the input window forward by the future frame
/// count; frames past the end of the extended reference wrap around to the
/// start of the cycle, so every phase of the cycle gets a model. Each fit
/// starts from the previous position's factors.
///
/// `progress`, when set, is called after each fit with (done, total).
CoefficientCollection build_collection(const MotionSequence& extended_ref, const PipelineConfig& cfg,
                                       const std::function<void(std::size_t, std::size_t)>& progress = {});

/// Number of model positions build_collection produces.
std::size_t model_count(std::size_t extended_frames, const PipelineConfig& cfg);

/// Cyclic frame distance between an extended-reference frame and a model's
/// time index; prefix frames are mapped onto their duplicates.
std::size_t phase_distance(std::size_t frame, std::size_t time_index, std::size_t past_frames,
                           std::size_t reference_frames);

struct Selection {
  std::size_t model_index = 0;
  std::size_t matched_end = 0;
};

/// Index of the entry whose time index is nearest (cyclically) to
/// `matched_end`; ties go to the smaller time index.
std::size_t nearest_model(const CoefficientCollection& coll, std::size_t matched_end);

Selection select_coefficient(const MotionSequence& window, const CoefficientCollection& coll);

struct PredictionFrame {
  Tensor angles;       ///< S x 3 joint angles, clamped to [0, pi]
  Tensor coordinates;  ///< J x 3 Cartesian positions in meters
  std::size_t horizon_frame = 0;  ///< 1-based offset after the last observed frame
  std::size_t model_index = 0;
};

struct WindowPrediction {
  std::vector<PredictionFrame> frames;
  std::size_t clamped = 0;  ///< number of angle values clamped into [0, pi]
};

/// Contracts the window with the model, keeps the last K frames, clamps and
/// back-transforms them with the skeleton's fixed lengths.
WindowPrediction predict_window(const MotionSequence& window, const CpFactors& factors, std::size_t model_index,
                                const Skeleton& skel, const PipelineConfig& cfg);

struct PredictionBatch {
  std::size_t frame_index = 0;  ///< last observed frame the batch extends
  Selection selection;
  WindowPrediction prediction;
};

/// Byte encoding of a batch, used to compare batches exactly.
std::string encode(const PredictionBatch& batch);

class StreamGapError : public DataError {
 public:
  StreamGapError(std::size_t expected, std::size_t received);
  [[nodiscard]] std::size_t gap() const noexcept { return gap_; }

 private:
  std::size_t gap_;
};

/// Single-writer streaming predictor. Frames are pushed in order; once a
/// full past window has been observed a batch is emitted every
/// `update_stride_frames` frames.
class OnlinePredictor {
 public:
  OnlinePredictor(const CoefficientCollection& coll, Skeleton skel);

  /// `pose` is J x 3 in meters. Throws StreamGapError when `frame_index` is
  /// not the successor of the previous frame.
  std::optional<PredictionBatch> push(std::size_t frame_index, const Tensor& pose);

  [[nodiscard]] std::size_t observed() const noexcept { return observed_; }

 private:
  const CoefficientCollection& coll_;
  Skeleton skel_;
  std::vector<double> flat_reference_;
  std::size_t channels_;
  std::deque<std::vector<double>> angles_;  // per frame: S*3 angles (segment-major, axis fastest)
  std::deque<std::array<double, 3>> roots_;
  std::optional<std::size_t> last_index_;
  std::size_t observed_ = 0;
};

/// Window of the last L frames ending at `end_frame` (inclusive), converted
/// to joint angles.
MotionSequence angle_window(const MotionSequence& cartesian, std::size_t end_frame, std::size_t past_frames,
                            const Skeleton& skel);

/// Offline equivalent of one online update at `end_frame`.
PredictionBatch predict_at(const MotionSequence& cartesian, std::size_t end_frame, const CoefficientCollection& coll,
                           const Skeleton& skel);

/// Replays a Cartesian sequence through OnlinePredictor.
std::vector<PredictionBatch> run_online(const MotionSequence& cartesian, const CoefficientCollection& coll,
                                        const Skeleton& skel);

/// Versioned little-endian binary format:
///   "TOTRCOLL" | u32 version | u64 n + n bytes config JSON |
///   extended reference (u64 T, u64 S, T*S*3 f64 row-major, u8 has_root, T*3 f64) |
///   u64 entry count | per entry: u64 time index, f64 residual variance,
///   u32 input-factor count, u32 output-factor count, then every factor as
///   u64 rows, u64 cols, rows*cols f64 row-major.
void save_collection(const CoefficientCollection& coll, const std::filesystem::path& path);
CoefficientCollection load_collection(const std::filesystem::path& path);

std::string config_to_json(const PipelineConfig& cfg, std::size_t reference_frames);
PipelineConfig config_from_json(const std::string& text, std::size_t* reference_frames = nullptr);

}  // namespace totr
