#include "totr/predictor.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <cmath>
#include <cstring>
#include <numbers>

#include "totr/alignment.hpp"

namespace totr {

namespace {

std::size_t to_frames(double seconds, double frame_rate) {
  return static_cast<std::size_t>(std::llround(seconds * frame_rate));
}

/// Copies frames[index(i)] for i in [0, n) of a T x S x 3 tensor.
template <typename IndexFn>
Tensor gather_frames(const Tensor& frames, std::size_t n, IndexFn index) {
  const std::size_t T = frames.extent(0);
  Shape shape = frames.shape();
  shape[0] = n;
  Tensor out(shape);
  const std::size_t channels = frames.size() / T;
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t i = 0; i < n; ++i) out[c * n + i] = frames[c * T + index(i)];
  }
  return out;
}

}  // namespace

std::size_t PipelineConfig::past_frames() const { return to_frames(past_seconds, frame_rate); }
std::size_t PipelineConfig::future_frames() const { return to_frames(future_seconds, frame_rate); }

void PipelineConfig::validate() const {
  if (!(frame_rate > 0.0)) throw DataError("frame_rate must be positive");
  if (!(future_seconds > 0.0) || future_frames() == 0) throw DataError("future horizon must span at least one frame");
  if (future_seconds > past_seconds) throw DataError("future_seconds must not exceed past_seconds");
  if (model_stride_frames < 1) throw DataError("model_stride_frames must be at least 1");
  if (update_stride_frames < 1) throw DataError("update_stride_frames must be at least 1");
  if (update_stride_frames > future_frames()) throw DataError("updates must come at most every future_seconds");
  regression.validate();
}

std::size_t wrap_extended_index(std::size_t index, std::size_t extended_frames, std::size_t reference_frames) {
  while (index >= extended_frames) index -= reference_frames;
  return index;
}

std::pair<Tensor, Tensor> training_pair(const MotionSequence& extended_ref, std::size_t reference_frames,
                                        std::size_t time_index, const PipelineConfig& cfg) {
  const std::size_t L = cfg.past_frames();
  const std::size_t K = cfg.future_frames();
  const std::size_t T = extended_ref.frame_count();
  if (time_index + 1 < L || time_index >= T) throw ShapeError("model position outside the extended reference");
  const std::size_t start = time_index + 1 - L;
  Tensor x = gather_frames(extended_ref.frames, L, [&](std::size_t i) { return start + i; });
  Tensor y = gather_frames(extended_ref.frames, L,
                           [&](std::size_t i) { return wrap_extended_index(start + K + i, T, reference_frames); });
  return {std::move(x), std::move(y)};
}

std::size_t model_count(std::size_t extended_frames, const PipelineConfig& cfg) {
  const std::size_t L = cfg.past_frames();
  if (extended_frames < L + cfg.future_frames()) return 0;
  const std::size_t ref = extended_frames - L;
  return (ref + cfg.model_stride_frames - 1) / cfg.model_stride_frames;
}

CoefficientCollection build_collection(const MotionSequence& extended_ref, const PipelineConfig& cfg,
                                       const std::function<void(std::size_t, std::size_t)>& progress) {
  cfg.validate();
  if (extended_ref.space != MotionSpace::JointAngle) throw DataError("models are fitted in joint-angle space");
  const std::size_t L = cfg.past_frames();
  const std::size_t K = cfg.future_frames();
  const std::size_t T = extended_ref.frame_count();
  if (T < L + K) {
    throw DataError("extended reference has " + std::to_string(T) + " frames, a window pair needs " +
                    std::to_string(L + K));
  }

  CoefficientCollection coll;
  coll.config = cfg;
  coll.extended_reference = extended_ref;
  coll.reference_frames = T - L;
  const std::size_t p = model_count(T, cfg);
  coll.entries.reserve(p);
  for (std::size_t i = 0; i < p; ++i) {
    const std::size_t t = L - 1 + i * cfg.model_stride_frames;
    const auto [x, y] = training_pair(extended_ref, coll.reference_frames, t, cfg);
    const CpFactors* warm = coll.entries.empty() ? nullptr : &coll.entries.back().factors;
    FitResult fit_result = fit(x, y, cfg.regression, warm);
    coll.entries.push_back({t, std::move(fit_result.factors), fit_result.residual_variance});
    if (progress) progress(i + 1, p);
  }
  return coll;
}

std::size_t phase_distance(std::size_t frame, std::size_t time_index, std::size_t past_frames,
                           std::size_t reference_frames) {
  // Frames before the last prefix frame duplicate the end of the cycle.
  const std::size_t first = past_frames - 1;
  auto phase = [&](std::size_t f) { return f < first ? f + reference_frames - first : f - first; };
  const std::size_t a = phase(frame) % reference_frames;
  const std::size_t b = phase(time_index) % reference_frames;
  const std::size_t d = a > b ? a - b : b - a;
  return std::min(d, reference_frames - d);
}

std::size_t nearest_model(const CoefficientCollection& coll, std::size_t matched_end) {
  if (coll.entries.empty()) throw DataError("coefficient collection is empty");
  const std::size_t L = coll.config.past_frames();
  std::size_t best = 0;
  std::size_t best_distance = phase_distance(matched_end, coll.entries[0].time_index, L, coll.reference_frames);
  for (std::size_t i = 1; i < coll.entries.size(); ++i) {
    const std::size_t d = phase_distance(matched_end, coll.entries[i].time_index, L, coll.reference_frames);
    if (d < best_distance) {
      best = i;
      best_distance = d;
    }
  }
  return best;
}

Selection select_coefficient(const MotionSequence& window, const CoefficientCollection& coll) {
  if (coll.entries.empty()) throw DataError("coefficient collection is empty");
  const std::size_t matched = locate_in_reference(window, coll.extended_reference);
  return {nearest_model(coll, matched), matched};
}

WindowPrediction predict_window(const MotionSequence& window, const CpFactors& factors, std::size_t model_index,
                                const Skeleton& skel, const PipelineConfig& cfg) {
  const std::size_t L = cfg.past_frames();
  const std::size_t K = cfg.future_frames();
  if (window.space != MotionSpace::JointAngle) throw DataError("prediction windows must be in joint-angle space");
  if (window.frame_count() != L) {
    throw ShapeError("window has " + std::to_string(window.frame_count()) + " frames, models expect " +
                     std::to_string(L));
  }
  if (!window.root_track) throw DataError("prediction window has no root track");

  const Tensor y = predict(window.frames, factors);
  if (y.shape() != window.frames.shape()) throw ShapeError("model output layout differs from the window layout");

  const std::size_t S = y.extent(1);
  const Tensor& root = *window.root_track;
  std::array<double, 3> last{}, velocity{};
  for (std::size_t v = 0; v < 3; ++v) {
    last[v] = root({L - 1, v});
    velocity[v] = L > 1 ? root({L - 1, v}) - root({L - 2, v}) : 0.0;
  }

  WindowPrediction out;
  MotionSequence future{Tensor({K, S, 3}), cfg.frame_rate, MotionSpace::JointAngle, Tensor({K, 3})};
  for (std::size_t h = 0; h < K; ++h) {
    for (std::size_t c = 0; c < S * 3; ++c) {
      double a = y[c * L + (L - K + h)];
      if (a < 0.0 || a > std::numbers::pi || std::isnan(a)) {
        ++out.clamped;
        a = std::isnan(a) ? 0.0 : std::clamp(a, 0.0, std::numbers::pi);
      }
      future.frames[c * K + h] = a;
    }
    const double steps = cfg.root_policy == RootPolicy::Linear ? static_cast<double>(h + 1) : 0.0;
    for (std::size_t v = 0; v < 3; ++v) (*future.root_track)({h, v}) = last[v] + steps * velocity[v];
  }
  const MotionSequence coords = from_joint_angles(future, skel);

  const std::size_t J = skel.joint_count();
  for (std::size_t h = 0; h < K; ++h) {
    PredictionFrame f{Tensor({S, 3}), Tensor({J, 3}), h + 1, model_index};
    for (std::size_t s = 0; s < S; ++s) {
      for (std::size_t v = 0; v < 3; ++v) f.angles({s, v}) = future.frames({h, s, v});
    }
    for (std::size_t j = 0; j < J; ++j) {
      for (std::size_t v = 0; v < 3; ++v) f.coordinates({j, v}) = coords.frames({h, j, v});
    }
    out.frames.push_back(std::move(f));
  }
  return out;
}

std::string encode(const PredictionBatch& batch) {
  std::string out;
  auto put = [&out](const void* p, std::size_t n) { out.append(static_cast<const char*>(p), n); };
  auto put_u64 = [&](std::uint64_t v) { put(&v, sizeof v); };
  put_u64(batch.frame_index);
  put_u64(batch.selection.model_index);
  put_u64(batch.selection.matched_end);
  put_u64(batch.prediction.clamped);
  put_u64(batch.prediction.frames.size());
  for (const auto& f : batch.prediction.frames) {
    put_u64(f.horizon_frame);
    put_u64(f.model_index);
    put(f.angles.data().data(), f.angles.size() * sizeof(double));
    put(f.coordinates.data().data(), f.coordinates.size() * sizeof(double));
  }
  return out;
}

StreamGapError::StreamGapError(std::size_t expected, std::size_t received)
    : DataError("stream gap: expected frame " + std::to_string(expected) + ", received " + std::to_string(received) +
                " (gap of " + std::to_string(received > expected ? received - expected : 0) + " frames)"),
      gap_(received > expected ? received - expected : 0) {}

OnlinePredictor::OnlinePredictor(const CoefficientCollection& coll, Skeleton skel)
    : coll_(coll),
      skel_(std::move(skel)),
      flat_reference_(flatten_frames(coll.extended_reference.frames)),
      channels_(coll.extended_reference.frames.size() / coll.extended_reference.frame_count()) {
  coll_.config.validate();
  if (coll_.entries.empty()) throw DataError("coefficient collection is empty");
  if (channels_ != skel_.segment_count() * 3) throw ShapeError("skeleton does not match the collection layout");
}

std::optional<PredictionBatch> OnlinePredictor::push(std::size_t frame_index, const Tensor& pose) {
  if (last_index_ && frame_index != *last_index_ + 1) {
    // Frames must arrive in order; a lost frame invalidates the window.
    throw StreamGapError(*last_index_ + 1, frame_index);
  }
  if (pose.shape() != Shape{skel_.joint_count(), 3}) throw ShapeError("pose must be joints x 3");

  MotionSequence single{pose.reshaped({1, skel_.joint_count(), 3}), coll_.config.frame_rate, MotionSpace::Cartesian,
                        std::nullopt};
  const AngleConversion conv = to_joint_angles(single, skel_);
  angles_.emplace_back(conv.angles.frames.data().begin(), conv.angles.frames.data().end());
  roots_.push_back({(*conv.angles.root_track)[0], (*conv.angles.root_track)[1], (*conv.angles.root_track)[2]});
  last_index_ = frame_index;
  ++observed_;

  const std::size_t L = coll_.config.past_frames();
  if (angles_.size() > L) {
    angles_.pop_front();
    roots_.pop_front();
  }
  if (observed_ < L || (observed_ - L) % coll_.config.update_stride_frames != 0) return std::nullopt;

  const std::size_t S = skel_.segment_count();
  MotionSequence window{Tensor({L, S, 3}), coll_.config.frame_rate, MotionSpace::JointAngle, Tensor({L, 3})};
  std::vector<double> flat(L * channels_);
  for (std::size_t t = 0; t < L; ++t) {
    for (std::size_t c = 0; c < channels_; ++c) {
      window.frames[c * L + t] = angles_[t][c];
      flat[t * channels_ + c] = angles_[t][c];
    }
    for (std::size_t v = 0; v < 3; ++v) (*window.root_track)[v * L + t] = roots_[t][v];
  }

  PredictionBatch batch;
  batch.frame_index = frame_index;
  batch.selection.matched_end =
      locate_in_reference(flat, L, flat_reference_, coll_.extended_reference.frame_count(), channels_);
  batch.selection.model_index = nearest_model(coll_, batch.selection.matched_end);
  batch.prediction = predict_window(window, coll_.entries[batch.selection.model_index].factors,
                                    batch.selection.model_index, skel_, coll_.config);
  return batch;
}

MotionSequence angle_window(const MotionSequence& cartesian, std::size_t end_frame, std::size_t past_frames,
                            const Skeleton& skel) {
  if (end_frame + 1 < past_frames || end_frame >= cartesian.frame_count()) {
    throw ShapeError("not enough observed frames for a full past window");
  }
  return to_joint_angles(cartesian.slice(end_frame + 1 - past_frames, end_frame + 1), skel).angles;
}

PredictionBatch predict_at(const MotionSequence& cartesian, std::size_t end_frame, const CoefficientCollection& coll,
                           const Skeleton& skel) {
  const MotionSequence window = angle_window(cartesian, end_frame, coll.config.past_frames(), skel);
  PredictionBatch batch;
  batch.frame_index = end_frame;
  batch.selection = select_coefficient(window, coll);
  batch.prediction = predict_window(window, coll.entries[batch.selection.model_index].factors,
                                    batch.selection.model_index, skel, coll.config);
  return batch;
}

std::vector<PredictionBatch> run_online(const MotionSequence& cartesian, const CoefficientCollection& coll,
                                        const Skeleton& skel) {
  if (cartesian.space != MotionSpace::Cartesian) throw DataError("the online stream carries Cartesian frames");
  OnlinePredictor online(coll, skel);
  std::vector<PredictionBatch> batches;
  const std::size_t J = skel.joint_count();
  for (std::size_t t = 0; t < cartesian.frame_count(); ++t) {
    Tensor pose({J, 3});
    for (std::size_t j = 0; j < J; ++j) {
      for (std::size_t v = 0; v < 3; ++v) pose({j, v}) = cartesian.frames({t, j, v});
    }
    if (auto batch = online.push(t, pose)) batches.push_back(std::move(*batch));
  }
  return batches;
}

}  // namespace totr
