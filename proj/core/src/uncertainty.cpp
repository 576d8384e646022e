#include "totr/uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "totr/error.hpp"

namespace totr {

namespace {

Tensor max_over_last_mode(const Tensor& t, double scale) {
  Shape shape(t.shape().begin(), t.shape().end() - 1);
  if (shape.empty()) shape.push_back(1);
  const std::size_t axes = t.shape().back();
  const std::size_t n = t.size() / axes;
  Tensor out(shape);
  for (std::size_t i = 0; i < n; ++i) {
    double m = 0.0;
    for (std::size_t a = 0; a < axes; ++a) m = std::max(m, scale * t[i + n * a]);
    out[i] = m;
  }
  return out;
}

/// Coefficient tensor of a model as a C x C matrix (column-major).
struct DenseModel {
  std::vector<double> b;
  std::size_t channels;
};

DenseModel dense(const CpFactors& factors) {
  const Tensor b = cp_reconstruct(factors);
  const std::size_t c = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(b.size()))));
  return {{b.data().begin(), b.data().end()}, c};
}

}  // namespace

Tensor UncertaintyBand::sphere_radius(double level) const { return max_over_last_mode(deviation, level); }

Tensor CoordinateBand::sphere_radius() const { return max_over_last_mode(deviation, 1.0); }

std::vector<ModelBand> predictive_variation(const ReferenceCycle& ref, const CoefficientCollection& coll,
                                            std::size_t n_samples, std::uint64_t seed,
                                            const std::optional<std::vector<std::size_t>>& models) {
  if (n_samples < 2) throw DataError("predictive variation needs at least 2 samples");
  if (ref.per_timestep_std.shape() != ref.angles.frames.shape()) {
    throw ShapeError("per-timestep deviations do not match the reference");
  }
  const std::size_t L = coll.config.past_frames();
  const std::size_t K = coll.config.future_frames();
  const std::size_t T = ref.angles.frame_count();
  if (T != coll.reference_frames) throw ShapeError("reference length differs from the collection's reference");

  std::vector<std::size_t> chosen;
  if (models) {
    chosen = *models;
    for (auto m : chosen) {
      if (m >= coll.entries.size()) throw DataError("model index " + std::to_string(m) + " out of range");
    }
  } else {
    chosen.resize(coll.entries.size());
    for (std::size_t i = 0; i < chosen.size(); ++i) chosen[i] = i;
  }

  std::vector<DenseModel> dense_models;
  for (auto m : chosen) dense_models.push_back(dense(coll.entries[m].factors));
  const std::size_t C = ref.angles.frames.size() / T;
  for (const auto& d : dense_models) {
    if (d.channels != C) throw ShapeError("model layout differs from the reference layout");
  }

  // Predicts the last K output frames of model `k` from an extended reference.
  auto predict_tail = [&](const Tensor& ext, std::size_t k, std::vector<double>& out) {
    const std::size_t first = coll.entries[chosen[k]].time_index + 1 - L;
    const std::size_t Text = ext.extent(0);
    const auto& b = dense_models[k].b;
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t q = 0; q < C; ++q) {
      for (std::size_t p = 0; p < C; ++p) {
        const double bpq = b[p + C * q];
        const double* xcol = ext.data().data() + p * Text + first + (L - K);
        for (std::size_t h = 0; h < K; ++h) out[q * K + h] += xcol[h] * bpq;
      }
    }
  };

  std::vector<ModelBand> result(chosen.size());
  std::vector<std::vector<double>> mean(chosen.size(), std::vector<double>(K * C, 0.0));
  std::vector<std::vector<double>> m2(chosen.size(), std::vector<double>(K * C, 0.0));
  std::vector<double> tail(K * C);

  const MotionSequence clean_ext = extend_reference(ref, L);
  for (std::size_t k = 0; k < chosen.size(); ++k) {
    predict_tail(clean_ext.frames, k, tail);
    result[k].model_index = chosen[k];
    result[k].center = Tensor({K, C / 3, 3}, tail);
  }

  // The models are linear and every sample shares the clean reference, so
  // the spread is that of the noise pushed through each model alone.
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  ReferenceCycle noise = ref;
  noise.angles.root_track.reset();
  for (std::size_t s = 0; s < n_samples; ++s) {
    for (std::size_t i = 0; i < noise.angles.frames.size(); ++i) {
      noise.angles.frames[i] = ref.per_timestep_std[i] * normal(rng);
    }
    const MotionSequence ext = extend_reference(noise, L);
    const double count = static_cast<double>(s + 1);
    for (std::size_t k = 0; k < chosen.size(); ++k) {
      predict_tail(ext.frames, k, tail);
      for (std::size_t i = 0; i < tail.size(); ++i) {
        const double delta = tail[i] - mean[k][i];
        mean[k][i] += delta / count;
        m2[k][i] += delta * (tail[i] - mean[k][i]);
      }
    }
  }
  for (std::size_t k = 0; k < chosen.size(); ++k) {
    std::vector<double> sd(K * C);
    for (std::size_t i = 0; i < sd.size(); ++i) sd[i] = std::sqrt(m2[k][i] / static_cast<double>(n_samples - 1));
    result[k].band.deviation = Tensor({K, C / 3, 3}, std::move(sd));
  }
  return result;
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw DataError("quantile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw DataError("quantile probability must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = p * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

PosteriorSummary posterior_predictive(const Tensor& x, const Tensor& y, const RegressionConfig& cfg,
                                      std::size_t n_samples, const Tensor& x_new, double credibility,
                                      const GibbsOptions& options) {
  if (!(credibility >= 0.0 && credibility < 1.0)) throw DataError("credibility must lie in [0, 1)");
  const auto draws = gibbs_sample(x, y, cfg, n_samples, x_new, options);
  const Shape shape = draws.front().shape();
  PosteriorSummary out{Tensor(shape), Tensor(shape), Tensor(shape), {}, credibility};
  out.band.deviation = Tensor(shape);
  std::vector<double> column(draws.size());
  const double lo_p = (1.0 - credibility) / 2.0;
  const double hi_p = (1.0 + credibility) / 2.0;
  for (std::size_t i = 0; i < out.mean.size(); ++i) {
    double sum = 0.0;
    for (std::size_t s = 0; s < draws.size(); ++s) {
      column[s] = draws[s][i];
      sum += column[s];
    }
    out.mean[i] = sum / static_cast<double>(draws.size());
    out.lower[i] = quantile(column, lo_p);
    out.upper[i] = quantile(column, hi_p);
    out.band.deviation[i] = 0.5 * (out.upper[i] - out.lower[i]);
  }
  return out;
}

PosteriorSummary posterior_for_model(const CoefficientCollection& coll, std::size_t model_index,
                                     const MotionSequence& window, std::size_t n_samples, double credibility,
                                     const GibbsOptions& options) {
  if (model_index >= coll.entries.size()) throw DataError("model index out of range");
  const auto [x, y] =
      training_pair(coll.extended_reference, coll.reference_frames, coll.entries[model_index].time_index, coll.config);
  if (window.frames.shape() != x.shape()) throw ShapeError("window layout differs from the model input");
  const PosteriorSummary full = posterior_predictive(x, y, coll.config.regression, n_samples, window.frames,
                                                     credibility, options);
  const std::size_t L = coll.config.past_frames();
  const std::size_t K = coll.config.future_frames();
  auto tail = [&](const Tensor& t) { return slice_frames(t, L - K, L); };
  PosteriorSummary out{tail(full.mean), tail(full.lower), tail(full.upper), {}, credibility};
  out.band.deviation = tail(full.band.deviation);
  return out;
}

CoordinateBand band_to_coordinates(const UncertaintyBand& band, const std::vector<PredictionFrame>& center,
                                   const Skeleton& skel, double level) {
  const std::size_t K = center.size();
  const std::size_t S = skel.segment_count();
  const std::size_t J = skel.joint_count();
  if (K == 0) throw ShapeError("band_to_coordinates needs at least one center frame");
  if (band.deviation.shape() != Shape{K, S, 3}) throw ShapeError("band shape does not match the center frames");
  if (!(level >= 0.0)) throw DataError("band level must be >= 0");

  MotionSequence mid{Tensor({K, S, 3}), 1.0, MotionSpace::JointAngle, Tensor({K, 3})};
  for (std::size_t h = 0; h < K; ++h) {
    if (center[h].angles.shape() != Shape{S, 3} || center[h].coordinates.shape() != Shape{J, 3}) {
      throw ShapeError("center frame layout does not match the skeleton");
    }
    for (std::size_t s = 0; s < S; ++s) {
      for (std::size_t v = 0; v < 3; ++v) mid.frames({h, s, v}) = center[h].angles({s, v});
    }
    for (std::size_t v = 0; v < 3; ++v) (*mid.root_track)({h, v}) = center[h].coordinates({skel.root(), v});
  }
  MotionSequence upper = mid, lower = mid;
  for (std::size_t i = 0; i < mid.frames.size(); ++i) {
    const double d = level * band.deviation[i];
    upper.frames[i] = std::clamp(mid.frames[i] + d, 0.0, std::numbers::pi);
    lower.frames[i] = std::clamp(mid.frames[i] - d, 0.0, std::numbers::pi);
  }
  const Tensor c = from_joint_angles(mid, skel).frames;
  const Tensor u = from_joint_angles(upper, skel).frames;
  const Tensor l = from_joint_angles(lower, skel).frames;
  CoordinateBand out{Tensor({K, J, 3}), level};
  for (std::size_t i = 0; i < c.size(); ++i) out.deviation[i] = std::max(std::abs(u[i] - c[i]), std::abs(l[i] - c[i]));
  return out;
}

}  // namespace totr
