#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "totr/cycles.hpp"
#include "totr/predictor.hpp"
#include "totr/regression.hpp"

namespace totr {

/// Per-entry spread of a prediction. `deviation` is a standard deviation
/// (ensemble method) or an interval half-width (posterior method); its last
/// mode holds the three axes.
struct UncertaintyBand {
  Tensor deviation;
  std::array<double, 3> levels{1.0, 2.0, 3.0};

  /// level * (maximum deviation over the axis mode); drops the last mode.
  [[nodiscard]] Tensor sphere_radius(double level = 1.0) const;
};

struct ModelBand {
  std::size_t model_index = 0;
  Tensor center;         ///< K x S x 3 prediction from the unperturbed reference
  UncertaintyBand band;  ///< K x S x 3 standard deviations over the ensemble
};

/// Ensemble spread of every model's k-second prediction. Each sample adds
/// per_timestep_std * N(0, 1) noise (i.i.d. over frames, segments, axes) to
/// the reference, extends it by the past window, and pushes every model's
/// input window through that model. Noise is drawn in storage order from
/// mt19937_64(seed), sample after sample. Deviations use divisor n - 1.
/// Only the noise is pushed through the models (they are linear), so scaling
/// per_timestep_std by a power of two scales the deviations exactly.
///
/// `models` restricts the evaluation to the given entry indices.
std::vector<ModelBand> predictive_variation(const ReferenceCycle& ref, const CoefficientCollection& coll,
                                            std::size_t n_samples, std::uint64_t seed,
                                            const std::optional<std::vector<std::size_t>>& models = std::nullopt);

struct PosteriorSummary {
  Tensor mean;
  Tensor lower;
  Tensor upper;
  UncertaintyBand band;  ///< half-widths (upper - lower) / 2
  double credibility = 0.95;
};

/// Equal-tailed quantile with linear interpolation between order statistics
/// (position p * (n - 1)).
double quantile(std::vector<double> values, double p);

/// Gibbs posterior predictive draws summarized entrywise by their mean and
/// the equal-tailed credible interval at `credibility`.
PosteriorSummary posterior_predictive(const Tensor& x, const Tensor& y, const RegressionConfig& cfg,
                                      std::size_t n_samples, const Tensor& x_new, double credibility = 0.95,
                                      const GibbsOptions& options = {});

/// Posterior summary of the last K output frames of collection model
/// `model_index`, refitted on its training pair and evaluated on `window`.
PosteriorSummary posterior_for_model(const CoefficientCollection& coll, std::size_t model_index,
                                     const MotionSequence& window, std::size_t n_samples, double credibility,
                                     const GibbsOptions& options = {});

struct CoordinateBand {
  Tensor deviation;  ///< K x J x 3 in meters, already scaled by `level`
  double level = 1.0;
  [[nodiscard]] Tensor sphere_radius() const;  ///< K x J, maximum over the axes
};

/// Pushes the band edges center +/- level * deviation (clamped to [0, pi])
/// through the fixed-length back-transform and reports, per joint and axis,
/// the larger distance of the two edge positions from the back-transformed
/// center. The root follows the center frames.
CoordinateBand band_to_coordinates(const UncertaintyBand& band, const std::vector<PredictionFrame>& center,
                                   const Skeleton& skel, double level = 1.0);

}  // namespace totr
