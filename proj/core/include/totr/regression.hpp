#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "totr/tensor.hpp"

namespace totr {

/// Hyperparameters of the rank-constrained, ridge-penalized
/// tensor-on-tensor regression
///   minimize ||Y - <X, B>_L||_F^2 + penalty * ||B||_F^2,  rank(B) <= rank.
struct RegressionConfig {
  std::size_t rank = 1;
  double penalty = 0.0;
  std::size_t max_sweeps = 500;
  double tolerance = 1e-8;  ///< stop when the relative objective decrease falls below this
  std::uint64_t seed = 0;
  /// Factor update order within a sweep. Modes 0..L-1 are the input factors,
  /// L..L+M-1 the output factors. Empty means natural order.
  std::vector<std::size_t> update_order;

  void validate() const;
};

struct FitResult {
  CpFactors factors;
  /// Objective before the first sweep followed by the value after each sweep.
  std::vector<double> objective_trace;
  /// Mean squared residual over all entries of Y.
  double residual_variance = 0.0;
  std::size_t sweeps = 0;
};

/// Factors with i.i.d. N(0, 1/R) entries drawn from `seed`.
CpFactors random_factors(const Shape& input_shape, const Shape& output_shape, std::size_t rank, std::uint64_t seed);

/// Alternating least squares. `x` is N x P1 x ... x PL and `y` is
/// N x Q1 x ... x QM, both with L, M >= 1. When `warm_start` is given its
/// factors replace the random initialization (its rank must equal cfg.rank).
///
/// Throws NumericError when a normal-equation system is singular; no
/// pseudo-inverse fallback is attempted.
FitResult fit(const Tensor& x, const Tensor& y, const RegressionConfig& cfg, const CpFactors* warm_start = nullptr);

/// <x_new, cp_reconstruct(factors)>_L.
Tensor predict(const Tensor& x_new, const CpFactors& factors);

double objective(const Tensor& x, const Tensor& y, const CpFactors& factors, double penalty);

struct GibbsOptions {
  double burn_in_fraction = 0.2;  ///< share of all iterations discarded before the first retained draw
  std::size_t thinning = 1;
  /// Independent Gaussian prior on every factor entry, with precision
  /// factor_precision * penalty / sigma^2. The prior on B alone leaves
  /// directions in which two components grow without bound while cancelling;
  /// this keeps the chain on bounded factors. Must be > 0.
  double factor_precision = 1e-2;
};

/// Posterior predictive draws <x_new, B^(t)>_L + E^(t)_new.
///
/// The chain starts from the ALS fit and alternates
///   sigma^2 | B      ~ InvGamma(N*Q/2, RSS/2)
///   vec(U_l) | rest  ~ N(A^-1 b, sigma^2 A^-1)
/// where A, b are the same normal equations the ALS step solves, i.e. the
/// spherical Gaussian prior on B with precision penalty / sigma^2, plus
/// options.factor_precision * penalty on the diagonal of A. Output
/// factor rows are conditionally independent and drawn the same way. After
/// each sweep the rank-one components are rebalanced across modes, which
/// leaves B unchanged. Draws are deterministic for a fixed cfg.seed.
std::vector<Tensor> gibbs_sample(const Tensor& x, const Tensor& y, const RegressionConfig& cfg, std::size_t n_samples,
                                 const Tensor& x_new, const GibbsOptions& options = {});

}  // namespace totr
