#include "totr/regression.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <string>

#include "totr/error.hpp"

namespace totr {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using ConstMap = Eigen::Map<const MatrixXd>;

MatrixXd to_matrix(const Tensor& m) { return ConstMap(m.data().data(), m.extent(0), m.extent(1)); }

Tensor from_matrix(const MatrixXd& m) {
  return Tensor({static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())},
                std::vector<double>(m.data(), m.data() + m.size()));
}

/// Khatri-Rao product with the first factor's row index varying fastest,
/// matching the column-major tensor layout.
MatrixXd khatri_rao(const std::vector<MatrixXd>& factors, std::size_t rank) {
  MatrixXd out = MatrixXd::Ones(1, static_cast<Eigen::Index>(rank));
  for (const auto& f : factors) {
    MatrixXd next(out.rows() * f.rows(), out.cols());
    for (Eigen::Index r = 0; r < out.cols(); ++r) {
      for (Eigen::Index i = 0; i < f.rows(); ++i) {
        next.col(r).segment(i * out.rows(), out.rows()) = out.col(r) * f(i, r);
      }
    }
    out = std::move(next);
  }
  return out;
}

MatrixXd hadamard_of_grams(const std::vector<MatrixXd>& factors, std::size_t rank, std::optional<std::size_t> skip) {
  const auto R = static_cast<Eigen::Index>(rank);
  MatrixXd g = MatrixXd::Ones(R, R);
  for (std::size_t i = 0; i < factors.size(); ++i) {
    if (skip && *skip == i) continue;
    g = g.cwiseProduct(factors[i].transpose() * factors[i]);
  }
  return g;
}

/// Working copy of a regression problem in matrix form: X is N x P and Y is
/// N x Q, where P and Q enumerate the multi-indices column-major.
struct Problem {
  MatrixXd x;
  MatrixXd y;
  Shape in_shape;
  Shape out_shape;

  Problem(const Tensor& xt, const Tensor& yt) {
    if (xt.order() < 2 || yt.order() < 2) {
      throw ShapeError("regression needs an observation mode plus at least one predictor and one response mode");
    }
    if (xt.extent(0) != yt.extent(0)) {
      throw ShapeError("observation counts differ: x has " + std::to_string(xt.extent(0)) + ", y has " +
                       std::to_string(yt.extent(0)));
    }
    const auto n = static_cast<Eigen::Index>(xt.extent(0));
    in_shape.assign(xt.shape().begin() + 1, xt.shape().end());
    out_shape.assign(yt.shape().begin() + 1, yt.shape().end());
    x = ConstMap(xt.data().data(), n, static_cast<Eigen::Index>(xt.size()) / n);
    y = ConstMap(yt.data().data(), n, static_cast<Eigen::Index>(yt.size()) / n);
  }

  [[nodiscard]] std::size_t modes() const { return in_shape.size() + out_shape.size(); }
};

struct Factors {
  std::vector<MatrixXd> in;
  std::vector<MatrixXd> out;
  std::size_t rank = 0;

  static Factors from(const CpFactors& cp) {
    Factors f;
    f.rank = cp.rank();
    for (const auto& u : cp.input_factors) f.in.push_back(to_matrix(u));
    for (const auto& v : cp.output_factors) f.out.push_back(to_matrix(v));
    return f;
  }

  [[nodiscard]] CpFactors to_cp() const {
    CpFactors cp;
    for (const auto& u : in) cp.input_factors.push_back(from_matrix(u));
    for (const auto& v : out) cp.output_factors.push_back(from_matrix(v));
    return cp;
  }

  [[nodiscard]] std::vector<MatrixXd> all() const {
    std::vector<MatrixXd> a = in;
    a.insert(a.end(), out.begin(), out.end());
    return a;
  }
};

struct Objective {
  double residual_ss;
  double coefficient_ss;
  [[nodiscard]] double value(double penalty) const { return residual_ss + penalty * coefficient_ss; }
};

Objective evaluate(const Problem& p, const Factors& f) {
  const MatrixXd ku = khatri_rao(f.in, f.rank);
  const MatrixXd w = khatri_rao(f.out, f.rank);
  const MatrixXd fitted = (p.x * ku) * w.transpose();
  const double rss = (p.y - fitted).squaredNorm();
  const double bss = hadamard_of_grams(f.all(), f.rank, std::nullopt).sum();
  return {rss, std::max(bss, 0.0)};
}

/// Normal equations A z = b of one factor subproblem. For an input factor z
/// is vec(U_l) (P_l * R); for an output factor each of the Q_m columns of b
/// is an independent right-hand side and z is V_m^T (R x Q_m).
struct Subproblem {
  MatrixXd a;
  MatrixXd b;
};

Subproblem input_subproblem(const Problem& p, const Factors& f, std::size_t mode, double penalty) {
  const std::size_t R = f.rank;
  const auto& shape = p.in_shape;
  const std::size_t pl = shape[mode];
  const auto n = p.x.rows();

  // Z_r = X contracted with the r-th columns of all other input factors;
  // stacked as N x (P_l * R) with column index p_l + P_l * r.
  std::vector<MatrixXd> others;
  for (std::size_t l = 0; l < f.in.size(); ++l) {
    if (l != mode) others.push_back(f.in[l]);
  }
  const MatrixXd k_other = khatri_rao(others, R);

  MatrixXd z = MatrixXd::Zero(n, static_cast<Eigen::Index>(pl * R));
  std::vector<std::size_t> index(shape.size(), 0);
  Eigen::Index col = 0;
  do {
    std::size_t other = 0;
    std::size_t stride = 1;
    for (std::size_t d = 0; d < shape.size(); ++d) {
      if (d == mode) continue;
      other += index[d] * stride;
      stride *= shape[d];
    }
    for (std::size_t r = 0; r < R; ++r) {
      const double c = k_other(static_cast<Eigen::Index>(other), static_cast<Eigen::Index>(r));
      if (c != 0.0) z.col(static_cast<Eigen::Index>(index[mode] + pl * r)) += c * p.x.col(col);
    }
    ++col;
  } while (next_index(index, shape));

  const MatrixXd w = khatri_rao(f.out, R);
  const MatrixXd wtw = w.transpose() * w;
  const MatrixXd yw = p.y * w;

  const MatrixXd g = hadamard_of_grams(f.all(), R, mode);

  Subproblem s;
  s.a = z.transpose() * z;
  s.b.resize(static_cast<Eigen::Index>(pl * R), 1);
  const auto P = static_cast<Eigen::Index>(pl);
  for (Eigen::Index r = 0; r < static_cast<Eigen::Index>(R); ++r) {
    for (Eigen::Index r2 = 0; r2 < static_cast<Eigen::Index>(R); ++r2) {
      s.a.block(r * P, r2 * P, P, P) *= wtw(r, r2);
      s.a.block(r * P, r2 * P, P, P).diagonal().array() += penalty * g(r, r2);
    }
    s.b.block(r * P, 0, P, 1) = z.middleCols(r * P, P).transpose() * yw.col(r);
  }
  return s;
}

Subproblem output_subproblem(const Problem& p, const Factors& f, std::size_t mode, double penalty) {
  const std::size_t R = f.rank;
  const auto& shape = p.out_shape;
  const auto qm = static_cast<Eigen::Index>(shape[mode]);

  const MatrixXd xt = p.x * khatri_rao(f.in, R);  // N x R
  std::vector<MatrixXd> others;
  for (std::size_t m = 0; m < f.out.size(); ++m) {
    if (m != mode) others.push_back(f.out[m]);
  }
  const MatrixXd dtd = (xt.transpose() * xt).cwiseProduct(hadamard_of_grams(others, R, std::nullopt));
  const MatrixXd g = hadamard_of_grams(f.all(), R, f.in.size() + mode);

  const MatrixXd k_other = khatri_rao(others, R);
  const MatrixXd yx = p.y.transpose() * xt;  // Q x R

  Subproblem s;
  s.a = dtd + penalty * g;
  s.b = MatrixXd::Zero(static_cast<Eigen::Index>(R), qm);
  std::vector<std::size_t> index(shape.size(), 0);
  Eigen::Index q = 0;
  do {
    std::size_t other = 0;
    std::size_t stride = 1;
    for (std::size_t d = 0; d < shape.size(); ++d) {
      if (d == mode) continue;
      other += index[d] * stride;
      stride *= shape[d];
    }
    const auto qi = static_cast<Eigen::Index>(index[mode]);
    for (Eigen::Index r = 0; r < static_cast<Eigen::Index>(R); ++r) {
      s.b(r, qi) += yx(q, r) * k_other(static_cast<Eigen::Index>(other), r);
    }
    ++q;
  } while (next_index(index, shape));
  return s;
}

/// Cholesky of a subproblem matrix, or nullopt when the objective does not
/// depend on this factor at all (A == 0, e.g. because another factor is
/// identically zero). Singular but nonzero systems throw.
std::optional<Eigen::LLT<MatrixXd>> factorize(const MatrixXd& a, std::size_t mode, double penalty) {
  if (a.diagonal().maxCoeff() <= 0.0) return std::nullopt;
  Eigen::LLT<MatrixXd> llt(a);
  const double tiny = std::numeric_limits<double>::epsilon() * static_cast<double>(a.rows());
  if (llt.info() != Eigen::Success || !(llt.rcond() > tiny)) {
    throw NumericError("singular normal equations for factor " + std::to_string(mode) +
                       " (penalty=" + std::to_string(penalty) + "); reduce the rank or increase the penalty");
  }
  return llt;
}

/// ALS step. With a penalty the system can only be singular along
/// directions in which the whole subproblem is flat (the other factors have
/// fewer independent columns than the rank); every solution is then a
/// minimizer and the minimum-norm one is taken.
std::optional<MatrixXd> solve_normal_equations(const MatrixXd& a, const MatrixXd& b, std::size_t mode,
                                               double penalty) {
  if (a.diagonal().maxCoeff() <= 0.0) return std::nullopt;
  if (penalty > 0.0) {
    Eigen::LLT<MatrixXd> llt(a);
    const double tiny = std::numeric_limits<double>::epsilon() * static_cast<double>(a.rows());
    if (llt.info() == Eigen::Success && llt.rcond() > tiny) return llt.solve(b);
    return Eigen::CompleteOrthogonalDecomposition<MatrixXd>(a).solve(b);
  }
  return factorize(a, mode, penalty)->solve(b);
}

Subproblem subproblem(const Problem& p, const Factors& f, std::size_t mode, double penalty) {
  if (mode < f.in.size()) return input_subproblem(p, f, mode, penalty);
  return output_subproblem(p, f, mode - f.in.size(), penalty);
}

void assign_factor(Factors& f, std::size_t mode, const MatrixXd& solution) {
  if (mode < f.in.size()) {
    auto& u = f.in[mode];
    u = Eigen::Map<const MatrixXd>(solution.data(), u.rows(), u.cols());
  } else {
    f.out[mode - f.in.size()] = solution.transpose();
  }
}

std::vector<std::size_t> resolve_order(const RegressionConfig& cfg, std::size_t modes) {
  if (cfg.update_order.empty()) {
    std::vector<std::size_t> order(modes);
    std::iota(order.begin(), order.end(), std::size_t{0});
    return order;
  }
  std::vector<std::size_t> sorted = cfg.update_order;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (sorted.size() != modes || sorted[i] != i) {
      throw ShapeError("update_order must be a permutation of all " + std::to_string(modes) + " factor modes");
    }
  }
  return cfg.update_order;
}

void check_factor_shapes(const CpFactors& cp, const Problem& p, std::size_t rank) {
  cp.validate();
  if (cp.rank() != rank) throw ShapeError("warm-start rank differs from configured rank");
  if (cp.input_shape() != p.in_shape || cp.output_shape() != p.out_shape) {
    throw ShapeError("factor shapes do not match the regression problem");
  }
}

void rebalance(Factors& f) {
  auto all = f.all();
  const double modes = static_cast<double>(all.size());
  for (Eigen::Index r = 0; r < static_cast<Eigen::Index>(f.rank); ++r) {
    double log_sum = 0.0;
    bool zero = false;
    for (const auto& m : all) {
      const double n = m.col(r).norm();
      if (n == 0.0) zero = true;
      log_sum += zero ? 0.0 : std::log(n);
    }
    if (zero) continue;
    const double target = std::exp(log_sum / modes);
    for (auto& m : f.in) m.col(r) *= target / m.col(r).norm();
    for (auto& m : f.out) m.col(r) *= target / m.col(r).norm();
  }
}

}  // namespace

void RegressionConfig::validate() const {
  if (rank < 1) throw DataError("rank must be at least 1");
  if (!(penalty >= 0.0) || !std::isfinite(penalty)) throw DataError("penalty must be a finite value >= 0");
  if (max_sweeps < 1) throw DataError("max_sweeps must be at least 1");
  if (!(tolerance > 0.0)) throw DataError("tolerance must be > 0");
}

CpFactors random_factors(const Shape& input_shape, const Shape& output_shape, std::size_t rank, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(rank)));
  auto draw = [&](std::size_t rows) {
    Tensor m({rows, rank});
    for (auto& v : m.data()) v = normal(rng);
    return m;
  };
  CpFactors cp;
  for (auto p : input_shape) cp.input_factors.push_back(draw(p));
  for (auto q : output_shape) cp.output_factors.push_back(draw(q));
  return cp;
}

FitResult fit(const Tensor& x, const Tensor& y, const RegressionConfig& cfg, const CpFactors* warm_start) {
  cfg.validate();
  const Problem p(x, y);
  const auto order = resolve_order(cfg, p.modes());

  CpFactors init;
  if (warm_start) {
    check_factor_shapes(*warm_start, p, cfg.rank);
    init = *warm_start;
  } else {
    init = random_factors(p.in_shape, p.out_shape, cfg.rank, cfg.seed);
  }
  Factors f = Factors::from(init);

  FitResult result;
  double previous = evaluate(p, f).value(cfg.penalty);
  result.objective_trace.push_back(previous);
  for (std::size_t sweep = 0; sweep < cfg.max_sweeps; ++sweep) {
    for (auto mode : order) {
      const Subproblem s = subproblem(p, f, mode, cfg.penalty);
      if (auto x = solve_normal_equations(s.a, s.b, mode, cfg.penalty)) assign_factor(f, mode, *x);
    }
    const double current = evaluate(p, f).value(cfg.penalty);
    if (!std::isfinite(current)) throw NumericError("objective became non-finite during ALS");
    result.objective_trace.push_back(current);
    result.sweeps = sweep + 1;
    if (previous <= 0.0 || (previous - current) / previous < cfg.tolerance) break;
    previous = current;
  }

  const Objective final = evaluate(p, f);
  result.residual_variance = final.residual_ss / static_cast<double>(p.y.size());
  result.factors = f.to_cp();
  return result;
}

Tensor predict(const Tensor& x_new, const CpFactors& factors) {
  factors.validate();
  const Shape in = factors.input_shape();
  if (x_new.order() != in.size() + 1 || !std::equal(in.begin(), in.end(), x_new.shape().begin() + 1)) {
    throw ShapeError("predictor extents do not match the input factors");
  }
  return contracted_product(x_new, cp_reconstruct(factors), in.size());
}

double objective(const Tensor& x, const Tensor& y, const CpFactors& factors, double penalty) {
  const Tensor b = cp_reconstruct(factors);
  const Tensor fitted = predict(x, factors);
  if (fitted.shape() != y.shape()) throw ShapeError("response shape does not match the model output");
  const double rn = frobenius_norm(y - fitted);
  const double bn = frobenius_norm(b);
  return rn * rn + penalty * bn * bn;
}

std::vector<Tensor> gibbs_sample(const Tensor& x, const Tensor& y, const RegressionConfig& cfg, std::size_t n_samples,
                                 const Tensor& x_new, const GibbsOptions& options) {
  if (n_samples < 1) throw DataError("n_samples must be at least 1");
  if (options.thinning < 1) throw DataError("thinning must be at least 1");
  if (!(options.burn_in_fraction >= 0.0 && options.burn_in_fraction < 1.0)) {
    throw DataError("burn_in_fraction must lie in [0, 1)");
  }
  if (!(options.factor_precision > 0.0)) throw DataError("factor_precision must be > 0");
  const FitResult start = fit(x, y, cfg);
  const Problem p(x, y);
  const auto order = resolve_order(cfg, p.modes());
  Factors f = Factors::from(start.factors);

  (void)predict(x_new, start.factors);  // validates x_new before the chain runs

  const std::size_t retained_iterations = n_samples * options.thinning;
  const auto total = static_cast<std::size_t>(
      std::ceil(static_cast<double>(retained_iterations) / (1.0 - options.burn_in_fraction)));
  const std::size_t burn_in = total - retained_iterations;

  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::gamma_distribution<double> gamma(static_cast<double>(p.y.size()) / 2.0, 1.0);

  auto standard_normal = [&](Eigen::Index rows, Eigen::Index cols) {
    MatrixXd z(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
      for (Eigen::Index i = 0; i < rows; ++i) z(i, j) = normal(rng);
    }
    return z;
  };

  std::vector<Tensor> draws;
  draws.reserve(n_samples);
  for (std::size_t it = 0; it < total; ++it) {
    const double rss = evaluate(p, f).residual_ss;
    const double sigma2 = rss > 0.0 ? (rss / 2.0) / gamma(rng) : 0.0;
    const double sigma = std::sqrt(sigma2);

    for (auto mode : order) {
      Subproblem s = subproblem(p, f, mode, cfg.penalty);
      s.a.diagonal().array() += options.factor_precision * cfg.penalty;
      auto llt = factorize(s.a, mode, cfg.penalty);
      if (!llt) continue;
      MatrixXd sample = llt->solve(s.b);
      const MatrixXd z = standard_normal(sample.rows(), sample.cols());
      sample += sigma * llt->matrixU().solve(z);
      assign_factor(f, mode, sample);
    }
    rebalance(f);

    if (it < burn_in || (it - burn_in) % options.thinning != 0) continue;
    Tensor draw = predict(x_new, f.to_cp());
    for (auto& v : draw.data()) v += sigma * normal(rng);
    draws.push_back(std::move(draw));
  }
  return draws;
}

}  // namespace totr
