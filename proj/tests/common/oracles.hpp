#pragma once

// Independent reference computations shared by the unit and acceptance
// tests. None of them call the library routine they check.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include "totr/cycles.hpp"
#include "totr/kinematics.hpp"
#include "totr/predictor.hpp"
#include "totr/regression.hpp"

namespace totr::test {

inline Eigen::MatrixXd to_eigen(const Tensor& m) {
  return Eigen::Map<const Eigen::MatrixXd>(m.data().data(), static_cast<Eigen::Index>(m.extent(0)),
                                           static_cast<Eigen::Index>(m.extent(1)));
}

/// Closed-form ridge coefficient (X'X + lambda I)^-1 X'Y.
inline Eigen::MatrixXd ridge(const Tensor& x, const Tensor& y, double lambda) {
  const Eigen::MatrixXd X = to_eigen(x);
  const Eigen::MatrixXd Y = to_eigen(y);
  const Eigen::MatrixXd A = X.transpose() * X + lambda * Eigen::MatrixXd::Identity(X.cols(), X.cols());
  return A.ldlt().solve(X.transpose() * Y);
}

/// Minimum path cost of scalar sequences by walking every monotone path.
inline double enumerate_paths(const std::vector<double>& q, const std::vector<double>& r, bool open_begin,
                              bool open_end) {
  const std::size_t n = q.size(), m = r.size();
  double best = std::numeric_limits<double>::infinity();
  std::function<void(std::size_t, std::size_t, double)> walk = [&](std::size_t i, std::size_t j, double acc) {
    acc += std::abs(q[i] - r[j]);
    if (i == n - 1 && (open_end || j == m - 1)) best = std::min(best, acc);
    if (i + 1 < n) walk(i + 1, j, acc);
    if (j + 1 < m) walk(i, j + 1, acc);
    if (i + 1 < n && j + 1 < m) walk(i + 1, j + 1, acc);
  };
  if (open_begin) {
    for (std::size_t j = 0; j < m; ++j) walk(0, j, 0.0);
  } else {
    walk(0, 0, 0.0);
  }
  return best;
}

/// Closed warping paths from (0, 0) to (n-1, m-1) as flat cell lists
/// (i * m + j). A path that turns a corner with a query step next to a
/// reference step costs at least as much as the one taking the diagonal
/// instead, because cell costs are nonnegative; those paths are left out,
/// which keeps the minimum and shrinks the list enough for exhaustive runs.
inline std::vector<std::vector<unsigned char>> closed_paths(std::size_t n, std::size_t m) {
  std::vector<std::vector<unsigned char>> out;
  std::vector<unsigned char> cells;
  std::function<void(std::size_t, std::size_t, char)> walk = [&](std::size_t i, std::size_t j, char last) {
    cells.push_back(static_cast<unsigned char>(i * m + j));
    if (i == n - 1 && j == m - 1) {
      out.push_back(cells);
    } else {
      if (i + 1 < n && last != 'r') walk(i + 1, j, 'q');
      if (j + 1 < m && last != 'q') walk(i, j + 1, 'r');
      if (i + 1 < n && j + 1 < m) walk(i + 1, j + 1, 'd');
    }
    cells.pop_back();
  };
  walk(0, 0, 'd');
  return out;
}

/// Closed DTW cost of query against reference frames [begin, end), filled
/// row by row from the textbook recurrence.
inline double closed_dtw(const std::vector<double>& q, std::size_t n, const std::vector<double>& r, std::size_t begin,
                         std::size_t end, std::size_t channels) {
  const std::size_t m = end - begin;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> d((n + 1) * (m + 1), inf);
  auto cell = [&](std::size_t i, std::size_t j) -> double& { return d[i * (m + 1) + j]; };
  cell(0, 0) = 0.0;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < channels; ++c) {
        const double diff = q[(i - 1) * channels + c] - r[(begin + j - 1) * channels + c];
        s += diff * diff;
      }
      cell(i, j) = std::sqrt(s) + std::min({cell(i - 1, j - 1), cell(i - 1, j), cell(i, j - 1)});
    }
  }
  return cell(n, m);
}

struct OpenMatch {
  double distance = 0.0;
  std::size_t end = 0;
};

/// Open-end (optionally open-begin) DTW by restarting the closed alignment
/// for every reference end (and start); ties go to the smaller end.
inline OpenMatch restart_dtw(const std::vector<double>& q, std::size_t n, const std::vector<double>& r, std::size_t m,
                             std::size_t channels, bool open_begin) {
  OpenMatch best{std::numeric_limits<double>::infinity(), 0};
  for (std::size_t e = 0; e < m; ++e) {
    double cost = std::numeric_limits<double>::infinity();
    for (std::size_t b = 0; b <= (open_begin ? e : 0); ++b) cost = std::min(cost, closed_dtw(q, n, r, b, e + 1, channels));
    if (cost < best.distance) best = {cost, e};
  }
  return best;
}

/// Random poses: every joint is its parent plus a random vector.
inline MotionSequence random_poses(const Skeleton& skel, std::size_t frames, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 0.3);
  Tensor t({frames, skel.joint_count(), 3});
  for (std::size_t f = 0; f < frames; ++f) {
    for (std::size_t j = 0; j < skel.joint_count(); ++j) {
      const auto parent = skel.joints()[j].parent;
      for (std::size_t v = 0; v < 3; ++v) t({f, j, v}) = (parent ? t({f, *parent, v}) : 0.0) + normal(rng);
    }
  }
  return {t, 60.0, MotionSpace::Cartesian, std::nullopt};
}

/// Per-frame bound in cm: every joint error is at most the summed length
/// errors on its path to the root.
inline std::vector<double> path_sum_bound(const MotionSequence& truth, const Skeleton& skel) {
  const AngleConversion conv = to_joint_angles(truth, skel);
  const auto fixed = fix_segment_lengths(truth, skel).segment_lengths();
  std::vector<double> bound(truth.frame_count(), 0.0);
  for (std::size_t t = 0; t < truth.frame_count(); ++t) {
    for (std::size_t j = 0; j < skel.joint_count(); ++j) {
      double path = 0.0;
      for (std::size_t k = j; skel.joints()[k].parent; k = *skel.joints()[k].parent) {
        const std::size_t s = *skel.segment_of(k);
        path += std::abs(conv.distances({t, s}) - fixed[s]);
      }
      bound[t] += 100.0 * path;
    }
  }
  return bound;
}

/// Band deviations by perturbing the whole reference, re-extending it and
/// predicting with every model, one sample at a time.
inline std::vector<Tensor> ensemble_oracle(const ReferenceCycle& ref, const CoefficientCollection& coll, std::size_t n,
                                           std::uint64_t seed) {
  const std::size_t L = coll.config.past_frames(), K = coll.config.future_frames();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::vector<Tensor>> preds(coll.entries.size());
  for (std::size_t s = 0; s < n; ++s) {
    ReferenceCycle sample = ref;
    for (std::size_t i = 0; i < sample.angles.frames.size(); ++i)
      sample.angles.frames[i] = ref.angles.frames[i] + ref.per_timestep_std[i] * normal(rng);
    const MotionSequence ext = extend_reference(sample, L);
    for (std::size_t m = 0; m < coll.entries.size(); ++m) {
      const std::size_t t = coll.entries[m].time_index;
      const Tensor y = predict(ext.slice(t + 1 - L, t + 1).frames, coll.entries[m].factors);
      preds[m].push_back(slice_frames(y, L - K, L));
    }
  }
  std::vector<Tensor> sd;
  for (const auto& p : preds) {
    Tensor out(p.front().shape());
    for (std::size_t i = 0; i < out.size(); ++i) {
      double mean = 0.0;
      for (const auto& x : p) mean += x[i];
      mean /= static_cast<double>(n);
      double ss = 0.0;
      for (const auto& x : p) ss += (x[i] - mean) * (x[i] - mean);
      out[i] = std::sqrt(ss / static_cast<double>(n - 1));
    }
    sd.push_back(out);
  }
  return sd;
}

}  // namespace totr::test
