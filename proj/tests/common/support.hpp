#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>

#include "totr/tensor.hpp"

namespace totr::test {

inline Tensor random_tensor(const Shape& shape, std::mt19937_64& rng, double sd = 1.0) {
  std::normal_distribution<double> normal(0.0, sd);
  Tensor t(shape);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = normal(rng);
  return t;
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double relative_error(const Tensor& got, const Tensor& want) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < got.size(); ++i) {
    num += (got[i] - want[i]) * (got[i] - want[i]);
    den += want[i] * want[i];
  }
  return den == 0.0 ? std::sqrt(num) : std::sqrt(num / den);
}

/// Matrix entry (i, j) of a column-major matrix tensor.
inline double at(const Tensor& m, std::size_t i, std::size_t j) { return m[i + m.extent(0) * j]; }

}  // namespace totr::test
