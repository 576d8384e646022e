#include "totr/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "totr/error.hpp"

namespace totr {

namespace {

std::string shape_string(const Shape& shape) {
  std::string out = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + ")";
}

void check_shape(const Shape& shape) {
  if (shape.empty()) throw ShapeError("tensor order must be at least 1");
  for (auto e : shape) {
    if (e == 0) throw ShapeError("tensor extents must be positive, got " + shape_string(shape));
  }
}

}  // namespace

std::size_t element_count(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

bool next_index(std::vector<std::size_t>& index, const Shape& shape) {
  for (std::size_t d = 0; d < shape.size(); ++d) {
    if (++index[d] < shape[d]) return true;
    index[d] = 0;
  }
  return false;
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
  check_shape(shape_);
  data_.assign(element_count(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  check_shape(shape_);
  if (data_.size() != element_count(shape_)) {
    throw ShapeError("data length " + std::to_string(data_.size()) + " does not match shape " +
                     shape_string(shape_));
  }
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t n_rows = rows.size();
  const std::size_t n_cols = n_rows ? rows.begin()->size() : 0;
  Tensor m({n_rows, n_cols});
  std::size_t i = 0;
  for (const auto& row : rows) {
    if (row.size() != n_cols) throw ShapeError("ragged matrix initializer");
    std::size_t j = 0;
    for (double v : row) m({i, j++}) = v;
    ++i;
  }
  return m;
}

Tensor Tensor::vector(std::span<const double> values) {
  return Tensor({values.size()}, std::vector<double>(values.begin(), values.end()));
}

Tensor Tensor::identity(std::size_t n) {
  Tensor m({n, n});
  for (std::size_t i = 0; i < n; ++i) m({i, i}) = 1.0;
  return m;
}

std::size_t Tensor::linear_index(std::span<const std::size_t> index) const {
  if (index.size() != shape_.size()) throw ShapeError("index order does not match tensor order");
  std::size_t linear = 0;
  for (std::size_t d = shape_.size(); d-- > 0;) {
    if (index[d] >= shape_[d]) throw ShapeError("index out of range in mode " + std::to_string(d));
    linear = linear * shape_[d] + index[d];
  }
  return linear;
}

Tensor Tensor::reshaped(Shape shape) const { return Tensor(std::move(shape), data_); }

Tensor operator+(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) throw ShapeError("operand shapes differ in addition");
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  return out;
}

Tensor operator-(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) throw ShapeError("operand shapes differ in subtraction");
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b[i];
  return out;
}

Tensor operator*(double alpha, const Tensor& t) {
  Tensor out = t;
  for (auto& v : out.data()) v *= alpha;
  return out;
}

Tensor matricize(const Tensor& t, std::size_t mode) {
  const auto& shape = t.shape();
  if (mode >= shape.size()) {
    throw ShapeError("mode " + std::to_string(mode) + " out of range for order " + std::to_string(shape.size()));
  }
  const std::size_t rows = shape[mode];
  const std::size_t cols = t.size() / rows;
  Tensor out({rows, cols});
  std::vector<std::size_t> index(shape.size(), 0);
  std::size_t linear = 0;
  do {
    std::size_t col = 0;
    std::size_t stride = 1;
    for (std::size_t d = 0; d < shape.size(); ++d) {
      if (d == mode) continue;
      col += index[d] * stride;
      stride *= shape[d];
    }
    out[index[mode] + rows * col] = t[linear++];
  } while (next_index(index, shape));
  return out;
}

Tensor fold(const Tensor& m, std::size_t mode, const Shape& shape) {
  if (mode >= shape.size()) throw ShapeError("fold mode out of range");
  if (m.order() != 2 || m.extent(0) != shape[mode] || m.size() != element_count(shape)) {
    throw ShapeError("matrix " + shape_string(m.shape()) + " cannot be folded into " + shape_string(shape));
  }
  Tensor out(shape);
  const std::size_t rows = shape[mode];
  std::vector<std::size_t> index(shape.size(), 0);
  std::size_t linear = 0;
  do {
    std::size_t col = 0;
    std::size_t stride = 1;
    for (std::size_t d = 0; d < shape.size(); ++d) {
      if (d == mode) continue;
      col += index[d] * stride;
      stride *= shape[d];
    }
    out[linear++] = m[index[mode] + rows * col];
  } while (next_index(index, shape));
  return out;
}

std::vector<double> vectorize(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

Tensor kronecker(const Tensor& a, const Tensor& b) {
  if (a.order() != 2 || b.order() != 2) throw ShapeError("kronecker expects two matrices");
  const std::size_t ar = a.extent(0), ac = a.extent(1);
  const std::size_t br = b.extent(0), bc = b.extent(1);
  Tensor out({ar * br, ac * bc});
  const std::size_t out_rows = ar * br;
  for (std::size_t j = 0; j < ac; ++j) {
    for (std::size_t i = 0; i < ar; ++i) {
      const double aij = a[i + ar * j];
      for (std::size_t l = 0; l < bc; ++l) {
        for (std::size_t k = 0; k < br; ++k) {
          out[(i * br + k) + out_rows * (j * bc + l)] = aij * b[k + br * l];
        }
      }
    }
  }
  return out;
}

double frobenius_norm(const Tensor& t) {
  // Scaled accumulation avoids overflow for large entries.
  double scale = 0.0;
  double ssq = 1.0;
  for (double v : t.data()) {
    if (v == 0.0) continue;
    const double a = std::abs(v);
    if (scale < a) {
      ssq = 1.0 + ssq * (scale / a) * (scale / a);
      scale = a;
    } else {
      ssq += (a / scale) * (a / scale);
    }
  }
  return scale * std::sqrt(ssq);
}

Tensor contracted_product(const Tensor& d, const Tensor& f, std::size_t contract_modes) {
  const std::size_t L = contract_modes;
  if (L > d.order() || L > f.order()) throw ShapeError("more contracted modes than tensor order");
  const std::size_t K = d.order() - L;
  for (std::size_t i = 0; i < L; ++i) {
    if (d.extent(K + i) != f.extent(i)) {
      throw ShapeError("contracted extents differ: " + shape_string(d.shape()) + " vs " + shape_string(f.shape()));
    }
  }
  Shape out_shape(d.shape().begin(), d.shape().begin() + static_cast<std::ptrdiff_t>(K));
  out_shape.insert(out_shape.end(), f.shape().begin() + static_cast<std::ptrdiff_t>(L), f.shape().end());
  if (out_shape.empty()) out_shape.push_back(1);

  // Column-major storage makes d an (I x P) matrix and f a (P x Q) matrix.
  std::size_t rows = 1;
  for (std::size_t i = 0; i < K; ++i) rows *= d.extent(i);
  const std::size_t inner = d.size() / rows;
  const std::size_t cols = f.size() / inner;

  Tensor out(out_shape);
  const auto dd = d.data();
  const auto fd = f.data();
  auto od = out.data();
  for (std::size_t q = 0; q < cols; ++q) {
    for (std::size_t p = 0; p < inner; ++p) {
      const double fpq = fd[p + inner * q];
      if (fpq == 0.0) continue;
      const double* dcol = dd.data() + rows * p;
      double* ocol = od.data() + rows * q;
      for (std::size_t i = 0; i < rows; ++i) ocol[i] += dcol[i] * fpq;
    }
  }
  return out;
}

std::size_t CpFactors::rank() const {
  if (!input_factors.empty()) return input_factors.front().order() == 2 ? input_factors.front().extent(1) : 0;
  if (!output_factors.empty()) return output_factors.front().order() == 2 ? output_factors.front().extent(1) : 0;
  return 0;
}

Shape CpFactors::input_shape() const {
  Shape s;
  for (const auto& u : input_factors) s.push_back(u.extent(0));
  return s;
}

Shape CpFactors::output_shape() const {
  Shape s;
  for (const auto& v : output_factors) s.push_back(v.extent(0));
  return s;
}

Shape CpFactors::coefficient_shape() const {
  Shape s = input_shape();
  const Shape o = output_shape();
  s.insert(s.end(), o.begin(), o.end());
  return s;
}

void CpFactors::validate() const {
  if (input_factors.empty() && output_factors.empty()) throw ShapeError("CP factors are empty");
  const std::size_t r = rank();
  if (r == 0) throw ShapeError("CP rank must be at least 1");
  auto check = [r](const Tensor& m) {
    if (m.order() != 2) throw ShapeError("CP factor is not a matrix");
    if (m.extent(1) != r) throw ShapeError("CP factors have inconsistent ranks");
  };
  for (const auto& u : input_factors) check(u);
  for (const auto& v : output_factors) check(v);
}

Tensor cp_reconstruct(const CpFactors& factors) {
  factors.validate();
  std::vector<const Tensor*> all;
  for (const auto& u : factors.input_factors) all.push_back(&u);
  for (const auto& v : factors.output_factors) all.push_back(&v);
  const Shape shape = factors.coefficient_shape();
  const std::size_t R = factors.rank();

  Tensor out(shape);
  std::vector<double> component;
  for (std::size_t r = 0; r < R; ++r) {
    // Build the r-th rank-one term mode by mode: vec(a o b) = b (x) a.
    component.assign(1, 1.0);
    for (const Tensor* m : all) {
      const std::size_t n = m->extent(0);
      std::vector<double> next(component.size() * n);
      for (std::size_t i = 0; i < n; ++i) {
        const double c = (*m)[i + n * r];
        for (std::size_t j = 0; j < component.size(); ++j) next[j + component.size() * i] = component[j] * c;
      }
      component.swap(next);
    }
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += component[i];
  }
  return out;
}

}  // namespace totr
