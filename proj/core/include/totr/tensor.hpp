#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace totr {

using Shape = std::vector<std::size_t>;

/// Dense multiway array of doubles.
///
/// Storage is column-major over the multi-index: the first index varies
/// fastest, so element (i1, ..., iD) lives at
///   i1 + I1 * (i2 + I2 * (i3 + ...)).
/// Every unfolding and vectorization in this library is derived from this
/// single convention:
///   - matricize(t, d) puts the d-mode vectors into columns; the column index
///     enumerates the remaining indices in their original order, first one
///     fastest (Kolda-Bader ordering).
///   - vectorize(t) is the column stack of matricize(t, 0), which is exactly
///     the storage order.
/// Modes are zero-based throughout the API.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  /// Row-major nested initializer for small matrices, convenient in tests.
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);
  static Tensor vector(std::span<const double> values);
  static Tensor identity(std::size_t n);

  [[nodiscard]] const Shape& shape() const noexcept { return shape_; }
  [[nodiscard]] std::size_t order() const noexcept { return shape_.size(); }
  [[nodiscard]] std::size_t extent(std::size_t mode) const { return shape_.at(mode); }
  [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }

  [[nodiscard]] std::span<const double> data() const noexcept { return data_; }
  [[nodiscard]] std::span<double> data() noexcept { return data_; }

  double& operator[](std::size_t linear) { return data_[linear]; }
  double operator[](std::size_t linear) const { return data_[linear]; }

  double& operator()(std::span<const std::size_t> index) { return data_[linear_index(index)]; }
  double operator()(std::span<const std::size_t> index) const { return data_[linear_index(index)]; }
  double& operator()(std::initializer_list<std::size_t> index) {
    return data_[linear_index({index.begin(), index.size()})];
  }
  double operator()(std::initializer_list<std::size_t> index) const {
    return data_[linear_index({index.begin(), index.size()})];
  }

  [[nodiscard]] std::size_t linear_index(std::span<const std::size_t> index) const;

  /// Same data reinterpreted under another shape with equal element count.
  [[nodiscard]] Tensor reshaped(Shape shape) const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

std::size_t element_count(const Shape& shape);

/// Advances a column-major multi-index; returns false after the last element.
bool next_index(std::vector<std::size_t>& index, const Shape& shape);

Tensor operator+(const Tensor& a, const Tensor& b);
Tensor operator-(const Tensor& a, const Tensor& b);
Tensor operator*(double alpha, const Tensor& t);

/// Matrix of shape I_mode x (product of remaining extents).
Tensor matricize(const Tensor& t, std::size_t mode);

/// Inverse of matricize for a target shape.
Tensor fold(const Tensor& m, std::size_t mode, const Shape& shape);

/// Column stack of the 0-mode unfolding, i.e. the storage order.
std::vector<double> vectorize(const Tensor& t);

/// Kronecker product of two matrices; block (i, j) is a(i, j) * b.
Tensor kronecker(const Tensor& a, const Tensor& b);

double frobenius_norm(const Tensor& t);

/// Sum over the trailing `contract_modes` modes of `d` and the leading
/// `contract_modes` modes of `f`. The result has order K + M, where d has
/// order K + L and f order L + M. When both K and M are zero the result is a
/// 1-element tensor of shape {1}.
Tensor contracted_product(const Tensor& d, const Tensor& f, std::size_t contract_modes);

/// Factor matrices of a CP-structured coefficient tensor of shape
/// P1 x ... x PL x Q1 x ... x QM. Component weights are absorbed into the
/// factor columns.
struct CpFactors {
  std::vector<Tensor> input_factors;   ///< P_l x R
  std::vector<Tensor> output_factors;  ///< Q_m x R

  [[nodiscard]] std::size_t rank() const;
  [[nodiscard]] Shape input_shape() const;
  [[nodiscard]] Shape output_shape() const;
  [[nodiscard]] Shape coefficient_shape() const;

  /// Throws ShapeError unless all factors are matrices with a common,
  /// positive column count.
  void validate() const;

  friend bool operator==(const CpFactors&, const CpFactors&) = default;
};

Tensor cp_reconstruct(const CpFactors& factors);

}  // namespace totr
