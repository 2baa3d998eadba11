#pragma once

// Dense row-major real and complex matrices. Shapes are validated at every
// call boundary; violations raise DimensionError.

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "einode/errors.hpp"

namespace einode {

using Complex = std::complex<double>;

template <typename T>
class Matrix {
 public:
  using value_type = T;

  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<T> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) throw DimensionError("matrix data length != rows*cols");
  }
  Matrix(std::initializer_list<std::initializer_list<T>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
      if (r.size() != cols_) throw DimensionError("ragged matrix initializer");
      data_.insert(data_.end(), r.begin(), r.end());
    }
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = T{1};
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool square() const noexcept { return rows_ == cols_; }

  T& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }
  std::span<T> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const T> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using RealMatrix = Matrix<double>;
using ComplexMatrix = Matrix<Complex>;

ComplexMatrix to_complex(const RealMatrix& a);
RealMatrix real_part(const ComplexMatrix& a);

template <typename T>
Matrix<T> transpose(const Matrix<T>& a);

template <typename T>
Matrix<T> matmul(const Matrix<T>& a, const Matrix<T>& b);

/// Element-wise product.
template <typename T>
Matrix<T> hadamard(const Matrix<T>& a, const Matrix<T>& b);

template <typename T>
Matrix<T> add(const Matrix<T>& a, const Matrix<T>& b);

template <typename T>
Matrix<T> subtract(const Matrix<T>& a, const Matrix<T>& b);

template <typename T>
Matrix<T> scale(const Matrix<T>& a, T s);

/// Maximum absolute row sum.
template <typename T>
double norm_inf(const Matrix<T>& a);

template <typename T>
double norm_fro(const Matrix<T>& a);

bool all_finite(const RealMatrix& a) noexcept;

/// Partial-pivot LU factorization P·A = L·U, stored compactly.
template <typename T>
class LuFactorization {
 public:
  /// Throws SingularMatrixError when a pivot falls below 1e-14·‖a‖∞.
  explicit LuFactorization(const Matrix<T>& a);

  std::size_t order() const noexcept { return lu_.rows(); }
  /// Solves a·X = b for every column of b.
  Matrix<T> solve(const Matrix<T>& b) const;
  /// Solves aᵀ·X = b (plain transpose, no conjugation).
  Matrix<T> solve_transposed(const Matrix<T>& b) const;
  T determinant() const;

 private:
  Matrix<T> lu_;
  std::vector<std::size_t> pivots_;
  int sign_ = 1;
};

/// Returns X with a·X = b via partial-pivot LU.
template <typename T>
Matrix<T> solve(const Matrix<T>& a, const Matrix<T>& b);

}  // namespace einode
