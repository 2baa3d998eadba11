#include "einode/matrix.hpp"

#include <cmath>
#include <string>

namespace einode {
namespace {

template <typename T>
void require_same_shape(const Matrix<T>& a, const Matrix<T>& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(op) + ": shape mismatch (" + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                         std::to_string(b.cols()) + ")");
  }
}

}  // namespace

ComplexMatrix to_complex(const RealMatrix& a) {
  ComplexMatrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i];
  return out;
}

RealMatrix real_part(const ComplexMatrix& a) {
  RealMatrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i].real();
  return out;
}

bool all_finite(const RealMatrix& a) noexcept {
  for (double v : a.data()) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

template <typename T>
Matrix<T> transpose(const Matrix<T>& a) {
  Matrix<T> out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

template <typename T>
Matrix<T> matmul(const Matrix<T>& a, const Matrix<T>& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: inner dimensions differ (" + std::to_string(a.cols()) + " vs " +
                         std::to_string(b.rows()) + ")");
  }
  Matrix<T> out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const T aik = a(i, k);
      if (aik == T{}) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  }
  return out;
}

template <typename T>
Matrix<T> hadamard(const Matrix<T>& a, const Matrix<T>& b) {
  require_same_shape(a, b, "hadamard");
  Matrix<T> out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] * b.data()[i];
  return out;
}

template <typename T>
Matrix<T> add(const Matrix<T>& a, const Matrix<T>& b) {
  require_same_shape(a, b, "add");
  Matrix<T> out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] + b.data()[i];
  return out;
}

template <typename T>
Matrix<T> subtract(const Matrix<T>& a, const Matrix<T>& b) {
  require_same_shape(a, b, "subtract");
  Matrix<T> out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] - b.data()[i];
  return out;
}

template <typename T>
Matrix<T> scale(const Matrix<T>& a, T s) {
  Matrix<T> out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] * s;
  return out;
}

template <typename T>
double norm_inf(const Matrix<T>& a) {
  double best = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double sum = 0.0;
    for (const T& v : a.row(i)) sum += std::abs(v);
    best = std::max(best, sum);
  }
  return best;
}

template <typename T>
double norm_fro(const Matrix<T>& a) {
  double sum = 0.0;
  for (const T& v : a.data()) sum += std::norm(v);
  return std::sqrt(sum);
}

template <typename T>
LuFactorization<T>::LuFactorization(const Matrix<T>& a) : lu_(a), pivots_(a.rows()) {
  if (!a.square()) throw DimensionError("lu: matrix is not square");
  const std::size_t n = a.rows();
  const double threshold = 1e-14 * norm_inf(a);
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    double best = std::abs(lu_(k, k));
    for (std::size_t i = k + 1; i < n; ++i) {
      const double mag = std::abs(lu_(i, k));
      if (mag > best) {
        best = mag;
        p = i;
      }
    }
    if (!(best > threshold) || best == 0.0) {
      throw SingularMatrixError("lu: pivot " + std::to_string(best) + " below threshold at column " +
                                std::to_string(k));
    }
    pivots_[k] = p;
    if (p != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(lu_(k, j), lu_(p, j));
      sign_ = -sign_;
    }
    const T pivot = lu_(k, k);
    for (std::size_t i = k + 1; i < n; ++i) {
      const T factor = lu_(i, k) / pivot;
      lu_(i, k) = factor;
      if (factor == T{}) continue;
      for (std::size_t j = k + 1; j < n; ++j) lu_(i, j) -= factor * lu_(k, j);
    }
  }
}

template <typename T>
Matrix<T> LuFactorization<T>::solve(const Matrix<T>& b) const {
  const std::size_t n = order();
  if (b.rows() != n) throw DimensionError("lu solve: right-hand side row count mismatch");
  Matrix<T> x = b;
  const std::size_t m = b.cols();
  for (std::size_t k = 0; k < n; ++k) {
    if (pivots_[k] != k) {
      for (std::size_t j = 0; j < m; ++j) std::swap(x(k, j), x(pivots_[k], j));
    }
  }
  for (std::size_t i = 1; i < n; ++i)
    for (std::size_t k = 0; k < i; ++k) {
      const T l = lu_(i, k);
      if (l == T{}) continue;
      for (std::size_t j = 0; j < m; ++j) x(i, j) -= l * x(k, j);
    }
  for (std::size_t ii = n; ii-- > 0;) {
    for (std::size_t k = ii + 1; k < n; ++k) {
      const T u = lu_(ii, k);
      if (u == T{}) continue;
      for (std::size_t j = 0; j < m; ++j) x(ii, j) -= u * x(k, j);
    }
    const T d = lu_(ii, ii);
    for (std::size_t j = 0; j < m; ++j) x(ii, j) /= d;
  }
  return x;
}

template <typename T>
Matrix<T> LuFactorization<T>::solve_transposed(const Matrix<T>& b) const {
  // aᵀ = Uᵀ Lᵀ P, so solve Uᵀ y = b, Lᵀ z = y, then undo the row permutation.
  const std::size_t n = order();
  if (b.rows() != n) throw DimensionError("lu solve: right-hand side row count mismatch");
  Matrix<T> x = b;
  const std::size_t m = b.cols();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < i; ++k) {
      const T u = lu_(k, i);
      if (u == T{}) continue;
      for (std::size_t j = 0; j < m; ++j) x(i, j) -= u * x(k, j);
    }
    const T d = lu_(i, i);
    for (std::size_t j = 0; j < m; ++j) x(i, j) /= d;
  }
  for (std::size_t ii = n; ii-- > 0;) {
    for (std::size_t k = ii + 1; k < n; ++k) {
      const T l = lu_(k, ii);
      if (l == T{}) continue;
      for (std::size_t j = 0; j < m; ++j) x(ii, j) -= l * x(k, j);
    }
  }
  for (std::size_t k = n; k-- > 0;) {
    if (pivots_[k] != k) {
      for (std::size_t j = 0; j < m; ++j) std::swap(x(k, j), x(pivots_[k], j));
    }
  }
  return x;
}

template <typename T>
T LuFactorization<T>::determinant() const {
  T det = static_cast<T>(sign_);
  for (std::size_t i = 0; i < order(); ++i) det *= lu_(i, i);
  return det;
}

template <typename T>
Matrix<T> solve(const Matrix<T>& a, const Matrix<T>& b) {
  if (!a.square()) throw DimensionError("solve: matrix is not square");
  if (b.rows() != a.rows()) throw DimensionError("solve: right-hand side row count mismatch");
  return LuFactorization<T>(a).solve(b);
}

#define EINODE_INSTANTIATE(T)                                           \
  template Matrix<T> transpose(const Matrix<T>&);                       \
  template Matrix<T> matmul(const Matrix<T>&, const Matrix<T>&);        \
  template Matrix<T> hadamard(const Matrix<T>&, const Matrix<T>&);      \
  template Matrix<T> add(const Matrix<T>&, const Matrix<T>&);           \
  template Matrix<T> subtract(const Matrix<T>&, const Matrix<T>&);      \
  template Matrix<T> scale(const Matrix<T>&, T);                        \
  template double norm_inf(const Matrix<T>&);                           \
  template double norm_fro(const Matrix<T>&);                           \
  template class LuFactorization<T>;                                    \
  template Matrix<T> solve(const Matrix<T>&, const Matrix<T>&);

EINODE_INSTANTIATE(double)
EINODE_INSTANTIATE(Complex)

#undef EINODE_INSTANTIATE

}  // namespace einode
