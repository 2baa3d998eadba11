#include "einode/eigen_diff.hpp"

#include <algorithm>
#include <cmath>

#include "einode/simd/kernels.hpp"

namespace einode {
namespace {

void require_square_pair(const EigenResult& eig, std::size_t rows, std::size_t cols,
                         const char* what) {
  const std::size_t n = eig.values.size();
  if (eig.vectors.rows() != n || eig.vectors.cols() != n)
    throw DimensionError(std::string(what) + ": eigenvector matrix shape mismatch");
  if (rows != n || cols != n) throw DimensionError(std::string(what) + ": operand shape mismatch");
}

bool is_zero(const ComplexMatrix& m) {
  for (const Complex& c : m.data())
    if (c != Complex{}) return false;
  return true;
}

}  // namespace

FMatrix f_matrix(const std::vector<Complex>& values, double degeneracy_floor) {
  const std::size_t n = values.size();
  FMatrix out{ComplexMatrix(n, n), false};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const Complex gap = values[j] - values[i];
      if (std::abs(gap) < degeneracy_floor) {
        out.degenerate = true;
        continue;
      }
      out.f(i, j) = Complex(1.0) / gap;
    }
  }
  return out;
}

EigenForwardSensitivity eigen_forward(const EigenResult& eig, const RealMatrix& dA,
                                      double degeneracy_floor) {
  require_square_pair(eig, dA.rows(), dA.cols(), "eigen_forward");
  const std::size_t n = eig.values.size();
  const FMatrix f = f_matrix(eig.values, degeneracy_floor);
  if (f.degenerate) throw DegeneracyError("eigen_forward: repeated eigenvalues, F is undefined");

  const ComplexMatrix& u = eig.vectors;
  // M = U⁻¹ · Ȧ · U
  const ComplexMatrix m = solve(u, matmul(to_complex(dA), u));
  EigenForwardSensitivity out{ComplexMatrix(n, n), ComplexMatrix()};
  for (std::size_t i = 0; i < n; ++i) out.dD(i, i) = m(i, i);
  out.dU = matmul(u, hadamard(f.f, m));
  return out;
}

RealMatrix eigen_reverse(const EigenResult& eig, const ComplexMatrix& dD_bar,
                         const ComplexMatrix& dU_bar, double degeneracy_floor) {
  require_square_pair(eig, dD_bar.rows(), dD_bar.cols(), "eigen_reverse");
  const std::size_t n = eig.values.size();
  const bool has_vector_term = dU_bar.size() != 0 && !is_zero(dU_bar);
  if (dU_bar.size() != 0 && (dU_bar.rows() != n || dU_bar.cols() != n))
    throw DimensionError("eigen_reverse: dU_bar shape mismatch");

  ComplexMatrix inner(n, n);
  for (std::size_t i = 0; i < n; ++i) inner(i, i) = dD_bar(i, i);
  const ComplexMatrix& u = eig.vectors;
  if (has_vector_term) {
    const FMatrix f = f_matrix(eig.values, degeneracy_floor);
    if (f.degenerate)
      throw DegeneracyError("eigen_reverse: repeated eigenvalues with a non-zero eigenvector cotangent");
    inner = add(inner, hadamard(f.f, matmul(transpose(u), dU_bar)));
  }
  // Ā = U⁻ᵀ · inner · Uᵀ
  const LuFactorization<Complex> lu(u);
  const ComplexMatrix abar = lu.solve_transposed(matmul(inner, transpose(u)));
  return real_part(abar);
}

ComplexMatrix eigenvector_inverse(const ComplexMatrix& u) {
  if (u.rows() != 2 || u.cols() != 2)
    return LuFactorization<Complex>(u).solve(ComplexMatrix::identity(u.rows()));
  const double scale = std::max(std::abs(u(0, 0)) + std::abs(u(0, 1)),
                                std::abs(u(1, 0)) + std::abs(u(1, 1)));
  const Complex det = u(0, 0) * u(1, 1) - u(0, 1) * u(1, 0);
  if (!(std::abs(det) > 1e-14 * scale * scale))
    throw SingularMatrixError("eigenvector_inverse: singular eigenvector matrix");
  const Complex inv = 1.0 / det;
  ComplexMatrix out(2, 2);
  out(0, 0) = u(1, 1) * inv;
  out(0, 1) = -u(0, 1) * inv;
  out(1, 0) = -u(1, 0) * inv;
  out(1, 1) = u(0, 0) * inv;
  return out;
}

ComplexMatrix eigenvalue_jacobian(const EigenResult& eig, const RealMatrix& dA_columns) {
  const std::size_t n = eig.values.size();
  if (dA_columns.rows() != n * n) throw DimensionError("eigenvalue_jacobian: need n*n rows");
  const std::size_t p = dA_columns.cols();
  const ComplexMatrix& u = eig.vectors;
  const ComplexMatrix u_inv = eigenvector_inverse(u);

  std::vector<bool> active(n * n, false);
  for (std::size_t r = 0; r < n * n; ++r)
    for (double v : dA_columns.row(r))
      if (v != 0.0) {
        active[r] = true;
        break;
      }

  // dλ_i = Σ_{j,l} U⁻¹(i,j) · dA(j,l) · U(l,i)
  ComplexMatrix out(n, p);
  std::vector<double> re(p), im(p);
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(re.begin(), re.end(), 0.0);
    std::fill(im.begin(), im.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t l = 0; l < n; ++l) {
        const std::size_t r = j * n + l;
        if (!active[r]) continue;
        const Complex w = u_inv(i, j) * u(l, i);
        simd::axpy(w.real(), dA_columns.row(r), re);
        simd::axpy(w.imag(), dA_columns.row(r), im);
      }
    }
    for (std::size_t k = 0; k < p; ++k) out(i, k) = Complex(re[k], im[k]);
  }
  return out;
}

RealMatrix interleave_rows(const ComplexMatrix& m) {
  RealMatrix out(2 * m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t k = 0; k < m.cols(); ++k) {
      out(2 * i, k) = m(i, k).real();
      out(2 * i + 1, k) = m(i, k).imag();
    }
  return out;
}

}  // namespace einode
