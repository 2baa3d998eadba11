#pragma once

// Analytic sensitivities of the eigen-decomposition A = U·D·U⁻¹.
//
//   forward:  Ḋ = I ∘ (U⁻¹ Ȧ U),   U̇ = U (F ∘ (U⁻¹ Ȧ U))
//   reverse:  Ā = Re[ U⁻ᵀ (D̄ + F ∘ (Uᵀ Ū)) Uᵀ ]
//   F(i,j) = 1 / (λ_j − λ_i) for i ≠ j, 0 on the diagonal.
//
// Cotangents pair with tangents through the bilinear form Re Σ X̄(i,j)·Ẋ(i,j),
// so for a real function l of the eigenvalues D̄(i,i) = ∂l/∂Re λ_i − i·∂l/∂Im λ_i.
// The eigenvector tangent U̇ is in the gauge where (U⁻¹U̇) has a zero diagonal;
// it is not re-normalized to the EigenResult convention.

#include <span>

#include "einode/eigen.hpp"
#include "einode/matrix.hpp"

namespace einode {

struct FMatrix {
  ComplexMatrix f;
  bool degenerate = false;
};

struct EigenForwardSensitivity {
  ComplexMatrix dD;  // diagonal
  ComplexMatrix dU;
};

inline constexpr double kDefaultDegeneracyFloor = 1e-8;

FMatrix f_matrix(const std::vector<Complex>& values, double degeneracy_floor = kDefaultDegeneracyFloor);

/// Throws DegeneracyError for repeated eigenvalues and SingularMatrixError for singular U.
EigenForwardSensitivity eigen_forward(const EigenResult& eig, const RealMatrix& dA,
                                      double degeneracy_floor = kDefaultDegeneracyFloor);

/// dU_bar may be an empty (0×0) matrix, meaning zero. Degenerate eigenvalues are only
/// accepted when dU_bar is zero; the F term is then dropped.
RealMatrix eigen_reverse(const EigenResult& eig, const ComplexMatrix& dD_bar,
                         const ComplexMatrix& dU_bar,
                         double degeneracy_floor = kDefaultDegeneracyFloor);

/// Eigenvalue tangents along many directions at once (the diagonal of the forward rule).
/// `dA_columns` has n·n rows (row-major index of A) and one column per direction; the result
/// has n rows (eigenvalues) and the same columns. Rows of dA that are identically zero are
/// skipped. Valid at degenerate eigenvalues as long as U is invertible.
ComplexMatrix eigenvalue_jacobian(const EigenResult& eig, const RealMatrix& dA_columns);

/// Interleaved (re, im) form of eigenvalue_jacobian: 2n rows.
RealMatrix interleave_rows(const ComplexMatrix& m);

/// U⁻¹ (closed form for 2×2, LU otherwise). Throws SingularMatrixError below the LU pivot
/// threshold.
ComplexMatrix eigenvector_inverse(const ComplexMatrix& u);

}  // namespace einode
