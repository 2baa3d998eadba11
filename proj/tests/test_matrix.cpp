#include <doctest.h>

#include <cmath>
#include <random>

#include "einode/matrix.hpp"
#include "helpers.hpp"

using namespace einode;

TEST_CASE("matmul and transpose") {
  const RealMatrix a{{1, 2, 3}, {4, 5, 6}};
  const RealMatrix b{{7, 8}, {9, 10}, {11, 12}};
  CHECK(matmul(a, b) == RealMatrix{{58, 64}, {139, 154}});
  CHECK(transpose(a) == RealMatrix{{1, 4}, {2, 5}, {3, 6}});
  CHECK_THROWS_AS(matmul(a, a), DimensionError);
}

TEST_CASE("elementwise operations check shapes") {
  const RealMatrix a{{1, 2}, {3, 4}};
  CHECK(add(a, a) == scale(a, 2.0));
  CHECK(subtract(a, a) == RealMatrix(2, 2));
  CHECK(hadamard(a, a) == RealMatrix{{1, 4}, {9, 16}});
  CHECK_THROWS_AS(add(a, RealMatrix(2, 3)), DimensionError);
  CHECK_THROWS_AS(RealMatrix(2, 2, std::vector<double>{1, 2, 3}), DimensionError);
  CHECK_THROWS_AS((RealMatrix{{1, 2}, {3}}), DimensionError);
}

TEST_CASE("norms") {
  const RealMatrix a{{1, -2}, {3, 4}};
  CHECK(norm_inf(a) == 7.0);
  CHECK(norm_fro(a) == doctest::Approx(std::sqrt(30.0)));
  RealMatrix b = a;
  b(0, 0) = std::nan("");
  CHECK_FALSE(all_finite(b));
  CHECK(all_finite(a));
}

TEST_CASE("LU solve, transposed solve and determinant") {
  std::mt19937_64 rng(7);
  for (std::size_t n : {1u, 2u, 5u, 9u}) {
    const RealMatrix a = testing::random_matrix(n, rng);
    const RealMatrix x = testing::random_matrix(n, rng);
    const LuFactorization<double> lu(a);
    const RealMatrix b = matmul(a, x);
    const RealMatrix bt = matmul(transpose(a), x);
    CHECK(norm_inf(subtract(lu.solve(b), x)) < 1e-9);
    CHECK(norm_inf(subtract(lu.solve_transposed(bt), x)) < 1e-9);
  }
  CHECK(LuFactorization<double>(RealMatrix{{2, 1}, {4, 5}}).determinant() == doctest::Approx(6.0));
  CHECK(LuFactorization<double>(RealMatrix{{0, 1}, {1, 0}}).determinant() == doctest::Approx(-1.0));
}

TEST_CASE("complex LU") {
  const ComplexMatrix a{{Complex(1, 1), Complex(2, 0)}, {Complex(0, -1), Complex(3, 2)}};
  const ComplexMatrix b{{Complex(1, 0)}, {Complex(0, 1)}};
  const ComplexMatrix x = solve(a, b);
  const ComplexMatrix r = subtract(matmul(a, x), b);
  CHECK(norm_inf(r) < 1e-12);
}

TEST_CASE("singular matrices are rejected") {
  CHECK_THROWS_AS(LuFactorization<double>(RealMatrix{{1, 2}, {2, 4}}), SingularMatrixError);
  CHECK_THROWS_AS(LuFactorization<double>(RealMatrix(2, 3)), DimensionError);
  CHECK_THROWS_AS(solve(RealMatrix::identity(2), RealMatrix(3, 1)), DimensionError);
}
