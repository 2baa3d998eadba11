#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>
#include <vector>

#include "einode/simd/kernels.hpp"

using namespace einode::simd;

namespace {

std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("scalar table is always available") {
  CHECK(isa_available(Isa::scalar));
  CHECK(std::string(isa_name(Isa::scalar)) == "scalar");
  CHECK(kernels(Isa::scalar).dot == &scalar::dot);
}

TEST_CASE("AVX2 kernels agree with the scalar reference") {
  if (!isa_available(Isa::avx2)) {
    MESSAGE("AVX2 not available; equivalence not exercised");
    return;
  }
  const KernelTable& s = kernels(Isa::scalar);
  const KernelTable& v = kernels(Isa::avx2);
  std::mt19937_64 rng(17);
  for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 7u, 8u, 31u, 129u, 1000u}) {
    const auto x = random_vector(n, rng), y = random_vector(n, rng);
    const double ds = s.dot(x.data(), y.data(), n), dv = v.dot(x.data(), y.data(), n);
    double mag = 0.0;
    for (std::size_t i = 0; i < n; ++i) mag += std::abs(x[i] * y[i]);
    CHECK(std::abs(ds - dv) <= 1e-14 * std::max(1.0, mag));

    auto ys = y, yv = y;
    s.axpy(0.37, x.data(), ys.data(), n);
    v.axpy(0.37, x.data(), yv.data(), n);
    CHECK(bitwise_equal(ys, yv));

    auto xs = x, xv = x;
    s.scal(-1.25, xs.data(), n);
    v.scal(-1.25, xv.data(), n);
    CHECK(bitwise_equal(xs, xv));

    const AdamCoefficients c{0.9, 0.999, 1e-3, 1e-8, 1 - 0.9, 1 - 0.999};
    auto ps = x, pv = x;
    auto ms = random_vector(n, rng), vs = random_vector(n, rng);
    for (double& e : vs) e = std::abs(e);
    auto mv = ms, vv = vs;
    s.adam_update(ps.data(), ms.data(), vs.data(), y.data(), n, c);
    v.adam_update(pv.data(), mv.data(), vv.data(), y.data(), n, c);
    CHECK(bitwise_equal(ps, pv));
    CHECK(bitwise_equal(ms, mv));
    CHECK(bitwise_equal(vs, vv));
  }
}

TEST_CASE("forcing the variant switches the dispatching wrappers") {
  const Isa original = active_isa();
  const std::vector<double> x{1, 2, 3, 4, 5}, y{5, 4, 3, 2, 1};
  force_isa(Isa::scalar);
  CHECK(active_isa() == Isa::scalar);
  CHECK(dot(x, y) == 35.0);
  std::vector<double> z = y;
  axpy(2.0, x, z);
  CHECK(z == std::vector<double>{7, 8, 9, 10, 11});
  scal(0.5, z);
  CHECK(z[0] == 3.5);
  force_isa(original);
  CHECK(active_isa() == original);
  CHECK(dot(x, y) == 35.0);
}
