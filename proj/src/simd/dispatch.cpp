#include "einode/simd/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>

#include "einode/errors.hpp"

namespace einode::simd {
namespace {

constexpr KernelTable kScalarTable{&scalar::dot, &scalar::axpy, &scalar::scal,
                                   &scalar::adam_update};
#ifdef EINODE_HAVE_AVX2
constexpr KernelTable kAvx2Table{&avx2::dot, &avx2::axpy, &avx2::scal, &avx2::adam_update};
#endif

bool cpu_has_avx2() noexcept {
#if defined(EINODE_HAVE_AVX2) && (defined(__x86_64__) || defined(__i386__))
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

Isa initial_isa() noexcept {
  if (const char* env = std::getenv("EINODE_SIMD")) {
    if (std::strcmp(env, "scalar") == 0) return Isa::scalar;
  }
  return cpu_has_avx2() ? Isa::avx2 : Isa::scalar;
}

std::atomic<Isa>& current() noexcept {
  static std::atomic<Isa> isa{initial_isa()};
  return isa;
}

void check_same_size(std::size_t a, std::size_t b) {
  if (a != b) throw DimensionError("simd kernel: operand lengths differ");
}

}  // namespace

bool isa_available(Isa isa) noexcept {
  return isa == Isa::scalar || cpu_has_avx2();
}

const char* isa_name(Isa isa) noexcept {
  return isa == Isa::avx2 ? "avx2" : "scalar";
}

const KernelTable& kernels(Isa isa) noexcept {
#ifdef EINODE_HAVE_AVX2
  if (isa == Isa::avx2 && cpu_has_avx2()) return kAvx2Table;
#else
  (void)isa;
#endif
  return kScalarTable;
}

Isa active_isa() noexcept { return current().load(std::memory_order_relaxed); }

namespace {

std::atomic<const KernelTable*>& active_table() noexcept {
  static std::atomic<const KernelTable*> table{&kernels(active_isa())};
  return table;
}

}  // namespace

void force_isa(Isa isa) noexcept {
  const Isa chosen = isa_available(isa) ? isa : Isa::scalar;
  current().store(chosen, std::memory_order_relaxed);
  active_table().store(&kernels(chosen), std::memory_order_relaxed);
}

double dot(std::span<const double> x, std::span<const double> y) {
  check_same_size(x.size(), y.size());
  return active_table().load(std::memory_order_relaxed)->dot(x.data(), y.data(), x.size());
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
  check_same_size(x.size(), y.size());
  active_table().load(std::memory_order_relaxed)->axpy(a, x.data(), y.data(), x.size());
}

void scal(double a, std::span<double> x) { active_table().load(std::memory_order_relaxed)->scal(a, x.data(), x.size()); }

void adam_update(std::span<double> params, std::span<double> m, std::span<double> v,
                 std::span<const double> g, const AdamCoefficients& c) {
  check_same_size(params.size(), m.size());
  check_same_size(params.size(), v.size());
  check_same_size(params.size(), g.size());
  active_table().load(std::memory_order_relaxed)->adam_update(params.data(), m.data(), v.data(), g.data(), params.size(), c);
}

}  // namespace einode::simd
