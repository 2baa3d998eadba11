#pragma once

// Data-parallel inner loops used by the solver, the network and the optimizer.
//
// Every kernel has a scalar reference implementation and an AVX2 variant. The
// variant is picked once at runtime from the CPU features (overridable with the
// EINODE_SIMD environment variable or force_isa()). Elementwise kernels produce
// bitwise-identical results across variants; reductions (dot) only agree up to
// reassociation rounding.

#include <cstddef>
#include <span>

namespace einode::simd {

enum class Isa { scalar, avx2 };

struct AdamCoefficients {
  double beta1;
  double beta2;
  double learning_rate;
  double epsilon;
  double bias_correction1;  // 1 - beta1^t
  double bias_correction2;  // 1 - beta2^t
};

struct KernelTable {
  double (*dot)(const double* x, const double* y, std::size_t n);
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  void (*scal)(double a, double* x, std::size_t n);
  void (*adam_update)(double* params, double* m, double* v, const double* g, std::size_t n,
                      const AdamCoefficients& c);
};

namespace scalar {
double dot(const double* x, const double* y, std::size_t n);
void axpy(double a, const double* x, double* y, std::size_t n);
void scal(double a, double* x, std::size_t n);
void adam_update(double* params, double* m, double* v, const double* g, std::size_t n,
                 const AdamCoefficients& c);
}  // namespace scalar

namespace avx2 {
double dot(const double* x, const double* y, std::size_t n);
void axpy(double a, const double* x, double* y, std::size_t n);
void scal(double a, double* x, std::size_t n);
void adam_update(double* params, double* m, double* v, const double* g, std::size_t n,
                 const AdamCoefficients& c);
}  // namespace avx2

/// True when the variant was compiled in and the CPU supports it.
bool isa_available(Isa isa) noexcept;
const char* isa_name(Isa isa) noexcept;
/// Kernel table for a specific variant; falls back to scalar when unavailable.
const KernelTable& kernels(Isa isa) noexcept;

/// Variant used by the dispatching wrappers below.
Isa active_isa() noexcept;
/// Overrides the runtime choice (tests and benchmarking). Not synchronized with
/// concurrent kernel calls.
void force_isa(Isa isa) noexcept;

double dot(std::span<const double> x, std::span<const double> y);
/// y += a * x
void axpy(double a, std::span<const double> x, std::span<double> y);
/// x *= a
void scal(double a, std::span<double> x);
void adam_update(std::span<double> params, std::span<double> m, std::span<double> v,
                 std::span<const double> g, const AdamCoefficients& c);

}  // namespace einode::simd
