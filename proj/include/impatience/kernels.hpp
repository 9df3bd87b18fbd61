#pragma once

// Data-parallel inner loops of the estimators. Each kernel has a scalar
// reference implementation and, on x86-64, an AVX2+FMA variant selected at
// runtime. Reductions use error-free transformations (TwoSum/TwoProd, the
// "Dot2" scheme) in every variant, so scalar and vector results agree to a
// few ulps of the exact sum regardless of lane count.
//
// The environment variable IMPATIENCE_ISA=scalar|avx2 overrides detection.

#include <cstddef>
#include <span>
#include <string_view>

namespace impatience::kernels {

enum class Isa { scalar, avx2 };

std::string_view to_string(Isa isa) noexcept;
bool isa_supported(Isa isa) noexcept;
Isa active_isa() noexcept;
/// Throws impatience::Error when the ISA is not supported on this machine.
void set_active_isa(Isa isa);

struct KernelTable {
  /// sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  /// sum_i a[i]
  double (*sum)(const double* a, std::size_t n);
  /// out[i] = exp(slope * z[i] + offset)
  void (*exp_affine)(const double* z, std::size_t n, double slope, double offset, double* out);
  /// sum_i m[i] * exp(slope * z[i] + offset)
  double (*exp_affine_dot)(const double* m, const double* z, std::size_t n, double slope, double offset);
};

const KernelTable& table(Isa isa);
const KernelTable& active() noexcept;

double dot(std::span<const double> a, std::span<const double> b);
double sum(std::span<const double> a);
void exp_affine(std::span<const double> z, double slope, double offset, std::span<double> out);
double exp_affine_dot(std::span<const double> m, std::span<const double> z, double slope, double offset);

}  // namespace impatience::kernels
