#include <atomic>
#include <cstdlib>
#include <cstring>
#include <string>

#include "impatience/error.hpp"
#include "impatience/kernels.hpp"
#include "kernels_impl.hpp"

namespace impatience::kernels {
namespace {

constexpr KernelTable kScalar{scalar::dot, scalar::sum, scalar::exp_affine, scalar::exp_affine_dot};
#if defined(IMPATIENCE_HAVE_AVX2)
constexpr KernelTable kAvx2{avx2::dot, avx2::sum, avx2::exp_affine, avx2::exp_affine_dot};
#endif

Isa detect() noexcept {
  const char* forced = std::getenv("IMPATIENCE_ISA");
  if (forced && std::strcmp(forced, "scalar") == 0) return Isa::scalar;
  if (isa_supported(Isa::avx2)) return Isa::avx2;
  return Isa::scalar;
}

std::atomic<Isa>& active_slot() noexcept {
  static std::atomic<Isa> slot{detect()};
  return slot;
}

void check_sizes(std::size_t a, std::size_t b) {
  if (a != b) throw Error("kernel operands differ in length: " + std::to_string(a) + " vs " + std::to_string(b));
}

}  // namespace

std::string_view to_string(Isa isa) noexcept { return isa == Isa::avx2 ? "avx2" : "scalar"; }

bool isa_supported(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar: return true;
    case Isa::avx2:
#if defined(IMPATIENCE_HAVE_AVX2)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

Isa active_isa() noexcept { return active_slot().load(std::memory_order_relaxed); }

void set_active_isa(Isa isa) {
  if (!isa_supported(isa)) throw Error("ISA " + std::string(to_string(isa)) + " is not supported on this CPU");
  active_slot().store(isa, std::memory_order_relaxed);
}

const KernelTable& table(Isa isa) {
  if (!isa_supported(isa)) throw Error("ISA " + std::string(to_string(isa)) + " is not supported on this CPU");
#if defined(IMPATIENCE_HAVE_AVX2)
  if (isa == Isa::avx2) return kAvx2;
#endif
  return kScalar;
}

const KernelTable& active() noexcept {
#if defined(IMPATIENCE_HAVE_AVX2)
  if (active_isa() == Isa::avx2) return kAvx2;
#endif
  return kScalar;
}

double dot(std::span<const double> a, std::span<const double> b) {
  check_sizes(a.size(), b.size());
  return active().dot(a.data(), b.data(), a.size());
}

double sum(std::span<const double> a) { return active().sum(a.data(), a.size()); }

void exp_affine(std::span<const double> z, double slope, double offset, std::span<double> out) {
  check_sizes(z.size(), out.size());
  active().exp_affine(z.data(), z.size(), slope, offset, out.data());
}

double exp_affine_dot(std::span<const double> m, std::span<const double> z, double slope, double offset) {
  check_sizes(m.size(), z.size());
  return active().exp_affine_dot(m.data(), z.data(), m.size(), slope, offset);
}

}  // namespace impatience::kernels
