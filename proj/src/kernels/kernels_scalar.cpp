#include <cmath>

#include "kernels_impl.hpp"

namespace impatience::kernels::scalar {
namespace {

// Running Dot2 state: s + c approximates the exact sum with error
// O(eps^2 * condition).
struct Dot2 {
  double s = 0.0;
  double c = 0.0;

  void add_product(double a, double b) noexcept {
    const double p = a * b;
    const double ep = std::fma(a, b, -p);
    add(p);
    c += ep;
  }
  void add(double x) noexcept {
    const double t = s + x;
    const double bb = t - s;
    c += (s - (t - bb)) + (x - bb);
    s = t;
  }
};

}  // namespace

double dot(const double* a, const double* b, std::size_t n) {
  Dot2 acc;
  for (std::size_t i = 0; i < n; ++i) acc.add_product(a[i], b[i]);
  return acc.s + acc.c;
}

double sum(const double* a, std::size_t n) {
  Dot2 acc;
  for (std::size_t i = 0; i < n; ++i) acc.add(a[i]);
  return acc.s + acc.c;
}

void exp_affine(const double* z, std::size_t n, double slope, double offset, double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = std::exp(std::fma(slope, z[i], offset));
}

double exp_affine_dot(const double* m, const double* z, std::size_t n, double slope, double offset) {
  Dot2 acc;
  for (std::size_t i = 0; i < n; ++i) acc.add_product(m[i], std::exp(std::fma(slope, z[i], offset)));
  return acc.s + acc.c;
}

}  // namespace impatience::kernels::scalar
