#pragma once

#include <cstddef>

namespace impatience::kernels {

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
double sum(const double* a, std::size_t n);
void exp_affine(const double* z, std::size_t n, double slope, double offset, double* out);
double exp_affine_dot(const double* m, const double* z, std::size_t n, double slope, double offset);
}  // namespace scalar

#if defined(IMPATIENCE_HAVE_AVX2)
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
double sum(const double* a, std::size_t n);
void exp_affine(const double* z, std::size_t n, double slope, double offset, double* out);
double exp_affine_dot(const double* m, const double* z, std::size_t n, double slope, double offset);
}  // namespace avx2
#endif

}  // namespace impatience::kernels
