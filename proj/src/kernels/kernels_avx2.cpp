// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.

#include <immintrin.h>

#include <cmath>

#include "kernels_impl.hpp"

namespace impatience::kernels::avx2 {
namespace {

// Four-lane Dot2 accumulator.
struct Dot2x4 {
  __m256d s = _mm256_setzero_pd();
  __m256d c = _mm256_setzero_pd();

  void add(__m256d x) noexcept {
    const __m256d t = _mm256_add_pd(s, x);
    const __m256d bb = _mm256_sub_pd(t, s);
    const __m256d err = _mm256_add_pd(_mm256_sub_pd(s, _mm256_sub_pd(t, bb)), _mm256_sub_pd(x, bb));
    c = _mm256_add_pd(c, err);
    s = t;
  }
  void add_product(__m256d a, __m256d b) noexcept {
    const __m256d p = _mm256_mul_pd(a, b);
    c = _mm256_add_pd(c, _mm256_fmsub_pd(a, b, p));
    add(p);
  }
};

struct Dot2 {
  double s = 0.0;
  double c = 0.0;

  void add(double x) noexcept {
    const double t = s + x;
    const double bb = t - s;
    c += (s - (t - bb)) + (x - bb);
    s = t;
  }
  void add_product(double a, double b) noexcept {
    const double p = a * b;
    c += std::fma(a, b, -p);
    add(p);
  }
  // Fold lanes in index order so the result does not depend on how the
  // compiler schedules the horizontal reduction.
  void absorb(const Dot2x4& v) noexcept {
    alignas(32) double s4[4];
    alignas(32) double c4[4];
    _mm256_store_pd(s4, v.s);
    _mm256_store_pd(c4, v.c);
    for (int l = 0; l < 4; ++l) {
      add(s4[l]);
      c += c4[l];
    }
  }
};

// exp(x) after Cephes: x = n ln2 + r, |r| <= ln2/2, then a (3,4) rational
// approximation of exp(r) and an exponent-field scale. The vector path is
// valid on [-708.39, 709] where 2^n stays a normal double; lanes outside
// (overflow, subnormal results, NaN) are redone with std::exp.
inline __m256d exp_pd(__m256d x) noexcept {
  const __m256d in = x;
  const __m256d hi = _mm256_set1_pd(709.0);
  const __m256d lo = _mm256_set1_pd(-708.3964185322641);
  const __m256d log2e = _mm256_set1_pd(1.4426950408889634073599);
  const __m256d c1 = _mm256_set1_pd(6.93145751953125E-1);
  const __m256d c2 = _mm256_set1_pd(1.42860682030941723212E-6);

  x = _mm256_min_pd(_mm256_max_pd(x, lo), hi);
  const __m256d n = _mm256_round_pd(_mm256_mul_pd(x, log2e), _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(n, c1, x);
  r = _mm256_fnmadd_pd(n, c2, r);
  const __m256d rr = _mm256_mul_pd(r, r);

  __m256d p = _mm256_set1_pd(1.26177193074810590878E-4);
  p = _mm256_fmadd_pd(p, rr, _mm256_set1_pd(3.02994407707441961300E-2));
  p = _mm256_fmadd_pd(p, rr, _mm256_set1_pd(9.99999999999999999910E-1));
  p = _mm256_mul_pd(p, r);

  __m256d q = _mm256_set1_pd(3.00198505138664455042E-6);
  q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(2.52448340349684104192E-3));
  q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(2.27265548208155028766E-1));
  q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(2.00000000000000000009E0));

  __m256d e = _mm256_div_pd(p, _mm256_sub_pd(q, p));
  e = _mm256_fmadd_pd(e, _mm256_set1_pd(2.0), _mm256_set1_pd(1.0));

  __m256i k = _mm256_cvtepi32_epi64(_mm256_cvtpd_epi32(n));
  k = _mm256_slli_epi64(_mm256_add_epi64(k, _mm256_set1_epi64x(1023)), 52);
  __m256d result = _mm256_mul_pd(e, _mm256_castsi256_pd(k));

  const __m256d inside = _mm256_and_pd(_mm256_cmp_pd(in, lo, _CMP_GE_OQ), _mm256_cmp_pd(in, hi, _CMP_LE_OQ));
  if (_mm256_movemask_pd(inside) != 0xF) {
    alignas(32) double xs[4], ys[4];
    _mm256_store_pd(xs, in);
    _mm256_store_pd(ys, result);
    const int ok = _mm256_movemask_pd(inside);
    for (int j = 0; j < 4; ++j) {
      if (!(ok & (1 << j))) ys[j] = std::exp(xs[j]);
    }
    result = _mm256_load_pd(ys);
  }
  return result;
}

inline double exp_scalar_tail(double x) noexcept { return std::exp(x); }

}  // namespace

double dot(const double* a, const double* b, std::size_t n) {
  Dot2x4 v0, v1;
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    v0.add_product(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    v1.add_product(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4));
  }
  Dot2 acc;
  acc.absorb(v0);
  acc.absorb(v1);
  for (; i < n; ++i) acc.add_product(a[i], b[i]);
  return acc.s + acc.c;
}

double sum(const double* a, std::size_t n) {
  Dot2x4 v0, v1;
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    v0.add(_mm256_loadu_pd(a + i));
    v1.add(_mm256_loadu_pd(a + i + 4));
  }
  Dot2 acc;
  acc.absorb(v0);
  acc.absorb(v1);
  for (; i < n; ++i) acc.add(a[i]);
  return acc.s + acc.c;
}

void exp_affine(const double* z, std::size_t n, double slope, double offset, double* out) {
  const __m256d vs = _mm256_set1_pd(slope);
  const __m256d vo = _mm256_set1_pd(offset);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, exp_pd(_mm256_fmadd_pd(vs, _mm256_loadu_pd(z + i), vo)));
  }
  for (; i < n; ++i) out[i] = exp_scalar_tail(std::fma(slope, z[i], offset));
}

double exp_affine_dot(const double* m, const double* z, std::size_t n, double slope, double offset) {
  const __m256d vs = _mm256_set1_pd(slope);
  const __m256d vo = _mm256_set1_pd(offset);
  Dot2x4 v0, v1;
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256d w0 = exp_pd(_mm256_fmadd_pd(vs, _mm256_loadu_pd(z + i), vo));
    const __m256d w1 = exp_pd(_mm256_fmadd_pd(vs, _mm256_loadu_pd(z + i + 4), vo));
    v0.add_product(_mm256_loadu_pd(m + i), w0);
    v1.add_product(_mm256_loadu_pd(m + i + 4), w1);
  }
  Dot2 acc;
  acc.absorb(v0);
  acc.absorb(v1);
  for (; i < n; ++i) acc.add_product(m[i], exp_scalar_tail(std::fma(slope, z[i], offset)));
  return acc.s + acc.c;
}

}  // namespace impatience::kernels::avx2
