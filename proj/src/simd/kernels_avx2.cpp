// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.
#include <immintrin.h>

#include <cmath>

#include "vrh/simd.hpp"

namespace vrh::simd {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

// exp(x) on [-708, 709] (Cephes rational approximation, ~1 ulp). Results
// below exp(-708) flush to zero.
inline __m256d exp_pd(__m256d x) {
  const __m256d log2e = _mm256_set1_pd(1.4426950408889634073599);
  const __m256d c1 = _mm256_set1_pd(6.93145751953125E-1);
  const __m256d c2 = _mm256_set1_pd(1.42860682030941723212E-6);
  const __m256d p0 = _mm256_set1_pd(1.26177193074810590878E-4);
  const __m256d p1 = _mm256_set1_pd(3.02994407707441961300E-2);
  const __m256d p2 = _mm256_set1_pd(9.99999999999999999910E-1);
  const __m256d q0 = _mm256_set1_pd(3.00198505138664455042E-6);
  const __m256d q1 = _mm256_set1_pd(2.52448340349684104192E-3);
  const __m256d q2 = _mm256_set1_pd(2.27265548208155028766E-1);
  const __m256d q3 = _mm256_set1_pd(2.00000000000000000009E0);
  const __m256d lower = _mm256_set1_pd(-708.0);

  const __m256d underflow = _mm256_cmp_pd(x, lower, _CMP_LT_OQ);
  x = _mm256_min_pd(_mm256_max_pd(x, lower), _mm256_set1_pd(709.0));

  const __m256d fx = _mm256_round_pd(_mm256_mul_pd(x, log2e), _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(fx, c1, x);
  r = _mm256_fnmadd_pd(fx, c2, r);
  const __m256d rr = _mm256_mul_pd(r, r);
  const __m256d px = _mm256_mul_pd(r, _mm256_fmadd_pd(_mm256_fmadd_pd(p0, rr, p1), rr, p2));
  const __m256d qx = _mm256_fmadd_pd(_mm256_fmadd_pd(_mm256_fmadd_pd(q0, rr, q1), rr, q2), rr, q3);
  __m256d e = _mm256_div_pd(px, _mm256_sub_pd(qx, px));
  e = _mm256_fmadd_pd(_mm256_set1_pd(2.0), e, _mm256_set1_pd(1.0));

  const __m128i n32 = _mm256_cvtpd_epi32(fx);
  __m256i n64 = _mm256_cvtepi32_epi64(n32);
  n64 = _mm256_slli_epi64(_mm256_add_epi64(n64, _mm256_set1_epi64x(1023)), 52);
  const __m256d result = _mm256_mul_pd(e, _mm256_castsi256_pd(n64));
  return _mm256_andnot_pd(underflow, result);
}

// Natural log for positive normal doubles (Cephes).
inline __m256d log_pos(__m256d x) {
  const __m256i bits = _mm256_castpd_si256(x);
  const __m256i exp_bits = _mm256_srli_epi64(bits, 52);
  // Exponent as double via the 2^52 magic constant.
  const __m256d magic = _mm256_set1_pd(0x1.0p52);
  __m256d e = _mm256_sub_pd(_mm256_castsi256_pd(_mm256_or_si256(exp_bits, _mm256_castpd_si256(magic))), magic);
  e = _mm256_sub_pd(e, _mm256_set1_pd(1022.0));
  const __m256i mant_mask = _mm256_set1_epi64x(0x000fffffffffffffLL);
  __m256d m = _mm256_castsi256_pd(
      _mm256_or_si256(_mm256_and_si256(bits, mant_mask), _mm256_set1_epi64x(0x3fe0000000000000LL)));

  const __m256d sqrth = _mm256_set1_pd(0.70710678118654752440);
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d small = _mm256_cmp_pd(m, sqrth, _CMP_LT_OQ);
  e = _mm256_sub_pd(e, _mm256_and_pd(small, one));
  m = _mm256_add_pd(m, _mm256_and_pd(small, m));
  const __m256d xr = _mm256_sub_pd(m, one);

  const __m256d z = _mm256_mul_pd(xr, xr);
  __m256d p = _mm256_set1_pd(1.01875663804580931796E-4);
  p = _mm256_fmadd_pd(p, xr, _mm256_set1_pd(4.97494994976747001425E-1));
  p = _mm256_fmadd_pd(p, xr, _mm256_set1_pd(4.70579119878881725854E0));
  p = _mm256_fmadd_pd(p, xr, _mm256_set1_pd(1.44989225341610930846E1));
  p = _mm256_fmadd_pd(p, xr, _mm256_set1_pd(1.79368678507819816313E1));
  p = _mm256_fmadd_pd(p, xr, _mm256_set1_pd(7.70838733755885391666E0));
  __m256d q = _mm256_add_pd(xr, _mm256_set1_pd(1.12873587189167450590E1));
  q = _mm256_fmadd_pd(q, xr, _mm256_set1_pd(4.52279145837532221105E1));
  q = _mm256_fmadd_pd(q, xr, _mm256_set1_pd(8.29875266912776603211E1));
  q = _mm256_fmadd_pd(q, xr, _mm256_set1_pd(7.11544750618563894466E1));
  q = _mm256_fmadd_pd(q, xr, _mm256_set1_pd(2.31251620126765340583E1));

  __m256d y = _mm256_mul_pd(xr, _mm256_div_pd(_mm256_mul_pd(z, p), q));
  y = _mm256_fmadd_pd(e, _mm256_set1_pd(-2.121944400546905827679e-4), y);
  y = _mm256_fnmadd_pd(_mm256_set1_pd(0.5), z, y);
  __m256d res = _mm256_add_pd(xr, y);
  return _mm256_fmadd_pd(e, _mm256_set1_pd(0.693359375), res);
}

inline __m256d radial_power(__m256d d2, double alpha) {
  if (alpha == 1.0) return _mm256_sqrt_pd(d2);
  if (alpha == 2.0) return d2;
  const __m256d zero = _mm256_setzero_pd();
  const __m256d positive = _mm256_cmp_pd(d2, zero, _CMP_GT_OQ);
  const __m256d safe = _mm256_blendv_pd(_mm256_set1_pd(1.0), d2, positive);
  const __m256d lg = _mm256_mul_pd(log_pos(safe), _mm256_set1_pd(0.5 * alpha));
  return _mm256_and_pd(exp_pd(lg), positive);
}

void hopping_weights(const double* dist2, const double* energy, std::size_t n, double alpha,
                     double* out) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d2 = _mm256_loadu_pd(dist2 + i);
    const __m256d en = _mm256_loadu_pd(energy + i);
    const __m256d arg = _mm256_sub_pd(_mm256_sub_pd(_mm256_setzero_pd(), radial_power(d2, alpha)), en);
    _mm256_storeu_pd(out + i, exp_pd(arg));
  }
  for (; i < n; ++i) {
    const double d2 = dist2[i];
    const double rp = alpha == 1.0   ? std::sqrt(d2)
                      : alpha == 2.0 ? d2
                                     : (d2 > 0.0 ? std::pow(d2, 0.5 * alpha) : 0.0);
    out[i] = std::exp(-rp - energy[i]);
  }
}

void csr_matvec(const std::uint32_t* row_start, const std::uint32_t* cols, const double* values,
                std::size_t rows, const double* x, double* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    std::uint32_t k = row_start[r];
    const std::uint32_t end = row_start[r + 1];
    __m256d acc = _mm256_setzero_pd();
    for (; k + 4 <= end; k += 4) {
      const __m128i idx = _mm_loadu_si128(reinterpret_cast<const __m128i*>(cols + k));
      const __m256d xv = _mm256_i32gather_pd(x, idx, 8);
      acc = _mm256_fmadd_pd(_mm256_loadu_pd(values + k), xv, acc);
    }
    double s = hsum(acc);
    for (; k < end; ++k) s += values[k] * x[cols[k]];
    y[r] = s;
  }
}

double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
  double s = hsum(acc);
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy(double a, const double* x, double* y, std::size_t n) {
  const __m256d av = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] += a * x[i];
}

void xpby(const double* r, double b, double* p, std::size_t n) {
  const __m256d bv = _mm256_set1_pd(b);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(p + i, _mm256_fmadd_pd(bv, _mm256_loadu_pd(p + i), _mm256_loadu_pd(r + i)));
  for (; i < n; ++i) p[i] = r[i] + b * p[i];
}

double weighted_dot(const double* w, const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d wa = _mm256_mul_pd(_mm256_loadu_pd(w + i), _mm256_loadu_pd(a + i));
    acc = _mm256_fmadd_pd(wa, _mm256_loadu_pd(b + i), acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += w[i] * a[i] * b[i];
  return s;
}

}  // namespace

const Kernels* avx2_kernels() noexcept {
  static const Kernels table{Isa::avx2, &hopping_weights, &csr_matvec, &dot,
                             &axpy,     &xpby,            &weighted_dot};
  return &table;
}

}  // namespace vrh::simd
