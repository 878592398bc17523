#include "bowtie/kernels.hpp"

#if defined(__x86_64__) || defined(__i386__)
#define BOWTIE_HAVE_X86 1
#include <immintrin.h>
#else
#define BOWTIE_HAVE_X86 0
#endif

namespace bowtie::kernels {

#if BOWTIE_HAVE_X86
namespace {

#define BOWTIE_AVX2 __attribute__((target("avx2,fma")))

// Complex spans are read as interleaved (re, im) doubles; one __m256d holds two values.
BOWTIE_AVX2 inline const double* raw(std::span<const cplx> s) {
  return reinterpret_cast<const double*>(s.data());
}
BOWTIE_AVX2 inline double* raw(std::span<cplx> s) { return reinterpret_cast<double*>(s.data()); }

BOWTIE_AVX2 inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

// [w0, w0, w1, w1] from two consecutive weights.
BOWTIE_AVX2 inline __m256d dup_pairs(const double* w) {
  const __m256d x = _mm256_castpd128_pd256(_mm_loadu_pd(w));
  return _mm256_permute4x64_pd(x, 0x50);
}

// Real part collects a.b lane-wise; imaginary part collects a.swap(b) with alternating sign.
BOWTIE_AVX2 inline cplx finish_dotc(__m256d re_acc, __m256d im_acc) {
  const __m256d sign = _mm256_setr_pd(1.0, -1.0, 1.0, -1.0);
  return {hsum(re_acc), hsum(_mm256_mul_pd(im_acc, sign))};
}

BOWTIE_AVX2 cplx cdotc_avx2(std::span<const cplx> a, std::span<const cplx> b) {
  const double* pa = raw(a);
  const double* pb = raw(b);
  const std::size_t n = a.size();
  __m256d re0 = _mm256_setzero_pd(), im0 = _mm256_setzero_pd();
  __m256d re1 = _mm256_setzero_pd(), im1 = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    const __m256d a0 = _mm256_loadu_pd(pa + 2 * k);
    const __m256d b0 = _mm256_loadu_pd(pb + 2 * k);
    const __m256d a1 = _mm256_loadu_pd(pa + 2 * k + 4);
    const __m256d b1 = _mm256_loadu_pd(pb + 2 * k + 4);
    re0 = _mm256_fmadd_pd(a0, b0, re0);
    im0 = _mm256_fmadd_pd(a0, _mm256_permute_pd(b0, 0x5), im0);
    re1 = _mm256_fmadd_pd(a1, b1, re1);
    im1 = _mm256_fmadd_pd(a1, _mm256_permute_pd(b1, 0x5), im1);
  }
  for (; k + 2 <= n; k += 2) {
    const __m256d a0 = _mm256_loadu_pd(pa + 2 * k);
    const __m256d b0 = _mm256_loadu_pd(pb + 2 * k);
    re0 = _mm256_fmadd_pd(a0, b0, re0);
    im0 = _mm256_fmadd_pd(a0, _mm256_permute_pd(b0, 0x5), im0);
  }
  cplx acc = finish_dotc(_mm256_add_pd(re0, re1), _mm256_add_pd(im0, im1));
  for (; k < n; ++k) acc += std::conj(a[k]) * b[k];
  return acc;
}

BOWTIE_AVX2 cplx wdotc_avx2(std::span<const double> w, std::span<const cplx> a, std::span<const cplx> b) {
  const double* pa = raw(a);
  const double* pb = raw(b);
  const std::size_t n = a.size();
  __m256d re0 = _mm256_setzero_pd(), im0 = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 2 <= n; k += 2) {
    const __m256d wa = _mm256_mul_pd(dup_pairs(w.data() + k), _mm256_loadu_pd(pa + 2 * k));
    const __m256d b0 = _mm256_loadu_pd(pb + 2 * k);
    re0 = _mm256_fmadd_pd(wa, b0, re0);
    im0 = _mm256_fmadd_pd(wa, _mm256_permute_pd(b0, 0x5), im0);
  }
  cplx acc = finish_dotc(re0, im0);
  for (; k < n; ++k) acc += w[k] * std::conj(a[k]) * b[k];
  return acc;
}

BOWTIE_AVX2 cplx wsum_avx2(std::span<const double> w, std::span<const cplx> a) {
  const double* pa = raw(a);
  const std::size_t n = a.size();
  __m256d acc0 = _mm256_setzero_pd(), acc1 = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    acc0 = _mm256_fmadd_pd(dup_pairs(w.data() + k), _mm256_loadu_pd(pa + 2 * k), acc0);
    acc1 = _mm256_fmadd_pd(dup_pairs(w.data() + k + 2), _mm256_loadu_pd(pa + 2 * k + 4), acc1);
  }
  for (; k + 2 <= n; k += 2) {
    acc0 = _mm256_fmadd_pd(dup_pairs(w.data() + k), _mm256_loadu_pd(pa + 2 * k), acc0);
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, _mm256_add_pd(acc0, acc1));
  cplx acc{lanes[0] + lanes[2], lanes[1] + lanes[3]};
  for (; k < n; ++k) acc += w[k] * a[k];
  return acc;
}

BOWTIE_AVX2 void wmadd_avx2(std::span<cplx> out, std::span<const double> w, std::span<const cplx> x) {
  double* po = raw(out);
  const double* px = raw(x);
  const std::size_t n = x.size();
  std::size_t k = 0;
  for (; k + 2 <= n; k += 2) {
    const __m256d o = _mm256_loadu_pd(po + 2 * k);
    _mm256_storeu_pd(po + 2 * k, _mm256_fmadd_pd(dup_pairs(w.data() + k), _mm256_loadu_pd(px + 2 * k), o));
  }
  for (; k < n; ++k) out[k] += w[k] * x[k];
}

BOWTIE_AVX2 void axpy_avx2(std::span<cplx> out, double s, std::span<const cplx> x) {
  double* po = raw(out);
  const double* px = raw(x);
  const std::size_t n = 2 * x.size();
  const __m256d sv = _mm256_set1_pd(s);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    const __m256d o = _mm256_loadu_pd(po + k);
    _mm256_storeu_pd(po + k, _mm256_fmadd_pd(sv, _mm256_loadu_pd(px + k), o));
  }
  for (; k < n; ++k) po[k] += s * px[k];
}

#undef BOWTIE_AVX2

}  // namespace

const Table* avx2_table() {
  static const Table table{cdotc_avx2, wdotc_avx2, wsum_avx2, wmadd_avx2, axpy_avx2};
  return &table;
}

bool cpu_supports_avx2() {
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}

#else

const Table* avx2_table() { return nullptr; }
bool cpu_supports_avx2() { return false; }

#endif

}  // namespace bowtie::kernels
