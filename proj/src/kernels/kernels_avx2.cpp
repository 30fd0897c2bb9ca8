// Compiled with -mavx2 -mfma. Only reached after the dispatcher has confirmed
// both features on the running CPU.

#include <immintrin.h>

#include <bit>

#include "relfilter/kernels.hpp"

namespace relfilter::kernels::avx2 {

namespace {

double horizontal_sum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d pair = _mm_add_pd(lo, hi);
  const __m128d swapped = _mm_unpackhi_pd(pair, pair);
  return _mm_cvtsd_f64(_mm_add_sd(pair, swapped));
}

}  // namespace

double sparse_dot(std::span<const double> weights, std::span<const std::int32_t> indices) {
  const double* base = weights.data();
  const std::int32_t* idx = indices.data();
  const std::size_t n = indices.size();
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 8 <= n; k += 8) {
    const __m128i i0 = _mm_loadu_si128(reinterpret_cast<const __m128i*>(idx + k));
    const __m128i i1 = _mm_loadu_si128(reinterpret_cast<const __m128i*>(idx + k + 4));
    acc0 = _mm256_add_pd(acc0, _mm256_i32gather_pd(base, i0, 8));
    acc1 = _mm256_add_pd(acc1, _mm256_i32gather_pd(base, i1, 8));
  }
  for (; k + 4 <= n; k += 4) {
    const __m128i i0 = _mm_loadu_si128(reinterpret_cast<const __m128i*>(idx + k));
    acc0 = _mm256_add_pd(acc0, _mm256_i32gather_pd(base, i0, 8));
  }
  double sum = horizontal_sum(_mm256_add_pd(acc0, acc1));
  for (; k < n; ++k) sum += base[idx[k]];
  return sum;
}

double sparse_dot(std::span<const double> weights, std::span<const std::int32_t> indices,
                  std::span<const double> values) {
  const double* base = weights.data();
  const std::int32_t* idx = indices.data();
  const double* val = values.data();
  const std::size_t n = indices.size();
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 8 <= n; k += 8) {
    const __m128i i0 = _mm_loadu_si128(reinterpret_cast<const __m128i*>(idx + k));
    const __m128i i1 = _mm_loadu_si128(reinterpret_cast<const __m128i*>(idx + k + 4));
    acc0 = _mm256_fmadd_pd(_mm256_i32gather_pd(base, i0, 8), _mm256_loadu_pd(val + k), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_i32gather_pd(base, i1, 8), _mm256_loadu_pd(val + k + 4), acc1);
  }
  for (; k + 4 <= n; k += 4) {
    const __m128i i0 = _mm_loadu_si128(reinterpret_cast<const __m128i*>(idx + k));
    acc0 = _mm256_fmadd_pd(_mm256_i32gather_pd(base, i0, 8), _mm256_loadu_pd(val + k), acc0);
  }
  double sum = horizontal_sum(_mm256_add_pd(acc0, acc1));
  for (; k < n; ++k) sum += base[idx[k]] * val[k];
  return sum;
}

double dense_dot(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size();
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a.data() + i), _mm256_loadu_pd(b.data() + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a.data() + i + 4), _mm256_loadu_pd(b.data() + i + 4),
                           acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a.data() + i), _mm256_loadu_pd(b.data() + i), acc0);
  }
  double sum = horizontal_sum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

LabelCounts count_labels(std::span<const std::int8_t> a, std::span<const std::int8_t> b) {
  LabelCounts c;
  const std::size_t n = a.size();
  c.n = static_cast<std::int64_t>(n);
  const __m256i zero = _mm256_setzero_si256();
  std::size_t i = 0;
  for (; i + 32 <= n; i += 32) {
    const __m256i va = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(a.data() + i));
    const __m256i vb = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(b.data() + i));
    const auto eq = static_cast<std::uint32_t>(_mm256_movemask_epi8(_mm256_cmpeq_epi8(va, vb)));
    // Labels are 0/1, so "nonzero" is "positive".
    const auto pa = ~static_cast<std::uint32_t>(_mm256_movemask_epi8(_mm256_cmpeq_epi8(va, zero)));
    const auto pb = ~static_cast<std::uint32_t>(_mm256_movemask_epi8(_mm256_cmpeq_epi8(vb, zero)));
    c.agree += std::popcount(eq);
    c.a_positive += std::popcount(pa);
    c.b_positive += std::popcount(pb);
  }
  for (; i < n; ++i) {
    c.agree += a[i] == b[i];
    c.a_positive += a[i];
    c.b_positive += b[i];
  }
  return c;
}

}  // namespace relfilter::kernels::avx2
