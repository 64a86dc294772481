/* Copyright 2026 The volseg Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "volseg/kernels.hpp"

#if defined(VOLSEG_HAVE_AVX2)

#include <immintrin.h>

// Each vector lane below executes the same multiply/add sequence as one of
// the scalar reference's stride-4 accumulators, and the horizontal combine
// matches the reference's (acc0 + acc1) + (acc2 + acc3), so results are
// bit-identical to the scalar backend. No FMA: mul and add stay separate.

namespace volseg::kernels {
namespace {

void axpy_avx2(double a, const double* x, const double* y, double* out,
               std::size_t n) {
  const std::size_t n4 = n & ~std::size_t(3);
  const __m256d va = _mm256_set1_pd(a);
  for (std::size_t i = 0; i < n4; i += 4) {
    __m256d vx = _mm256_loadu_pd(x + i);
    __m256d vy = _mm256_loadu_pd(y + i);
    _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_mul_pd(va, vx), vy));
  }
  for (std::size_t i = n4; i < n; ++i) out[i] = a * x[i] + y[i];
}

inline double hsum_pairs(__m256d acc) {
  __m128d lo = _mm256_castpd256_pd128(acc);      // [acc0, acc1]
  __m128d hi = _mm256_extractf128_pd(acc, 1);    // [acc2, acc3]
  __m128d pair = _mm_hadd_pd(lo, hi);            // [acc0+acc1, acc2+acc3]
  return _mm_cvtsd_f64(pair) +
         _mm_cvtsd_f64(_mm_unpackhi_pd(pair, pair));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  const std::size_t n4 = n & ~std::size_t(3);
  __m256d acc = _mm256_setzero_pd();
  for (std::size_t i = 0; i < n4; i += 4) {
    acc = _mm256_add_pd(
        acc, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  }
  double r = hsum_pairs(acc);
  for (std::size_t i = n4; i < n; ++i) r += a[i] * b[i];
  return r;
}

double sum_avx2(const double* a, std::size_t n) {
  const std::size_t n4 = n & ~std::size_t(3);
  __m256d acc = _mm256_setzero_pd();
  for (std::size_t i = 0; i < n4; i += 4) {
    acc = _mm256_add_pd(acc, _mm256_loadu_pd(a + i));
  }
  double r = hsum_pairs(acc);
  for (std::size_t i = n4; i < n; ++i) r += a[i];
  return r;
}

double sum_sq_avx2(const double* a, std::size_t n) { return dot_avx2(a, a, n); }

void stencil27_avx2(const double* w, const double* const* tap, double* out,
                    std::size_t n) {
  const std::size_t n4 = n & ~std::size_t(3);
  for (std::size_t i = 0; i < n4; i += 4) {
    __m256d acc = _mm256_setzero_pd();
    for (int k = 0; k < 27; ++k) {
      __m256d vw = _mm256_set1_pd(w[k]);
      acc = _mm256_add_pd(acc, _mm256_mul_pd(vw, _mm256_loadu_pd(tap[k] + i)));
    }
    _mm256_storeu_pd(out + i, acc);
  }
  for (std::size_t i = n4; i < n; ++i) {
    double acc = 0.0;
    for (int k = 0; k < 27; ++k) acc += w[k] * tap[k][i];
    out[i] = acc;
  }
}

const Ops kAvx2Ops = {
    "avx2", axpy_avx2, dot_avx2, sum_avx2, sum_sq_avx2, stencil27_avx2,
};

}  // namespace

namespace detail {
const Ops& avx2_ops() { return kAvx2Ops; }
}  // namespace detail

}  // namespace volseg::kernels

#endif  // VOLSEG_HAVE_AVX2
