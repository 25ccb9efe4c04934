#include "kwr/kernels.hpp"

#if defined(KWR_HAVE_AVX2_TU) && defined(__AVX2__)

#include <immintrin.h>

#include <algorithm>
#include <cmath>

namespace kwr::kernels {
namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d swapped = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

inline double hmax(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_max_pd(lo, hi);
    __m128d swapped = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_max_sd(lo, swapped));
}

double dot_avx2(const double* x, const double* y, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
        acc1 = _mm256_add_pd(acc1,
                             _mm256_mul_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4)));
    }
    for (; i + 4 <= n; i += 4) {
        acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    }
    double acc = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vy = _mm256_loadu_pd(y + i);
        vy = _mm256_add_pd(vy, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
        _mm256_storeu_pd(y + i, vy);
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

void scale_avx2(double a, double* x, std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
    for (; i < n; ++i) x[i] *= a;
}

double masked_sum_ge_avx2(const double* x, const double* w, double t, std::size_t n) {
    const __m256d vt = _mm256_set1_pd(t);
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(x + i), vt, _CMP_GE_OQ);
        acc = _mm256_add_pd(acc, _mm256_and_pd(mask, _mm256_loadu_pd(w + i)));
    }
    double total = hsum(acc);
    for (; i < n; ++i) {
        if (x[i] >= t) total += w[i];
    }
    return total;
}

void accumulate_ge_avx2(const double* x, double t, double* counts, std::size_t n) {
    const __m256d vt = _mm256_set1_pd(t);
    const __m256d one = _mm256_set1_pd(1.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(x + i), vt, _CMP_GE_OQ);
        __m256d c = _mm256_loadu_pd(counts + i);
        _mm256_storeu_pd(counts + i, _mm256_add_pd(c, _mm256_and_pd(mask, one)));
    }
    for (; i < n; ++i) {
        if (x[i] >= t) counts[i] += 1.0;
    }
}

double max_abs_diff_avx2(const double* x, const double* y, std::size_t n) {
    const __m256d sign = _mm256_set1_pd(-0.0);
    __m256d m = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
        m = _mm256_max_pd(m, _mm256_andnot_pd(sign, d));
    }
    double out = hmax(m);
    for (; i < n; ++i) out = std::max(out, std::fabs(x[i] - y[i]));
    return out;
}

}  // namespace

const KernelTable* avx2_kernels() {
    static const KernelTable table{
        "avx2",       dot_avx2,           axpy_avx2,         scale_avx2,
        masked_sum_ge_avx2, accumulate_ge_avx2, max_abs_diff_avx2,
    };
    return &table;
}

}  // namespace kwr::kernels

#else

namespace kwr::kernels {
const KernelTable* avx2_kernels() { return nullptr; }
}  // namespace kwr::kernels

#endif
