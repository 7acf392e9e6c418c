// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.
#include <immintrin.h>

#include "datamix/simd/kernels.hpp"

namespace datamix::simd::detail {

namespace {

double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    }
    for (; i + 4 <= n; i += 4) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    }
    double s = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

double squared_l2_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        const __m256d d1 = _mm256_sub_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4));
        acc0 = _mm256_fmadd_pd(d0, d0, acc0);
        acc1 = _mm256_fmadd_pd(d1, d1, acc1);
    }
    for (; i + 4 <= n; i += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        acc0 = _mm256_fmadd_pd(d, d, acc0);
    }
    double s = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

// Element-wise kernels below perform the same IEEE operation per element as
// the scalar reference, so results are bit-identical.
void accumulate_f64_avx2(double* acc, const double* x, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(acc + i, _mm256_add_pd(_mm256_loadu_pd(acc + i), _mm256_loadu_pd(x + i)));
    }
    for (; i < n; ++i) acc[i] += x[i];
}

void divide_f64_avx2(double* out, const double* acc, double divisor, std::size_t n) {
    const __m256d d = _mm256_set1_pd(divisor);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) _mm256_storeu_pd(out + i, _mm256_div_pd(_mm256_loadu_pd(acc + i), d));
    for (; i < n; ++i) out[i] = acc[i] / divisor;
}

void accumulate_delta_f64_avx2(double* acc, const double* x, const double* ref, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d delta = _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(ref + i));
        _mm256_storeu_pd(acc + i, _mm256_add_pd(_mm256_loadu_pd(acc + i), delta));
    }
    for (; i < n; ++i) acc[i] += x[i] - ref[i];
}

void accumulate_delta_f32_avx2(double* acc, const float* x, const float* ref, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d xd = _mm256_cvtps_pd(_mm_loadu_ps(x + i));
        const __m256d rd = _mm256_cvtps_pd(_mm_loadu_ps(ref + i));
        _mm256_storeu_pd(acc + i, _mm256_add_pd(_mm256_loadu_pd(acc + i), _mm256_sub_pd(xd, rd)));
    }
    for (; i < n; ++i) acc[i] += static_cast<double>(x[i]) - static_cast<double>(ref[i]);
}

void shifted_mean_f64_avx2(double* out, const double* ref, const double* acc, double divisor, std::size_t n) {
    const __m256d d = _mm256_set1_pd(divisor);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d q = _mm256_div_pd(_mm256_loadu_pd(acc + i), d);
        _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(ref + i), q));
    }
    for (; i < n; ++i) out[i] = ref[i] + acc[i] / divisor;
}

void shifted_mean_f32_avx2(float* out, const float* ref, const double* acc, double divisor, std::size_t n) {
    const __m256d d = _mm256_set1_pd(divisor);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d q = _mm256_div_pd(_mm256_loadu_pd(acc + i), d);
        const __m256d r = _mm256_cvtps_pd(_mm_loadu_ps(ref + i));
        _mm_storeu_ps(out + i, _mm256_cvtpd_ps(_mm256_add_pd(r, q)));
    }
    for (; i < n; ++i) out[i] = static_cast<float>(static_cast<double>(ref[i]) + acc[i] / divisor);
}

}  // namespace

const KernelTable& avx2_kernels() {
    static const KernelTable table{
        Isa::avx2,
        dot_avx2,
        squared_l2_avx2,
        accumulate_f64_avx2,
        divide_f64_avx2,
        accumulate_delta_f64_avx2,
        accumulate_delta_f32_avx2,
        shifted_mean_f64_avx2,
        shifted_mean_f32_avx2,
    };
    return table;
}

}  // namespace datamix::simd::detail
