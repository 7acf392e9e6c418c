#include <arm_neon.h>

#include "datamix/simd/kernels.hpp"

namespace datamix::simd::detail {

namespace {

double dot_neon(const double* a, const double* b, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
        acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
    }
    double s = vaddvq_f64(vaddq_f64(acc0, acc1));
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

double squared_l2_neon(const double* a, const double* b, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const float64x2_t d0 = vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i));
        const float64x2_t d1 = vsubq_f64(vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
        acc0 = vfmaq_f64(acc0, d0, d0);
        acc1 = vfmaq_f64(acc1, d1, d1);
    }
    double s = vaddvq_f64(vaddq_f64(acc0, acc1));
    for (; i < n; ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

void accumulate_f64_neon(double* acc, const double* x, std::size_t n) {
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(acc + i, vaddq_f64(vld1q_f64(acc + i), vld1q_f64(x + i)));
    for (; i < n; ++i) acc[i] += x[i];
}

void divide_f64_neon(double* out, const double* acc, double divisor, std::size_t n) {
    const float64x2_t d = vdupq_n_f64(divisor);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(out + i, vdivq_f64(vld1q_f64(acc + i), d));
    for (; i < n; ++i) out[i] = acc[i] / divisor;
}

void accumulate_delta_f64_neon(double* acc, const double* x, const double* ref, std::size_t n) {
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t delta = vsubq_f64(vld1q_f64(x + i), vld1q_f64(ref + i));
        vst1q_f64(acc + i, vaddq_f64(vld1q_f64(acc + i), delta));
    }
    for (; i < n; ++i) acc[i] += x[i] - ref[i];
}

void accumulate_delta_f32_neon(double* acc, const float* x, const float* ref, std::size_t n) {
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t xd = vcvt_f64_f32(vld1_f32(x + i));
        const float64x2_t rd = vcvt_f64_f32(vld1_f32(ref + i));
        vst1q_f64(acc + i, vaddq_f64(vld1q_f64(acc + i), vsubq_f64(xd, rd)));
    }
    for (; i < n; ++i) acc[i] += static_cast<double>(x[i]) - static_cast<double>(ref[i]);
}

void shifted_mean_f64_neon(double* out, const double* ref, const double* acc, double divisor, std::size_t n) {
    const float64x2_t d = vdupq_n_f64(divisor);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        vst1q_f64(out + i, vaddq_f64(vld1q_f64(ref + i), vdivq_f64(vld1q_f64(acc + i), d)));
    }
    for (; i < n; ++i) out[i] = ref[i] + acc[i] / divisor;
}

void shifted_mean_f32_neon(float* out, const float* ref, const double* acc, double divisor, std::size_t n) {
    const float64x2_t d = vdupq_n_f64(divisor);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t r = vcvt_f64_f32(vld1_f32(ref + i));
        vst1_f32(out + i, vcvt_f32_f64(vaddq_f64(r, vdivq_f64(vld1q_f64(acc + i), d))));
    }
    for (; i < n; ++i) out[i] = static_cast<float>(static_cast<double>(ref[i]) + acc[i] / divisor);
}

}  // namespace

const KernelTable& neon_kernels() {
    static const KernelTable table{
        Isa::neon,
        dot_neon,
        squared_l2_neon,
        accumulate_f64_neon,
        divide_f64_neon,
        accumulate_delta_f64_neon,
        accumulate_delta_f32_neon,
        shifted_mean_f64_neon,
        shifted_mean_f32_neon,
    };
    return table;
}

}  // namespace datamix::simd::detail
