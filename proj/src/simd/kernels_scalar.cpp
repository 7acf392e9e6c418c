#include "datamix/simd/kernels.hpp"

namespace datamix::simd {

namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

double squared_l2_scalar(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

void accumulate_f64_scalar(double* acc, const double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) acc[i] += x[i];
}

void divide_f64_scalar(double* out, const double* acc, double divisor, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = acc[i] / divisor;
}

void accumulate_delta_f64_scalar(double* acc, const double* x, const double* ref, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) acc[i] += x[i] - ref[i];
}

void accumulate_delta_f32_scalar(double* acc, const float* x, const float* ref, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) acc[i] += static_cast<double>(x[i]) - static_cast<double>(ref[i]);
}

void shifted_mean_f64_scalar(double* out, const double* ref, const double* acc, double divisor, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = ref[i] + acc[i] / divisor;
}

void shifted_mean_f32_scalar(float* out, const float* ref, const double* acc, double divisor, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<float>(static_cast<double>(ref[i]) + acc[i] / divisor);
}

}  // namespace

const KernelTable& scalar_kernels() {
    static const KernelTable table{
        Isa::scalar,
        dot_scalar,
        squared_l2_scalar,
        accumulate_f64_scalar,
        divide_f64_scalar,
        accumulate_delta_f64_scalar,
        accumulate_delta_f32_scalar,
        shifted_mean_f64_scalar,
        shifted_mean_f32_scalar,
    };
    return table;
}

}  // namespace datamix::simd
