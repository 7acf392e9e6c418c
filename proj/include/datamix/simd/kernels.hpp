#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace datamix::simd {

enum class Isa { scalar, avx2, neon };

std::string_view isa_name(Isa isa);

// Function table for one instruction set. Every variant must agree with the
// scalar reference: element-wise kernels bit-exactly, reductions within a
// few ulps (lane-wise partial sums change the summation order).
struct KernelTable {
    Isa isa;

    // sum_i a[i] * b[i]
    double (*dot)(const double* a, const double* b, std::size_t n);

    // sum_i (a[i] - b[i])^2
    double (*squared_l2)(const double* a, const double* b, std::size_t n);

    // acc[i] += x[i]
    void (*accumulate_f64)(double* acc, const double* x, std::size_t n);

    // out[i] = acc[i] / divisor
    void (*divide_f64)(double* out, const double* acc, double divisor, std::size_t n);

    // acc[i] += x[i] - ref[i]
    void (*accumulate_delta_f64)(double* acc, const double* x, const double* ref, std::size_t n);

    // acc[i] += double(x[i]) - double(ref[i])
    void (*accumulate_delta_f32)(double* acc, const float* x, const float* ref, std::size_t n);

    // out[i] = ref[i] + acc[i] / divisor
    void (*shifted_mean_f64)(double* out, const double* ref, const double* acc, double divisor, std::size_t n);

    // out[i] = float(double(ref[i]) + acc[i] / divisor)
    void (*shifted_mean_f32)(float* out, const float* ref, const double* acc, double divisor, std::size_t n);
};

const KernelTable& scalar_kernels();

// Null when the variant was not compiled in or the CPU lacks support.
const KernelTable* kernels_for(Isa isa);

// Every variant usable on this machine, scalar first.
std::vector<const KernelTable*> available_kernels();

// The table selected for this process: the widest supported ISA, unless
// DATAMIX_SIMD=scalar|avx2|neon overrides it. Resolved once.
const KernelTable& active();

// Convenience wrappers over active().
inline double dot(std::span<const double> a, std::span<const double> b) {
    return active().dot(a.data(), b.data(), a.size());
}
inline double squared_l2(std::span<const double> a, std::span<const double> b) {
    return active().squared_l2(a.data(), b.data(), a.size());
}

}  // namespace datamix::simd
