#include <cstdlib>
#include <string>

#include "datamix/common/error.hpp"
#include "datamix/simd/kernels.hpp"

namespace datamix::simd {

namespace detail {
#if defined(DATAMIX_HAVE_AVX2)
const KernelTable& avx2_kernels();
#endif
#if defined(DATAMIX_HAVE_NEON)
const KernelTable& neon_kernels();
#endif
}  // namespace detail

std::string_view isa_name(Isa isa) {
    switch (isa) {
        case Isa::scalar: return "scalar";
        case Isa::avx2: return "avx2";
        case Isa::neon: return "neon";
    }
    return "unknown";
}

const KernelTable* kernels_for(Isa isa) {
    switch (isa) {
        case Isa::scalar:
            return &scalar_kernels();
        case Isa::avx2:
#if defined(DATAMIX_HAVE_AVX2)
            __builtin_cpu_init();
            if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) {
                return &detail::avx2_kernels();
            }
#endif
            return nullptr;
        case Isa::neon:
#if defined(DATAMIX_HAVE_NEON)
            return &detail::neon_kernels();
#else
            return nullptr;
#endif
    }
    return nullptr;
}

std::vector<const KernelTable*> available_kernels() {
    std::vector<const KernelTable*> out;
    for (Isa isa : {Isa::scalar, Isa::avx2, Isa::neon}) {
        if (const KernelTable* t = kernels_for(isa)) out.push_back(t);
    }
    return out;
}

namespace {

const KernelTable& resolve() {
    if (const char* env = std::getenv("DATAMIX_SIMD"); env != nullptr && *env != '\0') {
        const std::string want(env);
        for (Isa isa : {Isa::scalar, Isa::avx2, Isa::neon}) {
            if (want == isa_name(isa)) {
                if (const KernelTable* t = kernels_for(isa)) return *t;
                throw Error("simd_unavailable", "DATAMIX_SIMD=" + want + " is not supported on this CPU");
            }
        }
        if (want != "auto") throw Error("simd_unavailable", "unknown DATAMIX_SIMD value: " + want);
    }
    if (const KernelTable* t = kernels_for(Isa::avx2)) return *t;
    if (const KernelTable* t = kernels_for(Isa::neon)) return *t;
    return scalar_kernels();
}

}  // namespace

const KernelTable& active() {
    static const KernelTable& table = resolve();
    return table;
}

}  // namespace datamix::simd
