#include "melm/simd/kernels.hpp"

#include <cstdlib>
#include <string>

namespace melm::simd {
namespace {

const Kernels* select() {
    const Kernels* avx2 = avx2_kernels();
    if (const char* env = std::getenv("MELM_KERNELS")) {
        const std::string want(env);
        if (want == "scalar") return &scalar_kernels();
        if (want == "avx2" && avx2) return avx2;
        // unknown or unavailable request: fall through to the default
    }
    return avx2 ? avx2 : &scalar_kernels();
}

}  // namespace

const Kernels& active_kernels() {
    static const Kernels* selected = select();
    return *selected;
}

std::string active_kernel_name() { return active_kernels().name; }

}  // namespace melm::simd
