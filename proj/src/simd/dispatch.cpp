#include <cstdlib>
#include <string_view>

#include "soundobj/simd/kernels.hpp"

namespace soundobj::simd {

#if defined(SOUNDOBJ_HAVE_AVX2)
namespace avx2 {
const KernelTable& table();
}
#endif

const KernelTable* avx2_kernels() {
#if defined(SOUNDOBJ_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    static const bool supported = __builtin_cpu_supports("avx2");
    return supported ? &avx2::table() : nullptr;
#else
    return nullptr;
#endif
}

const KernelTable& active_kernels() {
    static const KernelTable* chosen = [] {
        const char* forced = std::getenv("SOUNDOBJ_SIMD");
        if (forced != nullptr && std::string_view(forced) == "scalar") return &scalar_kernels();
        if (const KernelTable* wide = avx2_kernels()) return wide;
        return &scalar_kernels();
    }();
    return *chosen;
}

}  // namespace soundobj::simd
