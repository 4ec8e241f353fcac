#include <atomic>
#include <cstdlib>
#include <string_view>

#include "kernels_internal.hpp"

namespace mvb2b::kernels {
namespace {

bool cpu_has(Isa isa) noexcept {
    switch (isa) {
        case Isa::Scalar:
            return true;
        case Isa::Avx2:
#if defined(MVB2B_HAVE_AVX2)
            return __builtin_cpu_supports("avx2");
#else
            return false;
#endif
        case Isa::Neon:
#if defined(MVB2B_HAVE_NEON)
            return true;
#else
            return false;
#endif
    }
    return false;
}

const Table* resolve() noexcept {
    if (const char* env = std::getenv("MVB2B_SIMD")) {
        const std::string_view want{env};
        if (want == "scalar") return &detail::scalar_table();
        if (want == "avx2" && find(Isa::Avx2)) return find(Isa::Avx2);
        if (want == "neon" && find(Isa::Neon)) return find(Isa::Neon);
    }
    if (const Table* t = find(Isa::Avx2)) return t;
    if (const Table* t = find(Isa::Neon)) return t;
    return &detail::scalar_table();
}

std::atomic<const Table*>& slot() noexcept {
    static std::atomic<const Table*> current{resolve()};
    return current;
}

}  // namespace

std::string_view isa_name(Isa isa) noexcept {
    switch (isa) {
        case Isa::Scalar: return "scalar";
        case Isa::Avx2: return "avx2";
        case Isa::Neon: return "neon";
    }
    return "unknown";
}

const Table& scalar() noexcept { return detail::scalar_table(); }

const Table* find(Isa isa) noexcept {
    if (!cpu_has(isa)) return nullptr;
    switch (isa) {
        case Isa::Scalar: return &detail::scalar_table();
#if defined(MVB2B_HAVE_AVX2)
        case Isa::Avx2: return &detail::avx2_table();
#endif
#if defined(MVB2B_HAVE_NEON)
        case Isa::Neon: return &detail::neon_table();
#endif
        default: return nullptr;
    }
}

const Table& active() noexcept { return *slot().load(std::memory_order_acquire); }

bool select(Isa isa) noexcept {
    const Table* t = find(isa);
    if (!t) return false;
    slot().store(t, std::memory_order_release);
    return true;
}

}  // namespace mvb2b::kernels
