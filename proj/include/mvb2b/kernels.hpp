#pragma once

// Element-wise arithmetic over power series. Every kernel has a scalar
// reference implementation and, where the target supports it, a vectorized
// variant (AVX2 on x86-64, NEON on AArch64). The active table is chosen once
// at startup from CPU features and can be pinned with MVB2B_SIMD=scalar.
//
// All variants are bit-identical to the scalar reference: element-wise ops
// are exact IEEE operations, and reductions accumulate in four interleaved
// lanes (element i goes to lane i % 4) that are combined as
// (l0 + l1) + (l2 + l3) in every implementation.

#include <cstddef>
#include <span>
#include <string_view>

namespace mvb2b::kernels {

enum class Isa { Scalar, Avx2, Neon };

std::string_view isa_name(Isa isa) noexcept;

struct Table {
    Isa isa;
    // dst[i] += src[i]
    void (*accumulate)(std::span<double> dst, std::span<const double> src);
    // out[i] = a[i] - b[i]
    void (*subtract)(std::span<const double> a, std::span<const double> b,
                     std::span<double> out);
    // out[i] = a[i] * k
    void (*scale)(std::span<const double> a, double k, std::span<double> out);
    // max over a; a must be nonempty and NaN-free
    double (*max_value)(std::span<const double> a);
    // Converter exchange between two net-load series, one step at a time.
    // transfer[i] > 0 moves power from system 1 to system 2.
    void (*exchange)(std::span<const double> net1, std::span<const double> net2,
                     double capacity, std::span<double> out1,
                     std::span<double> out2, std::span<double> transfer);
    // sum over i of max(-a[i] - limit, 0), i.e. export in excess of limit
    double (*excess_export)(std::span<const double> a, double limit);
};

// Scalar reference table; always available.
const Table& scalar() noexcept;

// Vectorized table for `isa`, or nullptr when not compiled in or not
// supported by the running CPU.
const Table* find(Isa isa) noexcept;

// Table used by the library. Resolved on first call.
const Table& active() noexcept;

// Overrides the active table (tests and benchmarks). Returns false when the
// requested ISA is unavailable, leaving the selection unchanged.
bool select(Isa isa) noexcept;

}  // namespace mvb2b::kernels
