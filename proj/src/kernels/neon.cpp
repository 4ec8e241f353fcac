#include <arm_neon.h>

#include <cstddef>

#include "kernels_internal.hpp"

namespace mvb2b::kernels::detail {
namespace {

constexpr std::size_t kLanes = 2;

void accumulate(std::span<double> dst, std::span<const double> src) {
    const std::size_t n = dst.size();
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes)
        vst1q_f64(dst.data() + i, vaddq_f64(vld1q_f64(dst.data() + i), vld1q_f64(src.data() + i)));
    for (; i < n; ++i) dst[i] += src[i];
}

void subtract(std::span<const double> a, std::span<const double> b, std::span<double> out) {
    const std::size_t n = out.size();
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes)
        vst1q_f64(out.data() + i, vsubq_f64(vld1q_f64(a.data() + i), vld1q_f64(b.data() + i)));
    for (; i < n; ++i) out[i] = a[i] - b[i];
}

void scale(std::span<const double> a, double k, std::span<double> out) {
    const std::size_t n = out.size();
    const float64x2_t vk = vdupq_n_f64(k);
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes)
        vst1q_f64(out.data() + i, vmulq_f64(vld1q_f64(a.data() + i), vk));
    for (; i < n; ++i) out[i] = a[i] * k;
}

double max_value(std::span<const double> a) {
    double m = a[0];
    for (std::size_t i = 1; i < a.size(); ++i)
        if (a[i] > m) m = a[i];
    return m;
}

inline float64x2_t select(uint64x2_t mask, float64x2_t yes, float64x2_t no) {
    return vbslq_f64(mask, yes, no);
}

inline float64x2_t min_first(float64x2_t a, float64x2_t b) {
    return select(vcltq_f64(a, b), a, b);
}

void exchange(std::span<const double> net1, std::span<const double> net2, double capacity,
              std::span<double> out1, std::span<double> out2, std::span<double> transfer) {
    const std::size_t n = net1.size();
    const float64x2_t zero = vdupq_n_f64(0.0);
    const float64x2_t cap = vdupq_n_f64(capacity);
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        const float64x2_t n1 = vld1q_f64(net1.data() + i);
        const float64x2_t n2 = vld1q_f64(net2.data() + i);
        const uint64x2_t fwd = vandq_u64(vcltq_f64(n1, zero), vcgtq_f64(n2, zero));
        const uint64x2_t rev = vandq_u64(vcgtq_f64(n1, zero), vcltq_f64(n2, zero));
        const float64x2_t x_fwd = min_first(min_first(vnegq_f64(n1), n2), cap);
        const float64x2_t x_rev = min_first(min_first(n1, vnegq_f64(n2)), cap);
        float64x2_t t = select(fwd, x_fwd, zero);
        t = select(rev, vnegq_f64(x_rev), t);
        const uint64x2_t any = vorrq_u64(fwd, rev);
        vst1q_f64(out1.data() + i, select(any, vaddq_f64(n1, t), n1));
        vst1q_f64(out2.data() + i, select(any, vsubq_f64(n2, t), n2));
        vst1q_f64(transfer.data() + i, t);
    }
    if (i < n)
        scalar_table().exchange(net1.subspan(i), net2.subspan(i), capacity, out1.subspan(i),
                                out2.subspan(i), transfer.subspan(i));
}

double excess_export(std::span<const double> a, double limit) {
    // Lanes {0,1} and {2,3} of the four-way striping live in two registers.
    const std::size_t n = a.size();
    const float64x2_t zero = vdupq_n_f64(0.0);
    const float64x2_t lim = vdupq_n_f64(limit);
    float64x2_t lo = zero;
    float64x2_t hi = zero;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const float64x2_t e0 = vsubq_f64(vnegq_f64(vld1q_f64(a.data() + i)), lim);
        const float64x2_t e1 = vsubq_f64(vnegq_f64(vld1q_f64(a.data() + i + 2)), lim);
        lo = vaddq_f64(lo, select(vcgtq_f64(e0, zero), e0, zero));
        hi = vaddq_f64(hi, select(vcgtq_f64(e1, zero), e1, zero));
    }
    double lane[4] = {vgetq_lane_f64(lo, 0), vgetq_lane_f64(lo, 1), vgetq_lane_f64(hi, 0),
                      vgetq_lane_f64(hi, 1)};
    for (; i < n; ++i) {
        const double e = -a[i] - limit;
        lane[i % 4] += e > 0.0 ? e : 0.0;
    }
    return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

constexpr Table kTable{Isa::Neon, accumulate, subtract, scale, max_value, exchange, excess_export};

}  // namespace

const Table& neon_table() noexcept { return kTable; }

}  // namespace mvb2b::kernels::detail
