// Compiled with -mavx2 only; callers must check CPU support first.
#include <immintrin.h>

#include <cstddef>

#include "kernels_internal.hpp"

namespace mvb2b::kernels::detail {
namespace {

constexpr std::size_t kLanes = 4;

void accumulate(std::span<double> dst, std::span<const double> src) {
    const std::size_t n = dst.size();
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        __m256d d = _mm256_loadu_pd(dst.data() + i);
        __m256d s = _mm256_loadu_pd(src.data() + i);
        _mm256_storeu_pd(dst.data() + i, _mm256_add_pd(d, s));
    }
    for (; i < n; ++i) dst[i] += src[i];
}

void subtract(std::span<const double> a, std::span<const double> b, std::span<double> out) {
    const std::size_t n = out.size();
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        __m256d va = _mm256_loadu_pd(a.data() + i);
        __m256d vb = _mm256_loadu_pd(b.data() + i);
        _mm256_storeu_pd(out.data() + i, _mm256_sub_pd(va, vb));
    }
    for (; i < n; ++i) out[i] = a[i] - b[i];
}

void scale(std::span<const double> a, double k, std::span<double> out) {
    const std::size_t n = out.size();
    const __m256d vk = _mm256_set1_pd(k);
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes)
        _mm256_storeu_pd(out.data() + i, _mm256_mul_pd(_mm256_loadu_pd(a.data() + i), vk));
    for (; i < n; ++i) out[i] = a[i] * k;
}

double max_value(std::span<const double> a) {
    const std::size_t n = a.size();
    double m = a[0];
    std::size_t i = 0;
    if (n >= kLanes) {
        __m256d vm = _mm256_loadu_pd(a.data());
        for (i = kLanes; i + kLanes <= n; i += kLanes)
            vm = _mm256_max_pd(vm, _mm256_loadu_pd(a.data() + i));
        alignas(32) double lane[kLanes];
        _mm256_store_pd(lane, vm);
        m = lane[0];
        for (std::size_t k = 1; k < kLanes; ++k)
            if (lane[k] > m) m = lane[k];
    }
    for (; i < n; ++i)
        if (a[i] > m) m = a[i];
    return m;
}

void exchange(std::span<const double> net1, std::span<const double> net2, double capacity,
              std::span<double> out1, std::span<double> out2, std::span<double> transfer) {
    const std::size_t n = net1.size();
    const __m256d zero = _mm256_setzero_pd();
    const __m256d sign = _mm256_set1_pd(-0.0);
    const __m256d cap = _mm256_set1_pd(capacity);
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        const __m256d n1 = _mm256_loadu_pd(net1.data() + i);
        const __m256d n2 = _mm256_loadu_pd(net2.data() + i);
        const __m256d neg1 = _mm256_xor_pd(n1, sign);
        const __m256d neg2 = _mm256_xor_pd(n2, sign);

        // 1 -> 2 when system 1 exports and system 2 imports
        const __m256d fwd = _mm256_and_pd(_mm256_cmp_pd(n1, zero, _CMP_LT_OQ),
                                          _mm256_cmp_pd(n2, zero, _CMP_GT_OQ));
        // 2 -> 1 in the mirrored case
        const __m256d rev = _mm256_and_pd(_mm256_cmp_pd(n1, zero, _CMP_GT_OQ),
                                          _mm256_cmp_pd(n2, zero, _CMP_LT_OQ));

        const __m256d x_fwd = _mm256_min_pd(_mm256_min_pd(neg1, n2), cap);
        const __m256d x_rev = _mm256_min_pd(_mm256_min_pd(n1, neg2), cap);

        __m256d t = _mm256_blendv_pd(zero, x_fwd, fwd);
        t = _mm256_blendv_pd(t, _mm256_xor_pd(x_rev, sign), rev);

        const __m256d any = _mm256_or_pd(fwd, rev);
        _mm256_storeu_pd(out1.data() + i, _mm256_blendv_pd(n1, _mm256_add_pd(n1, t), any));
        _mm256_storeu_pd(out2.data() + i, _mm256_blendv_pd(n2, _mm256_sub_pd(n2, t), any));
        _mm256_storeu_pd(transfer.data() + i, t);
    }
    if (i < n)
        scalar_table().exchange(net1.subspan(i), net2.subspan(i), capacity, out1.subspan(i),
                                out2.subspan(i), transfer.subspan(i));
}

double excess_export(std::span<const double> a, double limit) {
    const std::size_t n = a.size();
    const __m256d zero = _mm256_setzero_pd();
    const __m256d sign = _mm256_set1_pd(-0.0);
    const __m256d lim = _mm256_set1_pd(limit);
    __m256d acc = zero;
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        const __m256d e = _mm256_sub_pd(_mm256_xor_pd(_mm256_loadu_pd(a.data() + i), sign), lim);
        const __m256d pos = _mm256_cmp_pd(e, zero, _CMP_GT_OQ);
        acc = _mm256_add_pd(acc, _mm256_and_pd(e, pos));
    }
    alignas(32) double lane[kLanes];
    _mm256_store_pd(lane, acc);
    for (; i < n; ++i) {
        const double e = -a[i] - limit;
        lane[i % kLanes] += e > 0.0 ? e : 0.0;
    }
    return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

constexpr Table kTable{Isa::Avx2, accumulate, subtract, scale, max_value, exchange, excess_export};

}  // namespace

const Table& avx2_table() noexcept { return kTable; }

}  // namespace mvb2b::kernels::detail
