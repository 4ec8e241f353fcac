#include <cstddef>

#include "kernels_internal.hpp"

namespace mvb2b::kernels::detail {
namespace {

// Same selection rule as _mm256_min_pd / vminq_pd on non-NaN input.
inline double min2(double a, double b) { return a < b ? a : b; }

void accumulate(std::span<double> dst, std::span<const double> src) {
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

void subtract(std::span<const double> a, std::span<const double> b, std::span<double> out) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] - b[i];
}

void scale(std::span<const double> a, double k, std::span<double> out) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * k;
}

double max_value(std::span<const double> a) {
    double m = a[0];
    for (std::size_t i = 1; i < a.size(); ++i)
        if (a[i] > m) m = a[i];
    return m;
}

void exchange(std::span<const double> net1, std::span<const double> net2, double capacity,
              std::span<double> out1, std::span<double> out2, std::span<double> transfer) {
    for (std::size_t i = 0; i < net1.size(); ++i) {
        const double n1 = net1[i];
        const double n2 = net2[i];
        if (n1 < 0.0 && n2 > 0.0) {
            const double x = min2(min2(-n1, n2), capacity);
            out1[i] = n1 + x;
            out2[i] = n2 - x;
            transfer[i] = x;
        } else if (n1 > 0.0 && n2 < 0.0) {
            const double x = min2(min2(n1, -n2), capacity);
            out1[i] = n1 - x;
            out2[i] = n2 + x;
            transfer[i] = -x;
        } else {
            out1[i] = n1;
            out2[i] = n2;
            transfer[i] = 0.0;
        }
    }
}

double excess_export(std::span<const double> a, double limit) {
    double lane[4] = {0.0, 0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double e = -a[i] - limit;
        lane[i % 4] += e > 0.0 ? e : 0.0;
    }
    return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

constexpr Table kTable{Isa::Scalar, accumulate, subtract, scale, max_value, exchange, excess_export};

}  // namespace

const Table& scalar_table() noexcept { return kTable; }

}  // namespace mvb2b::kernels::detail
