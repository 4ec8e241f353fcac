#include <doctest.h>

#include <cstring>
#include <limits>
#include <random>
#include <vector>

#include "mvb2b/kernels.hpp"
#include "oracles.hpp"

namespace k = mvb2b::kernels;

namespace {

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() && (a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

// Net loads with a mix of signs, exact zeros and ties.
std::vector<double> mixed(std::mt19937_64& rng, std::size_t n) {
    std::uniform_real_distribution<double> d(-500.0, 500.0);
    std::uniform_int_distribution<int> pick(0, 9);
    std::vector<double> v(n);
    for (auto& x : v) {
        const int c = pick(rng);
        x = c == 0 ? 0.0 : (c == 1 ? 100.0 : (c == 2 ? -100.0 : d(rng)));
    }
    return v;
}

std::vector<const k::Table*> variants() {
    std::vector<const k::Table*> out;
    for (auto isa : {k::Isa::Avx2, k::Isa::Neon})
        if (const k::Table* t = k::find(isa)) out.push_back(t);
    return out;
}

}  // namespace

TEST_SUITE("kernels") {

TEST_CASE("scalar exchange matches the per-step rule") {
    std::mt19937_64 rng(11);
    const auto a = mixed(rng, 1000), b = mixed(rng, 1000);
    for (double cap : {0.0, 50.0, 100.0, 1e9}) {
        std::vector<double> o1(a.size()), o2(a.size()), tr(a.size());
        k::scalar().exchange(a, b, cap, o1, o2, tr);
        for (std::size_t i = 0; i < a.size(); ++i) {
            const auto s = oracle::exchange(a[i], b[i], cap);
            CHECK(o1[i] == s.n1);
            CHECK(o2[i] == s.n2);
            CHECK(tr[i] == s.transfer);
        }
    }
}

TEST_CASE("scalar reductions") {
    const std::vector<double> v{-120, -80, 50, -100.5};
    CHECK(k::scalar().max_value(v) == 50);
    CHECK(k::scalar().excess_export(v, 100) == doctest::Approx(20.5));
    CHECK(k::scalar().excess_export(v, std::numeric_limits<double>::infinity()) == 0.0);
}

TEST_CASE("vectorized variants are bit-identical to scalar") {
    const auto vs = variants();
    if (vs.empty()) MESSAGE("no vectorized kernels on this machine; scalar only");
    std::mt19937_64 rng(2024);
    const k::Table& ref = k::scalar();
    for (const k::Table* t : vs) {
        CAPTURE(k::isa_name(t->isa));
        for (std::size_t n = 0; n < 70; ++n) {
            CAPTURE(n);
            const auto a = mixed(rng, n), b = mixed(rng, n);
            for (double cap : {0.0, 37.5, 100.0, std::numeric_limits<double>::infinity()}) {
                std::vector<double> r1(n), r2(n), rt(n), v1(n), v2(n), vt(n);
                ref.exchange(a, b, cap, r1, r2, rt);
                t->exchange(a, b, cap, v1, v2, vt);
                CHECK(same_bits(r1, v1));
                CHECK(same_bits(r2, v2));
                CHECK(same_bits(rt, vt));
            }
            std::vector<double> rs(n), vs2(n);
            ref.subtract(a, b, rs);
            t->subtract(a, b, vs2);
            CHECK(same_bits(rs, vs2));
            ref.scale(a, 0.37, rs);
            t->scale(a, 0.37, vs2);
            CHECK(same_bits(rs, vs2));
            std::vector<double> ra = a, va = a;
            ref.accumulate(ra, b);
            t->accumulate(va, b);
            CHECK(same_bits(ra, va));
            for (double lim : {0.0, 42.0, std::numeric_limits<double>::infinity()})
                CHECK(same_bits(ref.excess_export(a, lim), t->excess_export(a, lim)));
            if (n > 0) CHECK(same_bits(ref.max_value(a), t->max_value(a)));
        }
        // Long series exercise the main loops.
        const auto a = oracle::random_series(rng, 17520, -900, 900);
        const auto b = oracle::random_series(rng, 17520, -900, 900);
        CHECK(same_bits(ref.excess_export(a, 10.0), t->excess_export(a, 10.0)));
        CHECK(same_bits(ref.max_value(b), t->max_value(b)));
    }
}

TEST_CASE("selection can be pinned and restored") {
    const k::Isa before = k::active().isa;
    REQUIRE(k::select(k::Isa::Scalar));
    CHECK(k::active().isa == k::Isa::Scalar);
    for (auto isa : {k::Isa::Avx2, k::Isa::Neon}) {
        if (k::find(isa)) {
            CHECK(k::select(isa));
            CHECK(k::active().isa == isa);
        } else {
            CHECK_FALSE(k::select(isa));
        }
    }
    k::select(before);
    CHECK(k::active().isa == before);
    CHECK(k::isa_name(k::Isa::Scalar) == "scalar");
}

}
