#pragma once
// Straightforward reference implementations used to check the library.
// They are written independently of src/ and favour clarity over speed.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

namespace oracle {

inline std::vector<double> fold_sum(const std::vector<std::vector<double>>& xs) {
    std::vector<double> acc = xs.front();
    for (std::size_t k = 1; k < xs.size(); ++k)
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] = acc[i] + xs[k][i];
    return acc;
}

struct Step {
    double n1, n2, transfer;
};

inline Step exchange(double n1, double n2, double cap) {
    if (n1 < 0 && n2 > 0) {
        double x = -n1;
        if (n2 < x) x = n2;
        if (cap < x) x = cap;
        return {n1 + x, n2 - x, x};
    }
    if (n1 > 0 && n2 < 0) {
        double x = n1;
        if (-n2 < x) x = -n2;
        if (cap < x) x = cap;
        return {n1 - x, n2 + x, -x};
    }
    return {n1, n2, 0.0};
}

inline double curtailed(const std::vector<double>& net, double limit, double dt) {
    double e = 0;
    for (double v : net)
        if (v < 0 && -v > limit) e += (-v - limit) * dt;
    return e;
}

// Storage energy recurrence without clamping: E(t) = E(t-1) - P(t) dt.
inline std::vector<double> literal_storage(const std::vector<double>& net, double e0, double dt,
                                           bool above_limit, double limit) {
    std::vector<double> e(net.size());
    double cur = e0;
    for (std::size_t t = 0; t < net.size(); ++t) {
        double p = net[t];
        if (p < 0 && above_limit) p = -std::max(-p - limit, 0.0);
        cur = cur - p * dt;
        e[t] = cur;
    }
    return e;
}

inline double percentile(std::vector<double> v, double rank) {
    std::sort(v.begin(), v.end());
    const double pos = rank / 100.0 * static_cast<double>(v.size() - 1);
    const double lo = std::floor(pos);
    const auto i = static_cast<std::size_t>(lo);
    if (pos == lo) return v[i];
    return v[i] + (pos - lo) * (v[i + 1] - v[i]);
}

struct Summary {
    double max, mean, min, median;
};

inline Summary summary(const std::vector<double>& v) {
    std::vector<double> s = v;
    std::sort(s.begin(), s.end());
    double total = 0;
    for (double x : v) total += x;
    double mean = total / static_cast<double>(v.size());
    mean = std::clamp(mean, s.front(), s.back());
    return {s.back(), mean, s.front(), percentile(v, 50.0)};
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::vector<double> random_series(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
    std::uniform_real_distribution<double> d(lo, hi);
    std::vector<double> v(n);
    for (auto& x : v) x = d(rng);
    return v;
}

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("mvb2b_test_" + name + "_" +
                                                               std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace oracle
