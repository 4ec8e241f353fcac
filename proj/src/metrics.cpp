#include "mvb2b/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "mvb2b/error.hpp"
#include "mvb2b/parallel.hpp"

namespace mvb2b {

Rate reduction_rate(double before, double after) {
    if (before == 0.0) return std::nullopt;
    return (before - after) / before;
}

std::string_view metric_name(Metric m) {
    switch (m) {
        case Metric::CurtailmentReduction: return "r_ec";
        case Metric::CapacityReduction: return "r_ees";
        case Metric::RatingReduction: return "r_pes";
        case Metric::DeepCycleReduction: return "r_deep";
    }
    return "?";
}

std::optional<Metric> parse_metric(std::string_view name) {
    for (Metric m : kAllMetrics)
        if (metric_name(m) == name) return m;
    return std::nullopt;
}

Rate SystemResult::rate(Metric m) const {
    switch (m) {
        case Metric::CurtailmentReduction: return r_ec;
        case Metric::CapacityReduction: return r_ees;
        case Metric::RatingReduction: return r_pes;
        case Metric::DeepCycleReduction: return r_deep;
    }
    return std::nullopt;
}

SystemBaseline evaluate_baseline(const Profile& net, const GridLimits& limits,
                                 const StorageConfig& cfg) {
    SystemBaseline b;
    b.curtailed_kwh = curtailed_energy(net, limits);
    const StorageTrajectory traj = simulate_storage(net, limits, cfg);
    b.sizing = size_storage(traj, cfg);
    b.sizing.deep_cycle_count = count_deep_cycles(traj, b.sizing.rating_kw, cfg.deep_cycle_threshold);
    return b;
}

ScenarioResult evaluate_with_converter(const Profile& net1, const Profile& net2,
                                       const std::array<SystemBaseline, 2>& baselines,
                                       const ConverterSpec& conv, const GridLimits& limits,
                                       const StorageConfig& cfg) {
    const TransferResult tr = apply_converter(net1, net2, conv);
    const Profile* updated[2] = {&tr.net1_updated, &tr.net2_updated};
    ScenarioResult out;
    for (std::size_t s = 0; s < 2; ++s) {
        const SystemBaseline& base = baselines[s];
        SystemResult& r = out.systems[s];
        r.curtailed_kwh = base.curtailed_kwh;
        r.baseline = base.sizing;
        r.curtailed_prime_kwh = curtailed_energy(*updated[s], limits);
        const StorageTrajectory traj = simulate_storage(*updated[s], limits, cfg);
        r.updated = size_storage(traj, cfg);
        r.updated.deep_cycle_count =
            count_deep_cycles(traj, base.sizing.rating_kw, cfg.deep_cycle_threshold);

        r.r_ec = reduction_rate(r.curtailed_kwh, r.curtailed_prime_kwh);
        r.r_ees = reduction_rate(r.baseline.capacity_kwh, r.updated.capacity_kwh);
        r.r_pes = reduction_rate(r.baseline.rating_kw, r.updated.rating_kw);
        r.r_deep = reduction_rate(static_cast<double>(r.baseline.deep_cycle_count),
                                  static_cast<double>(r.updated.deep_cycle_count));
    }
    return out;
}

ScenarioResult evaluate_scenario(const Profile& net1, const Profile& net2, const ConverterSpec& conv,
                                 const GridLimits& limits, const StorageConfig& cfg) {
    require_aligned(net1, net2, "evaluate_scenario");
    const std::array<SystemBaseline, 2> baselines{evaluate_baseline(net1, limits, cfg),
                                                  evaluate_baseline(net2, limits, cfg)};
    return evaluate_with_converter(net1, net2, baselines, conv, limits, cfg);
}

ScenarioResult evaluate_scenario(const Scenario& scenario, const ConverterSpec& conv,
                                 const GridLimits& limits, const StorageConfig& cfg) {
    return evaluate_scenario(scenario.net(0), scenario.net(1), conv, limits, cfg);
}

// ---------------------------------------------------------------------------
// Statistics

double percentile_sorted(std::span<const double> sorted, double rank) {
    if (sorted.empty()) throw AggregationError("percentile of an empty sample");
    if (!(rank >= 0.0 && rank <= 100.0)) throw ValidationError("percentile rank must be in [0, 100]");
    const double pos = rank / 100.0 * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    if (frac == 0.0) return sorted[lo];
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

StatSummary summarize(std::span<const Rate> values, std::span<const double> percentiles) {
    std::vector<double> defined;
    defined.reserve(values.size());
    for (const Rate& v : values)
        if (v) defined.push_back(*v);
    if (defined.empty()) throw AggregationError("no defined samples to summarize");

    StatSummary s;
    s.n = defined.size();
    s.n_undefined = values.size() - defined.size();

    double sum = 0.0;
    for (double v : defined) sum += v;

    std::sort(defined.begin(), defined.end());
    s.min = defined.front();
    s.max = defined.back();
    s.mean = std::clamp(sum / static_cast<double>(s.n), s.min, s.max);
    s.median = percentile_sorted(defined, 50.0);
    s.percentiles.reserve(percentiles.size());
    for (double p : percentiles) s.percentiles.push_back({p, percentile_sorted(defined, p)});
    return s;
}

StatSummary summarize(std::span<const double> values, std::span<const double> percentiles) {
    std::vector<Rate> rates(values.begin(), values.end());
    return summarize(std::span<const Rate>(rates), percentiles);
}

// ---------------------------------------------------------------------------
// Marginal value

std::vector<double> capacity_grid(double min_kw, double max_kw, double step_kw) {
    if (!(step_kw > 0.0)) throw ValidationError("capacity step must be positive");
    if (!(min_kw >= 0.0) || !(max_kw >= min_kw))
        throw ValidationError("capacity range must satisfy 0 <= min <= max");
    const auto count = static_cast<std::size_t>(std::floor((max_kw - min_kw) / step_kw + 1e-9)) + 1;
    std::vector<double> grid(count);
    for (std::size_t i = 0; i < count; ++i) grid[i] = min_kw + static_cast<double>(i) * step_kw;
    return grid;
}

MarginalCurve make_marginal_curve(std::span<const double> capacities_kw,
                                  std::vector<std::optional<double>> means) {
    MarginalCurve curve;
    curve.capacities_kw.assign(capacities_kw.begin(), capacities_kw.end());
    curve.mean_values = std::move(means);
    for (std::size_t i = 1; i < curve.mean_values.size(); ++i) {
        const auto& a = curve.mean_values[i - 1];
        const auto& b = curve.mean_values[i];
        curve.deltas.push_back(a && b ? std::optional<double>(*b - *a) : std::nullopt);
    }
    return curve;
}

MarginalCurve marginal_sweep(std::span<const NetPair> pairs, std::span<const double> capacities_kw,
                             const GridLimits& limits, const StorageConfig& cfg,
                             const MetricSelector& selector, unsigned threads) {
    if (capacities_kw.size() < 2) throw ValidationError("marginal sweep needs at least two capacities");
    for (std::size_t i = 1; i < capacities_kw.size(); ++i)
        if (!(capacities_kw[i] > capacities_kw[i - 1]))
            throw ValidationError("capacity grid must be strictly increasing");
    if (selector.system > 1) throw ValidationError("system index must be 0 or 1");
    std::vector<ConverterSpec> convs;
    for (double c : capacities_kw) convs.emplace_back(c);

    // rates[i * caps + k]
    const std::size_t caps = capacities_kw.size();
    std::vector<Rate> rates(pairs.size() * caps);
    parallel_for(pairs.size(), threads, [&](std::size_t i) {
        const Profile& n1 = *pairs[i].net1;
        const Profile& n2 = *pairs[i].net2;
        require_aligned(n1, n2, "marginal_sweep");
        const std::array<SystemBaseline, 2> base{evaluate_baseline(n1, limits, cfg),
                                                 evaluate_baseline(n2, limits, cfg)};
        for (std::size_t k = 0; k < caps; ++k) {
            const auto r = evaluate_with_converter(n1, n2, base, convs[k], limits, cfg);
            rates[i * caps + k] = r.systems[selector.system].rate(selector.metric);
        }
    });

    std::vector<std::optional<double>> means(caps);
    for (std::size_t k = 0; k < caps; ++k) {
        double sum = 0.0;
        std::size_t n = 0;
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            if (const Rate& r = rates[i * caps + k]) {
                sum += *r;
                ++n;
            }
        }
        if (n > 0) means[k] = sum / static_cast<double>(n);
    }
    return make_marginal_curve(capacities_kw, std::move(means));
}

MarginalCurve marginal_sweep(std::span<const Scenario> scenarios, std::span<const double> capacities_kw,
                             const GridLimits& limits, const StorageConfig& cfg,
                             const MetricSelector& selector, unsigned threads) {
    std::vector<NetPair> pairs;
    pairs.reserve(scenarios.size());
    for (const auto& sc : scenarios) pairs.push_back({&sc.net(0), &sc.net(1)});
    return marginal_sweep(std::span<const NetPair>(pairs), capacities_kw, limits, cfg, selector, threads);
}

}  // namespace mvb2b
