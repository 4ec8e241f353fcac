#pragma once

#include <array>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "mvb2b/engine.hpp"
#include "mvb2b/scenario.hpp"
#include "mvb2b/storage.hpp"

namespace mvb2b {

// A reduction rate, or nullopt when its denominator is zero.
using Rate = std::optional<double>;

// (before - after) / before; undefined when before == 0.
Rate reduction_rate(double before, double after);

enum class Metric { CurtailmentReduction, CapacityReduction, RatingReduction, DeepCycleReduction };

inline constexpr std::array<Metric, 4> kAllMetrics{
    Metric::CurtailmentReduction, Metric::CapacityReduction, Metric::RatingReduction,
    Metric::DeepCycleReduction};

// r_ec, r_ees, r_pes, r_deep
std::string_view metric_name(Metric m);
std::optional<Metric> parse_metric(std::string_view name);

struct SystemResult {
    double curtailed_kwh = 0.0;        // E_c without the converter
    double curtailed_prime_kwh = 0.0;  // E_c' with it
    StorageSizing baseline;
    StorageSizing updated;  // deep cycles judged against the baseline rating
    Rate r_ec, r_ees, r_pes, r_deep;

    Rate rate(Metric m) const;
};

struct ScenarioResult {
    std::array<SystemResult, 2> systems;
};

// Baseline half of the pipeline for one feeder, reused across capacities.
struct SystemBaseline {
    double curtailed_kwh = 0.0;
    StorageSizing sizing;
};

SystemBaseline evaluate_baseline(const Profile& net, const GridLimits& limits,
                                 const StorageConfig& cfg);

// Converter-coupled half, given both baselines.
ScenarioResult evaluate_with_converter(const Profile& net1, const Profile& net2,
                                       const std::array<SystemBaseline, 2>& baselines,
                                       const ConverterSpec& conv, const GridLimits& limits,
                                       const StorageConfig& cfg);

// Full per-scenario pipeline: curtailment and storage sizing on the original
// net loads, then again after the converter exchange, and the four rates.
ScenarioResult evaluate_scenario(const Profile& net1, const Profile& net2, const ConverterSpec& conv,
                                 const GridLimits& limits, const StorageConfig& cfg);
ScenarioResult evaluate_scenario(const Scenario& scenario, const ConverterSpec& conv,
                                 const GridLimits& limits, const StorageConfig& cfg);

struct Percentile {
    double rank;  // in [0, 100]
    double value;
};

struct StatSummary {
    double max = 0.0;
    double mean = 0.0;
    double min = 0.0;
    double median = 0.0;
    std::vector<Percentile> percentiles;
    std::size_t n = 0;            // defined samples
    std::size_t n_undefined = 0;  // excluded samples
};

// Max, mean, min, median, and requested percentiles over the defined values.
// Percentiles interpolate linearly between closest ranks (inclusive ends).
// The mean sums in input order and is clamped into [min, max].
StatSummary summarize(std::span<const Rate> values, std::span<const double> percentiles);
StatSummary summarize(std::span<const double> values, std::span<const double> percentiles);

// Linear-interpolation percentile of an ascending, nonempty sample.
double percentile_sorted(std::span<const double> sorted, double rank);

struct MetricSelector {
    Metric metric = Metric::CurtailmentReduction;
    std::size_t system = 0;  // 0 or 1
};

struct MarginalCurve {
    std::vector<double> capacities_kw;
    std::vector<std::optional<double>> mean_values;  // nullopt: no defined sample
    std::vector<std::optional<double>> deltas;       // size - 1 entries
};

// Mean of the selected rate over all scenarios at each capacity, and the
// first differences between consecutive capacities.
MarginalCurve marginal_sweep(std::span<const Scenario> scenarios, std::span<const double> capacities_kw,
                             const GridLimits& limits, const StorageConfig& cfg,
                             const MetricSelector& selector, unsigned threads = 0);

// Same, over net-load pairs already in memory.
struct NetPair {
    const Profile* net1;
    const Profile* net2;
};
MarginalCurve marginal_sweep(std::span<const NetPair> pairs, std::span<const double> capacities_kw,
                             const GridLimits& limits, const StorageConfig& cfg,
                             const MetricSelector& selector, unsigned threads = 0);

// Builds the curve from per-capacity means; used by marginal_sweep and the CLI.
MarginalCurve make_marginal_curve(std::span<const double> capacities_kw,
                                  std::vector<std::optional<double>> means);

// Inclusive grid min, min + step, ..., up to max (within 1e-9 of a step).
std::vector<double> capacity_grid(double min_kw, double max_kw, double step_kw);

}  // namespace mvb2b
