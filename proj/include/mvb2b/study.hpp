#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mvb2b/engine.hpp"
#include "mvb2b/hosting.hpp"
#include "mvb2b/metrics.hpp"
#include "mvb2b/pool.hpp"
#include "mvb2b/scenario.hpp"
#include "mvb2b/storage.hpp"

namespace mvb2b {

std::string_view toolkit_version();

struct MarginalSettings {
    std::vector<double> capacities_kw;
    Metric metric = Metric::CurtailmentReduction;
    std::size_t subset = 0;  // penetration subset swept (first = 100% PV in the usual layout)
};

struct HostingSettings {
    std::optional<std::filesystem::path> network;
    std::optional<std::filesystem::path> vlsm_p;
    std::optional<std::filesystem::path> vlsm_q;
    double perturbation_w = 1000.0;
    HostingQuery query;
    HostingAggregation aggregation = HostingAggregation::Min;
};

struct StudyConfig {
    std::uint64_t master_seed = 0;
    std::optional<std::filesystem::path> pool_manifest;
    std::optional<double> pool_dt_hours;
    std::optional<SyntheticPoolSpec> synthetic_pool;
    std::vector<SetSpec> sets;
    std::vector<double> capacities_kw;
    GridLimits limits;
    StorageConfig storage;
    std::vector<double> percentiles{5.0, 95.0};
    std::optional<MarginalSettings> marginal;
    std::optional<HostingSettings> hosting;
    std::filesystem::path output_dir = "results";
    unsigned threads = 0;  // 0 = all cores

    std::string source_text;  // exact config bytes, hashed into run manifests
};

// Parses and validates a study configuration. Errors are ConfigError with a
// JSON-pointer path, e.g. "/sets/2/system1/commercial_fraction: ...".
// Relative paths resolve against base_dir.
StudyConfig parse_study_config(std::string_view json_text, const std::filesystem::path& base_dir);
StudyConfig load_study_config(const std::filesystem::path& path);

ProfilePool load_study_pool(const StudyConfig& cfg);

// Generates the scenario database into `db_dir`: a copy of the config, one
// directory per set holding `s<subset>_r<rep>.csv` scenario files, and
// `manifest.json` with provenance and content hashes.
void write_database(const StudyConfig& cfg, const std::filesystem::path& db_dir);

enum class RunKind {
    Full,          // per-scenario, summary, marginal (if configured), hosting (if configured)
    MarginalOnly,  // marginal CSVs only
};

struct RunRequest {
    StudyConfig config;
    std::optional<std::filesystem::path> database;  // read scenarios from here instead of generating
    std::filesystem::path output_dir;
    RunKind kind = RunKind::Full;
};

// Runs a study end to end. Outputs are staged and only moved into place once
// everything succeeded, so a failed run leaves no result files behind.
// Throws mvb2b::Error on failure.
void run_study(const RunRequest& request);
void run_study(const StudyConfig& config);

// Loads the config stored in a database directory.
StudyConfig load_database_config(const std::filesystem::path& db_dir);

// Collates every `cap_*/summary.csv` under a results directory into one CSV
// with capacity, penetration, and slash-style scenario labels.
void write_report(const std::filesystem::path& results_dir, std::ostream& out);

// Hosting run from HostingSettings (network or VLSM file).
HostingResult run_hosting(const HostingSettings& settings);

}  // namespace mvb2b
