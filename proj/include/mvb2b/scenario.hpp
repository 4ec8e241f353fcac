#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mvb2b/pool.hpp"
#include "mvb2b/profile.hpp"

namespace mvb2b {

// Load composition of one feeder. commercial_fraction is
// C peak / (C peak + R peak) of the composed aggregate.
struct MixSpec {
    double commercial_fraction = 0.0;
    std::size_t node_count = 1;

    void validate() const;
};

enum class ShuffleMode {
    Free,      // day segments permuted across the whole year
    Seasonal,  // day segments permuted only within their calendar quarter
};

struct PvSpec {
    double penetration = 1.0;  // PV nameplate / feeder peak load
    ShuffleMode shuffle_mode = ShuffleMode::Seasonal;

    void validate() const;
};

struct SystemSpec {
    MixSpec mix;
    // Applied to the composed load aggregate, in this order. They express
    // "similar" vs "higher" peak clusters between the two feeders.
    double load_scale = 1.0;
    std::optional<double> target_peak_kw;
};

// One data set: two feeders, a list of PV-penetration subsets, and a number
// of Monte Carlo repetitions per subset.
struct SetSpec {
    std::string set_id;
    std::array<SystemSpec, 2> systems;
    std::vector<double> penetrations{1.0, 0.8, 0.5};
    ShuffleMode shuffle_mode = ShuffleMode::Seasonal;
    std::size_t profiles_per_subset = 500;

    void validate() const;
    std::size_t scenario_count() const { return penetrations.size() * profiles_per_subset; }
};

struct LoadDraw {
    Profile load;  // kW
    std::vector<std::string> residential_ids;
    std::vector<std::string> commercial_ids;
    double commercial_scale = 1.0;  // scalar applied to the commercial aggregate
};

struct PvDraw {
    Profile pv;  // kW
    std::string pool_id;
    double nameplate_kw = 0.0;
};

struct SystemScenario {
    Profile load;
    Profile pv;
    Profile net;
    std::vector<std::string> residential_ids;
    std::vector<std::string> commercial_ids;
    std::string pv_id;
    double commercial_scale = 1.0;
    double nameplate_kw = 0.0;
};

struct ScenarioKey {
    std::size_t set = 0;
    std::size_t subset = 0;
    std::size_t rep = 0;
};

struct Scenario {
    ScenarioKey key;
    std::uint64_t sub_seed = 0;
    double penetration = 1.0;
    std::array<SystemScenario, 2> systems;

    const Profile& net(std::size_t system) const { return systems[system].net; }
};

// Draws mix.node_count pool loads with replacement, split between classes by
// the commercial fraction, and scales the commercial aggregate by
//   s = x / (1 - x) * R_peak / C_peak
// so the realized peak ratio equals x. x = 0 and x = 1 skip scaling.
LoadDraw compose_feeder_load(const ProfilePool& pool, const MixSpec& mix, std::uint64_t sub_seed);

// Picks a per-unit PV profile, reorders its day segments per the shuffle mode,
// and scales it to nameplate = penetration * peak_load_kw.
PvDraw assign_pv(const ProfilePool& pool, const PvSpec& pv, double peak_load_kw,
                 std::uint64_t sub_seed);

// Deterministic scenario source. materialize(i) depends only on the master
// seed, the specs, the pool, and i, so callers may build scenarios in any
// order or concurrently.
class ScenarioGenerator {
public:
    ScenarioGenerator(const ProfilePool& pool, std::vector<SetSpec> specs, std::uint64_t master_seed);

    std::size_t size() const noexcept { return offsets_.back(); }
    const std::vector<SetSpec>& specs() const noexcept { return specs_; }
    std::uint64_t master_seed() const noexcept { return master_seed_; }

    // Canonical index <-> (set, subset, rep).
    ScenarioKey key(std::size_t index) const;
    std::size_t index(const ScenarioKey& key) const;
    // First canonical index of a set and its scenario count.
    std::size_t set_begin(std::size_t set) const { return offsets_[set]; }
    std::size_t set_size(std::size_t set) const { return offsets_[set + 1] - offsets_[set]; }

    std::uint64_t sub_seed(const ScenarioKey& key) const;
    Scenario materialize(std::size_t index) const;

private:
    const ProfilePool* pool_;
    std::vector<SetSpec> specs_;
    std::uint64_t master_seed_;
    std::vector<std::size_t> offsets_;
};

struct ScenarioDatabase {
    std::uint64_t master_seed = 0;
    std::vector<SetSpec> specs;
    std::vector<Scenario> scenarios;  // canonical (set, subset, rep) order
};

// Materializes every scenario. `threads` = 0 uses all cores; the result does
// not depend on it.
ScenarioDatabase generate_database(const ProfilePool& pool, const std::vector<SetSpec>& specs,
                                   std::uint64_t master_seed, unsigned threads = 0);

// SHA-256 of one scenario's profiles and provenance.
std::string scenario_digest(const Scenario& sc);

// Combines per-scenario digests, given in canonical order.
std::string combine_scenario_digests(std::uint64_t master_seed, std::span<const std::string> digests);

// combine_scenario_digests over every scenario. Equal hashes mean identical
// databases, whether generated in memory or streamed.
std::string database_hash(const ScenarioDatabase& db);

}  // namespace mvb2b
