#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "mvb2b/engine.hpp"
#include "mvb2b/profile.hpp"

namespace mvb2b {

enum class ClampMode {
    Clamped,  // discharge stops at empty; energy never negative
    Literal,  // E(t) = E(t-1) - net(t) * dt verbatim
};

enum class AbsorbMode {
    AllExcess,   // every kW of surplus is charged
    AboveLimit,  // only surplus beyond the back-feed limit is charged
};

struct StorageConfig {
    double eta = 1.0;  // size-tolerance coefficient, (0, 1]
    double initial_energy_kwh = 0.0;
    ClampMode clamp_mode = ClampMode::Clamped;
    AbsorbMode absorb_mode = AbsorbMode::AllExcess;
    double deep_cycle_threshold = 0.8;  // fraction of rating, (0, 1]

    // Throws ValidationError on out-of-range fields.
    void validate() const;
};

// power_kw > 0 is discharge, < 0 is charge (same sign as the net load).
struct StorageTrajectory {
    std::vector<double> energy_kwh;
    std::vector<double> power_kw;
    double dt_hours = kDefaultStepHours;
};

struct StorageSizing {
    double capacity_kwh = 0.0;
    double rating_kw = 0.0;
    std::size_t deep_cycle_count = 0;
};

struct CycleCount {
    std::size_t total = 0;
    std::size_t deep = 0;
};

// Runs the storage energy balance over a net-load series. Surplus charges the
// store and deficit discharges it; `cfg` picks the charging input and whether
// the store may run below empty.
StorageTrajectory simulate_storage(const Profile& net, const GridLimits& limits,
                                   const StorageConfig& cfg);

// capacity = eta * max(0, max E(t)); rating = eta * max |P(t)|.
// deep_cycle_count is left at zero; see count_deep_cycles.
StorageSizing size_storage(const StorageTrajectory& traj, const StorageConfig& cfg);

// A cycle is a charging run followed directly by a discharging run, where
// runs are maximal stretches of one sign and zeros end a run. A cycle is deep
// when its peak |power| exceeds threshold * rating_kw. A trailing charge run
// without a discharge is not a cycle.
CycleCount count_cycles(std::span<const double> power_kw, double rating_kw, double threshold);

std::size_t count_deep_cycles(const StorageTrajectory& traj, double rating_kw, double threshold);

// `t,energy_kwh,power_kw`
void write_trajectory_csv(std::ostream& out, const StorageTrajectory& traj);

}  // namespace mvb2b
