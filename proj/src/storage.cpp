#include "mvb2b/storage.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "mvb2b/error.hpp"

namespace mvb2b {

void StorageConfig::validate() const {
    if (!(eta > 0.0 && eta <= 1.0)) throw ValidationError("storage eta must be in (0, 1]");
    if (!(initial_energy_kwh >= 0.0) || !std::isfinite(initial_energy_kwh))
        throw ValidationError("storage initial energy must be finite and nonnegative");
    if (!(deep_cycle_threshold > 0.0 && deep_cycle_threshold <= 1.0))
        throw ValidationError("deep-cycle threshold must be in (0, 1]");
}

StorageTrajectory simulate_storage(const Profile& net, const GridLimits& limits,
                                   const StorageConfig& cfg) {
    cfg.validate();
    const double dt = net.dt_hours();
    const std::size_t n = net.size();
    const bool above_limit = cfg.absorb_mode == AbsorbMode::AboveLimit;
    const bool clamped = cfg.clamp_mode == ClampMode::Clamped;

    StorageTrajectory traj;
    traj.dt_hours = dt;
    traj.energy_kwh.resize(n);
    traj.power_kw.resize(n);

    double energy = cfg.initial_energy_kwh;
    for (std::size_t t = 0; t < n; ++t) {
        const double p = net[t];
        double power = 0.0;
        if (p < 0.0) {
            double charge = -p;
            if (above_limit) charge = std::max(charge - limits.back_feed_limit_kw, 0.0);
            if (charge > 0.0) power = -charge;
            energy -= power * dt;
        } else if (p > 0.0) {
            if (clamped && p * dt >= energy) {
                power = energy / dt;
                energy = 0.0;
            } else {
                power = p;
                energy -= power * dt;
            }
        }
        traj.power_kw[t] = power;
        traj.energy_kwh[t] = energy;
    }
    return traj;
}

StorageSizing size_storage(const StorageTrajectory& traj, const StorageConfig& cfg) {
    double max_energy = 0.0;
    for (double e : traj.energy_kwh) max_energy = std::max(max_energy, e);
    double max_power = 0.0;
    for (double p : traj.power_kw) max_power = std::max(max_power, std::abs(p));
    return {cfg.eta * max_energy, cfg.eta * max_power, 0};
}

CycleCount count_cycles(std::span<const double> power_kw, double rating_kw, double threshold) {
    if (!(rating_kw >= 0.0)) throw ValidationError("rating must be nonnegative");
    struct Run {
        int sign;
        double peak;
    };
    std::vector<Run> runs;
    int current = 0;
    for (double p : power_kw) {
        const int s = p > 0.0 ? 1 : (p < 0.0 ? -1 : 0);
        if (s == 0) {
            current = 0;
            continue;
        }
        if (s != current) {
            runs.push_back({s, 0.0});
            current = s;
        }
        runs.back().peak = std::max(runs.back().peak, std::abs(p));
    }

    const double bar = threshold * rating_kw;
    CycleCount count;
    for (std::size_t i = 0; i + 1 < runs.size();) {
        if (runs[i].sign < 0 && runs[i + 1].sign > 0) {
            ++count.total;
            if (std::max(runs[i].peak, runs[i + 1].peak) > bar) ++count.deep;
            i += 2;
        } else {
            ++i;
        }
    }
    return count;
}

std::size_t count_deep_cycles(const StorageTrajectory& traj, double rating_kw, double threshold) {
    return count_cycles(traj.power_kw, rating_kw, threshold).deep;
}

void write_trajectory_csv(std::ostream& out, const StorageTrajectory& traj) {
    out << "t,energy_kwh,power_kw\n";
    for (std::size_t i = 0; i < traj.energy_kwh.size(); ++i)
        out << i << ',' << format_number(traj.energy_kwh[i]) << ',' << format_number(traj.power_kw[i])
            << '\n';
}

}  // namespace mvb2b
