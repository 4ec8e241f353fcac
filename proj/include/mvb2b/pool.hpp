#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mvb2b/profile.hpp"

namespace mvb2b {

enum class LoadClass { Residential, Commercial };

struct PoolEntry {
    std::string id;
    LoadClass load_class = LoadClass::Residential;
    Profile profile;  // kW
};

struct PvEntry {
    std::string id;
    Profile per_unit;  // normalized to nameplate, every value in [0, 1]
};

// Categorized profile pool. All entries share one step length and length.
class ProfilePool {
public:
    void add_load(PoolEntry entry);
    void add_pv(PvEntry entry);

    const std::vector<PoolEntry>& residential() const noexcept { return residential_; }
    const std::vector<PoolEntry>& commercial() const noexcept { return commercial_; }
    const std::vector<PvEntry>& pv() const noexcept { return pv_; }
    const std::vector<PoolEntry>& loads(LoadClass c) const noexcept {
        return c == LoadClass::Residential ? residential_ : commercial_;
    }

    bool empty() const noexcept { return residential_.empty() && commercial_.empty() && pv_.empty(); }
    std::size_t steps() const noexcept { return steps_; }
    double dt_hours() const noexcept { return dt_hours_; }

private:
    void check_shape(const Profile& p, const std::string& id);

    std::vector<PoolEntry> residential_;
    std::vector<PoolEntry> commercial_;
    std::vector<PvEntry> pv_;
    std::size_t steps_ = 0;
    double dt_hours_ = 0.0;
};

// Normalizes a PV generation profile to per-unit. With a nameplate, values
// are divided by it and must land in [0, 1]; without one, by the profile's
// own maximum (an all-zero profile stays zero).
Profile normalize_pv(const Profile& kw, std::optional<double> nameplate_kw = std::nullopt);

// Pool manifest CSV: header `id,class,path[,nameplate_kw]`, class one of
// R, C, PV. Relative paths resolve against the manifest's directory.
ProfilePool load_pool_manifest(const std::filesystem::path& manifest,
                               std::optional<double> expected_dt_hours = std::nullopt);

// Archetype-based synthetic pool standing in for metered data.
//   Residential: morning shoulder and an evening peak, higher in winter and summer.
//   Commercial: weekday business-hours plateau with a summer cooling bump.
//   PV: clear-sky bell scaled by season and a per-day cloudiness draw.
struct SyntheticPoolSpec {
    std::size_t residential = 12;
    std::size_t commercial = 12;
    std::size_t pv = 6;
    std::size_t days = 365;
    double dt_hours = kDefaultStepHours;
    double residential_peak_kw = 6.0;    // typical single-house peak
    double commercial_peak_kw = 120.0;   // typical single-building peak
    std::uint64_t seed = 1;
};

ProfilePool synthesize_pool(const SyntheticPoolSpec& spec);

// Writes `manifest.csv` plus one profile CSV per entry into `dir`.
void write_pool(const ProfilePool& pool, const std::filesystem::path& dir);

}  // namespace mvb2b
