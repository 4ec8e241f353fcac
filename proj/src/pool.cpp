#include "mvb2b/pool.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "mvb2b/error.hpp"
#include "mvb2b/rng.hpp"

namespace mvb2b {

void ProfilePool::check_shape(const Profile& p, const std::string& id) {
    if (empty()) {
        steps_ = p.size();
        dt_hours_ = p.dt_hours();
        return;
    }
    if (p.size() != steps_ || p.dt_hours() != dt_hours_) {
        std::ostringstream msg;
        msg << "pool entry '" << id << "' has " << p.size() << " steps @ " << p.dt_hours()
            << " h; pool uses " << steps_ << " steps @ " << dt_hours_ << " h";
        throw ValidationError(msg.str());
    }
}

void ProfilePool::add_load(PoolEntry entry) {
    check_shape(entry.profile, entry.id);
    (entry.load_class == LoadClass::Residential ? residential_ : commercial_)
        .push_back(std::move(entry));
}

void ProfilePool::add_pv(PvEntry entry) {
    check_shape(entry.per_unit, entry.id);
    for (double v : entry.per_unit.values()) {
        if (v < 0.0 || v > 1.0)
            throw ValidationError("pv pool entry '" + entry.id + "' is not per-unit (value " +
                                  format_number(v) + ")");
    }
    pv_.push_back(std::move(entry));
}

Profile normalize_pv(const Profile& kw, std::optional<double> nameplate_kw) {
    for (double v : kw.values()) {
        if (v < 0.0)
            throw ValidationError("pv profile '" + kw.label() + "' has negative generation");
    }
    double base = 0.0;
    if (nameplate_kw) {
        if (!(*nameplate_kw > 0.0))
            throw ValidationError("pv profile '" + kw.label() + "': nameplate must be positive");
        base = *nameplate_kw;
    } else {
        base = peak(kw);
        if (base == 0.0) return kw;
    }
    std::vector<double> pu(kw.size());
    for (std::size_t i = 0; i < kw.size(); ++i) {
        pu[i] = kw[i] / base;
        if (pu[i] > 1.0)
            throw ValidationError("pv profile '" + kw.label() + "' exceeds its nameplate at step " +
                                  std::to_string(i));
    }
    return Profile(std::move(pu), kw.dt_hours(), kw.label());
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) {
        while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
        while (!field.empty() && field.front() == ' ') field.erase(field.begin());
        out.push_back(field);
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

}  // namespace

ProfilePool load_pool_manifest(const std::filesystem::path& manifest,
                               std::optional<double> expected_dt_hours) {
    std::ifstream in(manifest);
    if (!in) throw ParseError("cannot open pool manifest '" + manifest.string() + "'");
    const auto base = manifest.parent_path();

    std::string line;
    std::size_t line_no = 1;
    if (!std::getline(in, line)) throw ParseError(manifest.string() + ": empty manifest", 1);
    const auto header = split_csv(line);
    const bool has_nameplate = header.size() == 4 && header[3] == "nameplate_kw";
    if (header.size() < 3 || header[0] != "id" || header[1] != "class" || header[2] != "path" ||
        (header.size() == 4 && !has_nameplate) || header.size() > 4)
        throw ParseError(manifest.string() + ": expected header 'id,class,path[,nameplate_kw]'", 1);

    ProfilePool pool;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto f = split_csv(line);
        if (f.size() != header.size())
            throw ParseError(manifest.string() + ": wrong field count", line_no);
        const std::filesystem::path path = std::filesystem::path(f[2]).is_absolute()
                                               ? std::filesystem::path(f[2])
                                               : base / f[2];
        Profile profile = parse_profile_csv(path, expected_dt_hours).relabeled(f[0]);
        if (f[1] == "R" || f[1] == "C") {
            pool.add_load({f[0], f[1] == "R" ? LoadClass::Residential : LoadClass::Commercial,
                           std::move(profile)});
        } else if (f[1] == "PV") {
            std::optional<double> nameplate;
            if (has_nameplate && !f[3].empty()) {
                try {
                    nameplate = std::stod(f[3]);
                } catch (const std::exception&) {
                    throw ParseError(manifest.string() + ": malformed nameplate '" + f[3] + "'", line_no);
                }
            }
            pool.add_pv({f[0], normalize_pv(profile, nameplate)});
        } else {
            throw ParseError(manifest.string() + ": unknown class '" + f[1] + "'", line_no);
        }
    }
    return pool;
}

// ---------------------------------------------------------------------------
// Synthetic archetypes

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double bump(double hour, double center, double width) {
    const double z = (hour - center) / width;
    return std::exp(-0.5 * z * z);
}

double smoothstep(double edge0, double edge1, double x) {
    const double t = std::clamp((x - edge0) / (edge1 - edge0), 0.0, 1.0);
    return t * t * (3.0 - 2.0 * t);
}

std::size_t steps_per_day(double dt_hours) {
    const double n = 24.0 / dt_hours;
    const double r = std::round(n);
    if (r < 1.0 || std::abs(n - r) > 1e-9)
        throw ValidationError("synthetic pool: step length must divide 24 h");
    return static_cast<std::size_t>(r);
}

Profile residential_profile(Rng& rng, const SyntheticPoolSpec& spec, std::size_t per_day,
                            const std::string& id) {
    const double size = spec.residential_peak_kw * rng.uniform(0.6, 1.4);
    const double morning = rng.uniform(6.5, 8.0);
    const double evening = rng.uniform(18.0, 20.5);
    const double base = rng.uniform(0.15, 0.3);
    std::vector<double> v;
    v.reserve(spec.days * per_day);
    for (std::size_t d = 0; d < spec.days; ++d) {
        const double doy = static_cast<double>(d % 365);
        const double season = 1.0 + 0.25 * std::cos(2.0 * kTwoPi * (doy - 15.0) / 365.0);
        const double daily = rng.uniform(0.85, 1.15);
        for (std::size_t s = 0; s < per_day; ++s) {
            const double h = (static_cast<double>(s) + 0.5) * spec.dt_hours;
            const double shape = base + 0.35 * bump(h, morning, 1.0) + 0.75 * bump(h, evening, 1.6) +
                                 0.3 * bump(h - 24.0, evening, 1.6);
            v.push_back(size * season * daily * shape * rng.uniform(0.9, 1.1));
        }
    }
    return Profile(std::move(v), spec.dt_hours, id);
}

Profile commercial_profile(Rng& rng, const SyntheticPoolSpec& spec, std::size_t per_day,
                           const std::string& id) {
    const double size = spec.commercial_peak_kw * rng.uniform(0.6, 1.4);
    const double open = rng.uniform(6.5, 8.5);
    const double close = rng.uniform(17.0, 19.0);
    const double idle = rng.uniform(0.2, 0.35);
    const std::size_t weekday_offset = static_cast<std::size_t>(rng.below(7));
    std::vector<double> v;
    v.reserve(spec.days * per_day);
    for (std::size_t d = 0; d < spec.days; ++d) {
        const double doy = static_cast<double>(d % 365);
        const double cooling = 1.0 + 0.3 * std::max(0.0, std::cos(kTwoPi * (doy - 197.0) / 365.0));
        const bool weekend = (d + weekday_offset) % 7 >= 5;
        const double daily = rng.uniform(0.9, 1.1);
        for (std::size_t s = 0; s < per_day; ++s) {
            const double h = (static_cast<double>(s) + 0.5) * spec.dt_hours;
            double shape = idle;
            if (!weekend) {
                const double occupied = smoothstep(open - 1.0, open + 1.0, h) *
                                        (1.0 - smoothstep(close - 1.0, close + 1.0, h));
                shape += (1.0 - idle) * occupied * (0.85 + 0.15 * bump(h, 14.0, 2.5) * cooling);
            }
            v.push_back(size * daily * shape * rng.uniform(0.95, 1.05));
        }
    }
    return Profile(std::move(v), spec.dt_hours, id);
}

Profile pv_profile(Rng& rng, const SyntheticPoolSpec& spec, std::size_t per_day,
                   const std::string& id) {
    const double solar_noon = 12.0 + rng.uniform(-0.4, 0.4);
    const double clear_share = rng.uniform(0.5, 0.75);
    std::vector<double> v;
    v.reserve(spec.days * per_day);
    for (std::size_t d = 0; d < spec.days; ++d) {
        const double doy = static_cast<double>(d % 365);
        const double seasonal = std::cos(kTwoPi * (doy - 172.0) / 365.0);
        const double daylight = 12.0 + 2.5 * seasonal;
        const double amplitude = 0.8 + 0.2 * seasonal;
        const bool clear = rng.uniform() < clear_share;
        const double cloud = clear ? rng.uniform(0.9, 1.0) : rng.uniform(0.15, 0.8);
        const double sunrise = solar_noon - daylight / 2.0;
        for (std::size_t s = 0; s < per_day; ++s) {
            const double h = (static_cast<double>(s) + 0.5) * spec.dt_hours;
            const double phase = (h - sunrise) / daylight;
            double g = 0.0;
            if (phase > 0.0 && phase < 1.0) {
                g = amplitude * cloud * std::pow(std::sin(std::numbers::pi * phase), 1.3);
                if (!clear) g *= rng.uniform(0.6, 1.0);
            }
            v.push_back(g);
        }
    }
    return normalize_pv(Profile(std::move(v), spec.dt_hours, id));
}

std::string make_id(const char* prefix, std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%03zu", prefix, i);
    return buf;
}

}  // namespace

ProfilePool synthesize_pool(const SyntheticPoolSpec& spec) {
    if (spec.days == 0) throw ValidationError("synthetic pool: days must be positive");
    const std::size_t per_day = steps_per_day(spec.dt_hours);
    ProfilePool pool;
    for (std::size_t i = 0; i < spec.residential; ++i) {
        Rng rng(derive_seed(spec.seed, {0, i}));
        const auto id = make_id("R", i);
        pool.add_load({id, LoadClass::Residential, residential_profile(rng, spec, per_day, id)});
    }
    for (std::size_t i = 0; i < spec.commercial; ++i) {
        Rng rng(derive_seed(spec.seed, {1, i}));
        const auto id = make_id("C", i);
        pool.add_load({id, LoadClass::Commercial, commercial_profile(rng, spec, per_day, id)});
    }
    for (std::size_t i = 0; i < spec.pv; ++i) {
        Rng rng(derive_seed(spec.seed, {2, i}));
        const auto id = make_id("PV", i);
        pool.add_pv({id, pv_profile(rng, spec, per_day, id)});
    }
    return pool;
}

void write_pool(const ProfilePool& pool, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::ofstream manifest(dir / "manifest.csv", std::ios::binary);
    if (!manifest) throw Error("cannot write pool manifest in '" + dir.string() + "'");
    manifest << "id,class,path,nameplate_kw\n";
    for (const auto* group : {&pool.residential(), &pool.commercial()}) {
        for (const auto& e : *group) {
            write_profile_csv(dir / (e.id + ".csv"), e.profile, true);
            manifest << e.id << ',' << (e.load_class == LoadClass::Residential ? "R" : "C") << ','
                     << e.id << ".csv,\n";
        }
    }
    for (const auto& e : pool.pv()) {
        write_profile_csv(dir / (e.id + ".csv"), e.per_unit, true);
        manifest << e.id << ",PV," << e.id << ".csv,1\n";
    }
}

}  // namespace mvb2b
