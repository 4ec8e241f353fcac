#include "mvb2b/scenario.hpp"

#include <algorithm>
#include <cmath>

#include "mvb2b/engine.hpp"
#include "mvb2b/error.hpp"
#include "mvb2b/hash.hpp"
#include "mvb2b/parallel.hpp"
#include "mvb2b/rng.hpp"

namespace mvb2b {

void MixSpec::validate() const {
    if (!(commercial_fraction >= 0.0 && commercial_fraction <= 1.0))
        throw ValidationError("commercial fraction must be in [0, 1]");
    if (node_count == 0) throw ValidationError("node count must be positive");
}

void PvSpec::validate() const {
    if (!(penetration > 0.0) || !std::isfinite(penetration))
        throw ValidationError("pv penetration must be positive");
}

void SetSpec::validate() const {
    if (profiles_per_subset == 0) throw ValidationError("set '" + set_id + "': profiles_per_subset must be >= 1");
    if (penetrations.empty()) throw ValidationError("set '" + set_id + "': no pv penetration subsets");
    for (const auto& sys : systems) {
        sys.mix.validate();
        if (!(sys.load_scale >= 0.0) || !std::isfinite(sys.load_scale))
            throw ValidationError("set '" + set_id + "': load_scale must be finite and nonnegative");
        if (sys.target_peak_kw && !(*sys.target_peak_kw > 0.0))
            throw ValidationError("set '" + set_id + "': target_peak_kw must be positive");
    }
    for (double p : penetrations) PvSpec{p, shuffle_mode}.validate();
}

namespace {

Profile draw_class(const std::vector<PoolEntry>& entries, std::size_t count, Rng& rng,
                   std::vector<std::string>& ids) {
    std::vector<const Profile*> picked;
    picked.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const auto& e = entries[rng.below(entries.size())];
        picked.push_back(&e.profile);
        ids.push_back(e.id);
    }
    return aggregate(std::span<const Profile* const>(picked));
}

}  // namespace

LoadDraw compose_feeder_load(const ProfilePool& pool, const MixSpec& mix, std::uint64_t sub_seed) {
    mix.validate();
    const double x = mix.commercial_fraction;
    const bool need_r = x < 1.0;
    const bool need_c = x > 0.0;
    if (need_r && pool.residential().empty())
        throw GenerationError("pool has no residential profiles");
    if (need_c && pool.commercial().empty())
        throw GenerationError("pool has no commercial profiles");

    const std::size_t n = mix.node_count;
    std::size_t n_c = 0;
    std::size_t n_r = 0;
    if (!need_c) {
        n_r = n;
    } else if (!need_r) {
        n_c = n;
    } else {
        // Both classes need at least one node for the ratio to be reachable.
        const auto want = static_cast<std::size_t>(std::llround(x * static_cast<double>(n)));
        n_c = std::clamp<std::size_t>(want, 1, std::max<std::size_t>(n, 2) - 1);
        n_r = std::max<std::size_t>(n, 2) - n_c;
    }

    Rng rng(sub_seed);
    LoadDraw draw{Profile::zeros(1), {}, {}, 1.0};
    if (!need_c) {
        draw.load = draw_class(pool.residential(), n_r, rng, draw.residential_ids);
        return draw;
    }
    if (!need_r) {
        draw.load = draw_class(pool.commercial(), n_c, rng, draw.commercial_ids);
        if (!(peak(draw.load) > 0.0))
            throw GenerationError("all-commercial feeder has zero peak load");
        return draw;
    }

    const Profile r_agg = draw_class(pool.residential(), n_r, rng, draw.residential_ids);
    const Profile c_agg = draw_class(pool.commercial(), n_c, rng, draw.commercial_ids);
    const double r_peak = peak(r_agg);
    const double c_peak = peak(c_agg);
    if (!(r_peak > 0.0) || !(c_peak > 0.0))
        throw GenerationError("mixed feeder needs positive residential and commercial peaks");
    draw.commercial_scale = (x / (1.0 - x)) * (r_peak / c_peak);
    const Profile parts[] = {r_agg, scale(c_agg, draw.commercial_scale)};
    draw.load = aggregate(parts);
    return draw;
}

namespace {

// Calendar quarter (0..3) of day index d, taking day 0 as 1 January.
std::size_t quarter_of(std::size_t day) { return (4 * (day % 365)) / 365; }

std::vector<double> shuffle_days(std::span<const double> values, double dt_hours, ShuffleMode mode,
                                 Rng& rng) {
    std::vector<double> out(values.begin(), values.end());
    const double per_day_f = 24.0 / dt_hours;
    const double per_day_r = std::round(per_day_f);
    if (per_day_r < 1.0 || std::abs(per_day_f - per_day_r) > 1e-9) return out;
    const auto per_day = static_cast<std::size_t>(per_day_r);
    const std::size_t days = values.size() / per_day;
    if (days < 2) return out;

    std::vector<std::size_t> order(days);
    for (std::size_t d = 0; d < days; ++d) order[d] = d;
    if (mode == ShuffleMode::Free) {
        rng.shuffle(order.begin(), order.end());
    } else {
        for (std::size_t q = 0; q < 4; ++q) {
            std::vector<std::size_t> slots;
            for (std::size_t d = 0; d < days; ++d)
                if (quarter_of(d) == q) slots.push_back(d);
            std::vector<std::size_t> picks = slots;
            rng.shuffle(picks.begin(), picks.end());
            for (std::size_t k = 0; k < slots.size(); ++k) order[slots[k]] = picks[k];
        }
    }
    for (std::size_t d = 0; d < days; ++d)
        std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(order[d] * per_day), per_day,
                    out.begin() + static_cast<std::ptrdiff_t>(d * per_day));
    return out;
}

}  // namespace

PvDraw assign_pv(const ProfilePool& pool, const PvSpec& pv, double peak_load_kw,
                 std::uint64_t sub_seed) {
    pv.validate();
    if (!(peak_load_kw >= 0.0) || !std::isfinite(peak_load_kw))
        throw ValidationError("peak load must be finite and nonnegative");
    if (pool.pv().empty()) throw GenerationError("pool has no pv profiles");
    Rng rng(sub_seed);
    const PvEntry& entry = pool.pv()[rng.below(pool.pv().size())];
    Profile shuffled(shuffle_days(entry.per_unit.values(), entry.per_unit.dt_hours(),
                                  pv.shuffle_mode, rng),
                     entry.per_unit.dt_hours(), entry.id);
    const double nameplate = pv.penetration * peak_load_kw;
    return {scale(shuffled, nameplate), entry.id, nameplate};
}

// ---------------------------------------------------------------------------

ScenarioGenerator::ScenarioGenerator(const ProfilePool& pool, std::vector<SetSpec> specs,
                                     std::uint64_t master_seed)
    : pool_(&pool), specs_(std::move(specs)), master_seed_(master_seed) {
    if (specs_.empty()) throw ValidationError("no data sets configured");
    offsets_.push_back(0);
    for (const auto& s : specs_) {
        s.validate();
        offsets_.push_back(offsets_.back() + s.scenario_count());
    }
}

ScenarioKey ScenarioGenerator::key(std::size_t index) const {
    if (index >= size()) throw ValidationError("scenario index out of range");
    const auto it = std::upper_bound(offsets_.begin(), offsets_.end(), index);
    const auto set = static_cast<std::size_t>(it - offsets_.begin()) - 1;
    const std::size_t local = index - offsets_[set];
    const std::size_t reps = specs_[set].profiles_per_subset;
    return {set, local / reps, local % reps};
}

std::size_t ScenarioGenerator::index(const ScenarioKey& k) const {
    return offsets_[k.set] + k.subset * specs_[k.set].profiles_per_subset + k.rep;
}

std::uint64_t ScenarioGenerator::sub_seed(const ScenarioKey& k) const {
    return derive_seed(master_seed_, {k.set, k.subset, k.rep});
}

Scenario ScenarioGenerator::materialize(std::size_t index) const {
    const ScenarioKey k = key(index);
    const SetSpec& spec = specs_[k.set];
    const std::uint64_t seed = sub_seed(k);
    const double penetration = spec.penetrations[k.subset];
    std::array<std::optional<SystemScenario>, 2> parts;
    for (std::size_t s = 0; s < 2; ++s) {
        try {
            const SystemSpec& sys = spec.systems[s];
            LoadDraw draw = compose_feeder_load(*pool_, sys.mix, derive_seed(seed, {s, 0}));
            Profile load = draw.load;
            if (sys.load_scale != 1.0) load = scale(load, sys.load_scale);
            if (sys.target_peak_kw) {
                const double p = peak(load);
                if (!(p > 0.0)) throw GenerationError("cannot rescale a zero-peak load to a target peak");
                load = scale(load, *sys.target_peak_kw / p);
            }
            PvDraw pv = assign_pv(*pool_, PvSpec{penetration, spec.shuffle_mode}, peak(load),
                                  derive_seed(seed, {s, 1}));
            const std::string label = spec.set_id + "/" + std::to_string(k.subset) + "/" +
                                      std::to_string(k.rep) + "/sys" + std::to_string(s + 1);
            Profile net = net_load(load, pv.pv).relabeled(label);
            parts[s] = SystemScenario{load.relabeled(label), pv.pv.relabeled(label), std::move(net),
                                           std::move(draw.residential_ids),
                                           std::move(draw.commercial_ids), pv.pool_id,
                                           draw.commercial_scale, pv.nameplate_kw};
        } catch (const Error& e) {
            throw GenerationError("set '" + spec.set_id + "' subset " + std::to_string(k.subset) +
                                  " rep " + std::to_string(k.rep) + " system " +
                                  std::to_string(s + 1) + ": " + e.what());
        }
    }
    return Scenario{k, seed, penetration, {std::move(*parts[0]), std::move(*parts[1])}};
}

ScenarioDatabase generate_database(const ProfilePool& pool, const std::vector<SetSpec>& specs,
                                   std::uint64_t master_seed, unsigned threads) {
    ScenarioGenerator gen(pool, specs, master_seed);
    ScenarioDatabase db{master_seed, specs, {}};
    std::vector<std::optional<Scenario>> slots(gen.size());
    parallel_for(gen.size(), threads, [&](std::size_t i) { slots[i] = gen.materialize(i); });
    db.scenarios.reserve(slots.size());
    for (auto& s : slots) db.scenarios.push_back(std::move(*s));
    return db;
}

std::string scenario_digest(const Scenario& sc) {
    Sha256 h;
    h.update(static_cast<std::uint64_t>(sc.key.set))
        .update(static_cast<std::uint64_t>(sc.key.subset))
        .update(static_cast<std::uint64_t>(sc.key.rep))
        .update(sc.sub_seed)
        .update(sc.penetration);
    for (const auto& sys : sc.systems) {
        h.update(sys.load.dt_hours());
        h.update(sys.load.values()).update(sys.pv.values()).update(sys.net.values());
        h.update(static_cast<std::uint64_t>(sys.residential_ids.size()));
        for (const auto& id : sys.residential_ids) h.update(id);
        h.update(static_cast<std::uint64_t>(sys.commercial_ids.size()));
        for (const auto& id : sys.commercial_ids) h.update(id);
        h.update(sys.pv_id).update(sys.commercial_scale).update(sys.nameplate_kw);
    }
    return h.hex();
}

std::string combine_scenario_digests(std::uint64_t master_seed, std::span<const std::string> digests) {
    Sha256 h;
    h.update(master_seed);
    h.update(static_cast<std::uint64_t>(digests.size()));
    for (const auto& d : digests) h.update(d);
    return h.hex();
}

std::string database_hash(const ScenarioDatabase& db) {
    std::vector<std::string> digests;
    digests.reserve(db.scenarios.size());
    for (const auto& sc : db.scenarios) digests.push_back(scenario_digest(sc));
    return combine_scenario_digests(db.master_seed, digests);
}

}  // namespace mvb2b
