#include <doctest.h>

#include <map>
#include <set>

#include "mvb2b/engine.hpp"
#include "mvb2b/error.hpp"
#include "mvb2b/scenario.hpp"
#include "oracles.hpp"

using namespace mvb2b;

namespace {

ProfilePool tiny_pool() {
    ProfilePool pool;
    pool.add_load({"R1", LoadClass::Residential, Profile({600, 100, 50, 300})});
    pool.add_load({"C1", LoadClass::Commercial, Profile({100, 380, 200, 10})});
    pool.add_pv({"PV1", Profile({0, 0.5, 1.0, 0.25})});
    return pool;
}

// Per-unit PV where every step of day d holds (d + 1) / 1000, so the source
// day of any output step can be read back from its value.
ProfilePool day_tagged_pool(std::size_t days) {
    ProfilePool pool;
    std::vector<double> pv;
    for (std::size_t d = 0; d < days; ++d)
        for (int s = 0; s < 48; ++s) pv.push_back(static_cast<double>(d + 1) / 1000.0);
    pool.add_pv({"tagged", Profile(pv)});
    pool.add_load({"R", LoadClass::Residential, Profile(std::vector<double>(pv.size(), 1.0))});
    return pool;
}

std::size_t quarter(std::size_t day) { return 4 * (day % 365) / 365; }

SetSpec small_set(const std::string& id, double x1, double x2, std::size_t reps) {
    SetSpec s;
    s.set_id = id;
    s.systems[0].mix = {x1, 8};
    s.systems[1].mix = {x2, 3};
    s.profiles_per_subset = reps;
    return s;
}

}  // namespace

TEST_SUITE("scenario") {

TEST_CASE("commercial scale hits the requested peak ratio") {
    const ProfilePool pool = tiny_pool();
    const LoadDraw d = compose_feeder_load(pool, {0.4, 2}, 123);
    REQUIRE(d.residential_ids.size() == 1);
    REQUIRE(d.commercial_ids.size() == 1);
    // s = (0.4 / 0.6) * (600 / 380)
    CHECK(d.commercial_scale == doctest::Approx(0.4 / 0.6 * 600.0 / 380.0).epsilon(1e-15));
    const double c_peak = 380.0 * d.commercial_scale;
    CHECK(c_peak == doctest::Approx(400.0).epsilon(1e-12));
    CHECK(c_peak / (c_peak + 600.0) == doctest::Approx(0.4).epsilon(1e-12));
    for (std::size_t t = 0; t < 4; ++t)
        CHECK(d.load[t] == doctest::Approx(pool.residential()[0].profile[t] +
                                           d.commercial_scale * pool.commercial()[0].profile[t]));
}

TEST_CASE("pure classes are not scaled") {
    const ProfilePool pool = tiny_pool();
    const LoadDraw r = compose_feeder_load(pool, {0.0, 3}, 1);
    CHECK(r.commercial_scale == 1.0);
    CHECK(r.commercial_ids.empty());
    CHECK(r.load == Profile({1800, 300, 150, 900}));
    const LoadDraw c = compose_feeder_load(pool, {1.0, 2}, 1);
    CHECK(c.residential_ids.empty());
    CHECK(c.load == Profile({200, 760, 400, 20}));
}

TEST_CASE("realized ratio over random pools and fractions") {
    std::mt19937_64 rng(8);
    SyntheticPoolSpec spec;
    spec.days = 14;
    const ProfilePool pool = synthesize_pool(spec);
    for (int i = 0; i < 50; ++i) {
        const double x = std::uniform_real_distribution<double>(0.01, 0.99)(rng);
        const std::size_t n = 1 + rng() % 30;
        const LoadDraw d = compose_feeder_load(pool, {x, n}, rng());
        // Rebuild the class aggregates from the recorded ids.
        std::vector<double> r(pool.steps(), 0.0), c(pool.steps(), 0.0);
        auto find = [](const std::vector<PoolEntry>& es, const std::string& id) -> const Profile& {
            for (const auto& e : es)
                if (e.id == id) return e.profile;
            throw std::runtime_error("missing id");
        };
        for (const auto& id : d.residential_ids) {
            const Profile& p = find(pool.residential(), id);
            for (std::size_t t = 0; t < r.size(); ++t) r[t] += p[t];
        }
        for (const auto& id : d.commercial_ids) {
            const Profile& p = find(pool.commercial(), id);
            for (std::size_t t = 0; t < c.size(); ++t) c[t] += p[t];
        }
        const double rp = *std::max_element(r.begin(), r.end());
        const double cp = *std::max_element(c.begin(), c.end()) * d.commercial_scale;
        CHECK(cp / (cp + rp) == doctest::Approx(x).epsilon(1e-9));
    }
}

TEST_CASE("composition errors") {
    ProfilePool only_r;
    only_r.add_load({"R", LoadClass::Residential, Profile({1, 2})});
    CHECK_THROWS_AS(compose_feeder_load(only_r, {0.5, 4}, 1), GenerationError);
    CHECK(compose_feeder_load(only_r, {0.0, 4}, 1).load == Profile({4, 8}));
    ProfilePool zero_c;
    zero_c.add_load({"C", LoadClass::Commercial, Profile({0, 0})});
    CHECK_THROWS_AS(compose_feeder_load(zero_c, {1.0, 1}, 1), GenerationError);
    CHECK_THROWS_AS(compose_feeder_load(only_r, {1.5, 1}, 1), ValidationError);
    CHECK_THROWS_AS(compose_feeder_load(only_r, {0.0, 0}, 1), ValidationError);
}

TEST_CASE("pv scaling by penetration") {
    const ProfilePool pool = tiny_pool();
    const PvDraw d = assign_pv(pool, {0.8, ShuffleMode::Seasonal}, 1000.0, 5);
    CHECK(d.nameplate_kw == 800.0);
    CHECK(d.pv[1] == 400.0);  // per-unit 0.5 at this step
    CHECK(peak(d.pv) <= d.nameplate_kw);
    CHECK_THROWS_AS(assign_pv(pool, {0.0, ShuffleMode::Seasonal}, 1000.0, 5), ValidationError);
    ProfilePool empty;
    CHECK_THROWS_AS(assign_pv(empty, {1.0, ShuffleMode::Free}, 1.0, 5), GenerationError);
}

TEST_CASE("same sub-seed gives the same pv") {
    const ProfilePool pool = day_tagged_pool(365);
    for (auto mode : {ShuffleMode::Free, ShuffleMode::Seasonal}) {
        const PvDraw a = assign_pv(pool, {1.0, mode}, 10.0, 99);
        const PvDraw b = assign_pv(pool, {1.0, mode}, 10.0, 99);
        CHECK(a.pv == b.pv);
        CHECK_FALSE(assign_pv(pool, {1.0, mode}, 10.0, 100).pv == a.pv);
    }
}

TEST_CASE("seasonal shuffle keeps days inside their quarter") {
    const ProfilePool pool = day_tagged_pool(365);
    bool moved = false;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const PvDraw d = assign_pv(pool, {1.0, ShuffleMode::Seasonal}, 1000.0, seed);
        std::set<std::size_t> seen;
        for (std::size_t day = 0; day < 365; ++day) {
            const double v = d.pv[day * 48] / 1000.0;
            const auto src = static_cast<std::size_t>(std::llround(v * 1000.0)) - 1;
            for (int s = 1; s < 48; ++s) CHECK(d.pv[day * 48 + s] == d.pv[day * 48]);
            CHECK(quarter(src) == quarter(day));
            moved = moved || src != day;
            seen.insert(src);
        }
        CHECK(seen.size() == 365);
    }
    CHECK(moved);
}

TEST_CASE("free shuffle permutes whole days across the year") {
    const ProfilePool pool = day_tagged_pool(365);
    const PvDraw d = assign_pv(pool, {1.0, ShuffleMode::Free}, 1000.0, 3);
    std::set<std::size_t> seen;
    bool crossed = false;
    for (std::size_t day = 0; day < 365; ++day) {
        const auto src = static_cast<std::size_t>(std::llround(d.pv[day * 48])) - 1;
        seen.insert(src);
        crossed = crossed || quarter(src) != quarter(day);
    }
    CHECK(seen.size() == 365);
    CHECK(crossed);
}

TEST_CASE("database counting and canonical order") {
    SyntheticPoolSpec ps;
    ps.days = 7;
    const ProfilePool pool = synthesize_pool(ps);
    SetSpec s = small_set("A", 0.0, 1.0, 500);
    s.penetrations = {1.0, 0.8, 0.5};
    SetSpec one = small_set("B", 0.3, 0.6, 1);
    one.penetrations = {1.0};
    const ScenarioGenerator gen(pool, {s, one}, 7);
    CHECK(gen.size() == 1501);
    CHECK(gen.set_size(0) == 1500);
    CHECK(gen.set_size(1) == 1);
    for (std::size_t i : {0u, 1u, 499u, 500u, 1499u, 1500u}) {
        const ScenarioKey k = gen.key(i);
        CHECK(gen.index(k) == i);
    }
    CHECK(gen.key(500).subset == 1);
    CHECK(gen.key(500).rep == 0);
    CHECK(gen.key(1500).set == 1);
    const Scenario sc = gen.materialize(501);
    CHECK(sc.penetration == 0.8);
    CHECK(sc.key.rep == 1);
    CHECK(sc.sub_seed == gen.sub_seed(sc.key));
}

TEST_CASE("materialized scenarios are consistent") {
    SyntheticPoolSpec ps;
    ps.days = 7;
    const ProfilePool pool = synthesize_pool(ps);
    SetSpec s = small_set("A", 0.25, 1.0, 3);
    s.systems[1].target_peak_kw = 900.0;
    s.systems[0].load_scale = 2.0;
    const ScenarioGenerator gen(pool, {s}, 11);
    for (std::size_t i = 0; i < gen.size(); ++i) {
        const Scenario sc = gen.materialize(i);
        for (const auto& sys : sc.systems) {
            CHECK(sys.net == net_load(sys.load, sys.pv));
            CHECK(sys.nameplate_kw == doctest::Approx(sc.penetration * peak(sys.load)).epsilon(1e-15));
            CHECK(peak(sys.pv) <= sys.nameplate_kw * (1 + 1e-15));
        }
        CHECK(peak(sc.systems[1].load) == doctest::Approx(900.0).epsilon(1e-12));
        CHECK(sc.net(0).size() == sc.net(1).size());
    }
}

TEST_CASE("generation is reproducible and independent of threads") {
    SyntheticPoolSpec ps;
    ps.days = 7;
    const ProfilePool pool = synthesize_pool(ps);
    const std::vector<SetSpec> specs{small_set("A", 0.0, 1.0, 4), small_set("B", 0.2, 0.7, 2)};
    const ScenarioDatabase a = generate_database(pool, specs, 42, 1);
    const ScenarioDatabase b = generate_database(pool, specs, 42, 4);
    CHECK(a.scenarios.size() == 18);
    CHECK(database_hash(a) == database_hash(b));
    const ScenarioDatabase c = generate_database(pool, specs, 43, 1);
    CHECK(database_hash(a) != database_hash(c));
    // hash agrees with the streamed per-scenario form
    std::vector<std::string> digests;
    const ScenarioGenerator gen(pool, specs, 42);
    for (std::size_t i = 0; i < gen.size(); ++i) digests.push_back(scenario_digest(gen.materialize(i)));
    CHECK(combine_scenario_digests(42, digests) == database_hash(a));
}

TEST_CASE("generation errors carry provenance") {
    ProfilePool pool;
    pool.add_load({"R", LoadClass::Residential, Profile({1, 2})});
    pool.add_pv({"P", Profile({0, 1})});
    SetSpec s = small_set("needs-c", 0.0, 0.5, 2);
    const ScenarioGenerator gen(pool, {s}, 1);
    try {
        gen.materialize(1);
        FAIL("expected failure");
    } catch (const GenerationError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("needs-c") != std::string::npos);
        CHECK(msg.find("rep 1") != std::string::npos);
    }
    SetSpec bad = small_set("x", 0.0, 0.0, 0);
    CHECK_THROWS_AS(ScenarioGenerator(pool, {bad}, 1), ValidationError);
    CHECK_THROWS_AS(ScenarioGenerator(pool, {}, 1), ValidationError);
}

}
