#include <doctest.h>

#include <filesystem>

#include "mvb2b/error.hpp"
#include "mvb2b/pool.hpp"
#include "oracles.hpp"

using namespace mvb2b;
namespace fs = std::filesystem;

TEST_SUITE("pool") {

TEST_CASE("pv normalization") {
    const Profile kw({0, 50, 200, 100});
    const Profile own = normalize_pv(kw);
    CHECK(own == Profile({0, 0.25, 1, 0.5}));
    CHECK(normalize_pv(kw, 400.0) == Profile({0, 0.125, 0.5, 0.25}));
    CHECK_THROWS_AS(normalize_pv(kw, 100.0), ValidationError);
    CHECK_THROWS_AS(normalize_pv(Profile({-1, 1})), ValidationError);
    CHECK(normalize_pv(Profile::zeros(4)) == Profile::zeros(4));
}

TEST_CASE("entries must share one shape") {
    ProfilePool pool;
    pool.add_load({"a", LoadClass::Residential, Profile({1, 2, 3})});
    CHECK_THROWS_AS(pool.add_load({"b", LoadClass::Commercial, Profile({1, 2})}), ValidationError);
    CHECK_THROWS_AS(pool.add_pv({"p", Profile({0.1, 0.2, 0.3}, 0.25)}), ValidationError);
    CHECK_THROWS_AS(pool.add_pv({"p", Profile({0.1, 1.2, 0.3})}), ValidationError);
    pool.add_pv({"p", Profile({0.1, 1.0, 0.3})});
    CHECK(pool.steps() == 3);
    CHECK(pool.residential().size() == 1);
    CHECK(pool.loads(LoadClass::Commercial).empty());
}

TEST_CASE("synthetic pool is deterministic and well formed") {
    SyntheticPoolSpec spec;
    spec.residential = 3;
    spec.commercial = 2;
    spec.pv = 2;
    spec.days = 28;
    const ProfilePool a = synthesize_pool(spec), b = synthesize_pool(spec);
    CHECK(a.steps() == 28 * 48);
    REQUIRE(a.residential().size() == 3);
    REQUIRE(a.commercial().size() == 2);
    REQUIRE(a.pv().size() == 2);
    for (std::size_t i = 0; i < 3; ++i) CHECK(a.residential()[i].profile == b.residential()[i].profile);
    for (const auto& e : a.residential()) {
        CHECK(peak(e.profile) > 0);
        for (double v : e.profile.values()) CHECK(v >= 0);
    }
    for (const auto& e : a.pv()) {
        CHECK(peak(e.per_unit) == 1.0);
        for (double v : e.per_unit.values()) CHECK((v >= 0 && v <= 1));
    }
    spec.seed = 2;
    CHECK_FALSE(synthesize_pool(spec).residential()[0].profile == a.residential()[0].profile);
}

TEST_CASE("pool manifest round trip") {
    SyntheticPoolSpec spec;
    spec.residential = 2;
    spec.commercial = 1;
    spec.pv = 1;
    spec.days = 3;
    const ProfilePool pool = synthesize_pool(spec);
    const fs::path dir = oracle::scratch_dir("pool");
    write_pool(pool, dir);
    const ProfilePool back = load_pool_manifest(dir / "manifest.csv", 0.5);
    REQUIRE(back.residential().size() == 2);
    CHECK(back.residential()[1].profile == pool.residential()[1].profile);
    CHECK(back.commercial()[0].profile == pool.commercial()[0].profile);
    CHECK(back.pv()[0].per_unit == pool.pv()[0].per_unit);
    CHECK(back.residential()[0].id == pool.residential()[0].id);
    CHECK_THROWS_AS(load_pool_manifest(dir / "manifest.csv", 0.25), ResolutionError);
    CHECK_THROWS(load_pool_manifest(dir / "nope.csv"));
    fs::remove_all(dir);
}

TEST_CASE("manifest errors") {
    const fs::path dir = oracle::scratch_dir("pool_bad");
    {
        std::ofstream(dir / "m.csv") << "id,class,path\nx,Q,a.csv\n";
        std::ofstream(dir / "a.csv") << "kw\n1\n";
    }
    CHECK_THROWS_AS(load_pool_manifest(dir / "m.csv"), ParseError);
    {
        std::ofstream(dir / "m.csv") << "id,class,path\nx,R,missing.csv\n";
    }
    CHECK_THROWS(load_pool_manifest(dir / "m.csv"));
    {
        std::ofstream(dir / "m.csv") << "name,kind\n";
    }
    CHECK_THROWS_AS(load_pool_manifest(dir / "m.csv"), ParseError);
    fs::remove_all(dir);
}

}
