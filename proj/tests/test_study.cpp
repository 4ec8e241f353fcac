#include <doctest.h>

#include <filesystem>

#include "mvb2b/error.hpp"
#include "mvb2b/hash.hpp"
#include "mvb2b/study.hpp"
#include "oracles.hpp"
#include "study_fixture.hpp"

using namespace mvb2b;
namespace fs = std::filesystem;

namespace {

std::string config_error(const std::string& text) {
    try {
        parse_study_config(text, ".");
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_SUITE("study") {

TEST_CASE("config parsing") {
    const StudyConfig cfg = parse_study_config(small_study_json(3, R"(,
  "percentiles": [10, 90],
  "marginal": {"cap_min": 200, "cap_max": 750, "cap_step": 50, "metric": "r_ees"},
  "parallelism": 2)"),
                                               "/base");
    CHECK(cfg.master_seed == 17);
    REQUIRE(cfg.synthetic_pool.has_value());
    CHECK(cfg.synthetic_pool->days == 14);
    REQUIRE(cfg.sets.size() == 1);
    CHECK(cfg.sets[0].profiles_per_subset == 3);
    CHECK(cfg.sets[0].systems[1].mix.commercial_fraction == 1.0);
    CHECK(cfg.storage.absorb_mode == AbsorbMode::AboveLimit);
    CHECK(cfg.limits.back_feed_limit_kw == 0.0);
    CHECK(cfg.percentiles == std::vector<double>{10, 90});
    REQUIRE(cfg.marginal.has_value());
    CHECK(cfg.marginal->capacities_kw.size() == 12);
    CHECK(cfg.marginal->metric == Metric::CapacityReduction);
    CHECK(cfg.threads == 2);
    CHECK(cfg.output_dir == fs::path("results"));
}

TEST_CASE("config errors name the offending path") {
    const std::string good = small_study_json();
    auto replace = [&](const std::string& from, const std::string& to) {
        std::string s = good;
        s.replace(s.find(from), from.size(), to);
        return s;
    };
    CHECK(config_error(replace(R"("commercial_fraction": 0,)", R"("commercial_fraction": 1.5,)"))
              .find("/sets/0/system1/commercial_fraction") != std::string::npos);
    CHECK(config_error(replace(R"("absorb_mode": "above_limit")", R"("absorb_mode": "sometimes")"))
              .find("/storage/absorb_mode") != std::string::npos);
    CHECK(config_error(replace(R"("storage": {"absorb_mode": "above_limit"})", R"("storage": {})"))
              .find("/storage/absorb_mode") != std::string::npos);
    CHECK(config_error(replace(R"("master_seed": 17,)", R"("master_seed": 17, "colour": 1,)"))
              .find("/colour") != std::string::npos);
    CHECK(config_error(replace("[250]", "[250, 100]")).find("/converter_capacities_kw") != std::string::npos);
    CHECK(config_error(replace(R"("id": "A")", R"("id": "../x")")).find("/sets/0/id") != std::string::npos);
    CHECK(config_error(replace(R"("back_feed_limit_kw": 0)", R"("back_feed_limit_kw": "lots")"))
              .find("/grid/back_feed_limit_kw") != std::string::npos);
    CHECK_FALSE(config_error("{not json").empty());
    const auto unlimited = parse_study_config(replace(R"("back_feed_limit_kw": 0)", R"("back_feed_limit_kw": "unlimited")"), ".");
    CHECK(std::isinf(unlimited.limits.back_feed_limit_kw));
}

TEST_CASE("run writes the documented layout") {
    const fs::path dir = oracle::scratch_dir("study_run");
    StudyConfig cfg = parse_study_config(small_study_json(2, R"(,
  "marginal": {"capacities_kw": [0, 100, 200]})"),
                                         dir);
    cfg.output_dir = dir / "out";
    run_study(cfg);
    const std::string rows = oracle::read_file(dir / "out/cap_250kW/set_A.csv");
    CHECK(rows.rfind("set,subset,rep,system,r_ec,r_ees,r_pes,r_deep,e_c,e_c_prime,cap_kwh,cap_prime_kwh,"
                     "rating_kw,rating_prime_kw,deep,deep_prime\n",
                     0) == 0);
    CHECK(count_lines(rows) == 1 + 4);
    const std::string summary = oracle::read_file(dir / "out/cap_250kW/summary.csv");
    CHECK(summary.rfind("set,subset,system,metric,max,mean,min,median,p5,p95,n,n_undefined\n", 0) == 0);
    CHECK(count_lines(summary) == 1 + 2 * 4);
    const std::string marginal = oracle::read_file(dir / "out/marginal/set_A_sys1.csv");
    CHECK(marginal.rfind("capacity_kw,mean_value,delta\n0,0,NA\n", 0) == 0);
    CHECK(count_lines(marginal) == 4);
    const std::string manifest = oracle::read_file(dir / "out/run_manifest.json");
    CHECK(manifest.find("\"database_hash\"") != std::string::npos);
    CHECK(manifest.find("cap_250kW/set_A.csv") != std::string::npos);
    CHECK(manifest.find(sha256_file(dir / "out/cap_250kW/set_A.csv")) != std::string::npos);
    CHECK(manifest.find("100%R/100%C") != std::string::npos);
    // no staging leftovers
    for (const auto& e : fs::directory_iterator(dir)) CHECK(e.path().filename().string().find(".partial") == std::string::npos);

    std::ostringstream report;
    write_report(dir / "out", report);
    CHECK(report.str().rfind("capacity_kw,penetration,label,set,subset,system,metric", 0) == 0);
    CHECK(count_lines(report.str()) == 1 + 8);
    fs::remove_all(dir);
}

TEST_CASE("database round trip matches an in-memory run") {
    const fs::path dir = oracle::scratch_dir("study_db");
    StudyConfig cfg = parse_study_config(small_study_json(3), dir);
    write_database(cfg, dir / "db");
    CHECK(fs::exists(dir / "db/manifest.json"));
    CHECK(fs::exists(dir / "db/config.json"));
    CHECK(fs::exists(dir / "db/set_A/s0_r2.csv"));
    const std::string header = oracle::read_file(dir / "db/set_A/s0_r0.csv").substr(0, 48);
    CHECK(header == "load1_kw,pv1_kw,net1_kw,load2_kw,pv2_kw,net2_kw\n");

    run_study(RunRequest{cfg, std::nullopt, dir / "direct", RunKind::Full});
    run_study(RunRequest{load_database_config(dir / "db"), dir / "db", dir / "fromdb", RunKind::Full});
    for (const char* f : {"cap_250kW/set_A.csv", "cap_250kW/summary.csv", "run_manifest.json"})
        CHECK(oracle::read_file(dir / "direct" / f) == oracle::read_file(dir / "fromdb" / f));

    // tampering is detected and leaves no results behind
    {
        std::ofstream out(dir / "db/set_A/s0_r1.csv", std::ios::app);
        out << "1,1,0,1,1,0\n";
    }
    CHECK_THROWS_AS(run_study(RunRequest{cfg, dir / "db", dir / "bad", RunKind::Full}), Error);
    CHECK_FALSE(fs::exists(dir / "bad"));
    fs::remove_all(dir);
}

TEST_CASE("failures leave no output") {
    const fs::path dir = oracle::scratch_dir("study_fail");
    std::string text = small_study_json();
    const std::string from = R"("synthetic": {"residential": 4, "commercial": 3, "pv": 2, "days": 14})";
    text.replace(text.find(from), from.size(), R"("manifest": "missing/manifest.csv")");
    StudyConfig cfg = parse_study_config(text, dir);
    cfg.output_dir = dir / "out";
    CHECK_THROWS_AS(run_study(cfg), ConfigError);
    CHECK_FALSE(fs::exists(dir / "out"));
    CHECK(std::distance(fs::directory_iterator(dir), fs::directory_iterator()) == 0);
    fs::remove_all(dir);
}

TEST_CASE("undefined groups are written as NA") {
    const fs::path dir = oracle::scratch_dir("study_na");
    std::string text = small_study_json(2);
    // no export can exceed an unlimited back-feed limit, so r_ec is undefined
    text.replace(text.find(R"("back_feed_limit_kw": 0)"), 23, R"("back_feed_limit_kw": "unlimited")");
    StudyConfig cfg = parse_study_config(text, dir);
    cfg.output_dir = dir / "out";
    run_study(cfg);
    const std::string summary = oracle::read_file(dir / "out/cap_250kW/summary.csv");
    CHECK(summary.find("A,0,1,r_ec,NA,NA,NA,NA,NA,NA,0,2\n") != std::string::npos);
    const std::string rows = oracle::read_file(dir / "out/cap_250kW/set_A.csv");
    CHECK(rows.find("A,0,0,1,NA,") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("hosting from config") {
    const fs::path dir = oracle::scratch_dir("study_hosting");
    std::ofstream(dir / "net.json") << R"({"buses": [{"id": "s", "v_nom": 7200}, {"id": "a", "v_nom": 7200}, {"id": "b", "v_nom": 7200}],
        "lines": [{"from": "s", "to": "a", "r_ohm": 0.5, "x_ohm": 0.5}, {"from": "a", "to": "b", "r_ohm": 0.5, "x_ohm": 0.5}],
        "source": {"id": "s", "v": 7200}})";
    StudyConfig cfg = parse_study_config(small_study_json(1, R"(,
  "hosting": {"network": "net.json", "beta": "a", "weak": ["b"], "dp_kw": 100, "agg": "mean", "base_kw": 1000})"),
                                         dir);
    cfg.output_dir = dir / "out";
    run_study(cfg);
    const std::string csv = oracle::read_file(dir / "out/hosting.csv");
    // p_ba / p_bb = 0.5 / 1.0, so half of the exported 100 kW
    const auto at = csv.find("\nmean,NA,NA,");
    REQUIRE(at != std::string::npos);
    std::istringstream row(csv.substr(at + 12));
    std::string delta, rate;
    std::getline(row, delta, ',');
    CHECK(std::stod(delta) == doctest::Approx(50).epsilon(1e-12));
    std::getline(row, rate);  // "NA,NA,<rate>"
    CHECK(std::stod(rate.substr(rate.rfind(',') + 1)) == doctest::Approx(0.05).epsilon(1e-12));
    fs::remove_all(dir);
}

}
