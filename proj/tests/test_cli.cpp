#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>

#include "oracles.hpp"
#include "study_fixture.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result cli(const std::string& args, const fs::path& cwd) {
    const fs::path out = cwd / ".stdout", err = cwd / ".stderr";
    const std::string cmd = "cd '" + cwd.string() + "' && '" MVB2B_CLI_PATH "' " + args + " >'" + out.string() +
                            "' 2>'" + err.string() + "'";
    const int status = std::system(cmd.c_str());
    Result r{WIFEXITED(status) ? WEXITSTATUS(status) : -1, oracle::read_file(out), oracle::read_file(err)};
    fs::remove(out);
    fs::remove(err);
    return r;
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("help and usage errors") {
    const fs::path dir = oracle::scratch_dir("cli_usage");
    auto r = cli("--help", dir);
    CHECK(r.code == 0);
    CHECK(r.out.find("marginal") != std::string::npos);
    CHECK(cli("run --help", dir).code == 0);
    CHECK(cli("", dir).code == 2);
    CHECK(cli("frobnicate", dir).code == 2);
    CHECK(cli("run --no-such-flag", dir).code == 2);
    CHECK(cli("hosting --vlsm x.csv --beta 1", dir).code == 2);  // missing required flags
    CHECK(cli("marginal --cap-min 1", dir).code == 2);          // incomplete grid
    CHECK(cli("hosting --agg median --vlsm x --beta 1 --weak 2 --dp-kw 1", dir).code == 2);
    CHECK(cli("--version", dir).code == 0);
    fs::remove_all(dir);
}

TEST_CASE("run: counting contract, determinism, failure path") {
    const fs::path dir = oracle::scratch_dir("cli_run");
    write(dir / "study.json", small_study_json(2));
    auto r = cli("run --config study.json --out res", dir);
    REQUIRE(r.code == 0);
    const std::string rows = oracle::read_file(dir / "res/cap_250kW/set_A.csv");
    CHECK(count_lines(rows) == 1 + 4);
    CHECK(count_lines(oracle::read_file(dir / "res/cap_250kW/summary.csv")) == 1 + 8);

    REQUIRE(cli("run --config study.json --out res2 --threads 3", dir).code == 0);
    for (const char* f : {"cap_250kW/set_A.csv", "cap_250kW/summary.csv", "run_manifest.json"})
        CHECK(oracle::read_file(dir / "res" / f) == oracle::read_file(dir / "res2" / f));

    std::string missing = small_study_json(2);
    const std::string from = R"("synthetic": {"residential": 4, "commercial": 3, "pv": 2, "days": 14})";
    missing.replace(missing.find(from), from.size(), R"("manifest": "nowhere/manifest.csv")");
    write(dir / "missing.json", missing);
    r = cli("run --config missing.json --out res3", dir);
    CHECK(r.code == 1);
    CHECK(r.err.find("nowhere") != std::string::npos);
    CHECK_FALSE(fs::exists(dir / "res3"));
    CHECK(cli("run --config does-not-exist.json", dir).code == 1);
    fs::remove_all(dir);
}

TEST_CASE("gen then run equals a direct run") {
    const fs::path dir = oracle::scratch_dir("cli_gen");
    write(dir / "study.json", small_study_json(3));
    REQUIRE(cli("gen --config study.json --out db", dir).code == 0);
    REQUIRE(cli("run --db db --out a", dir).code == 0);
    REQUIRE(cli("run --config study.json --out b", dir).code == 0);
    for (const char* f : {"cap_250kW/set_A.csv", "cap_250kW/summary.csv", "run_manifest.json"})
        CHECK(oracle::read_file(dir / "a" / f) == oracle::read_file(dir / "b" / f));
    CHECK(cli("run --db db --config study.json", dir).code == 2);
    CHECK(cli("run --db nowhere", dir).code == 1);
    fs::remove_all(dir);
}

TEST_CASE("marginal grid from flags") {
    const fs::path dir = oracle::scratch_dir("cli_marginal");
    write(dir / "study.json", small_study_json(2));
    REQUIRE(cli("marginal --config study.json --cap-min 200 --cap-max 750 --cap-step 50 --out m", dir).code == 0);
    const std::string csv = oracle::read_file(dir / "m/marginal/set_A_sys1.csv");
    CHECK(count_lines(csv) == 1 + 12);
    CHECK(csv.find("\n750,") != std::string::npos);
    CHECK_FALSE(fs::exists(dir / "m/cap_250kW"));
    CHECK(cli("marginal --config study.json --out m2", dir).code == 1);  // no grid anywhere
    CHECK(cli("marginal --config study.json --cap-min 0 --cap-max 10 --cap-step 5 --subset 4 --out m3", dir).code == 1);
    fs::remove_all(dir);
}

TEST_CASE("hosting command") {
    const fs::path dir = oracle::scratch_dir("cli_hosting");
    write(dir / "p.csv", "bus,alpha,beta\nalpha,7.9190e-4,7.6401e-5\nbeta,7.6401e-5,1e-4\n");
    auto r = cli("hosting --vlsm p.csv --beta beta --weak alpha --dp-kw 2000 --base-kw 1000 --v-alpha 7300", dir);
    REQUIRE(r.code == 0);
    CHECK(r.out.find("alpha,7.6401e-05,0.0007919,192.956") != std::string::npos);
    CHECK(r.out.find("\nmin,NA,NA,192.956") != std::string::npos);
    r = cli("hosting --vlsm p.csv --beta beta --weak nope --dp-kw 2000", dir);
    CHECK(r.code == 1);
    write(dir / "net.json", R"({"buses": [{"id": 1, "v_nom": 7200}, {"id": 2, "v_nom": 7200}],
        "lines": [{"from": 1, "to": 2, "r_ohm": 0.5, "x_ohm": 1}], "source": {"id": 1, "v": 7200}})");
    r = cli("hosting --network net.json --beta 2 --weak 2 --dp-kw 10 --agg mean --out h.csv", dir);
    REQUIRE(r.code == 0);
    CHECK(oracle::read_file(dir / "h.csv").find("\nmean,NA,NA,10,") != std::string::npos);
    CHECK(cli("hosting --network net.json --vlsm p.csv --beta 2 --weak 2 --dp-kw 10", dir).code == 2);
    fs::remove_all(dir);
}

TEST_CASE("report and synthetic pool commands") {
    const fs::path dir = oracle::scratch_dir("cli_report");
    REQUIRE(cli("synth-pool --out pool --residential 3 --commercial 2 --pv 1 --days 7", dir).code == 0);
    CHECK(fs::exists(dir / "pool/manifest.csv"));
    std::string text = small_study_json(2);
    const std::string from = R"("synthetic": {"residential": 4, "commercial": 3, "pv": 2, "days": 14})";
    text.replace(text.find(from), from.size(), R"("manifest": "pool/manifest.csv", "dt_hours": 0.5)");
    write(dir / "study.json", text);
    REQUIRE(cli("run --config study.json --out res", dir).code == 0);
    auto r = cli("report --results res", dir);
    REQUIRE(r.code == 0);
    CHECK(count_lines(r.out) == 1 + 8);
    CHECK(r.out.find("250,1,100%R/100%C,A,0,1,r_ec,") != std::string::npos);
    CHECK(cli("report --results nowhere", dir).code == 1);
    fs::remove_all(dir);
}

}
