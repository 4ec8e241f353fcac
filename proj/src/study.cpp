#include "mvb2b/study.hpp"

#include <unistd.h>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "mvb2b/error.hpp"
#include "mvb2b/hash.hpp"
#include "mvb2b/parallel.hpp"

#ifndef MVB2B_VERSION
#define MVB2B_VERSION "0.0.0"
#endif

namespace mvb2b {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view toolkit_version() { return MVB2B_VERSION; }

namespace {

// ---------------------------------------------------------------------------
// Logging: MVB2B_LOG=quiet|warn|info|debug (default warn), to stderr.

int log_level() {
    static const int level = [] {
        const char* env = std::getenv("MVB2B_LOG");
        if (!env) return 1;
        const std::string_view v{env};
        if (v == "quiet") return 0;
        if (v == "info") return 2;
        if (v == "debug") return 3;
        return 1;
    }();
    return level;
}

void log_info(const std::string& msg) {
    if (log_level() >= 2) std::cerr << "[mvb2b] " << msg << '\n';
}

// ---------------------------------------------------------------------------
// Config parsing

class Node {
public:
    Node(const json& j, std::string path) : j_(j), path_(std::move(path)) {}

    [[noreturn]] void fail(const std::string& msg) const {
        throw ConfigError((path_.empty() ? "/" : path_) + ": " + msg);
    }

    const json& raw() const { return j_; }
    const std::string& path() const { return path_; }

    void expect_object(std::initializer_list<std::string_view> allowed) const {
        if (!j_.is_object()) fail("expected an object");
        for (const auto& [k, v] : j_.items()) {
            bool ok = false;
            for (auto a : allowed) ok = ok || a == k;
            if (!ok) Node(v, path_ + "/" + k).fail("unknown key");
        }
    }

    bool has(const char* key) const { return j_.contains(key) && !j_.at(key).is_null(); }
    Node at(const char* key) const {
        if (!j_.contains(key)) Node(j_, path_ + "/" + key).fail("required key is missing");
        return Node(j_.at(key), path_ + "/" + key);
    }
    Node at(std::size_t i) const { return Node(j_.at(i), path_ + "/" + std::to_string(i)); }
    std::size_t size() const { return j_.size(); }

    double number() const {
        if (!j_.is_number()) fail("expected a number");
        const double v = j_.get<double>();
        if (!std::isfinite(v)) fail("expected a finite number");
        return v;
    }
    double number_in(double lo, double hi, bool lo_open = false) const {
        const double v = number();
        if (v > hi || v < lo || (lo_open && v == lo)) {
            std::ostringstream m;
            m << "expected a number in " << (lo_open ? "(" : "[") << lo << ", " << hi << "]";
            fail(m.str());
        }
        return v;
    }
    double nonnegative() const {
        const double v = number();
        if (v < 0.0) fail("expected a nonnegative number");
        return v;
    }
    double positive() const {
        const double v = number();
        if (!(v > 0.0)) fail("expected a positive number");
        return v;
    }
    std::uint64_t uint() const {
        if (!j_.is_number_unsigned() && !(j_.is_number_integer() && j_.get<long long>() >= 0))
            fail("expected a nonnegative integer");
        return j_.get<std::uint64_t>();
    }
    std::string text() const {
        if (j_.is_string()) return j_.get<std::string>();
        if (j_.is_number_integer()) return std::to_string(j_.get<long long>());
        fail("expected a string");
    }
    std::vector<double> numbers() const {
        if (!j_.is_array()) fail("expected an array of numbers");
        std::vector<double> out;
        for (std::size_t i = 0; i < size(); ++i) out.push_back(at(i).number());
        return out;
    }

private:
    const json& j_;
    std::string path_;
};

void check_increasing(const Node& n, const std::vector<double>& v) {
    for (std::size_t i = 1; i < v.size(); ++i)
        if (!(v[i] > v[i - 1])) n.fail("capacities must be strictly increasing");
    for (double c : v)
        if (c < 0.0) n.fail("capacities must be nonnegative");
}

fs::path resolve(const fs::path& base, const std::string& p) {
    const fs::path path(p);
    return path.is_absolute() ? path : base / path;
}

SystemSpec parse_system(const Node& n) {
    n.expect_object({"commercial_fraction", "node_count", "load_scale", "target_peak_kw"});
    SystemSpec s;
    s.mix.commercial_fraction = n.at("commercial_fraction").number_in(0.0, 1.0);
    const auto nodes = n.at("node_count").uint();
    if (nodes == 0) n.at("node_count").fail("expected a positive integer");
    s.mix.node_count = nodes;
    if (n.has("load_scale")) s.load_scale = n.at("load_scale").nonnegative();
    if (n.has("target_peak_kw")) s.target_peak_kw = n.at("target_peak_kw").positive();
    return s;
}

ShuffleMode parse_shuffle(const Node& n) {
    const auto v = n.text();
    if (v == "seasonal") return ShuffleMode::Seasonal;
    if (v == "free") return ShuffleMode::Free;
    n.fail("expected 'seasonal' or 'free'");
}

bool safe_id(const std::string& id) {
    if (id.empty() || id == "." || id == "..") return false;
    for (char c : id)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')) return false;
    return true;
}

SetSpec parse_set(const Node& n) {
    n.expect_object({"id", "system1", "system2", "penetrations", "shuffle_mode", "profiles_per_subset", "note"});
    SetSpec s;
    s.set_id = n.at("id").text();
    if (!safe_id(s.set_id)) n.at("id").fail("set ids may only use letters, digits, '-', '_', '.'");
    s.systems[0] = parse_system(n.at("system1"));
    s.systems[1] = parse_system(n.at("system2"));
    if (n.has("penetrations")) {
        s.penetrations = n.at("penetrations").numbers();
        if (s.penetrations.empty()) n.at("penetrations").fail("expected at least one penetration");
        for (std::size_t i = 0; i < s.penetrations.size(); ++i)
            if (!(s.penetrations[i] > 0.0)) n.at("penetrations").at(i).fail("penetration must be positive");
    }
    if (n.has("shuffle_mode")) s.shuffle_mode = parse_shuffle(n.at("shuffle_mode"));
    if (n.has("profiles_per_subset")) {
        s.profiles_per_subset = n.at("profiles_per_subset").uint();
        if (s.profiles_per_subset == 0) n.at("profiles_per_subset").fail("expected a positive integer");
    }
    return s;
}

StorageConfig parse_storage(const Node& n) {
    n.expect_object({"eta", "initial_energy_kwh", "clamp_mode", "absorb_mode", "deep_cycle_threshold"});
    StorageConfig s;
    if (n.has("eta")) s.eta = n.at("eta").number_in(0.0, 1.0, true);
    if (n.has("initial_energy_kwh")) s.initial_energy_kwh = n.at("initial_energy_kwh").nonnegative();
    if (n.has("deep_cycle_threshold"))
        s.deep_cycle_threshold = n.at("deep_cycle_threshold").number_in(0.0, 1.0, true);
    if (n.has("clamp_mode")) {
        const auto v = n.at("clamp_mode").text();
        if (v == "clamped") s.clamp_mode = ClampMode::Clamped;
        else if (v == "literal") s.clamp_mode = ClampMode::Literal;
        else n.at("clamp_mode").fail("expected 'clamped' or 'literal'");
    }
    const auto absorb = n.at("absorb_mode").text();
    if (absorb == "all_excess") s.absorb_mode = AbsorbMode::AllExcess;
    else if (absorb == "above_limit") s.absorb_mode = AbsorbMode::AboveLimit;
    else n.at("absorb_mode").fail("expected 'all_excess' or 'above_limit'");
    return s;
}

std::vector<double> parse_grid(const Node& n) {
    std::vector<double> grid;
    if (n.has("capacities_kw")) {
        grid = n.at("capacities_kw").numbers();
        check_increasing(n.at("capacities_kw"), grid);
    } else {
        const double lo = n.at("cap_min").nonnegative();
        const double hi = n.at("cap_max").nonnegative();
        const double step = n.at("cap_step").positive();
        if (hi < lo) n.at("cap_max").fail("must be >= cap_min");
        grid = capacity_grid(lo, hi, step);
    }
    if (grid.size() < 2) n.fail("a marginal sweep needs at least two capacities");
    return grid;
}

HostingSettings parse_hosting(const Node& n, const fs::path& base) {
    n.expect_object({"network", "vlsm", "vlsm_q", "perturbation_w", "beta", "weak", "dp_kw", "agg",
                     "base_kw", "v_alpha"});
    HostingSettings h;
    if (n.has("network")) h.network = resolve(base, n.at("network").text());
    if (n.has("vlsm")) h.vlsm_p = resolve(base, n.at("vlsm").text());
    if (n.has("vlsm_q")) h.vlsm_q = resolve(base, n.at("vlsm_q").text());
    if (h.network.has_value() == h.vlsm_p.has_value()) n.fail("give exactly one of 'network' or 'vlsm'");
    if (n.has("perturbation_w")) h.perturbation_w = n.at("perturbation_w").positive();
    h.query.beta = n.at("beta").text();
    const Node weak = n.at("weak");
    if (!weak.raw().is_array() || weak.size() == 0) weak.fail("expected a nonempty array of bus ids");
    for (std::size_t i = 0; i < weak.size(); ++i) h.query.weak_buses.push_back(weak.at(i).text());
    h.query.delta_p_beta_w = n.at("dp_kw").nonnegative() * 1000.0;
    if (n.has("base_kw")) h.query.base_capacity_w = n.at("base_kw").positive() * 1000.0;
    if (n.has("v_alpha")) {
        h.query.v_alpha_v = n.at("v_alpha").numbers();
        if (h.query.v_alpha_v.size() != h.query.weak_buses.size())
            n.at("v_alpha").fail("expected one voltage per weak bus");
    }
    if (n.has("agg")) {
        const auto a = n.at("agg").text();
        if (a == "min") h.aggregation = HostingAggregation::Min;
        else if (a == "mean") h.aggregation = HostingAggregation::Mean;
        else n.at("agg").fail("expected 'min' or 'mean'");
    }
    return h;
}

}  // namespace

StudyConfig parse_study_config(std::string_view json_text, const fs::path& base_dir) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    const Node root(doc, "");
    root.expect_object({"master_seed", "pool", "sets", "converter_capacities_kw", "grid", "storage",
                        "percentiles", "marginal", "hosting", "output_dir", "parallelism", "description"});
    StudyConfig cfg;
    cfg.source_text = std::string(json_text);
    cfg.master_seed = root.at("master_seed").uint();

    const Node pool = root.at("pool");
    pool.expect_object({"manifest", "dt_hours", "synthetic"});
    if (pool.has("manifest") == pool.has("synthetic")) pool.fail("give exactly one of 'manifest' or 'synthetic'");
    if (pool.has("manifest")) {
        cfg.pool_manifest = resolve(base_dir, pool.at("manifest").text());
        if (pool.has("dt_hours")) cfg.pool_dt_hours = pool.at("dt_hours").positive();
    } else {
        const Node syn = pool.at("synthetic");
        syn.expect_object({"residential", "commercial", "pv", "days", "dt_hours", "residential_peak_kw",
                           "commercial_peak_kw", "seed"});
        SyntheticPoolSpec s;
        if (syn.has("residential")) s.residential = syn.at("residential").uint();
        if (syn.has("commercial")) s.commercial = syn.at("commercial").uint();
        if (syn.has("pv")) s.pv = syn.at("pv").uint();
        if (syn.has("days")) s.days = syn.at("days").uint();
        if (syn.has("dt_hours")) s.dt_hours = syn.at("dt_hours").positive();
        if (syn.has("residential_peak_kw")) s.residential_peak_kw = syn.at("residential_peak_kw").positive();
        if (syn.has("commercial_peak_kw")) s.commercial_peak_kw = syn.at("commercial_peak_kw").positive();
        if (syn.has("seed")) s.seed = syn.at("seed").uint();
        if (s.days == 0) syn.at("days").fail("expected a positive integer");
        cfg.synthetic_pool = s;
    }

    const Node sets = root.at("sets");
    if (!sets.raw().is_array() || sets.size() == 0) sets.fail("expected a nonempty array of sets");
    std::set<std::string> ids;
    for (std::size_t i = 0; i < sets.size(); ++i) {
        cfg.sets.push_back(parse_set(sets.at(i)));
        if (!ids.insert(cfg.sets.back().set_id).second) sets.at(i).at("id").fail("duplicate set id");
    }

    if (root.has("converter_capacities_kw")) {
        cfg.capacities_kw = root.at("converter_capacities_kw").numbers();
        check_increasing(root.at("converter_capacities_kw"), cfg.capacities_kw);
    }

    const Node grid = root.at("grid");
    grid.expect_object({"back_feed_limit_kw"});
    const Node limit = grid.at("back_feed_limit_kw");
    if (limit.raw().is_string()) {
        if (limit.text() != "unlimited") limit.fail("expected a number or \"unlimited\"");
        cfg.limits = GridLimits::unlimited();
    } else {
        cfg.limits = GridLimits(limit.nonnegative());
    }

    cfg.storage = parse_storage(root.at("storage"));

    if (root.has("percentiles")) {
        cfg.percentiles = root.at("percentiles").numbers();
        for (std::size_t i = 0; i < cfg.percentiles.size(); ++i) root.at("percentiles").at(i).number_in(0.0, 100.0);
    }

    if (root.has("marginal")) {
        const Node m = root.at("marginal");
        m.expect_object({"cap_min", "cap_max", "cap_step", "capacities_kw", "metric", "subset"});
        MarginalSettings ms;
        ms.capacities_kw = parse_grid(m);
        if (m.has("metric")) {
            const auto metric = parse_metric(m.at("metric").text());
            if (!metric) m.at("metric").fail("expected one of r_ec, r_ees, r_pes, r_deep");
            ms.metric = *metric;
        }
        if (m.has("subset")) ms.subset = m.at("subset").uint();
        for (const auto& s : cfg.sets)
            if (ms.subset >= s.penetrations.size())
                m.at("subset").fail("set '" + s.set_id + "' has no subset " + std::to_string(ms.subset));
        cfg.marginal = ms;
    }

    if (root.has("hosting")) cfg.hosting = parse_hosting(root.at("hosting"), base_dir);
    if (root.has("output_dir")) cfg.output_dir = resolve(base_dir, root.at("output_dir").text());
    if (root.has("parallelism")) cfg.threads = static_cast<unsigned>(root.at("parallelism").uint());

    if (cfg.capacities_kw.empty() && !cfg.marginal)
        root.fail("configure 'converter_capacities_kw' or 'marginal'");
    return cfg;
}

StudyConfig load_study_config(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_study_config(ss.str(), path.parent_path());
}

ProfilePool load_study_pool(const StudyConfig& cfg) {
    if (cfg.synthetic_pool) return synthesize_pool(*cfg.synthetic_pool);
    if (!fs::exists(*cfg.pool_manifest))
        throw ConfigError("/pool/manifest: file not found: " + cfg.pool_manifest->string());
    return load_pool_manifest(*cfg.pool_manifest, cfg.pool_dt_hours);
}

namespace {

// ---------------------------------------------------------------------------
// File helpers

void write_text(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw Error("write failed for '" + path.string() + "'");
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Output directory staged next to its final location.
class Staging {
public:
    explicit Staging(fs::path final_dir) : final_(std::move(final_dir)) {
        dir_ = final_;
        dir_ += ".partial-" + std::to_string(::getpid());
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    ~Staging() {
        if (!committed_) {
            std::error_code ec;
            fs::remove_all(dir_, ec);
        }
    }
    const fs::path& dir() const { return dir_; }

    void commit() {
        fs::create_directories(final_);
        for (const auto& entry : fs::directory_iterator(dir_)) {
            const fs::path target = final_ / entry.path().filename();
            fs::remove_all(target);
            fs::rename(entry.path(), target);
        }
        fs::remove_all(dir_);
        committed_ = true;
    }

private:
    fs::path final_;
    fs::path dir_;
    bool committed_ = false;
};

std::string system_label(const MixSpec& mix) {
    const double x = mix.commercial_fraction;
    if (x == 0.0) return "100%R";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g%%C", x * 100.0);
    return buf;
}

std::string set_label(const SetSpec& s) {
    return system_label(s.systems[0].mix) + "/" + system_label(s.systems[1].mix);
}

std::string na(const Rate& r) { return r ? format_number(*r) : std::string("NA"); }

// ---------------------------------------------------------------------------
// Scenario sources

struct NetScenario {
    Profile net1;
    Profile net2;
    std::string digest;
};

using ScenarioLoader = std::function<NetScenario(std::size_t)>;

constexpr std::string_view kScenarioHeader = "load1_kw,pv1_kw,net1_kw,load2_kw,pv2_kw,net2_kw";

std::string scenario_csv(const Scenario& sc) {
    std::string out(kScenarioHeader);
    out += '\n';
    const auto& a = sc.systems[0];
    const auto& b = sc.systems[1];
    for (std::size_t t = 0; t < a.net.size(); ++t) {
        out += format_number(a.load[t]) + ',' + format_number(a.pv[t]) + ',' + format_number(a.net[t]) + ',' +
               format_number(b.load[t]) + ',' + format_number(b.pv[t]) + ',' + format_number(b.net[t]) + '\n';
    }
    return out;
}

NetScenario parse_scenario_csv(const std::string& text, double dt, const std::string& name) {
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    if (line != kScenarioHeader) throw ParseError(name + ": unexpected scenario header", 1);
    std::vector<double> n1, n2;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        double f[6];
        const char* p = line.data();
        const char* end = p + line.size();
        for (int k = 0; k < 6; ++k) {
            auto [q, ec] = std::from_chars(p, end, f[k]);
            if (ec != std::errc{}) throw ParseError(name + ": malformed number", line_no);
            p = q;
            if (k < 5) {
                if (p == end || *p != ',') throw ParseError(name + ": expected 6 fields", line_no);
                ++p;
            }
        }
        if (p != end) throw ParseError(name + ": trailing characters", line_no);
        n1.push_back(f[2]);
        n2.push_back(f[5]);
    }
    return {Profile(std::move(n1), dt, name + "/sys1"), Profile(std::move(n2), dt, name + "/sys2"), {}};
}

std::string scenario_file(const ScenarioKey& k) {
    return "s" + std::to_string(k.subset) + "_r" + std::to_string(k.rep) + ".csv";
}

}  // namespace

// ---------------------------------------------------------------------------
// Database

void write_database(const StudyConfig& cfg, const fs::path& db_dir) {
    const ProfilePool pool = load_study_pool(cfg);
    const ScenarioGenerator gen(pool, cfg.sets, cfg.master_seed);
    Staging staging(db_dir);
    log_info("generating " + std::to_string(gen.size()) + " scenarios into " + db_dir.string());

    struct Entry {
        std::string digest;
        std::string sha;
        json provenance;
    };
    std::vector<Entry> entries(gen.size());
    parallel_for(gen.size(), cfg.threads, [&](std::size_t i) {
        const Scenario sc = gen.materialize(i);
        const std::string text = scenario_csv(sc);
        const auto& spec = cfg.sets[sc.key.set];
        write_text(staging.dir() / ("set_" + spec.set_id) / scenario_file(sc.key), text);
        json systems = json::array();
        for (const auto& sys : sc.systems)
            systems.push_back({{"residential_ids", sys.residential_ids},
                               {"commercial_ids", sys.commercial_ids},
                               {"pv_id", sys.pv_id},
                               {"commercial_scale", sys.commercial_scale},
                               {"nameplate_kw", sys.nameplate_kw},
                               {"peak_load_kw", peak(sys.load)}});
        entries[i] = {scenario_digest(sc), sha256_hex(text),
                      json{{"rep", sc.key.rep},
                           {"file", scenario_file(sc.key)},
                           {"sub_seed", sc.sub_seed},
                           {"digest", ""},
                           {"sha256", ""},
                           {"systems", std::move(systems)}}};
    });

    std::vector<std::string> digests;
    json sets = json::array();
    for (std::size_t s = 0; s < cfg.sets.size(); ++s) {
        const auto& spec = cfg.sets[s];
        json subsets = json::array();
        for (std::size_t sub = 0; sub < spec.penetrations.size(); ++sub) {
            json scen = json::array();
            for (std::size_t r = 0; r < spec.profiles_per_subset; ++r) {
                Entry& e = entries[gen.index({s, sub, r})];
                e.provenance["digest"] = e.digest;
                e.provenance["sha256"] = e.sha;
                scen.push_back(e.provenance);
                digests.push_back(e.digest);
            }
            subsets.push_back({{"index", sub}, {"penetration", spec.penetrations[sub]}, {"scenarios", scen}});
        }
        sets.push_back({{"id", spec.set_id}, {"dir", "set_" + spec.set_id}, {"label", set_label(spec)},
                        {"subsets", subsets}});
    }

    const json manifest{{"format", "mvb2b-db/1"},
                        {"toolkit_version", toolkit_version()},
                        {"master_seed", cfg.master_seed},
                        {"dt_hours", pool.dt_hours()},
                        {"steps", pool.steps()},
                        {"config_sha256", sha256_hex(cfg.source_text)},
                        {"database_hash", combine_scenario_digests(cfg.master_seed, digests)},
                        {"sets", sets}};
    write_text(staging.dir() / "config.json", cfg.source_text);
    write_text(staging.dir() / "manifest.json", manifest.dump(2) + "\n");
    staging.commit();
}

StudyConfig load_database_config(const fs::path& db_dir) {
    if (!fs::exists(db_dir / "manifest.json"))
        throw Error("'" + db_dir.string() + "' is not a scenario database (no manifest.json)");
    return parse_study_config(read_text(db_dir / "config.json"), db_dir);
}

// ---------------------------------------------------------------------------
// Study run


void run_study(const RunRequest& req) {
    const StudyConfig& cfg = req.config;
    cfg.storage.validate();

    std::optional<ProfilePool> pool;
    std::optional<ScenarioGenerator> gen;
    json db_manifest;
    if (req.database) {
        db_manifest = json::parse(read_text(*req.database / "manifest.json"));
        if (db_manifest.value("format", "") != "mvb2b-db/1")
            throw Error("unsupported database format in '" + req.database->string() + "'");
    } else {
        pool.emplace(load_study_pool(cfg));
    }
    // The generator also provides canonical indexing for database runs; it
    // never materializes in that case, so an empty pool is fine.
    static const ProfilePool kEmpty;
    gen.emplace(pool ? *pool : kEmpty, cfg.sets, cfg.master_seed);

    ScenarioLoader loader;
    std::vector<std::string> file_names(gen->size());
    std::vector<std::string> file_shas(gen->size());
    std::vector<std::string> stored_digests(gen->size());
    double db_dt = 0.0;
    if (req.database) {
        db_dt = db_manifest.at("dt_hours").get<double>();
        const auto& sets = db_manifest.at("sets");
        if (sets.size() != cfg.sets.size()) throw Error("database manifest does not match its config");
        for (std::size_t s = 0; s < cfg.sets.size(); ++s) {
            const auto& subsets = sets[s].at("subsets");
            for (std::size_t sub = 0; sub < subsets.size(); ++sub) {
                const auto& scen = subsets[sub].at("scenarios");
                for (std::size_t r = 0; r < scen.size(); ++r) {
                    const std::size_t i = gen->index({s, sub, r});
                    file_names[i] = sets[s].at("dir").get<std::string>() + "/" + scen[r].at("file").get<std::string>();
                    file_shas[i] = scen[r].at("sha256").get<std::string>();
                    stored_digests[i] = scen[r].at("digest").get<std::string>();
                }
            }
        }
        loader = [&](std::size_t i) {
            const fs::path path = *req.database / file_names[i];
            const std::string text = read_text(path);
            if (sha256_hex(text) != file_shas[i])
                throw Error("scenario file '" + path.string() + "' does not match its manifest hash");
            NetScenario ns = parse_scenario_csv(text, db_dt, file_names[i]);
            ns.digest = stored_digests[i];
            return ns;
        };
    } else {
        loader = [&](std::size_t i) {
            const Scenario sc = gen->materialize(i);
            return NetScenario{sc.net(0), sc.net(1), scenario_digest(sc)};
        };
    }

    const bool full = req.kind == RunKind::Full;
    if (full && cfg.capacities_kw.empty()) throw ConfigError("/converter_capacities_kw: no capacities to evaluate");
    if (!full && !cfg.marginal) throw ConfigError("/marginal: no marginal grid configured");
    const std::vector<double> caps = full ? cfg.capacities_kw : std::vector<double>{};
    std::vector<ConverterSpec> convs;
    for (double c : caps) convs.emplace_back(c);
    std::vector<ConverterSpec> sweep;
    if (cfg.marginal)
        for (double c : cfg.marginal->capacities_kw) sweep.emplace_back(c);

    Staging staging(req.output_dir);
    std::vector<std::string> written;
    auto emit = [&](const std::string& rel, const std::string& text) {
        write_text(staging.dir() / rel, text);
        written.push_back(rel);
    };

    std::vector<std::string> digests(gen->size());
    // per capacity: per set rows and summary rows
    std::vector<std::string> summaries(caps.size());
    auto pct_name = [](double p) { return "p" + format_number(p); };
    for (auto& s : summaries) {
        s = "set,subset,system,metric,max,mean,min,median";
        for (double p : cfg.percentiles) s += "," + pct_name(p);
        s += ",n,n_undefined\n";
    }

    for (std::size_t set = 0; set < cfg.sets.size(); ++set) {
        const SetSpec& spec = cfg.sets[set];
        const std::size_t begin = gen->set_begin(set);
        const std::size_t n = gen->set_size(set);
        log_info("set '" + spec.set_id + "': evaluating " + std::to_string(n) + " scenarios");

        std::vector<std::vector<ScenarioResult>> results(n);
        // marginal_rates[i][k][system]
        std::vector<std::vector<std::array<Rate, 2>>> marginal_rates(n);
        parallel_for(n, cfg.threads, [&](std::size_t i) {
            const std::size_t idx = begin + i;
            const ScenarioKey key = gen->key(idx);
            try {
                const NetScenario sc = loader(idx);
                digests[idx] = sc.digest;
                const std::array<SystemBaseline, 2> base{evaluate_baseline(sc.net1, cfg.limits, cfg.storage),
                                                         evaluate_baseline(sc.net2, cfg.limits, cfg.storage)};
                for (const auto& conv : convs)
                    results[i].push_back(
                        evaluate_with_converter(sc.net1, sc.net2, base, conv, cfg.limits, cfg.storage));
                if (cfg.marginal && key.subset == cfg.marginal->subset) {
                    for (const auto& conv : sweep) {
                        const auto r = evaluate_with_converter(sc.net1, sc.net2, base, conv, cfg.limits, cfg.storage);
                        marginal_rates[i].push_back({r.systems[0].rate(cfg.marginal->metric),
                                                     r.systems[1].rate(cfg.marginal->metric)});
                    }
                }
            } catch (const Error& e) {
                throw Error("set '" + spec.set_id + "' subset " + std::to_string(key.subset) + " rep " +
                            std::to_string(key.rep) + ": " + e.what());
            }
        });

        for (std::size_t c = 0; c < caps.size(); ++c) {
            std::string rows =
                "set,subset,rep,system,r_ec,r_ees,r_pes,r_deep,e_c,e_c_prime,cap_kwh,cap_prime_kwh,"
                "rating_kw,rating_prime_kw,deep,deep_prime\n";
            for (std::size_t i = 0; i < n; ++i) {
                const ScenarioKey key = gen->key(begin + i);
                for (std::size_t s = 0; s < 2; ++s) {
                    const SystemResult& r = results[i][c].systems[s];
                    rows += spec.set_id + ',' + std::to_string(key.subset) + ',' + std::to_string(key.rep) + ',' +
                            std::to_string(s + 1) + ',' + na(r.r_ec) + ',' + na(r.r_ees) + ',' + na(r.r_pes) + ',' +
                            na(r.r_deep) + ',' + format_number(r.curtailed_kwh) + ',' +
                            format_number(r.curtailed_prime_kwh) + ',' + format_number(r.baseline.capacity_kwh) +
                            ',' + format_number(r.updated.capacity_kwh) + ',' +
                            format_number(r.baseline.rating_kw) + ',' + format_number(r.updated.rating_kw) + ',' +
                            std::to_string(r.baseline.deep_cycle_count) + ',' +
                            std::to_string(r.updated.deep_cycle_count) + '\n';
                }
            }
            const std::string dir = "cap_" + format_number(caps[c]) + "kW";
            emit(dir + "/set_" + spec.set_id + ".csv", rows);

            for (std::size_t sub = 0; sub < spec.penetrations.size(); ++sub) {
                for (std::size_t s = 0; s < 2; ++s) {
                    for (Metric m : kAllMetrics) {
                        std::vector<Rate> sample;
                        for (std::size_t r = 0; r < spec.profiles_per_subset; ++r) {
                            const std::size_t i = sub * spec.profiles_per_subset + r;
                            sample.push_back(results[i][c].systems[s].rate(m));
                        }
                        std::string& out = summaries[c];
                        out += spec.set_id + ',' + std::to_string(sub) + ',' + std::to_string(s + 1) + ',' +
                               std::string(metric_name(m));
                        try {
                            const StatSummary st = summarize(std::span<const Rate>(sample), cfg.percentiles);
                            out += ',' + format_number(st.max) + ',' + format_number(st.mean) + ',' +
                                   format_number(st.min) + ',' + format_number(st.median);
                            for (const auto& p : st.percentiles) out += ',' + format_number(p.value);
                            out += ',' + std::to_string(st.n) + ',' + std::to_string(st.n_undefined) + '\n';
                        } catch (const AggregationError&) {
                            out += ",NA,NA,NA,NA";
                            for (std::size_t k = 0; k < cfg.percentiles.size(); ++k) out += ",NA";
                            out += ",0," + std::to_string(sample.size()) + '\n';
                        }
                    }
                }
            }
        }

        if (cfg.marginal) {
            const std::size_t sub = cfg.marginal->subset;
            for (std::size_t s = 0; s < 2; ++s) {
                std::vector<std::optional<double>> means;
                for (std::size_t k = 0; k < sweep.size(); ++k) {
                    double sum = 0.0;
                    std::size_t count = 0;
                    for (std::size_t r = 0; r < spec.profiles_per_subset; ++r) {
                        const auto& rate = marginal_rates[sub * spec.profiles_per_subset + r][k][s];
                        if (rate) {
                            sum += *rate;
                            ++count;
                        }
                    }
                    means.push_back(count ? std::optional<double>(sum / static_cast<double>(count)) : std::nullopt);
                }
                const MarginalCurve curve = make_marginal_curve(cfg.marginal->capacities_kw, std::move(means));
                std::string text = "capacity_kw,mean_value,delta\n";
                for (std::size_t k = 0; k < curve.capacities_kw.size(); ++k) {
                    text += format_number(curve.capacities_kw[k]) + ',' + na(curve.mean_values[k]) + ',' +
                            (k == 0 ? std::string("NA") : na(curve.deltas[k - 1])) + '\n';
                }
                emit("marginal/set_" + spec.set_id + "_sys" + std::to_string(s + 1) + ".csv", text);
            }
        }
    }
    for (std::size_t c = 0; c < caps.size(); ++c)
        emit("cap_" + format_number(caps[c]) + "kW/summary.csv", summaries[c]);

    if (full && cfg.hosting) {
        std::ostringstream out;
        write_hosting_csv(out, run_hosting(*cfg.hosting), cfg.hosting->aggregation);
        emit("hosting.csv", out.str());
    }

    const std::string db_hash = req.database ? db_manifest.at("database_hash").get<std::string>()
                                             : combine_scenario_digests(cfg.master_seed, digests);
    if (req.database && combine_scenario_digests(cfg.master_seed, digests) != db_hash)
        throw Error("database content hash does not match its manifest");

    json sets = json::array();
    for (const auto& spec : cfg.sets) {
        json subsets = json::array();
        for (std::size_t sub = 0; sub < spec.penetrations.size(); ++sub)
            subsets.push_back({{"index", sub}, {"penetration", spec.penetrations[sub]}});
        sets.push_back({{"id", spec.set_id}, {"label", set_label(spec)}, {"subsets", subsets}});
    }
    json files = json::array();
    std::sort(written.begin(), written.end());
    for (const auto& rel : written) files.push_back({{"path", rel}, {"sha256", sha256_file(staging.dir() / rel)}});
    json manifest{{"toolkit_version", toolkit_version()},
                  {"config_sha256", sha256_hex(cfg.source_text)},
                  {"master_seed", cfg.master_seed},
                  {"database_hash", db_hash},
                  {"kind", full ? "run" : "marginal"},
                  {"capacities_kw", caps},
                  {"percentiles", cfg.percentiles},
                  {"sets", sets},
                  {"files", files}};
    if (cfg.marginal)
        manifest["marginal"] = {{"metric", metric_name(cfg.marginal->metric)},
                                {"subset", cfg.marginal->subset},
                                {"capacities_kw", cfg.marginal->capacities_kw}};
    write_text(staging.dir() / "run_manifest.json", manifest.dump(2) + "\n");
    staging.commit();
    log_info("wrote " + std::to_string(written.size() + 1) + " files to " + req.output_dir.string());
}

void run_study(const StudyConfig& config) {
    run_study(RunRequest{config, std::nullopt, config.output_dir, RunKind::Full});
}

HostingResult run_hosting(const HostingSettings& settings) {
    const Vlsm vlsm = settings.network ? estimate_vlsm(load_network_json(*settings.network), settings.perturbation_w)
                                       : read_vlsm_csv(*settings.vlsm_p, settings.vlsm_q);
    return evaluate_hosting(vlsm, settings.query, settings.aggregation);
}

// ---------------------------------------------------------------------------
// Report

void write_report(const fs::path& results_dir, std::ostream& out) {
    const fs::path manifest_path = results_dir / "run_manifest.json";
    if (!fs::exists(manifest_path)) throw Error("no run_manifest.json in '" + results_dir.string() + "'");
    const json manifest = json::parse(read_text(manifest_path));

    std::map<std::string, std::pair<std::string, std::vector<double>>> sets;
    for (const auto& s : manifest.at("sets")) {
        std::vector<double> pens;
        for (const auto& sub : s.at("subsets")) pens.push_back(sub.at("penetration").get<double>());
        sets[s.at("id").get<std::string>()] = {s.at("label").get<std::string>(), pens};
    }

    bool header_done = false;
    for (const auto& cap_json : manifest.at("capacities_kw")) {
        const double cap = cap_json.get<double>();
        const fs::path summary = results_dir / ("cap_" + format_number(cap) + "kW") / "summary.csv";
        std::istringstream in(read_text(summary));
        std::string line;
        std::getline(in, line);
        if (!header_done) {
            out << "capacity_kw,penetration,label," << line << '\n';
            header_done = true;
        }
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::istringstream fields(line);
            std::string set_id, subset;
            std::getline(fields, set_id, ',');
            std::getline(fields, subset, ',');
            const auto it = sets.find(set_id);
            if (it == sets.end()) throw Error("summary row for unknown set '" + set_id + "'");
            const auto sub = static_cast<std::size_t>(std::stoul(subset));
            out << format_number(cap) << ',' << format_number(it->second.second.at(sub)) << ','
                << it->second.first << ',' << line << '\n';
        }
    }
    if (!header_done) throw Error("results in '" + results_dir.string() + "' have no summary files");
}

}  // namespace mvb2b
