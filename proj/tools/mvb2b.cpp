// mvb2b command-line front end.
//
// Exit status: 0 success, 1 runtime failure, 2 usage error.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "mvb2b/error.hpp"
#include "mvb2b/kernels.hpp"
#include "mvb2b/study.hpp"

namespace fs = std::filesystem;

namespace {

struct DataSource {
    std::string config;
    std::string db;
};

void add_source(CLI::App* cmd, DataSource& src) {
    auto* c = cmd->add_option("--config", src.config, "Study configuration (JSON)");
    auto* d = cmd->add_option("--db", src.db, "Scenario database directory from 'gen'");
    c->excludes(d);
}

mvb2b::RunRequest make_request(const DataSource& src, const std::string& out, unsigned threads, bool threads_set) {
    mvb2b::RunRequest req;
    if (!src.db.empty()) {
        req.config = mvb2b::load_database_config(src.db);
        req.database = fs::path(src.db);
    } else if (!src.config.empty()) {
        req.config = mvb2b::load_study_config(src.config);
    } else {
        throw mvb2b::ConfigError("one of --config or --db is required");
    }
    if (threads_set) req.config.threads = threads;
    req.output_dir = out.empty() ? req.config.output_dir : fs::path(out);
    return req;
}

// Writes to a file, or stdout for "-" / empty.
template <class Fn>
void with_output(const std::string& path, Fn&& fn) {
    if (path.empty() || path == "-") {
        fn(std::cout);
        return;
    }
    std::ostringstream buf;
    fn(buf);
    if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw mvb2b::Error("cannot write '" + path + "'");
    out << buf.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Grid-value studies for back-to-back converters between distribution feeders"};
    app.set_version_flag("--version", std::string(mvb2b::toolkit_version()));
    app.require_subcommand(1);

    // gen
    auto* gen = app.add_subcommand("gen", "Generate the scenario database");
    std::string gen_config, gen_out;
    gen->add_option("--config", gen_config, "Study configuration (JSON)")->required();
    gen->add_option("--out", gen_out, "Database directory")->required();

    // run
    auto* run = app.add_subcommand("run", "Evaluate every scenario at the configured capacities");
    DataSource run_src;
    std::string run_out;
    unsigned run_threads = 0;
    add_source(run, run_src);
    run->add_option("--out", run_out, "Results directory (default: output_dir from the config)");
    auto* run_threads_opt = run->add_option("--threads", run_threads, "Worker threads, 0 = all cores");

    // marginal
    auto* marginal = app.add_subcommand("marginal", "Sweep converter capacity and report marginal value");
    DataSource m_src;
    std::string m_out, m_metric;
    double cap_min = 0, cap_max = 0, cap_step = 0;
    std::size_t m_subset = 0;
    unsigned m_threads = 0;
    add_source(marginal, m_src);
    auto* o_min = marginal->add_option("--cap-min", cap_min, "Smallest capacity, kW")->check(CLI::NonNegativeNumber);
    auto* o_max = marginal->add_option("--cap-max", cap_max, "Largest capacity, kW")->check(CLI::NonNegativeNumber);
    auto* o_step = marginal->add_option("--cap-step", cap_step, "Capacity step, kW")->check(CLI::PositiveNumber);
    o_min->needs(o_max, o_step);
    o_max->needs(o_min, o_step);
    o_step->needs(o_min, o_max);
    marginal->add_option("--metric", m_metric, "r_ec, r_ees, r_pes or r_deep")
        ->check(CLI::IsMember({"r_ec", "r_ees", "r_pes", "r_deep"}));
    auto* o_subset = marginal->add_option("--subset", m_subset, "Penetration subset index");
    marginal->add_option("--out", m_out, "Results directory (default: output_dir from the config)");
    auto* m_threads_opt = marginal->add_option("--threads", m_threads, "Worker threads, 0 = all cores");

    // hosting
    auto* hosting = app.add_subcommand("hosting", "Hosting-capacity change at weak buses");
    std::string h_vlsm, h_vlsm_q, h_network, h_out, h_agg = "min";
    mvb2b::HostingSettings hs;
    double dp_kw = 0.0;
    double base_kw = 0.0;
    auto* o_vlsm = hosting->add_option("--vlsm", h_vlsm, "Active-power VLSM CSV (V/W)");
    auto* o_net = hosting->add_option("--network", h_network, "Radial network JSON");
    o_vlsm->excludes(o_net);
    hosting->add_option("--vlsm-q", h_vlsm_q, "Reactive-power VLSM CSV (V/var)")->needs(o_vlsm);
    hosting->add_option("--beta", hs.query.beta, "Bus where the converter injects")->required();
    hosting->add_option("--weak", hs.query.weak_buses, "Weak buses")->required()->delimiter(',');
    hosting->add_option("--dp-kw", dp_kw, "Converter power change at beta, kW")->required()->check(CLI::NonNegativeNumber);
    hosting->add_option("--agg", h_agg, "Aggregation over weak buses")->check(CLI::IsMember({"min", "mean"}));
    auto* o_base = hosting->add_option("--base-kw", base_kw, "Baseline hosting capacity, kW")->check(CLI::PositiveNumber);
    hosting->add_option("--v-alpha", hs.query.v_alpha_v, "Voltage at each weak bus, V")->delimiter(',');
    hosting->add_option("--perturbation-w", hs.perturbation_w, "VLSM finite-difference step, W")
        ->check(CLI::PositiveNumber);
    hosting->add_option("--out", h_out, "Output CSV (default: stdout)");

    // report
    auto* report = app.add_subcommand("report", "Collate summary tables of a results directory");
    std::string r_results, r_out;
    report->add_option("--results", r_results, "Results directory")->required();
    report->add_option("--out", r_out, "Output CSV (default: stdout)");

    // synth-pool
    auto* synth = app.add_subcommand("synth-pool", "Write a synthetic profile pool with a manifest");
    mvb2b::SyntheticPoolSpec sp;
    std::string s_out;
    synth->add_option("--out", s_out, "Pool directory")->required();
    synth->add_option("--residential", sp.residential, "Residential profiles");
    synth->add_option("--commercial", sp.commercial, "Commercial profiles");
    synth->add_option("--pv", sp.pv, "PV profiles");
    synth->add_option("--days", sp.days, "Days per profile")->check(CLI::PositiveNumber);
    synth->add_option("--dt-hours", sp.dt_hours, "Step length, hours")->check(CLI::PositiveNumber);
    synth->add_option("--seed", sp.seed, "Random seed");

    app.footer("Environment: MVB2B_LOG=quiet|warn|info|debug, MVB2B_SIMD=scalar|avx2|neon");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (const char* log = std::getenv("MVB2B_LOG"); log && std::string_view(log) == "debug")
            std::cerr << "[mvb2b] kernels: " << mvb2b::kernels::isa_name(mvb2b::kernels::active().isa) << '\n';

        if (*gen) {
            mvb2b::write_database(mvb2b::load_study_config(gen_config), gen_out);
        } else if (*run) {
            mvb2b::run_study(make_request(run_src, run_out, run_threads, run_threads_opt->count() > 0));
        } else if (*marginal) {
            auto req = make_request(m_src, m_out, m_threads, m_threads_opt->count() > 0);
            req.kind = mvb2b::RunKind::MarginalOnly;
            mvb2b::MarginalSettings ms = req.config.marginal.value_or(mvb2b::MarginalSettings{});
            if (o_min->count()) {
                if (cap_max < cap_min) throw mvb2b::ConfigError("--cap-max must be >= --cap-min");
                ms.capacities_kw = mvb2b::capacity_grid(cap_min, cap_max, cap_step);
            }
            if (!m_metric.empty()) ms.metric = *mvb2b::parse_metric(m_metric);
            if (o_subset->count()) ms.subset = m_subset;
            if (ms.capacities_kw.size() < 2)
                throw mvb2b::ConfigError("marginal sweep needs at least two capacities (--cap-min/--cap-max/--cap-step)");
            for (const auto& s : req.config.sets)
                if (ms.subset >= s.penetrations.size())
                    throw mvb2b::ConfigError("set '" + s.set_id + "' has no subset " + std::to_string(ms.subset));
            req.config.marginal = ms;
            mvb2b::run_study(req);
        } else if (*hosting) {
            if (h_vlsm.empty() == h_network.empty()) throw mvb2b::ConfigError("give exactly one of --vlsm or --network");
            if (!h_vlsm.empty()) hs.vlsm_p = fs::path(h_vlsm);
            if (!h_vlsm_q.empty()) hs.vlsm_q = fs::path(h_vlsm_q);
            if (!h_network.empty()) hs.network = fs::path(h_network);
            hs.query.delta_p_beta_w = dp_kw * 1000.0;
            if (o_base->count()) hs.query.base_capacity_w = base_kw * 1000.0;
            hs.aggregation = h_agg == "mean" ? mvb2b::HostingAggregation::Mean : mvb2b::HostingAggregation::Min;
            const auto result = mvb2b::run_hosting(hs);
            with_output(h_out, [&](std::ostream& os) { mvb2b::write_hosting_csv(os, result, hs.aggregation); });
        } else if (*report) {
            with_output(r_out, [&](std::ostream& os) { mvb2b::write_report(r_results, os); });
        } else if (*synth) {
            mvb2b::write_pool(mvb2b::synthesize_pool(sp), s_out);
        }
    } catch (const std::exception& e) {
        std::cerr << "mvb2b: error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
