#include "mvb2b/hosting.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "mvb2b/error.hpp"
#include "mvb2b/profile.hpp"

namespace mvb2b {

std::size_t Vlsm::index_of(const std::string& bus) const {
    const auto it = std::find(bus_ids.begin(), bus_ids.end(), bus);
    if (it == bus_ids.end()) throw ModelError("bus '" + bus + "' is not in the sensitivity matrix");
    return static_cast<std::size_t>(it - bus_ids.begin());
}

void Vlsm::validate() const {
    const std::size_t n = bus_ids.size();
    if (p.size() != n || (q.size() != 0 && q.size() != n))
        throw ModelError("sensitivity matrix dimensions do not match the bus list");
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (!std::isfinite(p(i, j)) || (q.size() && !std::isfinite(q(i, j))))
                throw ModelError("sensitivity matrix has a non-finite entry");
}

RadialNetwork::RadialNetwork(std::vector<Bus> buses, std::vector<Line> lines, std::string source_id,
                             double source_v)
    : buses_(std::move(buses)), lines_(std::move(lines)), source_v_(source_v) {
    if (buses_.empty()) throw ModelError("network has no buses");
    if (!(source_v_ > 0.0)) throw ModelError("source voltage must be positive");
    for (std::size_t i = 0; i < buses_.size(); ++i) {
        if (!(buses_[i].v_nom > 0.0))
            throw ModelError("bus '" + buses_[i].id + "' needs a positive nominal voltage");
        if (!index_.emplace(buses_[i].id, i).second)
            throw ModelError("duplicate bus id '" + buses_[i].id + "'");
    }
    root_ = index_of(source_id);
    if (lines_.size() != buses_.size() - 1)
        throw ModelError("a radial network with " + std::to_string(buses_.size()) + " buses needs " +
                         std::to_string(buses_.size() - 1) + " lines, got " +
                         std::to_string(lines_.size()));

    struct Edge {
        std::size_t to;
        std::size_t line;
    };
    std::vector<std::vector<Edge>> adj(buses_.size());
    for (std::size_t l = 0; l < lines_.size(); ++l) {
        const Line& ln = lines_[l];
        if (!(ln.r_ohm >= 0.0) || !std::isfinite(ln.r_ohm) || !std::isfinite(ln.x_ohm))
            throw ModelError("line " + ln.from + "-" + ln.to + " has invalid impedance");
        const std::size_t a = index_of(ln.from);
        const std::size_t b = index_of(ln.to);
        if (a == b) throw ModelError("line " + ln.from + "-" + ln.to + " is a self loop");
        adj[a].push_back({b, l});
        adj[b].push_back({a, l});
    }

    parent_.assign(buses_.size(), npos);
    r_up_.assign(buses_.size(), 0.0);
    x_up_.assign(buses_.size(), 0.0);
    std::vector<bool> seen(buses_.size(), false);
    order_.push_back(root_);
    seen[root_] = true;
    for (std::size_t head = 0; head < order_.size(); ++head) {
        const std::size_t u = order_[head];
        for (const Edge& e : adj[u]) {
            if (seen[e.to]) {
                if (e.to == parent_[u]) continue;
                throw ModelError("network contains a loop through bus '" + buses_[e.to].id + "'");
            }
            seen[e.to] = true;
            parent_[e.to] = u;
            r_up_[e.to] = lines_[e.line].r_ohm;
            x_up_[e.to] = lines_[e.line].x_ohm;
            order_.push_back(e.to);
        }
    }
    if (order_.size() != buses_.size()) throw ModelError("network is not connected to the source");
}

std::size_t RadialNetwork::index_of(const std::string& bus) const {
    const auto it = index_.find(bus);
    if (it == index_.end()) throw ModelError("unknown bus '" + bus + "'");
    return it->second;
}

namespace {

std::string id_text(const nlohmann::json& v, const std::string& where) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    throw ModelError(where + ": bus id must be a string or integer");
}

double number_at(const nlohmann::json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key) || !obj.at(key).is_number())
        throw ModelError(where + "/" + key + ": expected a number");
    return obj.at(key).get<double>();
}

}  // namespace

RadialNetwork parse_network_json(std::string_view text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("network json: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("buses") || !doc.contains("lines") || !doc.contains("source"))
        throw ModelError("network json needs 'buses', 'lines', and 'source'");
    std::vector<Bus> buses;
    for (std::size_t i = 0; i < doc["buses"].size(); ++i) {
        const auto& b = doc["buses"][i];
        const std::string where = "/buses/" + std::to_string(i);
        if (!b.is_object() || !b.contains("id")) throw ModelError(where + ": expected {id, v_nom}");
        buses.push_back({id_text(b["id"], where + "/id"), number_at(b, "v_nom", where)});
    }
    std::vector<Line> lines;
    for (std::size_t i = 0; i < doc["lines"].size(); ++i) {
        const auto& l = doc["lines"][i];
        const std::string where = "/lines/" + std::to_string(i);
        if (!l.is_object() || !l.contains("from") || !l.contains("to"))
            throw ModelError(where + ": expected {from, to, r_ohm, x_ohm}");
        lines.push_back({id_text(l["from"], where + "/from"), id_text(l["to"], where + "/to"),
                         number_at(l, "r_ohm", where), number_at(l, "x_ohm", where)});
    }
    const auto& src = doc["source"];
    if (!src.is_object() || !src.contains("id")) throw ModelError("/source: expected {id, v}");
    return RadialNetwork(std::move(buses), std::move(lines), id_text(src["id"], "/source/id"),
                         number_at(src, "v", "/source"));
}

RadialNetwork load_network_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open network '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_network_json(ss.str());
}

std::vector<double> voltage_deviations(const RadialNetwork& net, std::span<const double> p_w,
                                       std::span<const double> q_var) {
    const std::size_t n = net.size();
    if (p_w.size() != n || q_var.size() != n)
        throw ValidationError("injection vectors must have one entry per bus");
    // Subtree sums give the flow through the line feeding each bus.
    std::vector<double> p_down(p_w.begin(), p_w.end());
    std::vector<double> q_down(q_var.begin(), q_var.end());
    const auto& order = net.order();
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        const std::size_t up = net.parent(*it);
        if (up == RadialNetwork::npos) continue;
        p_down[up] += p_down[*it];
        q_down[up] += q_down[*it];
    }
    std::vector<double> dev(n, 0.0);
    const double vs = net.source_v();
    for (std::size_t b : order) {
        const std::size_t up = net.parent(b);
        if (up == RadialNetwork::npos) continue;
        dev[b] = dev[up] + (net.r_up(b) * p_down[b] + net.x_up(b) * q_down[b]) / vs;
    }
    return dev;
}

std::vector<double> solve_lindistflow(const RadialNetwork& net, std::span<const double> p_w,
                                      std::span<const double> q_var) {
    std::vector<double> v = voltage_deviations(net, p_w, q_var);
    for (double& x : v) x += net.source_v();
    return v;
}

Vlsm estimate_vlsm(const RadialNetwork& net, double perturbation_w) {
    if (!(perturbation_w > 0.0) || !std::isfinite(perturbation_w))
        throw ValidationError("perturbation must be positive");
    const std::size_t n = net.size();
    Vlsm m;
    for (const auto& b : net.buses()) m.bus_ids.push_back(b.id);
    m.p = SquareMatrix(n);
    m.q = SquareMatrix(n);
    const std::vector<double> zero(n, 0.0);
    const std::vector<double> base = voltage_deviations(net, zero, zero);
    std::vector<double> inj(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        inj[j] = perturbation_w;
        const auto dp = voltage_deviations(net, inj, zero);
        const auto dq = voltage_deviations(net, zero, inj);
        inj[j] = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            m.p(i, j) = (dp[i] - base[i]) / perturbation_w;
            m.q(i, j) = (dq[i] - base[i]) / perturbation_w;
        }
    }
    return m;
}

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) {
        while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
        while (!field.empty() && field.front() == ' ') field.erase(field.begin());
        out.push_back(field);
    }
    return out;
}

std::pair<std::vector<std::string>, SquareMatrix> read_matrix(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open sensitivity matrix '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path.string() + ": empty file", 1);
    auto header = split(line);
    if (header.size() < 2) throw ParseError(path.string() + ": header needs a corner cell and bus ids", 1);
    std::vector<std::string> ids(header.begin() + 1, header.end());
    const std::size_t n = ids.size();
    SquareMatrix m(n);
    std::size_t row = 0;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto f = split(line);
        if (row >= n) throw ParseError(path.string() + ": more rows than buses", line_no);
        if (f.size() != n + 1) throw ParseError(path.string() + ": wrong field count", line_no);
        if (f[0] != ids[row])
            throw ParseError(path.string() + ": row id '" + f[0] + "' does not match column '" + ids[row] + "'",
                             line_no);
        for (std::size_t j = 0; j < n; ++j) {
            try {
                std::size_t used = 0;
                m(row, j) = std::stod(f[j + 1], &used);
                if (used != f[j + 1].size()) throw std::invalid_argument("trailing");
            } catch (const std::exception&) {
                throw ParseError(path.string() + ": malformed entry '" + f[j + 1] + "'", line_no);
            }
        }
        ++row;
    }
    if (row != n) throw ParseError(path.string() + ": matrix is not square");
    return {std::move(ids), std::move(m)};
}

}  // namespace

Vlsm read_vlsm_csv(const std::filesystem::path& p_path, const std::optional<std::filesystem::path>& q_path) {
    auto [ids, p] = read_matrix(p_path);
    Vlsm m{std::move(ids), std::move(p), SquareMatrix()};
    if (q_path) {
        auto [q_ids, q] = read_matrix(*q_path);
        if (q_ids != m.bus_ids) throw ModelError("VLSMP and VLSMQ bus lists differ");
        m.q = std::move(q);
    }
    m.validate();
    return m;
}

void write_vlsm_csv(std::ostream& out, const std::vector<std::string>& bus_ids, const SquareMatrix& m) {
    out << "bus";
    for (const auto& id : bus_ids) out << ',' << id;
    out << '\n';
    for (std::size_t i = 0; i < bus_ids.size(); ++i) {
        out << bus_ids[i];
        for (std::size_t j = 0; j < bus_ids.size(); ++j) out << ',' << format_number(m(i, j));
        out << '\n';
    }
}

double voltage_shift(double v_alpha_v, double p_alpha_beta, double delta_p_beta_w) {
    if (!(delta_p_beta_w >= 0.0)) throw ValidationError("exported power must be nonnegative");
    return v_alpha_v - p_alpha_beta * delta_p_beta_w;
}

double hosting_delta(double p_alpha_beta, double p_alpha_alpha, double delta_p_beta_w) {
    if (p_alpha_alpha == 0.0) throw ModelError("singular sensitivity: p_alpha_alpha is zero");
    if (!(delta_p_beta_w >= 0.0)) throw ValidationError("exported power must be nonnegative");
    return p_alpha_beta * delta_p_beta_w / p_alpha_alpha;
}

double hosting_delta_from_voltage(double v_alpha_v, double v_alpha_prime_v, double p_alpha_alpha) {
    if (p_alpha_alpha == 0.0) throw ModelError("singular sensitivity: p_alpha_alpha is zero");
    return (v_alpha_v - v_alpha_prime_v) / p_alpha_alpha;
}

HostingAggregate aggregate_hosting(std::span<const double> deltas_w, HostingAggregation mode,
                                   std::optional<double> base_capacity_w) {
    if (deltas_w.empty()) throw AggregationError("no weak-bus hosting deltas to aggregate");
    HostingAggregate agg;
    if (mode == HostingAggregation::Min) {
        agg.delta_w = *std::min_element(deltas_w.begin(), deltas_w.end());
    } else {
        double sum = 0.0;
        for (double d : deltas_w) sum += d;
        agg.delta_w = sum / static_cast<double>(deltas_w.size());
    }
    if (base_capacity_w) {
        if (!(*base_capacity_w > 0.0)) throw ValidationError("base hosting capacity must be positive");
        agg.rate = agg.delta_w / *base_capacity_w;
    }
    return agg;
}

HostingResult evaluate_hosting(const Vlsm& vlsm, const HostingQuery& query, HostingAggregation mode) {
    if (query.weak_buses.empty()) throw ValidationError("at least one weak bus is required");
    if (!query.v_alpha_v.empty() && query.v_alpha_v.size() != query.weak_buses.size())
        throw ValidationError("give one baseline voltage per weak bus");
    const std::size_t beta = vlsm.index_of(query.beta);
    HostingResult result;
    std::vector<double> deltas;
    for (std::size_t k = 0; k < query.weak_buses.size(); ++k) {
        const std::size_t alpha = vlsm.index_of(query.weak_buses[k]);
        WeakBusResult r;
        r.bus = query.weak_buses[k];
        r.p_alpha_beta = vlsm.p(alpha, beta);
        r.p_alpha_alpha = vlsm.p(alpha, alpha);
        r.delta_w = hosting_delta(r.p_alpha_beta, r.p_alpha_alpha, query.delta_p_beta_w);
        if (!query.v_alpha_v.empty()) {
            r.v_alpha_v = query.v_alpha_v[k];
            r.v_alpha_prime_v = voltage_shift(*r.v_alpha_v, r.p_alpha_beta, query.delta_p_beta_w);
        }
        deltas.push_back(r.delta_w);
        result.buses.push_back(std::move(r));
    }
    result.aggregate = aggregate_hosting(deltas, mode, query.base_capacity_w);
    return result;
}

void write_hosting_csv(std::ostream& out, const HostingResult& result, HostingAggregation mode) {
    auto opt = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string("NA"); };
    out << "bus,p_alpha_beta,p_alpha_alpha,delta_c_kw,v_alpha_v,v_alpha_prime_v,r_cder\n";
    for (const auto& r : result.buses)
        out << r.bus << ',' << format_number(r.p_alpha_beta) << ',' << format_number(r.p_alpha_alpha)
            << ',' << format_number(r.delta_w / 1000.0) << ',' << opt(r.v_alpha_v) << ','
            << opt(r.v_alpha_prime_v) << ",NA\n";
    out << (mode == HostingAggregation::Min ? "min" : "mean") << ",NA,NA,"
        << format_number(result.aggregate.delta_w / 1000.0) << ",NA,NA," << opt(result.aggregate.rate)
        << '\n';
}

}  // namespace mvb2b
