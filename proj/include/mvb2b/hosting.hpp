#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace mvb2b {

// Dense row-major n x n matrix.
class SquareMatrix {
public:
    SquareMatrix() = default;
    explicit SquareMatrix(std::size_t n) : n_(n), data_(n * n, 0.0) {}

    std::size_t size() const noexcept { return n_; }
    double& operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }

private:
    std::size_t n_ = 0;
    std::vector<double> data_;
};

// Voltage-load sensitivity matrices. p(i, j) is the voltage change at bus i
// per watt of net injection at bus j (V/W); q likewise per VAr.
struct Vlsm {
    std::vector<std::string> bus_ids;
    SquareMatrix p;
    SquareMatrix q;

    std::size_t index_of(const std::string& bus) const;  // throws ModelError
    void validate() const;
};

struct Bus {
    std::string id;
    double v_nom = 0.0;
};

struct Line {
    std::string from;
    std::string to;
    double r_ohm = 0.0;
    double x_ohm = 0.0;
};

// Radial feeder rooted at the source bus. Construction checks that the lines
// form a tree spanning every bus and orients them away from the source.
class RadialNetwork {
public:
    RadialNetwork(std::vector<Bus> buses, std::vector<Line> lines, std::string source_id,
                  double source_v);

    std::size_t size() const noexcept { return buses_.size(); }
    const std::vector<Bus>& buses() const noexcept { return buses_; }
    const std::vector<Line>& lines() const noexcept { return lines_; }
    double source_v() const noexcept { return source_v_; }
    std::size_t source() const noexcept { return root_; }
    std::size_t index_of(const std::string& bus) const;  // throws ModelError

    // parent bus and the impedance of the line feeding each bus; the source
    // has no parent (npos).
    std::size_t parent(std::size_t bus) const { return parent_[bus]; }
    double r_up(std::size_t bus) const { return r_up_[bus]; }
    double x_up(std::size_t bus) const { return x_up_[bus]; }
    // Buses ordered so every parent precedes its children.
    const std::vector<std::size_t>& order() const noexcept { return order_; }

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

private:
    std::vector<Bus> buses_;
    std::vector<Line> lines_;
    double source_v_;
    std::size_t root_ = 0;
    std::unordered_map<std::string, std::size_t> index_;
    std::vector<std::size_t> parent_;
    std::vector<double> r_up_, x_up_;
    std::vector<std::size_t> order_;
};

// Network JSON: {buses:[{id,v_nom}], lines:[{from,to,r_ohm,x_ohm}], source:{id,v}}.
// Bus ids may be strings or integers.
RadialNetwork load_network_json(const std::filesystem::path& path);
RadialNetwork parse_network_json(std::string_view text);

// Linearized loss-free radial power flow. Injections are generation-positive,
// W and VAr, indexed like network.buses(). Returns V_j - V_source.
std::vector<double> voltage_deviations(const RadialNetwork& net, std::span<const double> p_w,
                                       std::span<const double> q_var);

// Bus voltages: V_source + voltage_deviations(...).
std::vector<double> solve_lindistflow(const RadialNetwork& net, std::span<const double> p_w,
                                      std::span<const double> q_var);

// Column j of each matrix is the response to a +perturbation_w injection
// (W, and VAr for q) at bus j, divided by the perturbation.
Vlsm estimate_vlsm(const RadialNetwork& net, double perturbation_w);

// VLSM CSV: header `bus,<id>,...`, then one `<id>,<values>` row per bus.
Vlsm read_vlsm_csv(const std::filesystem::path& p_path,
                   const std::optional<std::filesystem::path>& q_path = std::nullopt);
void write_vlsm_csv(std::ostream& out, const std::vector<std::string>& bus_ids, const SquareMatrix& m);

// Weak-bus voltage after the converter exports delta_p_beta_w from bus beta:
// V' = V - p_alpha_beta * delta_p_beta_w.
double voltage_shift(double v_alpha_v, double p_alpha_beta, double delta_p_beta_w);

// Extra DER the weak bus can host: p_alpha_beta * delta_p_beta_w / p_alpha_alpha (W).
double hosting_delta(double p_alpha_beta, double p_alpha_alpha, double delta_p_beta_w);

// Same quantity from the voltage headroom the export frees:
// (V - V') / p_alpha_alpha.
double hosting_delta_from_voltage(double v_alpha_v, double v_alpha_prime_v, double p_alpha_alpha);

enum class HostingAggregation { Min, Mean };

struct HostingAggregate {
    double delta_w = 0.0;
    std::optional<double> rate;  // delta / base capacity, when a base is given
};

HostingAggregate aggregate_hosting(std::span<const double> deltas_w, HostingAggregation mode,
                                   std::optional<double> base_capacity_w = std::nullopt);

struct HostingQuery {
    std::string beta;
    std::vector<std::string> weak_buses;
    double delta_p_beta_w = 0.0;
    std::vector<double> v_alpha_v;  // empty, or one per weak bus
    std::optional<double> base_capacity_w;
};

struct WeakBusResult {
    std::string bus;
    double p_alpha_beta = 0.0;
    double p_alpha_alpha = 0.0;
    double delta_w = 0.0;
    std::optional<double> v_alpha_v;
    std::optional<double> v_alpha_prime_v;
};

struct HostingResult {
    std::vector<WeakBusResult> buses;
    HostingAggregate aggregate;
};

HostingResult evaluate_hosting(const Vlsm& vlsm, const HostingQuery& query, HostingAggregation mode);

// Columns `bus,p_alpha_beta,p_alpha_alpha,delta_c_kw,v_alpha_v,v_alpha_prime_v,r_cder`.
// One row per weak bus, then a row whose bus is `min` or `mean` carrying the
// aggregate. Absent values are written as NA.
void write_hosting_csv(std::ostream& out, const HostingResult& result, HostingAggregation mode);

}  // namespace mvb2b
