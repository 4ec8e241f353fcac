#include "mvb2b/engine.hpp"

#include <cmath>
#include <ostream>

#include "mvb2b/error.hpp"
#include "mvb2b/kernels.hpp"

namespace mvb2b {

ConverterSpec::ConverterSpec(double capacity) : capacity_kw(capacity) {
    if (!(capacity >= 0.0) || !std::isfinite(capacity))
        throw ValidationError("converter capacity must be finite and nonnegative");
}

GridLimits::GridLimits(double limit) : back_feed_limit_kw(limit) {
    if (!(limit >= 0.0)) throw ValidationError("back-feed limit must be nonnegative");
}

Profile net_load(const Profile& load, const Profile& der) {
    require_aligned(load, der, "net_load");
    std::vector<double> out(load.size());
    kernels::active().subtract(load.values(), der.values(), out);
    return Profile(std::move(out), load.dt_hours(), load.label());
}

TransferResult apply_converter(const Profile& net1, const Profile& net2, const ConverterSpec& conv) {
    require_aligned(net1, net2, "apply_converter");
    const std::size_t n = net1.size();
    std::vector<double> out1(n), out2(n), transfer(n);
    kernels::active().exchange(net1.values(), net2.values(), conv.capacity_kw, out1, out2, transfer);
    return {Profile(std::move(out1), net1.dt_hours(), net1.label()),
            Profile(std::move(out2), net2.dt_hours(), net2.label()), std::move(transfer)};
}

double curtailed_energy(const Profile& net, const GridLimits& limits) {
    return kernels::active().excess_export(net.values(), limits.back_feed_limit_kw) * net.dt_hours();
}

void write_transfer_csv(std::ostream& out, const TransferResult& r) {
    out << "t,transfer_kw\n";
    for (std::size_t i = 0; i < r.transfer_kw.size(); ++i)
        out << i << ',' << format_number(r.transfer_kw[i]) << '\n';
}

}  // namespace mvb2b
