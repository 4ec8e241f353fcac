#pragma once

#include <iosfwd>
#include <limits>
#include <vector>

#include "mvb2b/profile.hpp"

namespace mvb2b {

// Converter real-power capacity, kW.
struct ConverterSpec {
    double capacity_kw = 0.0;
    explicit ConverterSpec(double capacity = 0.0);
};

// Reverse-power export allowed at the substation, kW. Infinity means unlimited.
struct GridLimits {
    double back_feed_limit_kw = 0.0;
    explicit GridLimits(double limit = 0.0);
    static GridLimits unlimited() { return GridLimits(std::numeric_limits<double>::infinity()); }
};

struct TransferResult {
    Profile net1_updated;
    Profile net2_updated;
    std::vector<double> transfer_kw;  // > 0: system 1 -> system 2
};

// load - der, element-wise. Negative means surplus generation.
Profile net_load(const Profile& load, const Profile& der);

// Moves surplus from the exporting system to the importing one at every step
// where the two net loads have strictly opposite signs, limited by what the
// importer needs and by the converter capacity. Lossless.
TransferResult apply_converter(const Profile& net1, const Profile& net2, const ConverterSpec& conv);

// Energy (kWh) curtailed because export exceeds the back-feed limit:
// sum of (|net| - limit) * dt over steps where net < 0 and |net| > limit.
double curtailed_energy(const Profile& net, const GridLimits& limits);

// `t,transfer_kw` audit CSV; t is the step index.
void write_transfer_csv(std::ostream& out, const TransferResult& r);

}  // namespace mvb2b
