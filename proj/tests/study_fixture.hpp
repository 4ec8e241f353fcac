#pragma once

#include <string>

// Small synthetic study used by the orchestration and CLI tests.
inline std::string small_study_json(int reps = 2, const std::string& extra = "") {
    return R"({
  "master_seed": 17,
  "pool": {"synthetic": {"residential": 4, "commercial": 3, "pv": 2, "days": 14}},
  "sets": [
    {"id": "A", "system1": {"commercial_fraction": 0, "node_count": 30},
     "system2": {"commercial_fraction": 1, "node_count": 2},
     "penetrations": [1.0], "profiles_per_subset": )" +
           std::to_string(reps) + R"(}
  ],
  "converter_capacities_kw": [250],
  "grid": {"back_feed_limit_kw": 0},
  "storage": {"absorb_mode": "above_limit"})" +
           extra + "\n}\n";
}
