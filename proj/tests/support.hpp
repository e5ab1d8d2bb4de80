#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "pilotsim/pilotsim.hpp"

namespace testing_support {

inline pilotsim::Site site(std::string name, int cores, double wait_s = 0.0, int max_pilots = 50) {
    pilotsim::Site s;
    s.name = std::move(name);
    s.total_cores = cores;
    s.max_concurrent_pilots = max_pilots;
    s.queue = pilotsim::QueueModel::constant(wait_s);
    return s;
}

inline pilotsim::SimConfig zero_overheads(std::uint64_t seed = 1) {
    pilotsim::SimConfig c;
    c.seed = seed;
    c.dispatch_c0_s = 0.0;
    c.dispatch_c1_s = 0.0;
    return c;
}

inline std::vector<pilotsim::TraceRecord> records_of(const pilotsim::Trace& t, pilotsim::EntityKind kind,
                                                     const std::string& state) {
    std::vector<pilotsim::TraceRecord> out;
    for (const auto& r : t.records)
        if (r.entity_kind == kind && r.state == state) out.push_back(r);
    return out;
}

inline double last_done(const pilotsim::Trace& t) {
    double end = 0.0;
    for (const auto& r : records_of(t, pilotsim::EntityKind::unit, "done")) end = std::max(end, r.time_s);
    return end;
}

inline std::string config_path(const std::string& name) { return std::string(PILOTSIM_CONFIG_DIR) + "/" + name; }

}  // namespace testing_support
