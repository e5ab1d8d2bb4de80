#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "error.hpp"
#include "pilot.hpp"
#include "resource.hpp"
#include "selection.hpp"
#include "workload.hpp"

namespace pilotsim {

struct SchedulerParams {
    double interval_s = 1.0;
    SelectionWeights weights;
    ThrottleLimits throttle;
};

// How pilots come into existence during a run.
enum class PilotSizing {
    fixed,         // `pilot_descriptions` are submitted for every workload group
    per_workload,  // each workload group gets its own late-binding derivation (see plan_aimes)
};

// What happens when a pilot can no longer host any pending unit of its site.
enum class PilotRefill {
    none,       // pilots live until their walltime runs out or the workload ends
    replicate,  // release it and queue a pilot of the same shape while work remains
};

struct Overheads {
    double bootstrap_s = 0.0;
    double shutdown_s = 0.0;
};

// A materialized execution strategy.
struct ExecutionPlan {
    BindingMode binding = BindingMode::late_to_pilot;
    std::vector<PilotDescription> pilot_descriptions;
    SchedulerParams scheduler;
    double concurrency_pct = 100.0;
    double resource_pct = 100.0;
    PilotSizing sizing = PilotSizing::fixed;
    PilotRefill refill = PilotRefill::none;
    int pilots_per_site = 1;
    Overheads overheads;
    std::vector<std::string> sites;  // sites the plan uses, in order

    void validate() const {
        require(!pilot_descriptions.empty(), Errc::infeasible_plan, "plan has no pilot descriptions");
        require(concurrency_pct > 0.0 && concurrency_pct <= 100.0, Errc::invalid_argument,
                "concurrency_pct must lie in (0, 100]");
        require(resource_pct > 0.0 && resource_pct <= 100.0, Errc::invalid_argument,
                "resource_pct must lie in (0, 100]");
        require(scheduler.interval_s > 0.0, Errc::invalid_argument, "scheduler interval must be > 0");
        for (const auto& d : pilot_descriptions) d.validate();
    }

    long total_cores() const {
        long c = 0;
        for (const auto& d : pilot_descriptions) c += d.cores;
        return c;
    }
};

inline long ceil_div(long a, long b) { return (a + b - 1) / b; }

inline std::vector<Site> select_sites(std::span<const Site> sites, double resource_pct) {
    require(!sites.empty(), Errc::invalid_argument, "plan needs at least one site");
    require(resource_pct > 0.0 && resource_pct <= 100.0, Errc::invalid_argument,
            "resource_pct must lie in (0, 100]");
    const auto n = static_cast<std::size_t>(std::ceil(static_cast<double>(sites.size()) * resource_pct / 100.0 - 1e-9));
    return {sites.begin(), sites.begin() + static_cast<std::ptrdiff_t>(std::max<std::size_t>(1, n))};
}

struct PilotShape {
    int cores = 1;
    double walltime_s = 0.0;
};

// Sizing rule shared by the late-binding planner, the per-group derivation in the
// simulator and the ideal-TTC model. Pilots jointly hold `concurrency_pct` of the core
// demand, are never narrower than the widest task, and each one is long enough to run
// all `n_tasks` by itself.
inline PilotShape aimes_pilot_shape(long n_tasks, long core_demand, long widest, long n_pilots,
                                    double task_duration_s, const Overheads& overheads,
                                    double concurrency_pct = 100.0) {
    require(n_tasks >= 1 && widest >= 1 && n_pilots >= 1, Errc::invalid_argument,
            "pilot sizing needs tasks, cores and pilots");
    require(task_duration_s > 0.0, Errc::invalid_argument, "task duration must be > 0");
    require(concurrency_pct > 0.0 && concurrency_pct <= 100.0, Errc::invalid_argument,
            "concurrency_pct must lie in (0, 100]");
    long demand = static_cast<long>(std::ceil(static_cast<double>(core_demand) * concurrency_pct / 100.0 - 1e-9));
    demand = std::max(1L, demand);
    const long cores = std::max(ceil_div(demand, n_pilots), widest);
    const long generations = ceil_div(n_tasks, cores / widest);
    return {static_cast<int>(cores),
            static_cast<double>(generations) * task_duration_s + overheads.bootstrap_s + overheads.shutdown_s};
}

struct AimesOptions {
    int pilots_per_site = 1;
    Overheads overheads;
    double concurrency_pct = 100.0;
    double resource_pct = 100.0;
    SchedulerParams scheduler;
};

// Late-binding derivation: one pilot per site (or `pilots_per_site`), each sized so the
// pilots together hold the whole workload at once, and each long enough to run the
// whole workload by itself.
inline ExecutionPlan plan_aimes(const Workload& w, std::span<const Site> sites, double task_duration_s,
                                const AimesOptions& opt = {}) {
    require(!w.empty(), Errc::invalid_argument, "plan needs a nonempty workload");
    require(opt.pilots_per_site >= 1, Errc::invalid_argument, "pilots_per_site must be >= 1");
    const auto used = select_sites(sites, opt.resource_pct);

    long core_demand = 0;
    for (const auto& t : w.tasks()) core_demand += t.cores;
    const long n_pilots = static_cast<long>(opt.pilots_per_site) * static_cast<long>(used.size());
    const auto shape = aimes_pilot_shape(static_cast<long>(w.size()), core_demand, w.max_cores(), n_pilots,
                                         task_duration_s, opt.overheads, opt.concurrency_pct);

    ExecutionPlan plan;
    plan.binding = BindingMode::late_to_pilot;
    plan.sizing = PilotSizing::per_workload;
    plan.scheduler = opt.scheduler;
    plan.concurrency_pct = opt.concurrency_pct;
    plan.resource_pct = opt.resource_pct;
    plan.pilots_per_site = opt.pilots_per_site;
    plan.overheads = opt.overheads;
    for (const auto& s : used) {
        require(shape.cores <= s.total_cores, Errc::capacity_exceeded,
                "pilot of " + std::to_string(shape.cores) + " cores exceeds site '" + s.name + "'");
        plan.sites.push_back(s.name);
        for (int k = 0; k < opt.pilots_per_site; ++k)
            plan.pilot_descriptions.push_back(
                {s.name, shape.cores, shape.walltime_s, opt.overheads.bootstrap_s, opt.overheads.shutdown_s});
    }
    return plan;
}

struct FixedShape {
    int pilots_per_site = 1;
    int cores_per_pilot = 1;
    double walltime_s = 0.0;
    BindingMode binding = BindingMode::early_to_resource;
    Overheads overheads;
    PilotRefill refill = PilotRefill::none;
    SchedulerParams scheduler;
};

// User-configured pilot shape replicated on every site.
inline ExecutionPlan plan_fixed(const Workload& w, std::span<const Site> sites, const FixedShape& shape) {
    require(!sites.empty(), Errc::invalid_argument, "plan needs at least one site");
    require(shape.pilots_per_site >= 1 && shape.cores_per_pilot >= 1 && shape.walltime_s > 0.0,
            Errc::invalid_argument, "pilot count, cores and walltime must be positive");
    double longest = 0.0;
    for (const auto& t : w.tasks()) longest = std::max(longest, t.duration_s);
    require(shape.walltime_s >= longest + shape.overheads.bootstrap_s + shape.overheads.shutdown_s,
            Errc::infeasible_plan,
            "walltime " + std::to_string(shape.walltime_s) + " s cannot fit one task plus overheads");

    ExecutionPlan plan;
    plan.binding = shape.binding;
    plan.scheduler = shape.scheduler;
    plan.pilots_per_site = shape.pilots_per_site;
    plan.overheads = shape.overheads;
    plan.refill = shape.refill;
    for (const auto& s : sites) {
        require(shape.cores_per_pilot <= s.total_cores, Errc::capacity_exceeded,
                "pilot of " + std::to_string(shape.cores_per_pilot) + " cores exceeds site '" + s.name + "'");
        plan.sites.push_back(s.name);
        for (int k = 0; k < shape.pilots_per_site; ++k)
            plan.pilot_descriptions.push_back({s.name, shape.cores_per_pilot, shape.walltime_s,
                                               shape.overheads.bootstrap_s, shape.overheads.shutdown_s});
    }
    return plan;
}

struct PackedUnit {
    int cores = 1;
    double duration_s = 0.0;
};

// First-fit-decreasing by cores into boxes no wider than max_nodes * cores_per_node.
// Each box becomes a pilot as wide as its contents and `slack` times its longest unit.
inline std::vector<PilotDescription> pack_pilots(std::span<const PackedUnit> pending, const std::string& site,
                                                 int max_nodes, int cores_per_node, double slack,
                                                 const Overheads& overheads = {}) {
    require(max_nodes >= 1 && cores_per_node >= 1, Errc::invalid_argument, "box limits must be positive");
    require(slack >= 1.0, Errc::invalid_argument, "slack must be >= 1");
    const int width = max_nodes * cores_per_node;

    std::vector<std::size_t> order(pending.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return pending[a].cores > pending[b].cores; });

    struct Box {
        int used = 0;
        double longest = 0.0;
    };
    std::vector<Box> boxes;
    for (auto i : order) {
        const auto& u = pending[i];
        require(u.cores >= 1 && u.duration_s > 0.0, Errc::invalid_argument, "packed units need cores and duration");
        require(u.cores <= width, Errc::unschedulable,
                "unit of " + std::to_string(u.cores) + " cores exceeds the widest box (" + std::to_string(width) + ")");
        auto it = std::find_if(boxes.begin(), boxes.end(), [&](const Box& b) { return b.used + u.cores <= width; });
        if (it == boxes.end()) it = boxes.insert(boxes.end(), Box{});
        it->used += u.cores;
        it->longest = std::max(it->longest, u.duration_s);
    }
    std::vector<PilotDescription> out;
    out.reserve(boxes.size());
    for (const auto& b : boxes) {
        const double wall = std::max(slack * b.longest, b.longest + overheads.bootstrap_s + overheads.shutdown_s);
        out.push_back({site, b.used, wall, overheads.bootstrap_s, overheads.shutdown_s});
    }
    return out;
}

struct SwiftOptions {
    int max_pilots_per_site = 16;
    int max_nodes = 1;
    int cores_per_node = 16;
    double slack = 1.25;
    Overheads overheads;
    SchedulerParams scheduler;
};

// Swift-style planning: bind units to sites with the early scheduler, box-pack each site's
// share, and when a site needs more boxes than it may queue, keep the widest ones and
// stretch their walltime so they are reused for the remaining generations.
inline ExecutionPlan plan_swift(const Workload& w, std::span<const Site> sites, const SwiftOptions& opt = {}) {
    require(!w.empty(), Errc::invalid_argument, "plan needs a nonempty workload");
    require(opt.max_pilots_per_site >= 1, Errc::invalid_argument, "max_pilots_per_site must be >= 1");
    std::vector<ComputeUnit> units;
    for (std::size_t i = 0; i < w.size(); ++i) units.push_back(make_unit(w.task(i), i));
    std::vector<EarlySite> early;
    for (const auto& s : sites) early.push_back({{s.name, 0, 0.0, 0.0}, 0, {}});
    EarlyParams params{opt.scheduler.weights, {}, 0.0};
    const auto bound = schedule_early(units, early, params);

    ExecutionPlan plan;
    plan.binding = BindingMode::early_to_resource;
    plan.scheduler = opt.scheduler;
    plan.overheads = opt.overheads;
    plan.pilots_per_site = opt.max_pilots_per_site;
    for (const auto& s : sites) {
        plan.sites.push_back(s.name);
        std::vector<PackedUnit> share;
        for (auto ui : bound.per_site.at(s.name)) share.push_back({units[ui].cores, units[ui].duration_s});
        if (share.empty()) continue;
        auto boxes = pack_pilots(share, s.name, opt.max_nodes, opt.cores_per_node, opt.slack, opt.overheads);
        const auto limit = static_cast<std::size_t>(std::min(opt.max_pilots_per_site, s.max_concurrent_pilots));
        if (boxes.size() > limit) {
            const double generations = std::ceil(static_cast<double>(boxes.size()) / static_cast<double>(limit));
            double longest = 0.0;
            for (const auto& u : share) longest = std::max(longest, u.duration_s);
            boxes.resize(limit);
            for (auto& b : boxes)
                b.walltime_s = std::max(opt.slack * generations * longest,
                                        generations * longest + opt.overheads.bootstrap_s + opt.overheads.shutdown_s);
        }
        for (auto& b : boxes) {
            require(b.cores <= s.total_cores, Errc::capacity_exceeded,
                    "pilot of " + std::to_string(b.cores) + " cores exceeds site '" + s.name + "'");
            plan.pilot_descriptions.push_back(b);
        }
    }
    require(!plan.pilot_descriptions.empty(), Errc::infeasible_plan, "no pilots were packed");
    return plan;
}

// ---- JSON ----------------------------------------------------------------------

inline const char* to_string(PilotSizing s) { return s == PilotSizing::fixed ? "fixed" : "per_workload"; }
inline const char* to_string(PilotRefill r) { return r == PilotRefill::none ? "none" : "replicate"; }

inline nlohmann::ordered_json to_json(const PilotDescription& d) {
    return {{"site", d.site},
            {"cores", d.cores},
            {"walltime_s", d.walltime_s},
            {"bootstrap_s", d.bootstrap_s},
            {"shutdown_s", d.shutdown_s}};
}

inline nlohmann::ordered_json to_json(const ExecutionPlan& p) {
    nlohmann::ordered_json j;
    j["binding"] = to_string(p.binding);
    j["sizing"] = to_string(p.sizing);
    j["refill"] = to_string(p.refill);
    j["sites"] = p.sites;
    j["pilots_per_site"] = p.pilots_per_site;
    j["concurrency_pct"] = p.concurrency_pct;
    j["resource_pct"] = p.resource_pct;
    j["scheduler"] = {{"interval_s", p.scheduler.interval_s},
                      {"weights",
                       {{"queued", p.scheduler.weights.queued},
                        {"completion", p.scheduler.weights.completion},
                        {"failure", p.scheduler.weights.failure}}},
                      {"max_queued", p.scheduler.throttle.max_queued},
                      {"max_submit_rate", std::isfinite(p.scheduler.throttle.max_submit_rate)
                                              ? nlohmann::ordered_json(p.scheduler.throttle.max_submit_rate)
                                              : nlohmann::ordered_json(nullptr)}};
    j["pilot_descriptions"] = nlohmann::ordered_json::array();
    for (const auto& d : p.pilot_descriptions) j["pilot_descriptions"].push_back(to_json(d));
    return j;
}

}  // namespace pilotsim
