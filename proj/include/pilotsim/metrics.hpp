#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "error.hpp"
#include "strategy.hpp"
#include "trace.hpp"
#include "workload.hpp"

namespace pilotsim {

inline constexpr std::array<std::string_view, 8> component_names{
    "scheduling", "bootstrap", "stage_in", "exec", "stage_out", "shutdown", "pilot_queue", "middleware"};

// Components that make up T_w; everything else is T_x.
inline bool is_wait_component(std::string_view name) { return name == "pilot_queue" || name == "middleware"; }

struct TtcBreakdown {
    double ttc_s = 0.0;
    double tx_s = 0.0;
    double tw_s = 0.0;
    std::array<double, component_names.size()> components{};

    double& component(std::string_view name) {
        for (std::size_t i = 0; i < component_names.size(); ++i)
            if (component_names[i] == name) return components[i];
        fail(Errc::invalid_argument, "unknown component '" + std::string(name) + "'");
    }
    double component(std::string_view name) const { return const_cast<TtcBreakdown*>(this)->component(name); }
};

// Column order shared by the CSV export and aggregate().
inline std::vector<std::string> breakdown_fields() {
    std::vector<std::string> out{"ttc_s", "tx_s", "tw_s"};
    for (auto n : component_names) out.emplace_back(n);
    return out;
}

inline std::vector<double> breakdown_values(const TtcBreakdown& b) {
    std::vector<double> out{b.ttc_s, b.tx_s, b.tw_s};
    out.insert(out.end(), b.components.begin(), b.components.end());
    return out;
}

namespace detail {

struct UnitTimes {
    std::optional<double> created, scheduled, stage_in, exec, stage_out, done, failed;
    std::string pilot;
};

struct PilotTimes {
    std::optional<double> queued, active, ready, end;
};

struct Done {
    double time;
    std::string unit;
};

// Latest completion at or before `t`.
inline const Done* latest_done(const std::vector<Done>& sorted, double t) {
    auto it = std::upper_bound(sorted.begin(), sorted.end(), t + 1e-9,
                               [](double x, const Done& d) { return x < d.time; });
    if (it == sorted.begin()) return nullptr;
    return &*std::prev(it);
}

}  // namespace detail

// Walks the critical path back from the last completion. Each unit contributes its own
// states; the gap before it is charged to whatever enabled it: an earlier unit on the same
// pilot, its own release, or its pilot becoming ready (bootstrap and queue wait).
inline TtcBreakdown ttc(const Trace& trace) {
    std::map<std::string, detail::UnitTimes> units;
    std::map<std::string, detail::PilotTimes> pilots;
    double origin = std::numeric_limits<double>::infinity();
    double end = -std::numeric_limits<double>::infinity();

    for (const auto& r : trace.records) {
        origin = std::min(origin, r.time_s);
        if (r.entity_kind == EntityKind::unit) {
            auto& u = units[r.entity_id];
            if (r.state == "new") {
                u = {};
                u.created = r.time_s;
            } else if (r.state == "scheduled") {
                u.scheduled = r.time_s;
                u.pilot = r.ref;
            } else if (r.state == "staging_input") {
                u.stage_in = r.time_s;
            } else if (r.state == "executing") {
                u.exec = r.time_s;
            } else if (r.state == "staging_output") {
                u.stage_out = r.time_s;
            } else if (r.state == "done") {
                u.done = r.time_s;
                end = std::max(end, r.time_s);
            } else if (r.state == "failed") {
                u.failed = r.time_s;
                end = std::max(end, r.time_s);
            }
        } else if (r.entity_kind == EntityKind::pilot) {
            auto& p = pilots[r.entity_id];
            if (r.state == "queued") p.queued = r.time_s;
            else if (r.state == "active") p.active = r.time_s;
            else if (r.state == "agent_ready") p.ready = r.time_s;
            else if (r.state == "done" || r.state == "canceled" || r.state == "failed") {
                p.end = r.time_s;
                end = std::max(end, r.time_s);
            }
        }
    }
    require(!units.empty(), Errc::invalid_argument, "trace holds no units");
    for (const auto& [id, u] : units)
        require(u.done || u.failed, Errc::incomplete_trace, "unit '" + id + "' never reached a terminal state");

    std::vector<detail::Done> all_done;
    std::map<std::string, std::vector<detail::Done>> done_on;
    for (const auto& [id, u] : units) {
        if (!u.done) continue;
        all_done.push_back({*u.done, id});
        done_on[u.pilot].push_back({*u.done, id});
    }
    require(!all_done.empty(), Errc::incomplete_trace, "no unit completed");
    auto by_time = [](const detail::Done& a, const detail::Done& b) { return a.time < b.time; };
    std::stable_sort(all_done.begin(), all_done.end(), by_time);
    for (auto& [_, v] : done_on) std::stable_sort(v.begin(), v.end(), by_time);

    TtcBreakdown b;
    b.ttc_s = end - origin;
    const auto& last = all_done.back();
    b.component("shutdown") = end - last.time;

    std::string cur = last.unit;
    for (std::size_t guard = 0; guard <= units.size(); ++guard) {
        const auto& u = units.at(cur);
        require(u.scheduled && u.exec && u.created, Errc::incomplete_trace, "unit '" + cur + "' lacks state records");
        const double exec_end = u.stage_out.value_or(*u.done);
        b.component("stage_out") += *u.done - exec_end;
        b.component("exec") += exec_end - *u.exec;
        const double dispatch_end = u.stage_in.value_or(*u.exec);
        b.component("stage_in") += *u.exec - dispatch_end;
        b.component("scheduling") += dispatch_end - *u.scheduled;

        auto pit = pilots.find(u.pilot);
        require(pit != pilots.end() && pit->second.active && pit->second.queued, Errc::incomplete_trace,
                "unit '" + cur + "' ran on unknown pilot '" + u.pilot + "'");
        const auto& p = pit->second;
        const double ready = p.ready.value_or(*p.active);
        const auto* prior = detail::latest_done(done_on[u.pilot], *u.scheduled);
        const double release = *u.created;
        const double enabled = std::max({ready, release, prior ? prior->time : -std::numeric_limits<double>::infinity()});
        b.component("middleware") += *u.scheduled - enabled;

        double back_to = 0.0;
        if (prior && prior->time >= enabled) {
            cur = prior->unit;
            continue;
        }
        if (release >= enabled) {
            back_to = release;
        } else {
            b.component("bootstrap") += ready - *p.active;
            b.component("pilot_queue") += *p.active - *p.queued;
            back_to = *p.queued;
        }
        const auto* before = detail::latest_done(all_done, back_to);
        if (before && before->unit != cur) {
            b.component("middleware") += back_to - before->time;
            cur = before->unit;
            continue;
        }
        b.component("middleware") += back_to - origin;
        break;
    }

    for (std::size_t i = 0; i < component_names.size(); ++i) {
        b.components[i] = std::max(0.0, b.components[i]);
        (is_wait_component(component_names[i]) ? b.tw_s : b.tx_s) += b.components[i];
    }
    return b;
}

namespace detail {

inline long concurrent_slots(const ExecutionPlan& plan, std::span<const Task* const> tasks) {
    long widest = 1;
    long demand = 0;
    for (const auto* t : tasks) {
        widest = std::max<long>(widest, t->cores);
        demand += t->cores;
    }
    long slots = 0;
    if (plan.sizing == PilotSizing::per_workload) {
        const long sites = plan.sites.empty() ? 1 : static_cast<long>(plan.sites.size());
        const long n_pilots = static_cast<long>(plan.pilots_per_site) * sites;
        const auto shape = aimes_pilot_shape(static_cast<long>(tasks.size()), demand, widest, n_pilots, 1.0,
                                             plan.overheads, plan.concurrency_pct);
        slots = n_pilots * (shape.cores / widest);
    } else {
        for (const auto& d : plan.pilot_descriptions) slots += d.cores / widest;
    }
    require(slots >= 1, Errc::infeasible_plan,
            "no pilot can hold a task of " + std::to_string(widest) + " cores");
    return slots;
}

inline double bag_ideal(const ExecutionPlan& plan, std::span<const Task* const> tasks) {
    if (tasks.empty()) return 0.0;
    double longest = 0.0;
    for (const auto* t : tasks) longest = std::max(longest, t->duration_s);
    const long slots = concurrent_slots(plan, tasks);
    return static_cast<double>(ceil_div(static_cast<long>(tasks.size()), slots)) * longest;
}

}  // namespace detail

// TTC under maximal concurrency: generations of the longest task over all concurrent
// slots, summed over stages for staged workloads.
inline double ttc_ideal(const ExecutionPlan& plan, const Workload& w) {
    plan.validate();
    require(!w.empty(), Errc::invalid_argument, "ideal TTC needs a nonempty workload");
    double total = 0.0;
    for (int s = 0; s < std::max(1, w.stages()); ++s) {
        std::vector<const Task*> members;
        for (const auto& t : w.tasks())
            if (t.stage == s) members.push_back(&t);
        total += detail::bag_ideal(plan, members);
    }
    return total;
}

inline double p_es(double ttc_ideal_s, double ttc_s) {
    require(ttc_ideal_s > 0.0 && ttc_s > 0.0, Errc::invalid_argument, "P_ES needs positive TTC values");
    return 100.0 * ttc_ideal_s / ttc_s;
}

// True when a run beat its ideal, which the ideal model says cannot happen.
inline bool p_es_exceeds_ideal(double ttc_ideal_s, double ttc_s) { return ttc_s < ttc_ideal_s - 1e-9; }

struct FieldStats {
    double mean = 0.0;
    double stddev = 0.0;  // sample standard deviation; 0 for a single run
    double min = 0.0;
    double max = 0.0;
};

inline FieldStats describe(std::span<const double> xs) {
    require(!xs.empty(), Errc::invalid_argument, "statistics need at least one value");
    FieldStats s;
    s.min = *std::min_element(xs.begin(), xs.end());
    s.max = *std::max_element(xs.begin(), xs.end());
    double sum = 0.0;
    for (double x : xs) sum += x;
    s.mean = sum / static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - s.mean) * (x - s.mean);
        s.stddev = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    }
    return s;
}

struct Summary {
    std::size_t runs = 0;
    std::vector<std::pair<std::string, FieldStats>> fields;  // breakdown_fields() order

    const FieldStats& at(std::string_view name) const {
        for (const auto& [n, s] : fields)
            if (n == name) return s;
        fail(Errc::invalid_argument, "unknown field '" + std::string(name) + "'");
    }
};

inline Summary aggregate(std::span<const TtcBreakdown> runs) {
    require(!runs.empty(), Errc::invalid_argument, "aggregate needs at least one run");
    Summary out;
    out.runs = runs.size();
    const auto names = breakdown_fields();
    std::vector<std::vector<double>> columns(names.size());
    for (const auto& r : runs) {
        const auto v = breakdown_values(r);
        for (std::size_t i = 0; i < v.size(); ++i) columns[i].push_back(v[i]);
    }
    for (std::size_t i = 0; i < names.size(); ++i) out.fields.emplace_back(names[i], describe(columns[i]));
    return out;
}

inline nlohmann::ordered_json to_json(const FieldStats& s) {
    return {{"mean", s.mean}, {"stddev", s.stddev}, {"min", s.min}, {"max", s.max}};
}

inline nlohmann::ordered_json to_json(const Summary& s) {
    nlohmann::ordered_json j;
    j["runs"] = s.runs;
    for (const auto& [name, st] : s.fields) j[name] = to_json(st);
    return j;
}

inline nlohmann::ordered_json to_json(const TtcBreakdown& b) {
    nlohmann::ordered_json j;
    const auto names = breakdown_fields();
    const auto values = breakdown_values(b);
    for (std::size_t i = 0; i < names.size(); ++i) j[names[i]] = values[i];
    return j;
}

}  // namespace pilotsim
