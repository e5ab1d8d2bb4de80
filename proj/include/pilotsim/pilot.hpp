#pragma once

#include <algorithm>
#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "resource.hpp"
#include "selection.hpp"
#include "workload.hpp"

namespace pilotsim {

struct PilotId {
    std::uint32_t value = 0;

    auto operator<=>(const PilotId&) const = default;
    std::string str() const { return "p" + std::to_string(value); }
};

struct PilotDescription {
    std::string site;
    int cores = 1;
    double walltime_s = 0.0;
    double bootstrap_s = 0.0;
    double shutdown_s = 0.0;

    bool operator==(const PilotDescription&) const = default;

    double usable_s() const { return walltime_s - bootstrap_s - shutdown_s; }

    void validate() const {
        require(!site.empty(), Errc::invalid_argument, "pilot description needs a site");
        require(cores >= 1, Errc::invalid_argument, "pilot needs at least one core");
        require(bootstrap_s >= 0.0 && shutdown_s >= 0.0, Errc::invalid_argument,
                "pilot bootstrap/shutdown must be >= 0");
        require(walltime_s > bootstrap_s + shutdown_s, Errc::invalid_argument,
                "pilot walltime must exceed bootstrap + shutdown");
    }
};

enum class PilotState { described, queued, active, done, canceled, failed };

inline const char* to_string(PilotState s) {
    switch (s) {
        case PilotState::described: return "described";
        case PilotState::queued: return "queued";
        case PilotState::active: return "active";
        case PilotState::done: return "done";
        case PilotState::canceled: return "canceled";
        case PilotState::failed: return "failed";
    }
    return "?";
}

inline bool is_terminal(PilotState s) {
    return s == PilotState::done || s == PilotState::canceled || s == PilotState::failed;
}

struct Pilot {
    PilotId id;
    PilotDescription description;
    PilotState state = PilotState::described;
    std::optional<double> submit_time;
    std::optional<double> activate_time;
    std::optional<double> end_time;
    int free_cores = 0;
    std::vector<std::size_t> running;  // indices of units holding cores on this pilot
    bool draining = false;             // shutting down; accepts no further units
    int group = 0;                     // workload group that submitted it

    bool live() const { return state == PilotState::queued || state == PilotState::active; }

    bool usable(double now) const {
        return state == PilotState::active && !draining && now >= ready_time();
    }

    double ready_time() const { return activate_time.value_or(0.0) + description.bootstrap_s; }

    // Last instant at which a unit may still be running. Shutdown follows the last unit and
    // is cut short by the walltime limit, so it does not shrink this window.
    double usable_end() const { return activate_time.value_or(0.0) + description.walltime_s; }
};

// Allowed edges: described→queued→active→{done|canceled}, queued→canceled, any live→failed.
inline void transition(Pilot& p, PilotState next, double now) {
    const auto cur = p.state;
    const bool ok = (cur == PilotState::described && next == PilotState::queued) ||
                    (cur == PilotState::queued && (next == PilotState::active || next == PilotState::canceled)) ||
                    (cur == PilotState::active && (next == PilotState::done || next == PilotState::canceled)) ||
                    (!is_terminal(cur) && next == PilotState::failed);
    require(ok, Errc::invalid_state,
            "pilot " + p.id.str() + ": cannot go from " + to_string(cur) + " to " + to_string(next));
    p.state = next;
    switch (next) {
        case PilotState::queued: p.submit_time = now; break;
        case PilotState::active:
            require(now >= p.submit_time.value_or(now), Errc::invalid_state,
                    "pilot " + p.id.str() + ": activation before submission");
            p.activate_time = now;
            p.free_cores = p.description.cores;
            break;
        case PilotState::done:
        case PilotState::canceled:
        case PilotState::failed: p.end_time = now; break;
        case PilotState::described: break;
    }
}

struct PilotSubmission {
    Pilot pilot;
    double activation_time = 0.0;
};

// Queues a pilot on `site`, drawing its wait from the site's stream.
inline PilotSubmission submit_pilot(const PilotDescription& desc, PilotId id, const Site& site, SiteLoad& load,
                                    RngStream& stream, double now) {
    desc.validate();
    require(desc.site == site.name, Errc::invalid_argument,
            "pilot for site '" + desc.site + "' submitted to '" + site.name + "'");
    require(desc.cores <= site.total_cores, Errc::capacity_exceeded,
            "pilot of " + std::to_string(desc.cores) + " cores exceeds site '" + site.name + "'");
    require(load.live_pilots() < site.max_concurrent_pilots, Errc::rejected_submission,
            "site '" + site.name + "' already holds " + std::to_string(load.live_pilots()) + " pilots (max " +
                std::to_string(site.max_concurrent_pilots) + ")");
    Pilot p;
    p.id = id;
    p.description = desc;
    transition(p, PilotState::queued, now);
    const double wait = sample_queue_wait(site, desc.cores, stream);
    ++load.pilots_queued;
    return {std::move(p), now + wait};
}

inline void activate_pilot(Pilot& p, SiteLoad& load, double now) {
    transition(p, PilotState::active, now);
    --load.pilots_queued;
    ++load.pilots_active;
    load.cores_held += p.description.cores;
    load.observed_wait_sum_s += now - *p.submit_time;
    ++load.observed_waits;
}

// ---- compute units -----------------------------------------------------------

enum class UnitState { created, scheduled, staging_input, executing, staging_output, done, failed };

inline constexpr std::size_t unit_state_count = 7;

inline const char* to_string(UnitState s) {
    switch (s) {
        case UnitState::created: return "new";
        case UnitState::scheduled: return "scheduled";
        case UnitState::staging_input: return "staging_input";
        case UnitState::executing: return "executing";
        case UnitState::staging_output: return "staging_output";
        case UnitState::done: return "done";
        case UnitState::failed: return "failed";
    }
    return "?";
}

struct ComputeUnit {
    TaskId task;
    std::size_t task_index = 0;
    int cores = 1;
    double duration_s = 0.0;
    bool has_inputs = false;
    bool has_outputs = false;
    UnitState state = UnitState::created;
    std::optional<PilotId> pilot;
    std::array<std::optional<double>, unit_state_count> stamps{};

    std::optional<double> stamp(UnitState s) const { return stamps[static_cast<std::size_t>(s)]; }
    bool terminal() const { return state == UnitState::done || state == UnitState::failed; }
};

inline ComputeUnit make_unit(const Task& t, std::size_t index) {
    ComputeUnit u;
    u.task = t.id;
    u.task_index = index;
    u.cores = t.cores;
    u.duration_s = t.duration_s;
    u.has_inputs = !t.inputs.empty();
    u.has_outputs = !t.outputs.empty();
    return u;
}

// Moves a unit forward along its state path. Only the staging states may be skipped,
// `failed` is reachable from anywhere, and entering `scheduled` binds the pilot.
inline void advance(ComputeUnit& u, UnitState next, double now, std::optional<PilotId> pilot = std::nullopt) {
    require(!u.terminal(), Errc::invalid_state, "unit '" + u.task + "' is already terminal");
    const auto cur = static_cast<int>(u.state);
    const auto nxt = static_cast<int>(next);
    if (next != UnitState::failed) {
        require(nxt > cur, Errc::invalid_state,
                "unit '" + u.task + "': cannot go from " + to_string(u.state) + " to " + to_string(next));
        for (int skipped = cur + 1; skipped < nxt; ++skipped) {
            const auto s = static_cast<UnitState>(skipped);
            require(s == UnitState::staging_input || s == UnitState::staging_output, Errc::invalid_state,
                    "unit '" + u.task + "': cannot skip " + std::string(to_string(s)));
        }
    }
    const auto prev = u.stamps[static_cast<std::size_t>(cur)];
    require(!prev || now >= *prev, Errc::invalid_state, "unit '" + u.task + "': time went backwards");
    if (next == UnitState::scheduled) {
        require(pilot.has_value(), Errc::invalid_state, "unit '" + u.task + "': scheduling needs a pilot");
        u.pilot = pilot;
    }
    u.state = next;
    u.stamps[static_cast<std::size_t>(nxt)] = now;
}

// Returns a unit to the queue after its pilot went away.
inline void requeue(ComputeUnit& u, double now) {
    u.state = UnitState::created;
    u.pilot.reset();
    u.stamps = {};
    u.stamps[static_cast<std::size_t>(UnitState::created)] = now;
}

enum class BindingMode { late_to_pilot, early_to_resource };

inline const char* to_string(BindingMode m) {
    return m == BindingMode::late_to_pilot ? "late_to_pilot" : "early_to_resource";
}

struct CancelOutcome {
    Pilot pilot;
    std::vector<std::size_t> requeued;
    std::vector<std::size_t> failed;
};

// Cancels a queued or active pilot. Units running on it go back to the queue under late
// binding and fail under early binding. `units` is the array `p.running` indexes into.
inline CancelOutcome cancel_pilot(Pilot& p, SiteLoad& load, std::span<ComputeUnit> units, BindingMode mode,
                                  double now) {
    require(p.live(), Errc::invalid_state,
            "pilot " + p.id.str() + " is " + to_string(p.state) + " and cannot be canceled");
    CancelOutcome out;
    const bool was_active = p.state == PilotState::active;
    transition(p, PilotState::canceled, now);
    if (was_active) {
        --load.pilots_active;
        load.cores_held -= p.description.cores;
    } else {
        --load.pilots_queued;
    }
    for (auto idx : p.running) {
        auto& u = units[idx];
        if (mode == BindingMode::late_to_pilot) {
            requeue(u, now);
            out.requeued.push_back(idx);
        } else {
            advance(u, UnitState::failed, now);
            out.failed.push_back(idx);
        }
    }
    p.running.clear();
    p.free_cores = p.description.cores;
    out.pilot = p;
    return out;
}

// ---- late binding --------------------------------------------------------------

struct Assignment {
    std::size_t unit = 0;  // position in the queue passed to schedule_late
    PilotId pilot;
    double dispatch_end = 0.0;
};

// Every assignment pays `dispatch_overhead_s` before the unit reaches its pilot. A pilot
// launches its units one at a time, so dispatches to the same pilot queue up behind each
// other starting at `launcher_free_at` (default: now).
struct LateCosts {
    double dispatch_overhead_s = 0.0;
    std::function<double(const ComputeUnit&, const Pilot&)> staging_s;  // stage-in + stage-out
    std::function<double(const Pilot&)> launcher_free_at;
};

struct LateResult {
    std::vector<Assignment> assignments;
    std::vector<std::size_t> unschedulable;
};

// Greedy backfill over the queue in order. A unit goes to a usable pilot with enough free
// cores and enough walltime left to dispatch, stage and run it; otherwise it stays queued
// without blocking later units. Among eligible pilots the earliest-activated wins, then the
// one with most free cores, then the lowest id. Units wider than every live pilot are
// reported as unschedulable.
inline LateResult schedule_late(std::span<const ComputeUnit* const> queue, std::span<const Pilot* const> pilots,
                                double now, const LateCosts& costs = {}) {
    LateResult out;

    int widest_live = 0;
    bool any_live = false;
    for (const Pilot* pp : pilots) {
        const auto& p = *pp;
        if (!p.live() || p.draining) continue;
        any_live = true;
        widest_live = std::max(widest_live, p.description.cores);
    }

    std::vector<std::size_t> eligible;
    std::vector<int> free;
    std::vector<double> launcher;
    for (std::size_t i = 0; i < pilots.size(); ++i) {
        if (!pilots[i]->usable(now) || pilots[i]->free_cores <= 0) continue;
        eligible.push_back(i);
        free.push_back(pilots[i]->free_cores);
        launcher.push_back(costs.launcher_free_at ? std::max(now, costs.launcher_free_at(*pilots[i])) : now);
    }

    int total_free = 0;
    for (int f : free) total_free += f;

    for (std::size_t qi = 0; qi < queue.size(); ++qi) {
        const auto& u = *queue[qi];
        if (any_live && u.cores > widest_live) {
            out.unschedulable.push_back(qi);
            continue;
        }
        if (total_free <= 0) {
            if (!any_live) break;
            continue;
        }
        if (u.cores > total_free) continue;
        std::optional<std::size_t> best;
        for (std::size_t k = 0; k < eligible.size(); ++k) {
            if (free[k] < u.cores) continue;
            const auto& p = *pilots[eligible[k]];
            const double staging = costs.staging_s ? costs.staging_s(u, p) : 0.0;
            if (launcher[k] + costs.dispatch_overhead_s + staging + u.duration_s > p.usable_end() + 1e-9) continue;
            if (!best) {
                best = k;
                continue;
            }
            const auto& b = *pilots[eligible[*best]];
            const auto key = [&](const Pilot& x, int f) {
                return std::tuple(x.activate_time.value_or(0.0), -f, x.id.value);
            };
            if (key(p, free[k]) < key(b, free[*best])) best = k;
        }
        if (!best) continue;
        free[*best] -= u.cores;
        total_free -= u.cores;
        launcher[*best] += costs.dispatch_overhead_s;
        out.assignments.push_back({qi, pilots[eligible[*best]]->id, launcher[*best]});
    }
    return out;
}

inline LateResult schedule_late(std::span<const ComputeUnit> queue, std::span<const Pilot> pilots, double now,
                                const LateCosts& costs = {}) {
    std::vector<const ComputeUnit*> q;
    q.reserve(queue.size());
    for (const auto& u : queue) q.push_back(&u);
    std::vector<const Pilot*> ps;
    ps.reserve(pilots.size());
    for (const auto& p : pilots) ps.push_back(&p);
    return schedule_late(std::span<const ComputeUnit* const>(q), std::span<const Pilot* const>(ps), now, costs);
}

// ---- early binding -------------------------------------------------------------

struct EarlySite {
    SiteScoreState score;
    int assigned_total = 0;  // units ever bound to the site
    ThrottleState throttle;
};

struct EarlyParams {
    SelectionWeights weights;
    ThrottleLimits limits;
    double now = 0.0;
};

struct EarlyResult {
    std::map<std::string, std::vector<std::size_t>> per_site;  // unit positions, in binding order
    std::vector<std::size_t> deferred;                         // held back by the throttles
};

// Binds units to sites before any pilot is active. Sites that have never received a unit
// are served first, so every site gets work; after that the three-factor score decides.
inline EarlyResult schedule_early(std::size_t unit_count, std::span<const EarlySite> sites,
                                  const EarlyParams& params) {
    require(!sites.empty(), Errc::invalid_argument, "early binding needs at least one site");
    EarlyResult out;
    std::vector<EarlySite> state(sites.begin(), sites.end());
    for (auto& s : state) {
        s.throttle.expire(params.now, params.limits.window_s);
        out.per_site[s.score.site];
    }

    for (std::size_t ui = 0; ui < unit_count; ++ui) {
        std::vector<std::size_t> open;
        for (std::size_t si = 0; si < state.size(); ++si)
            if (throttle_gate(state[si].throttle, params.limits, params.now)) open.push_back(si);
        if (open.empty()) {
            for (std::size_t rest = ui; rest < unit_count; ++rest) out.deferred.push_back(rest);
            break;
        }
        std::optional<std::size_t> pick;
        for (auto si : open)
            if (state[si].assigned_total == 0 && (!pick || state[si].score.site < state[*pick].score.site))
                pick = si;
        if (!pick) {
            std::vector<SiteScoreState> scores;
            for (auto si : open) scores.push_back(state[si].score);
            const auto name = site_select(scores, params.weights);
            for (auto si : open)
                if (state[si].score.site == name) pick = si;
        }
        auto& s = state[*pick];
        ++s.score.queued_count;
        ++s.throttle.queued_count;
        ++s.assigned_total;
        s.throttle.record_submit(params.now);
        out.per_site[s.score.site].push_back(ui);
    }
    return out;
}

inline EarlyResult schedule_early(std::span<const ComputeUnit> units, std::span<const EarlySite> sites,
                                  const EarlyParams& params) {
    return schedule_early(units.size(), sites, params);
}

}  // namespace pilotsim
