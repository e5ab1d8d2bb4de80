#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "bridge.hpp"
#include "error.hpp"
#include "pilot.hpp"
#include "resource.hpp"
#include "strategy.hpp"
#include "trace.hpp"
#include "workload.hpp"

namespace pilotsim {

struct SimConfig {
    std::uint64_t seed = 0;
    double dispatch_c0_s = 0.1;
    double dispatch_c1_s = 0.05;
    bool staging = false;
    double middleware_s = 0.0;            // from a group's release to its pilot submissions
    std::optional<BufferOptions> bridge;  // run_staged only: ready tasks go through a submission buffer

    void validate() const {
        require(dispatch_c0_s >= 0.0 && dispatch_c1_s >= 0.0 && middleware_s >= 0.0, Errc::invalid_argument,
                "simulation overheads must be >= 0");
    }

    // Per-unit scheduling cost for a plan spanning `sites` sites.
    double dispatch_overhead_s(std::size_t sites) const {
        return dispatch_c0_s + dispatch_c1_s * static_cast<double>(sites);
    }
};

enum class EventKind {
    pilot_submit,
    pilot_activates,
    pilot_ready,
    pilot_expires,
    pilot_shutdown_done,
    unit_dispatched,
    unit_stage_in_done,
    unit_exec_done,
    unit_stage_out_done,
    scheduler_tick,
    bridge_flush,
};

struct Event {
    double time = 0.0;
    std::uint64_t seq = 0;
    EventKind kind = EventKind::scheduler_tick;
    std::size_t subject = 0;
    std::uint32_t attempt = 0;

    // Pilot ends sort after everything else at the same instant, so a unit finishing exactly
    // at the walltime limit completes first.
    int rank() const { return kind == EventKind::pilot_expires || kind == EventKind::pilot_shutdown_done; }

    bool operator>(const Event& o) const {
        return std::tuple(time, rank(), seq) > std::tuple(o.time, o.rank(), o.seq);
    }
};

// Discrete-event execution of one plan on one workload. Units are released in groups;
// each group gets its own pilots, which drain once every unit of the group is terminal.
//   run():        one group, dependents join it as they become ready
//   run_staged(): a fresh group whenever the previous one finished (stage barrier), or per
//                 buffer flush when the config routes tasks through a submission buffer
class Simulation {
public:
    Simulation(ExecutionPlan plan, const Workload& w, std::span<const Site> sites, SimConfig cfg = {})
        : plan_(std::move(plan)), w_(&w), sites_(sites.begin(), sites.end()), cfg_(std::move(cfg)) {
        cfg_.validate();
        plan_.validate();
        require(!sites_.empty(), Errc::invalid_argument, "simulation needs at least one site");
        for (std::size_t i = 0; i < sites_.size(); ++i) {
            sites_[i].validate();
            require(site_index_.emplace(sites_[i].name, i).second, Errc::invalid_argument,
                    "duplicate site '" + sites_[i].name + "'");
        }
        if (plan_.sites.empty())
            for (const auto& d : plan_.pilot_descriptions)
                if (std::find(plan_.sites.begin(), plan_.sites.end(), d.site) == plan_.sites.end())
                    plan_.sites.push_back(d.site);
        for (const auto& name : plan_.sites)
            require(site_index_.contains(name), Errc::infeasible_plan, "plan uses unknown site '" + name + "'");
        for (const auto& d : plan_.pilot_descriptions) check_fits(d);

        dispatch_s_ = cfg_.dispatch_overhead_s(plan_.sites.size());
        io_.resize(w.size());
        for (std::size_t i = 0; i < w.size(); ++i) {
            for (const auto& f : w.task(i).inputs) {
                ++io_[i].in_files;
                io_[i].in_bytes += f.size_bytes;
            }
            for (const auto& f : w.task(i).outputs) {
                ++io_[i].out_files;
                io_[i].out_bytes += f.size_bytes;
            }
        }
        if (plan_.sizing == PilotSizing::per_workload && !w.empty()) {
            std::vector<std::size_t> all(w.size());
            std::iota(all.begin(), all.end(), std::size_t{0});
            for (const auto& d : derive_pilots(all)) check_fits(d);
        }
    }

    Trace run() { return execute(false); }
    Trace run_staged() { return execute(true); }

private:
    struct Io {
        std::size_t in_files = 0;
        std::uint64_t in_bytes = 0;
        std::size_t out_files = 0;
        std::uint64_t out_bytes = 0;
    };

    struct Group {
        std::vector<PilotDescription> templates;
        std::vector<std::size_t> pilots;
        std::vector<std::size_t> queue;                    // late binding
        std::vector<std::size_t> unbound;                  // early binding, not yet bound to a site
        std::vector<std::vector<std::size_t>> site_queue;  // early binding, per site
        std::size_t open = 0;
        bool closed = false;
    };

    struct SiteStats {
        int assigned_total = 0;
        int queued = 0;
        int completed = 0;
        ThrottleState throttle;
    };

    struct Backlogged {
        PilotDescription desc;
        std::size_t group = 0;
    };

    void check_fits(const PilotDescription& d) const {
        auto it = site_index_.find(d.site);
        require(it != site_index_.end(), Errc::infeasible_plan, "pilot for unknown site '" + d.site + "'");
        require(d.cores <= sites_[it->second].total_cores, Errc::infeasible_plan,
                "pilot of " + std::to_string(d.cores) + " cores exceeds site '" + d.site + "'");
    }

    double stage_in_s(std::size_t u, std::size_t site) const {
        if (!cfg_.staging || io_[u].in_files == 0) return 0.0;
        const auto& s = sites_[site];
        return static_cast<double>(io_[u].in_files) * s.staging_latency_s +
               static_cast<double>(io_[u].in_bytes) / s.bandwidth_bytes_per_s;
    }

    double stage_out_s(std::size_t u, std::size_t site) const {
        if (!cfg_.staging || io_[u].out_files == 0) return 0.0;
        const auto& s = sites_[site];
        return static_cast<double>(io_[u].out_files) * s.staging_latency_s +
               static_cast<double>(io_[u].out_bytes) / s.bandwidth_bytes_per_s;
    }

    // Pilots for a group under per-workload sizing. Each generation is long enough for the
    // pilot to launch a full load of units one after another and then stage and run the
    // slowest of them on the slowest plan site.
    std::vector<PilotDescription> derive_pilots(std::span<const std::size_t> members) const {
        long demand = 0;
        long widest = 1;
        double longest = 0.0;
        for (auto i : members) {
            const auto& t = w_->task(i);
            demand += t.cores;
            widest = std::max<long>(widest, t.cores);
            double staging = 0.0;
            for (const auto& name : plan_.sites) {
                const auto s = site_index_.at(name);
                staging = std::max(staging, stage_in_s(i, s) + stage_out_s(i, s));
            }
            longest = std::max(longest, staging + t.duration_s);
        }
        const long n_pilots = static_cast<long>(plan_.pilots_per_site) * static_cast<long>(plan_.sites.size());
        const auto n = static_cast<long>(members.size());
        const long slots = aimes_pilot_shape(n, demand, widest, n_pilots, 1.0, plan_.overheads,
                                             plan_.concurrency_pct).cores / widest;
        const auto shape = aimes_pilot_shape(n, demand, widest, n_pilots,
                                             longest + dispatch_s_ * static_cast<double>(slots), plan_.overheads,
                                             plan_.concurrency_pct);
        std::vector<PilotDescription> out;
        for (const auto& name : plan_.sites)
            for (int k = 0; k < plan_.pilots_per_site; ++k)
                out.push_back({name, shape.cores, shape.walltime_s, plan_.overheads.bootstrap_s,
                               plan_.overheads.shutdown_s});
        return out;
    }

    void reset() {
        const auto n = w_->size();
        units_.clear();
        for (std::size_t i = 0; i < n; ++i) units_.push_back(make_unit(w_->task(i), i));
        attempt_.assign(n, 0);
        missing_.resize(n);
        for (std::size_t i = 0; i < n; ++i) missing_[i] = w_->producers(i).size();
        released_.assign(n, 0);
        group_of_.assign(n, 0);
        groups_.clear();
        pilots_.clear();
        pilot_site_.clear();
        launcher_free_.clear();
        loads_.assign(sites_.size(), {});
        streams_.clear();
        for (std::size_t s = 0; s < sites_.size(); ++s) streams_.emplace_back(cfg_.seed, s);
        stats_.assign(sites_.size(), {});
        backlog_.assign(sites_.size(), {});
        waiting_.assign(sites_.size(), {});
        events_ = {};
        seq_ = 0;
        pending_real_ = 0;
        tick_armed_ = false;
        now_ = 0.0;
        last_record_ = 0.0;
        trace_ = {};
        bridge_.reset();
        flush_due_.reset();
    }

    Trace execute(bool staged) {
        reset();
        staged_ = staged;
        std::vector<std::size_t> ready;
        for (std::size_t i = 0; i < units_.size(); ++i)
            if (missing_[i] == 0) ready.push_back(i);
        if (staged_ && cfg_.bridge) {
            bridge_.emplace(*cfg_.bridge);
            submit_to_bridge(ready);
        } else if (staged_) {
            start_group(ready, ready);
        } else {
            std::vector<std::size_t> all(units_.size());
            std::iota(all.begin(), all.end(), std::size_t{0});
            start_group(ready, all);
        }
        schedule_pass();

        while (!events_.empty()) {
            now_ = events_.top().time;
            while (!events_.empty() && events_.top().time == now_) {
                const auto e = events_.top();
                events_.pop();
                if (e.kind != EventKind::scheduler_tick) --pending_real_;
                handle(e);
            }
            schedule_pass();
        }
        finish();
        return std::move(trace_);
    }

    void push(double t, EventKind kind, std::size_t subject, std::uint32_t attempt = 0) {
        events_.push({t, seq_++, kind, subject, attempt});
        if (kind != EventKind::scheduler_tick) ++pending_real_;
    }

    void record(EntityKind kind, const std::string& id, const std::string& state, std::string ref = {}) {
        trace_.add(kind, id, state, now_, std::move(ref));
        last_record_ = now_;
    }

    void record_unit(std::size_t u, std::string ref = {}) {
        record(EntityKind::unit, units_[u].task, to_string(units_[u].state), std::move(ref));
    }

    // ---- groups --------------------------------------------------------------

    void start_group(const std::vector<std::size_t>& members, const std::vector<std::size_t>& sizing) {
        if (members.empty()) return;
        const auto g = groups_.size();
        groups_.emplace_back();
        groups_[g].site_queue.resize(sites_.size());
        groups_[g].templates =
            plan_.sizing == PilotSizing::fixed ? plan_.pilot_descriptions : derive_pilots(sizing);
        add_to_group(g, members);
        if (cfg_.middleware_s > 0.0)
            push(now_ + cfg_.middleware_s, EventKind::pilot_submit, g);
        else
            submit_group(g);
    }

    void add_to_group(std::size_t g, const std::vector<std::size_t>& members) {
        for (auto u : members) {
            released_[u] = 1;
            group_of_[u] = g;
            units_[u].stamps[static_cast<std::size_t>(UnitState::created)] = now_;
            record_unit(u, "g" + std::to_string(g));
            ++groups_[g].open;
            if (plan_.binding == BindingMode::late_to_pilot)
                groups_[g].queue.push_back(u);
            else
                groups_[g].unbound.push_back(u);
        }
    }

    void submit_group(std::size_t g) {
        if (groups_[g].closed) return;
        const auto templates = groups_[g].templates;
        for (const auto& d : templates) request_pilot(d, g);
    }

    void close_group(std::size_t g) {
        groups_[g].closed = true;
        const auto pilots = groups_[g].pilots;
        for (auto p : pilots) drain(p);
        if (staged_ && !bridge_) {
            std::vector<std::size_t> next;
            for (std::size_t i = 0; i < units_.size(); ++i)
                if (!released_[i] && missing_[i] == 0) next.push_back(i);
            start_group(next, next);
        }
    }

    // ---- submission buffer ---------------------------------------------------

    void submit_to_bridge(const std::vector<std::size_t>& ready) {
        if (ready.empty()) return;
        for (auto u : ready) {
            const auto ack = bridge_->submit(TaskSubmission::from_task(w_->task(u)).to_json(), now_);
            require(ack.accepted, Errc::invalid_state, "submission of '" + units_[u].task + "' rejected: " + ack.reason);
            record(EntityKind::middleware, "bridge", "submit", units_[u].task);
        }
        arm_flush();
    }

    void arm_flush() {
        const auto& opt = bridge_->options();
        const double at = opt.policy == FlushPolicy::idle_seconds
                              ? std::max(now_, bridge_->last_submit_time() + opt.idle_threshold_s)
                              : now_ + plan_.scheduler.interval_s;
        if (flush_due_ && *flush_due_ >= at) return;
        flush_due_ = at;
        push(at, EventKind::bridge_flush, 0);
    }

    void on_flush(const Event& e) {
        if (!flush_due_ || e.time != *flush_due_) return;
        flush_due_.reset();
        auto bag = bridge_->idle_flush(now_);
        if (!bag) {
            if (bridge_->pending_size() > 0) arm_flush();
            return;
        }
        std::vector<std::size_t> members;
        for (const auto& t : bag->tasks()) members.push_back(w_->index_of(t.id));
        record(EntityKind::middleware, "bridge", "flush", std::to_string(members.size()) + " tasks");
        start_group(members, members);
    }

    // ---- pilots --------------------------------------------------------------

    void request_pilot(const PilotDescription& d, std::size_t g) {
        const auto s = site_index_.at(d.site);
        if (loads_[s].live_pilots() < sites_[s].max_concurrent_pilots)
            launch(d, g, s);
        else
            backlog_[s].push_back({d, g});
    }

    void launch(const PilotDescription& d, std::size_t g, std::size_t s) {
        const auto idx = pilots_.size();
        auto sub = submit_pilot(d, PilotId{static_cast<std::uint32_t>(idx)}, sites_[s], loads_[s], streams_[s], now_);
        sub.pilot.group = static_cast<int>(g);
        pilots_.push_back(std::move(sub.pilot));
        pilot_site_.push_back(s);
        launcher_free_.push_back(0.0);
        groups_[g].pilots.push_back(idx);
        record(EntityKind::pilot, pilots_[idx].id.str(), "queued", d.site);
        push(sub.activation_time, EventKind::pilot_activates, idx);
    }

    void on_activate(std::size_t p) {
        auto& pl = pilots_[p];
        if (pl.state != PilotState::queued) return;
        const auto s = pilot_site_[p];
        if (sites_[s].total_cores - loads_[s].cores_held < pl.description.cores) {
            waiting_[s].push_back(p);
            return;
        }
        activate_pilot(pl, loads_[s], now_);
        record(EntityKind::pilot, pl.id.str(), "active");
        push(now_ + pl.description.walltime_s, EventKind::pilot_expires, p);
        if (pl.description.bootstrap_s > 0.0)
            push(now_ + pl.description.bootstrap_s, EventKind::pilot_ready, p);
        else
            record(EntityKind::pilot, pl.id.str(), "agent_ready");
    }

    // Shuts a pilot down: queued pilots are canceled, active ones leave after their shutdown.
    void drain(std::size_t p) {
        auto& pl = pilots_[p];
        if (pl.state == PilotState::queued) {
            cancel_pilot(pl, loads_[pilot_site_[p]], units_, plan_.binding, now_);
            record(EntityKind::pilot, pl.id.str(), "canceled");
            on_site_freed(pilot_site_[p]);
            return;
        }
        if (pl.state != PilotState::active || pl.draining) return;
        pl.draining = true;
        push(now_ + pl.description.shutdown_s, EventKind::pilot_shutdown_done, p);
    }

    void end_pilot(std::size_t p) {
        auto& pl = pilots_[p];
        if (pl.state != PilotState::active) return;
        const auto s = pilot_site_[p];
        const auto running = pl.running;
        transition(pl, PilotState::done, now_);
        --loads_[s].pilots_active;
        loads_[s].cores_held -= pl.description.cores;
        pl.running.clear();
        pl.free_cores = pl.description.cores;
        record(EntityKind::pilot, pl.id.str(), "done");
        for (auto u : running) {
            ++attempt_[u];
            if (plan_.binding == BindingMode::late_to_pilot) {
                requeue(units_[u], now_);
                record_unit(u, "requeued");
                groups_[group_of_[u]].queue.push_back(u);
            } else {
                --stats_[s].queued;
                --stats_[s].throttle.queued_count;
                fail_unit(u, "pilot ended");
            }
        }
        on_site_freed(s);
    }

    void on_site_freed(std::size_t s) {
        while (!waiting_[s].empty()) {
            const auto p = waiting_[s].front();
            if (pilots_[p].state != PilotState::queued) {
                waiting_[s].pop_front();
                continue;
            }
            if (sites_[s].total_cores - loads_[s].cores_held < pilots_[p].description.cores) break;
            waiting_[s].pop_front();
            on_activate(p);
        }
        while (!backlog_[s].empty() && loads_[s].live_pilots() < sites_[s].max_concurrent_pilots) {
            const auto b = backlog_[s].front();
            backlog_[s].pop_front();
            if (!groups_[b.group].closed) launch(b.desc, b.group, s);
        }
    }

    // ---- units ---------------------------------------------------------------

    void assign(std::size_t u, std::size_t p, double dispatch_end) {
        auto& pl = pilots_[p];
        advance(units_[u], UnitState::scheduled, now_, pl.id);
        record_unit(u, pl.id.str());
        pl.free_cores -= units_[u].cores;
        pl.running.push_back(u);
        launcher_free_[p] = std::max(launcher_free_[p], dispatch_end);
        push(dispatch_end, EventKind::unit_dispatched, u, attempt_[u]);
    }

    std::size_t site_of_unit(std::size_t u) const { return pilot_site_[units_[u].pilot->value]; }

    void on_dispatched(std::size_t u) {
        if (cfg_.staging && io_[u].in_files > 0) {
            advance(units_[u], UnitState::staging_input, now_);
            record_unit(u);
            push(now_ + stage_in_s(u, site_of_unit(u)), EventKind::unit_stage_in_done, u, attempt_[u]);
        } else {
            start_exec(u);
        }
    }

    void start_exec(std::size_t u) {
        advance(units_[u], UnitState::executing, now_);
        record_unit(u);
        push(now_ + units_[u].duration_s, EventKind::unit_exec_done, u, attempt_[u]);
    }

    void on_exec_done(std::size_t u) {
        if (cfg_.staging && io_[u].out_files > 0) {
            advance(units_[u], UnitState::staging_output, now_);
            record_unit(u);
            push(now_ + stage_out_s(u, site_of_unit(u)), EventKind::unit_stage_out_done, u, attempt_[u]);
        } else {
            complete(u);
        }
    }

    void complete(std::size_t u) {
        advance(units_[u], UnitState::done, now_);
        record_unit(u);
        const auto p = units_[u].pilot->value;
        auto& pl = pilots_[p];
        pl.free_cores += units_[u].cores;
        std::erase(pl.running, u);
        const auto s = pilot_site_[p];
        ++stats_[s].completed;
        if (plan_.binding == BindingMode::early_to_resource) {
            --stats_[s].queued;
            --stats_[s].throttle.queued_count;
        }

        const auto g = group_of_[u];
        std::vector<std::size_t> ready;
        for (auto c : w_->consumers(u))
            if (--missing_[c] == 0) ready.push_back(c);
        if (!ready.empty()) {
            if (!staged_)
                add_to_group(g, ready);
            else if (bridge_)
                submit_to_bridge(ready);
        }
        if (--groups_[g].open == 0) close_group(g);
    }

    void fail_unit(std::size_t u, const std::string& reason) {
        advance(units_[u], UnitState::failed, now_);
        record_unit(u, reason);
        const auto g = group_of_[u];
        if (--groups_[g].open == 0) close_group(g);
    }

    bool current(const Event& e, UnitState expected) const {
        return e.attempt == attempt_[e.subject] && units_[e.subject].state == expected;
    }

    void handle(const Event& e) {
        switch (e.kind) {
            case EventKind::pilot_submit: submit_group(e.subject); break;
            case EventKind::pilot_activates: on_activate(e.subject); break;
            case EventKind::pilot_ready:
                if (pilots_[e.subject].state == PilotState::active)
                    record(EntityKind::pilot, pilots_[e.subject].id.str(), "agent_ready");
                break;
            case EventKind::pilot_expires:
            case EventKind::pilot_shutdown_done: end_pilot(e.subject); break;
            case EventKind::unit_dispatched:
                if (current(e, UnitState::scheduled)) on_dispatched(e.subject);
                break;
            case EventKind::unit_stage_in_done:
                if (current(e, UnitState::staging_input)) start_exec(e.subject);
                break;
            case EventKind::unit_exec_done:
                if (current(e, UnitState::executing)) on_exec_done(e.subject);
                break;
            case EventKind::unit_stage_out_done:
                if (current(e, UnitState::staging_output)) complete(e.subject);
                break;
            case EventKind::scheduler_tick: tick_armed_ = false; break;
            case EventKind::bridge_flush: on_flush(e); break;
        }
    }

    // ---- scheduling ----------------------------------------------------------

    void schedule_pass() {
        for (std::size_t g = 0; g < groups_.size(); ++g) {
            if (groups_[g].closed) continue;
            if (plan_.binding == BindingMode::late_to_pilot) {
                dispatch(g, std::nullopt);
            } else {
                bind_units(g);
                for (const auto& name : plan_.sites) {
                    const auto s = site_index_.at(name);
                    refill(g, s);
                    dispatch(g, s);
                }
            }
        }
        arm_tick();
    }

    std::vector<std::size_t>& queue_of(std::size_t g, std::optional<std::size_t> site) {
        return site ? groups_[g].site_queue[*site] : groups_[g].queue;
    }

    void dispatch(std::size_t g, std::optional<std::size_t> site) {
        if (queue_of(g, site).empty()) return;
        std::vector<const Pilot*> candidates;
        for (auto p : groups_[g].pilots)
            if (pilots_[p].live() && (!site || pilot_site_[p] == *site)) candidates.push_back(&pilots_[p]);
        if (candidates.empty()) return;

        auto& q = queue_of(g, site);
        std::vector<const ComputeUnit*> units;
        units.reserve(q.size());
        for (auto u : q) units.push_back(&units_[u]);
        LateCosts costs{dispatch_s_,
                        [this](const ComputeUnit& u, const Pilot& p) {
                            const auto s = pilot_site_[p.id.value];
                            return stage_in_s(u.task_index, s) + stage_out_s(u.task_index, s);
                        },
                        [this](const Pilot& p) { return launcher_free_[p.id.value]; }};
        const auto r = schedule_late(units, candidates, now_, costs);
        if (r.assignments.empty() && r.unschedulable.empty()) return;

        std::vector<char> drop(q.size(), 0);
        std::vector<std::size_t> unschedulable;
        for (auto k : r.unschedulable) {
            drop[k] = 1;
            unschedulable.push_back(q[k]);
        }
        for (const auto& a : r.assignments) {
            drop[a.unit] = 1;
            assign(q[a.unit], a.pilot.value, a.dispatch_end);
        }
        std::vector<std::size_t> kept;
        for (std::size_t k = 0; k < q.size(); ++k)
            if (!drop[k]) kept.push_back(q[k]);
        q = std::move(kept);

        int widest = 0;
        for (const auto* p : candidates)
            if (!p->draining) widest = std::max(widest, p->description.cores);
        for (auto u : unschedulable) {
            if (site) {
                --stats_[*site].queued;
                --stats_[*site].throttle.queued_count;
            }
            fail_unit(u, "unschedulable: needs " + std::to_string(units_[u].cores) + " cores, widest pilot has " +
                             std::to_string(widest));
        }
    }

    void bind_units(std::size_t g) {
        if (groups_[g].unbound.empty()) return;
        std::vector<EarlySite> states;
        std::vector<std::size_t> index;
        for (const auto& name : plan_.sites) {
            const auto s = site_index_.at(name);
            auto& st = stats_[s];
            st.throttle.expire(now_, plan_.scheduler.throttle.window_s);
            const double rate = now_ > 0.0 ? static_cast<double>(st.completed) / now_ : 0.0;
            states.push_back({{name, st.queued, rate, 0.0}, st.assigned_total, st.throttle});
            index.push_back(s);
        }
        const auto r = schedule_early(groups_[g].unbound.size(), states,
                                      {plan_.scheduler.weights, plan_.scheduler.throttle, now_});
        auto& grp = groups_[g];
        for (std::size_t k = 0; k < states.size(); ++k) {
            const auto s = index[k];
            for (auto pos : r.per_site.at(states[k].score.site)) {
                grp.site_queue[s].push_back(grp.unbound[pos]);
                ++stats_[s].assigned_total;
                ++stats_[s].queued;
                ++stats_[s].throttle.queued_count;
                stats_[s].throttle.record_submit(now_);
            }
        }
        std::vector<std::size_t> deferred;
        for (auto pos : r.deferred) deferred.push_back(grp.unbound[pos]);
        grp.unbound = std::move(deferred);
    }

    // Replaces pilots that can no longer host any pending unit of their site.
    void refill(std::size_t g, std::size_t s) {
        if (plan_.refill != PilotRefill::replicate) return;
        const auto& q = groups_[g].site_queue[s];
        if (q.empty()) return;
        double min_need = std::numeric_limits<double>::infinity();
        long demand = 0;
        for (auto u : q) {
            min_need = std::min(min_need, dispatch_s_ + stage_in_s(u, s) + units_[u].duration_s + stage_out_s(u, s));
            demand += units_[u].cores;
        }
        long capacity = 0;
        long serving = 0;
        const auto pilots = groups_[g].pilots;
        for (auto p : pilots) {
            auto& pl = pilots_[p];
            if (pilot_site_[p] != s || !pl.live() || pl.draining) continue;
            if (pl.state == PilotState::queued) {
                capacity += pl.description.cores;
                ++serving;
                continue;
            }
            if (pl.usable_end() - std::max(now_, pl.ready_time()) < min_need - 1e-9) {
                if (pl.running.empty()) drain(p);
                continue;
            }
            capacity += pl.free_cores;
            ++serving;
        }
        // Replacements keep the site at its planned pilot count; they never grow it.
        std::optional<PilotDescription> shape;
        long planned = 0;
        for (const auto& d : groups_[g].templates)
            if (d.site == sites_[s].name) {
                if (!shape) shape = d;
                ++planned;
            }
        if (!shape) return;
        while (demand > capacity && serving < planned &&
               loads_[s].live_pilots() < sites_[s].max_concurrent_pilots) {
            launch(*shape, g, s);
            capacity += shape->cores;
            ++serving;
        }
    }

    // Ticks only matter while the throttles hold units back.
    void arm_tick() {
        if (tick_armed_) return;
        bool held = false;
        for (const auto& grp : groups_)
            if (!grp.closed && !grp.unbound.empty()) held = true;
        if (!held) return;
        bool rate_only = false;
        for (const auto& name : plan_.sites)
            if (stats_[site_index_.at(name)].throttle.queued_count < plan_.scheduler.throttle.max_queued)
                rate_only = true;
        if (pending_real_ == 0 && !rate_only) return;
        tick_armed_ = true;
        push(now_ + plan_.scheduler.interval_s, EventKind::scheduler_tick, 0);
    }

    void finish() {
        now_ = last_record_;
        for (std::size_t u = 0; u < units_.size(); ++u) {
            if (units_[u].terminal()) continue;
            if (!released_[u]) {
                units_[u].stamps[static_cast<std::size_t>(UnitState::created)] = now_;
                record_unit(u);
            }
            advance(units_[u], UnitState::failed, now_);
            record_unit(u, "blocked");
        }
    }

    ExecutionPlan plan_;
    const Workload* w_;
    std::vector<Site> sites_;
    SimConfig cfg_;
    std::map<std::string, std::size_t> site_index_;
    double dispatch_s_ = 0.0;
    std::vector<Io> io_;

    bool staged_ = false;
    std::vector<ComputeUnit> units_;
    std::vector<std::uint32_t> attempt_;
    std::vector<std::size_t> missing_;
    std::vector<char> released_;
    std::vector<std::size_t> group_of_;
    std::vector<Group> groups_;
    std::vector<Pilot> pilots_;
    std::vector<std::size_t> pilot_site_;
    std::vector<double> launcher_free_;
    std::vector<SiteLoad> loads_;
    std::vector<RngStream> streams_;
    std::vector<SiteStats> stats_;
    std::vector<std::deque<Backlogged>> backlog_;
    std::vector<std::deque<std::size_t>> waiting_;
    std::priority_queue<Event, std::vector<Event>, std::greater<>> events_;
    std::uint64_t seq_ = 0;
    std::size_t pending_real_ = 0;
    bool tick_armed_ = false;
    double now_ = 0.0;
    double last_record_ = 0.0;
    Trace trace_;
    std::optional<SubmissionBuffer> bridge_;
    std::optional<double> flush_due_;
};

inline Trace run(const ExecutionPlan& plan, const Workload& w, std::span<const Site> sites,
                 const SimConfig& cfg = {}) {
    return Simulation(plan, w, sites, cfg).run();
}

inline Trace run_staged(const ExecutionPlan& plan, const Workload& w, std::span<const Site> sites,
                        const SimConfig& cfg = {}) {
    return Simulation(plan, w, sites, cfg).run_staged();
}

}  // namespace pilotsim
