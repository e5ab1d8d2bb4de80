#include <gtest/gtest.h>

#include "support.hpp"

using namespace pilotsim;

namespace {

Pilot active_pilot(std::uint32_t id, int cores, double activated, double walltime = 10000.0) {
    Pilot p;
    p.id = {id};
    p.description = {"s", cores, walltime, 0.0, 0.0};
    transition(p, PilotState::queued, 0.0);
    transition(p, PilotState::active, activated);
    return p;
}

ComputeUnit unit(std::string id, int cores, double duration = 10.0) {
    return make_unit(Task{std::move(id), cores, duration, {}, {}, 0}, 0);
}

}  // namespace

TEST(Pilot, Lifecycle) {
    Pilot p;
    p.description = {"s", 4, 100.0, 10.0, 5.0};
    EXPECT_DOUBLE_EQ(p.description.usable_s(), 85.0);
    EXPECT_THROW(transition(p, PilotState::active, 0.0), Error);
    transition(p, PilotState::queued, 1.0);
    transition(p, PilotState::active, 3.0);
    EXPECT_EQ(p.free_cores, 4);
    EXPECT_DOUBLE_EQ(p.ready_time(), 13.0);
    EXPECT_FALSE(p.usable(12.0));
    EXPECT_TRUE(p.usable(13.0));
    EXPECT_DOUBLE_EQ(p.usable_end(), 103.0);
    transition(p, PilotState::done, 50.0);
    EXPECT_THROW(transition(p, PilotState::failed, 51.0), Error);
    EXPECT_DOUBLE_EQ(*p.end_time, 50.0);
}

TEST(Pilot, DescriptionValidation) {
    EXPECT_THROW((PilotDescription{"", 1, 10.0, 0.0, 0.0}).validate(), Error);
    EXPECT_THROW((PilotDescription{"s", 0, 10.0, 0.0, 0.0}).validate(), Error);
    EXPECT_THROW((PilotDescription{"s", 1, 10.0, 6.0, 4.0}).validate(), Error);
    EXPECT_NO_THROW((PilotDescription{"s", 1, 10.1, 6.0, 4.0}).validate());
}

TEST(Pilot, SubmitDrawsWaitAndCountsLoad) {
    const auto s = testing_support::site("s", 64, 30.0, 2);
    SiteLoad load;
    RngStream stream(1, 0);
    const PilotDescription d{"s", 16, 100.0, 0.0, 0.0};
    auto sub = submit_pilot(d, {1}, s, load, stream, 5.0);
    EXPECT_DOUBLE_EQ(sub.activation_time, 35.0);
    EXPECT_EQ(sub.pilot.state, PilotState::queued);
    EXPECT_EQ(load.pilots_queued, 1);
    activate_pilot(sub.pilot, load, sub.activation_time);
    EXPECT_EQ(load.pilots_active, 1);
    EXPECT_EQ(load.cores_held, 16);
    EXPECT_DOUBLE_EQ(load.observed_wait_sum_s, 30.0);

    submit_pilot(d, {2}, s, load, stream, 5.0);
    try {
        submit_pilot(d, {3}, s, load, stream, 5.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::rejected_submission);
    }
    EXPECT_THROW(submit_pilot({"other", 1, 100.0, 0.0, 0.0}, {4}, s, load, stream, 0.0), Error);
    EXPECT_THROW(submit_pilot({"s", 65, 100.0, 0.0, 0.0}, {4}, s, load, stream, 0.0), Error);
}

TEST(Unit, StatePath) {
    auto u = unit("a", 1);
    EXPECT_THROW(advance(u, UnitState::scheduled, 0.0), Error);  // needs a pilot
    advance(u, UnitState::scheduled, 1.0, PilotId{3});
    EXPECT_EQ(u.pilot->value, 3u);
    advance(u, UnitState::executing, 2.0);  // staging may be skipped
    EXPECT_THROW(advance(u, UnitState::scheduled, 3.0, PilotId{1}), Error);
    EXPECT_THROW(advance(u, UnitState::done, 1.0), Error);  // backwards in time
    advance(u, UnitState::done, 12.0);
    EXPECT_TRUE(u.terminal());
    EXPECT_DOUBLE_EQ(*u.stamp(UnitState::executing), 2.0);
    EXPECT_THROW(advance(u, UnitState::failed, 13.0), Error);

    auto v = unit("b", 1);
    advance(v, UnitState::scheduled, 0.0, PilotId{1});
    advance(v, UnitState::staging_input, 0.0);
    EXPECT_THROW(advance(v, UnitState::done, 1.0), Error);  // cannot skip executing
    advance(v, UnitState::failed, 1.0);
    EXPECT_TRUE(v.terminal());
}

TEST(Unit, CancelRequeuesOrFails) {
    std::vector<ComputeUnit> units{unit("a", 1), unit("b", 1)};
    for (auto& u : units) {
        advance(u, UnitState::scheduled, 1.0, PilotId{1});
        advance(u, UnitState::executing, 1.0);
    }
    SiteLoad load{4, 0, 1, 0.0, 0};
    auto p = active_pilot(1, 4, 0.0);
    p.running = {0, 1};
    auto late = cancel_pilot(p, load, units, BindingMode::late_to_pilot, 5.0);
    EXPECT_EQ(late.requeued.size(), 2u);
    EXPECT_EQ(units[0].state, UnitState::created);
    EXPECT_FALSE(units[0].pilot);
    EXPECT_EQ(load.cores_held, 0);
    EXPECT_THROW(cancel_pilot(p, load, units, BindingMode::late_to_pilot, 6.0), Error);

    for (auto& u : units) {
        advance(u, UnitState::scheduled, 6.0, PilotId{2});
        advance(u, UnitState::executing, 6.0);
    }
    SiteLoad load2{4, 0, 1, 0.0, 0};
    auto q = active_pilot(2, 4, 0.0);
    q.running = {0, 1};
    auto early = cancel_pilot(q, load2, units, BindingMode::early_to_resource, 7.0);
    EXPECT_EQ(early.failed.size(), 2u);
    EXPECT_EQ(units[1].state, UnitState::failed);
}

TEST(LateBinding, BackfillSkipsBlockedWideUnit) {
    std::vector<ComputeUnit> queue{unit("wide", 4), unit("a", 1), unit("b", 1)};
    std::vector<Pilot> pilots{active_pilot(1, 4, 0.0)};
    pilots[0].free_cores = 2;
    const auto r = schedule_late(queue, pilots, 1.0);
    ASSERT_EQ(r.assignments.size(), 2u);
    EXPECT_EQ(r.assignments[0].unit, 1u);
    EXPECT_EQ(r.assignments[1].unit, 2u);
    EXPECT_TRUE(r.unschedulable.empty());
}

TEST(LateBinding, UnschedulableWhenWiderThanEveryPilot) {
    std::vector<ComputeUnit> queue{unit("huge", 9), unit("a", 1)};
    std::vector<Pilot> pilots{active_pilot(1, 8, 0.0)};
    const auto r = schedule_late(queue, pilots, 0.0);
    EXPECT_EQ(r.unschedulable, std::vector<std::size_t>{0});
    EXPECT_EQ(r.assignments.size(), 1u);
}

TEST(LateBinding, PilotOrderAndWalltime) {
    std::vector<Pilot> pilots{active_pilot(1, 2, 5.0), active_pilot(2, 2, 1.0), active_pilot(3, 8, 1.0)};
    std::vector<ComputeUnit> queue{unit("a", 1)};
    // Earliest activated first, then most free cores.
    EXPECT_EQ(schedule_late(queue, pilots, 6.0).assignments[0].pilot.value, 3u);
    pilots[2].free_cores = 1;
    EXPECT_EQ(schedule_late(queue, pilots, 6.0).assignments[0].pilot.value, 2u);

    // A unit that cannot finish before the walltime limit waits for another pilot.
    std::vector<Pilot> short_lived{active_pilot(1, 4, 0.0, 50.0), active_pilot(2, 4, 10.0, 500.0)};
    std::vector<ComputeUnit> longer{unit("a", 1, 100.0)};
    const auto r = schedule_late(longer, short_lived, 20.0);
    ASSERT_EQ(r.assignments.size(), 1u);
    EXPECT_EQ(r.assignments[0].pilot.value, 2u);
}

TEST(LateBinding, LauncherSerializesDispatchPerPilot) {
    std::vector<ComputeUnit> queue{unit("a", 1), unit("b", 1), unit("c", 1)};
    std::vector<Pilot> pilots{active_pilot(1, 4, 0.0)};
    LateCosts costs;
    costs.dispatch_overhead_s = 0.5;
    costs.launcher_free_at = [](const Pilot&) { return 12.0; };
    const auto r = schedule_late(queue, pilots, 10.0, costs);
    ASSERT_EQ(r.assignments.size(), 3u);
    EXPECT_DOUBLE_EQ(r.assignments[0].dispatch_end, 12.5);
    EXPECT_DOUBLE_EQ(r.assignments[2].dispatch_end, 13.5);
}

TEST(LateBinding, NothingBeforeReady) {
    auto p = active_pilot(1, 4, 0.0);
    p.description.bootstrap_s = 30.0;
    std::vector<Pilot> pilots{p};
    std::vector<ComputeUnit> queue{unit("a", 1)};
    EXPECT_TRUE(schedule_late(queue, pilots, 29.0).assignments.empty());
    EXPECT_EQ(schedule_late(queue, pilots, 30.0).assignments.size(), 1u);
}

TEST(EarlyBinding, EverySiteGetsWorkFirst) {
    std::vector<EarlySite> sites{{{"b", 0, 0.0, 0.0}, 0, {}}, {{"a", 0, 0.0, 0.0}, 0, {}}};
    const auto r = schedule_early(2, sites, {});
    EXPECT_EQ(r.per_site.at("a"), std::vector<std::size_t>{0});
    EXPECT_EQ(r.per_site.at("b"), std::vector<std::size_t>{1});
}

TEST(EarlyBinding, ScoreSpreadsLoad) {
    std::vector<EarlySite> sites{{{"a", 0, 0.0, 0.0}, 0, {}}, {{"b", 0, 0.0, 0.0}, 0, {}}};
    const auto r = schedule_early(10, sites, {});
    EXPECT_EQ(r.per_site.at("a").size(), 5u);
    EXPECT_EQ(r.per_site.at("b").size(), 5u);
    EXPECT_TRUE(r.deferred.empty());
}

TEST(EarlyBinding, ThrottleDefers) {
    std::vector<EarlySite> sites{{{"a", 0, 0.0, 0.0}, 0, {}}};
    EarlyParams params;
    params.limits.max_queued = 3;
    const auto r = schedule_early(5, sites, params);
    EXPECT_EQ(r.per_site.at("a").size(), 3u);
    EXPECT_EQ(r.deferred, (std::vector<std::size_t>{3, 4}));
    EXPECT_THROW(schedule_early(1, std::span<const EarlySite>{}, params), Error);
}
