#include <set>

#include <gtest/gtest.h>

#include "support.hpp"

using namespace pilotsim;
using testing_support::last_done;
using testing_support::records_of;
using testing_support::site;
using testing_support::zero_overheads;

namespace {

ExecutionPlan one_pilot(const std::string& s, int cores, double walltime, BindingMode mode = BindingMode::late_to_pilot,
                        Overheads ov = {}) {
    ExecutionPlan p;
    p.binding = mode;
    p.overheads = ov;
    p.pilot_descriptions.push_back({s, cores, walltime, ov.bootstrap_s, ov.shutdown_s});
    return p;
}

std::size_t count(const Trace& t, EntityKind k, const std::string& state) { return records_of(t, k, state).size(); }

}  // namespace

TEST(Simulator, SinglePilotGenerations) {
    const auto w = make_bot(10, 100.0, 1);
    const std::vector<Site> sites{site("s", 64, 50.0)};
    const auto t = run(one_pilot("s", 4, 1000.0), w, sites, zero_overheads());
    // Activation at 50, then three generations.
    EXPECT_DOUBLE_EQ(last_done(t), 350.0);
    EXPECT_EQ(count(t, EntityKind::unit, "done"), 10u);
    EXPECT_EQ(count(t, EntityKind::pilot, "done"), 1u);
    const auto b = ttc(t);
    EXPECT_DOUBLE_EQ(b.ttc_s, 350.0);
    EXPECT_DOUBLE_EQ(b.component("pilot_queue"), 50.0);
    EXPECT_DOUBLE_EQ(b.component("exec"), 300.0);
}

TEST(Simulator, OverheadsShowUpInTheTrace) {
    const auto w = make_bot(2, 100.0, 1);
    const std::vector<Site> sites{site("s", 64, 10.0)};
    SimConfig cfg = zero_overheads();
    cfg.dispatch_c0_s = 1.0;
    cfg.dispatch_c1_s = 0.5;
    const auto t = run(one_pilot("s", 2, 1000.0, BindingMode::late_to_pilot, {20.0, 30.0}), w, sites, cfg);
    // ready at 30, dispatch 1.5 s each, serialized on the pilot's launcher
    const auto exec = records_of(t, EntityKind::unit, "executing");
    ASSERT_EQ(exec.size(), 2u);
    EXPECT_DOUBLE_EQ(exec[0].time_s, 31.5);
    EXPECT_DOUBLE_EQ(exec[1].time_s, 33.0);
    EXPECT_DOUBLE_EQ(last_done(t), 133.0);
    const auto b = ttc(t);
    EXPECT_DOUBLE_EQ(b.ttc_s, 163.0);
    EXPECT_DOUBLE_EQ(b.component("shutdown"), 30.0);
    EXPECT_DOUBLE_EQ(b.component("bootstrap"), 20.0);
    EXPECT_DOUBLE_EQ(b.component("scheduling"), 3.0);
    EXPECT_DOUBLE_EQ(b.tx_s + b.tw_s, b.ttc_s);
}

TEST(Simulator, LateBindingIgnoresTheSlowSite) {
    const auto w = make_bot(16, 100.0, 1);
    const std::vector<Site> sites{site("fast", 64, 0.0), site("slow", 64, 10000.0)};
    ExecutionPlan plan;
    plan.binding = BindingMode::late_to_pilot;
    plan.pilot_descriptions = {{"fast", 16, 20000.0, 0.0, 0.0}, {"slow", 16, 20000.0, 0.0, 0.0}};
    const auto t = run(plan, w, sites, zero_overheads());
    EXPECT_DOUBLE_EQ(last_done(t), 100.0);
    EXPECT_DOUBLE_EQ(ttc(t).ttc_s, 100.0);  // the slow pilot is canceled while still queued
    EXPECT_EQ(count(t, EntityKind::pilot, "canceled"), 1u);

    plan.binding = BindingMode::early_to_resource;
    const auto e = run(plan, w, sites, zero_overheads());
    EXPECT_GE(last_done(e), 10000.0);
    std::set<std::string> used;
    for (const auto& r : records_of(e, EntityKind::unit, "scheduled")) used.insert(r.ref);
    EXPECT_EQ(used.size(), 2u);
}

TEST(Simulator, WalltimeExpiryRequeuesUnderLateBinding) {
    const auto w = make_bot(1, 100.0, 1);
    const std::vector<Site> sites{site("a", 64, 0.0), site("b", 64, 10.0)};
    ExecutionPlan plan;
    plan.binding = BindingMode::late_to_pilot;
    // The unit fits the first pilot's window only if nothing else is in the way; make the
    // first pilot too short so it can never take the unit.
    plan.pilot_descriptions = {{"a", 1, 50.0, 0.0, 0.0}, {"b", 1, 500.0, 0.0, 0.0}};
    const auto t = run(plan, w, sites, zero_overheads());
    const auto sched = records_of(t, EntityKind::unit, "scheduled");
    ASSERT_EQ(sched.size(), 1u);
    EXPECT_EQ(sched[0].ref, "p1");
    EXPECT_DOUBLE_EQ(last_done(t), 110.0);
}

TEST(Simulator, UnschedulableUnitFailsWithReason) {
    std::vector<Task> tasks{{"wide", 8, 10.0, {}, {}, 0}, {"ok", 1, 10.0, {}, {}, 0}};
    const Workload w(tasks);
    const std::vector<Site> sites{site("s", 64)};
    const auto t = run(one_pilot("s", 4, 100.0), w, sites, zero_overheads());
    const auto failed = records_of(t, EntityKind::unit, "failed");
    ASSERT_EQ(failed.size(), 1u);
    EXPECT_EQ(failed[0].entity_id, "wide");
    EXPECT_EQ(failed[0].ref, "unschedulable: needs 8 cores, widest pilot has 4");
    EXPECT_EQ(count(t, EntityKind::unit, "done"), 1u);
}

TEST(Simulator, BlockedUnitsFailAtTheEnd) {
    // The pilot is too short for any unit, so nothing can run.
    const auto w = make_bot(3, 100.0, 1);
    const std::vector<Site> sites{site("s", 64)};
    ExecutionPlan plan = one_pilot("s", 4, 200.0);
    plan.pilot_descriptions[0].walltime_s = 50.0;
    const auto t = run(plan, w, sites, zero_overheads());
    const auto failed = records_of(t, EntityKind::unit, "failed");
    ASSERT_EQ(failed.size(), 3u);
    for (const auto& r : failed) EXPECT_EQ(r.ref, "blocked");
}

TEST(Simulator, EarlyBindingFailsUnitsOfAnExpiredPilot) {
    const auto w = make_bot(2, 100.0, 1);
    const std::vector<Site> sites{site("s", 64)};
    // A fixed plan validates walltime against one task; shrink it afterwards so the pilot
    // expires under the second generation.
    auto plan = one_pilot("s", 1, 150.0, BindingMode::early_to_resource);
    const auto t = run(plan, w, sites, zero_overheads());
    EXPECT_EQ(count(t, EntityKind::unit, "done"), 1u);
    const auto failed = records_of(t, EntityKind::unit, "failed");
    ASSERT_EQ(failed.size(), 1u);
    EXPECT_EQ(failed[0].ref, "blocked");
}

TEST(Simulator, RefillReplacesExhaustedPilots) {
    const auto w = make_bot(4, 100.0, 1);
    const std::vector<Site> sites{site("s", 64)};
    ExecutionPlan plan = one_pilot("s", 2, 150.0, BindingMode::early_to_resource);
    plan.refill = PilotRefill::replicate;
    const auto t = run(plan, w, sites, zero_overheads());
    EXPECT_EQ(count(t, EntityKind::unit, "done"), 4u);
    EXPECT_EQ(count(t, EntityKind::pilot, "queued"), 2u);
    EXPECT_DOUBLE_EQ(last_done(t), 200.0);
}

TEST(Simulator, SiteCoresLimitActivePilots) {
    const auto w = make_bot(16, 100.0, 1);
    const std::vector<Site> sites{site("s", 8)};
    ExecutionPlan plan;
    plan.pilot_descriptions = {{"s", 8, 1000.0, 0.0, 0.0}, {"s", 8, 1000.0, 0.0, 0.0}};
    const auto t = run(plan, w, sites, zero_overheads());
    // The second pilot only starts once the first one leaves, so everything runs on the first.
    EXPECT_DOUBLE_EQ(last_done(t), 200.0);
    EXPECT_EQ(count(t, EntityKind::pilot, "active"), 1u);
    EXPECT_EQ(count(t, EntityKind::pilot, "canceled"), 1u);
}

TEST(Simulator, ConcurrentPilotLimitBacklogs) {
    const auto w = make_bot(4, 100.0, 1);
    const std::vector<Site> sites{site("s", 64, 0.0, 1)};
    ExecutionPlan plan;
    plan.pilot_descriptions = {{"s", 2, 120.0, 0.0, 0.0}, {"s", 2, 120.0, 0.0, 0.0}};
    const auto t = run(plan, w, sites, zero_overheads());
    const auto queued = records_of(t, EntityKind::pilot, "queued");
    ASSERT_EQ(queued.size(), 2u);
    EXPECT_DOUBLE_EQ(queued[1].time_s, 120.0);  // submitted when the first one expired
    EXPECT_DOUBLE_EQ(last_done(t), 220.0);
}

TEST(Simulator, StagingCost) {
    Task t{"a", 1, 10.0, {{"in1", 1'000'000, FileOrigin::user_workstation}, {"in2", 1'000'000, FileOrigin::user_workstation}},
           {{"out", 500'000, FileOrigin::task_output}}, 0};
    const Workload w({t});
    auto s = site("s", 8);
    s.bandwidth_bytes_per_s = 1.0e6;
    s.staging_latency_s = 0.5;
    const std::vector<Site> sites{s};
    SimConfig cfg = zero_overheads();
    cfg.staging = true;
    const auto tr = run(one_pilot("s", 1, 100.0), w, sites, cfg);
    EXPECT_DOUBLE_EQ(records_of(tr, EntityKind::unit, "executing")[0].time_s, 3.0);
    EXPECT_DOUBLE_EQ(records_of(tr, EntityKind::unit, "staging_output")[0].time_s, 13.0);
    EXPECT_DOUBLE_EQ(last_done(tr), 14.0);
    const auto b = ttc(tr);
    EXPECT_DOUBLE_EQ(b.component("stage_in"), 3.0);
    EXPECT_DOUBLE_EQ(b.component("stage_out"), 1.0);
}

TEST(Simulator, DataflowAndStagedModes) {
    const auto w = make_extasy(4);
    const std::vector<Site> sites{site("s", 64)};
    const auto plan = plan_aimes(w, sites, 300.0);
    const auto flow = run(plan, w, sites, zero_overheads());
    EXPECT_DOUBLE_EQ(last_done(flow), 870.0);
    const auto staged = run_staged(plan, w, sites, zero_overheads());
    EXPECT_DOUBLE_EQ(last_done(staged), 870.0);
    // One fresh pilot per stage.
    EXPECT_EQ(count(staged, EntityKind::pilot, "queued"), 4u);
    EXPECT_EQ(count(flow, EntityKind::pilot, "queued"), 1u);
}

TEST(Simulator, BridgeFlushesOncePerStage) {
    const auto w = make_extasy(8);
    const std::vector<Site> sites{site("a", 64), site("b", 64)};
    const auto plan = plan_aimes(w, sites, 300.0);
    SimConfig cfg = zero_overheads();
    cfg.bridge = BufferOptions{};
    cfg.bridge->idle_threshold_s = 10.0;
    const auto t = run_staged(plan, w, sites, cfg);
    const auto flushes = records_of(t, EntityKind::middleware, "flush");
    ASSERT_EQ(flushes.size(), 4u);
    EXPECT_EQ(flushes[0].ref, "8 tasks");
    EXPECT_EQ(flushes[2].ref, "1 tasks");
    EXPECT_EQ(count(t, EntityKind::middleware, "submit"), w.size());
    EXPECT_DOUBLE_EQ(last_done(t), 870.0 + 4 * 10.0);
    EXPECT_DOUBLE_EQ(ttc(t).component("middleware"), 40.0);
}

TEST(Simulator, ThrottledEarlyBindingStillCompletes) {
    const auto w = make_bot(12, 10.0, 1);
    const std::vector<Site> sites{site("a", 64), site("b", 64)};
    ExecutionPlan plan;
    plan.binding = BindingMode::early_to_resource;
    plan.pilot_descriptions = {{"a", 4, 1000.0, 0.0, 0.0}, {"b", 4, 1000.0, 0.0, 0.0}};
    plan.scheduler.throttle.max_queued = 2;
    auto t = run(plan, w, sites, zero_overheads());
    EXPECT_EQ(count(t, EntityKind::unit, "done"), 12u);
    EXPECT_DOUBLE_EQ(last_done(t), 30.0);

    plan.scheduler.throttle.max_queued = std::numeric_limits<int>::max();
    plan.scheduler.throttle.max_submit_rate = 3;
    plan.scheduler.throttle.window_s = 5.0;
    t = run(plan, w, sites, zero_overheads());
    EXPECT_EQ(count(t, EntityKind::unit, "done"), 12u);
}

TEST(Simulator, SameSeedSameTrace) {
    const auto w = make_bot(64, 100.0, 1);
    auto a = site("a", 1000);
    a.queue = QueueModel::lognormal(5.0, 1.0, 0.5);
    auto b = site("b", 1000);
    b.queue = QueueModel::lognormal(6.0, 1.0, 0.5);
    b.queue.seed_offset = 1;
    const std::vector<Site> sites{a, b};
    const auto plan = plan_aimes(w, sites, 100.0);
    SimConfig cfg;
    cfg.seed = 42;
    const auto t1 = run(plan, w, sites, cfg);
    const auto t2 = run(plan, w, sites, cfg);
    EXPECT_EQ(t1, t2);
    EXPECT_EQ(t1.hash(), t2.hash());
    cfg.seed = 43;
    EXPECT_NE(run(plan, w, sites, cfg).hash(), t1.hash());
}

TEST(Simulator, ConstructorRejectsBadPlans) {
    const auto w = make_bot(2, 10.0, 1);
    const std::vector<Site> sites{site("s", 4)};
    try {
        run(one_pilot("nowhere", 1, 100.0), w, sites);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::infeasible_plan);
    }
    EXPECT_THROW(run(one_pilot("s", 8, 100.0), w, sites), Error);
    const std::vector<Site> dup{site("s", 4), site("s", 4)};
    EXPECT_THROW(run(one_pilot("s", 1, 100.0), w, dup), Error);
    SimConfig bad;
    bad.dispatch_c0_s = -1.0;
    EXPECT_THROW(run(one_pilot("s", 1, 100.0), w, sites, bad), Error);
}

TEST(Simulator, EventOrdering) {
    Event unit_done{10.0, 5, EventKind::unit_exec_done, 0, 0};
    Event expiry{10.0, 1, EventKind::pilot_expires, 0, 0};
    EXPECT_TRUE(expiry > unit_done);
    Event earlier{9.0, 9, EventKind::pilot_expires, 0, 0};
    EXPECT_TRUE(unit_done > earlier);
}
