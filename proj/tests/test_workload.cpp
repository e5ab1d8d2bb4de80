#include <gtest/gtest.h>

#include "support.hpp"

using namespace pilotsim;

TEST(Workload, BagOfTasks) {
    const auto w = make_bot(12, 1200.0, 1);
    EXPECT_EQ(w.size(), 12u);
    EXPECT_EQ(w.kind(), WorkloadKind::bot);
    EXPECT_EQ(w.stages(), 1);
    EXPECT_EQ(w.task(0).id, "t00");
    EXPECT_EQ(w.task(11).id, "t11");
    EXPECT_DOUBLE_EQ(w.total_work_s(), 12 * 1200.0);
    for (std::size_t i = 0; i < w.size(); ++i) EXPECT_TRUE(w.producers(i).empty());
    EXPECT_EQ(ready_tasks(w, {}).size(), 12u);
}

TEST(Workload, BagRejectsBadInput) {
    EXPECT_THROW(make_bot(0, 10.0, 1), Error);
    EXPECT_THROW(make_bot(3, 0.0, 1), Error);
    EXPECT_THROW(make_bot(3, 10.0, 0), Error);
}

TEST(Workload, ExtasyShape) {
    const auto w = make_extasy(4);
    EXPECT_EQ(w.size(), 10u);
    EXPECT_EQ(w.kind(), WorkloadKind::staged);
    EXPECT_EQ(w.stages(), 4);
    EXPECT_EQ(w.stage_members(0).size(), 4u);
    EXPECT_EQ(w.stage_members(1).size(), 4u);
    const auto& ana1 = w.task(w.index_of("ana1"));
    EXPECT_EQ(ana1.cores, 4);
    EXPECT_EQ(ana1.inputs.size(), 5u);
    EXPECT_EQ(ana1.outputs.size(), 4u);
    EXPECT_EQ(w.producers(w.index_of("ana1")).size(), 4u);
    EXPECT_EQ(w.producers(w.index_of("sim2.2")), std::vector<std::size_t>{w.index_of("sim1.2")});
    EXPECT_EQ(w.producers(w.index_of("ana2")), std::vector<std::size_t>{w.index_of("ana1")});
    double per_path = 0.0;
    for (int s = 0; s < 4; ++s) per_path += w.task(w.stage_members(s).front()).duration_s;
    EXPECT_DOUBLE_EQ(per_path, 870.0);
    for (const auto& t : w.tasks())
        for (const auto& f : t.inputs) EXPECT_EQ(f.size_bytes, default_file_size_bytes);
}

TEST(Workload, ReadySetFollowsDependencies) {
    const auto w = make_extasy(2);
    auto ready = ready_tasks(w, {});
    EXPECT_EQ(ready, (std::vector<TaskId>{"sim1.0", "sim1.1"}));
    ready = ready_tasks(w, {"sim1.0"});
    EXPECT_EQ(ready, (std::vector<TaskId>{"sim1.1", "sim2.0"}));
    ready = ready_tasks(w, {"sim1.0", "sim1.1", "sim2.0", "sim2.1"});
    EXPECT_EQ(ready, std::vector<TaskId>{"ana1"});
}

TEST(Workload, TopologicalOrderRespectsProducers) {
    const auto w = make_extasy(5);
    const auto order = w.topological_order();
    std::vector<std::size_t> pos(w.size());
    for (std::size_t i = 0; i < order.size(); ++i) pos[order[i]] = i;
    for (std::size_t i = 0; i < w.size(); ++i)
        for (auto p : w.producers(i)) EXPECT_LT(pos[p], pos[i]);
}

TEST(Workload, ValidationErrors) {
    auto task = [](std::string id, int stage) { return Task{std::move(id), 1, 1.0, {}, {}, stage}; };
    EXPECT_THROW(Workload({task("a", 0), task("a", 0)}), Error);
    EXPECT_THROW(Workload({Task{"", 1, 1.0, {}, {}, 0}}), Error);
    EXPECT_THROW(Workload({Task{"a", 1, -1.0, {}, {}, 0}}), Error);

    // Consuming a file nobody produces.
    Task orphan = task("b", 1);
    orphan.inputs.push_back({"x", 1, FileOrigin::task_output});
    EXPECT_THROW(Workload({task("a", 0), orphan}), Error);

    // Dependencies must point to earlier stages.
    Task a = task("a", 1);
    a.outputs.push_back({"f", 1, FileOrigin::task_output});
    Task b = task("b", 1);
    b.inputs.push_back({"f", 1, FileOrigin::task_output});
    EXPECT_THROW(Workload({a, b}), Error);

    // Conflicting sizes for one file.
    Task c = task("c", 0);
    c.inputs.push_back({"g", 1, FileOrigin::user_workstation});
    Task d = task("d", 0);
    d.inputs.push_back({"g", 2, FileOrigin::user_workstation});
    EXPECT_THROW(Workload({c, d}), Error);
}

TEST(Workload, JsonRoundTrip) {
    const auto w = make_extasy(3);
    const auto back = workload_from_json(nlohmann::json::parse(to_json(w).dump()));
    EXPECT_EQ(back, w);
}

TEST(Workload, JsonDiagnosticsNameTheField) {
    try {
        workload_from_json(nlohmann::json::parse(R"([{"id": "a", "cores": "x", "duration_s": 1}])"));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::parse_error);
        EXPECT_NE(std::string(e.what()).find("cores"), std::string::npos);
    }
    EXPECT_THROW(workload_from_json(nlohmann::json::parse(R"({"id": "a"})")), Error);
    EXPECT_THROW(workload_from_json(nlohmann::json::parse(R"([{"id": "a", "cores": 1}])")), Error);
}
