#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "support.hpp"

using namespace pilotsim;

namespace {

const char* minimal = R"(
name: tiny
repeats: 2
workload: {sizes: [4, 8], task_duration_s: 60}
sites:
  - {name: a, total_cores: 64}
  - {name: b, total_cores: 64, queue: {kind: uniform, low_s: 10, high_s: 20}}
strategy: {kind: aimes}
)";

std::string error_of(const std::string& text) {
    try {
        parse_config(text);
    } catch (const Error& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST(Config, MinimalDefaults) {
    const auto c = parse_config(minimal);
    EXPECT_EQ(c.name, "tiny");
    EXPECT_EQ(c.repeats, 2);
    EXPECT_EQ(c.seed, 1u);
    EXPECT_EQ(c.workload.sizes, (std::vector<long>{4, 8}));
    EXPECT_EQ(c.sites.size(), 2u);
    EXPECT_EQ(c.sites[0].queue.kind, QueueKind::constant);
    EXPECT_EQ(c.sites[1].queue.kind, QueueKind::uniform);
    EXPECT_EQ(c.sites[1].queue.seed_offset, 1u);
    EXPECT_EQ(c.strategy.kind, StrategyKind::aimes);
    EXPECT_FALSE(c.simulation.staged);
    const auto w = c.workload.make(8);
    const auto plan = c.plan_for(w);
    EXPECT_EQ(plan.pilot_descriptions.size(), 2u);
    EXPECT_EQ(plan.pilot_descriptions[0].cores, 4);
}

TEST(Config, DiagnosticsNameTheField) {
    EXPECT_NE(error_of("name: x\nworkload: {sizes: [1]}\nsites: []\nstrategy: {kind: aimes}\n").find("sites"),
              std::string::npos);
    auto bad = std::string(minimal) + "bogus: 1\n";
    EXPECT_NE(error_of(bad).find("bogus"), std::string::npos);
    bad = std::string(minimal);
    bad.replace(bad.find("kind: aimes"), 11, "kind: magic");
    EXPECT_NE(error_of(bad).find("strategy.kind"), std::string::npos);
    bad = std::string(minimal);
    bad.replace(bad.find("total_cores: 64}"), 16, "total_cores: lots}");
    EXPECT_NE(error_of(bad).find("sites[0].total_cores"), std::string::npos);
    bad = std::string(minimal);
    bad.replace(bad.find("repeats: 2"), 10, "repeats: 0");
    EXPECT_NE(error_of(bad).find("repeats"), std::string::npos);
    bad = std::string(minimal);
    bad.replace(bad.find("high_s: 20"), 10, "high_s: 5");
    EXPECT_NE(error_of(bad).find("sites[1]"), std::string::npos);
    EXPECT_NE(error_of("name: [unclosed").find("YAML"), std::string::npos);
    bad = std::string(minimal) + "simulation: {bridge: {idle_threshold_s: 5}}\n";
    EXPECT_NE(error_of(bad).find("simulation.bridge"), std::string::npos);
}

TEST(Config, PresetsParse) {
    for (const auto& name : preset_names()) {
        const auto c = load_preset(name);
        EXPECT_EQ(c.name, name);
        EXPECT_EQ(c.repeats, 20);
        EXPECT_NO_THROW(c.validate());
        for (long n : c.workload.sizes) EXPECT_NO_THROW(c.plan_for(c.workload.make(n))) << name << " " << n;
    }
    EXPECT_THROW(load_preset("exp9"), Error);
}

TEST(Config, PresetsMatchTheConfigFiles) {
    for (const auto& name : preset_names()) {
        std::ifstream in(testing_support::config_path(name + ".yaml"));
        ASSERT_TRUE(in.good()) << name;
        std::ostringstream text;
        text << in.rdbuf();
        EXPECT_EQ(text.str(), preset_text(name)) << name;
        EXPECT_NO_THROW(load_config(testing_support::config_path(name + ".yaml")));
    }
    EXPECT_THROW(load_config("/nonexistent.yaml"), Error);
}

TEST(Config, PresetShapes) {
    const auto e1 = load_preset("exp1");
    EXPECT_EQ(e1.strategy.kind, StrategyKind::fixed);
    EXPECT_EQ(e1.strategy.binding, BindingMode::early_to_resource);
    EXPECT_EQ(e1.strategy_sites().size(), 2u);
    EXPECT_EQ(e1.workload.sizes, (std::vector<long>{8, 32, 256, 2048}));
    const auto e2 = load_preset("exp2");
    EXPECT_EQ(e2.strategy.kind, StrategyKind::swift);
    EXPECT_EQ(e2.workload.sizes, (std::vector<long>{32, 128, 512, 1024, 2048}));
    EXPECT_EQ(load_preset("exp3").strategy_sites().size(), 2u);
    EXPECT_EQ(load_preset("exp4").strategy_sites().size(), 4u);
    const auto in = load_preset("integrated");
    EXPECT_EQ(in.workload.kind, WorkloadKind::staged);
    EXPECT_TRUE(in.simulation.staging);
    EXPECT_TRUE(in.simulation.staged);
    ASSERT_TRUE(in.simulation.bridge);
    EXPECT_EQ(in.strategy_sites().size(), 5u);
}

TEST(Config, Idealized) {
    const auto c = idealized(load_preset("exp1"));
    for (const auto& s : c.sites) EXPECT_DOUBLE_EQ(s.queue.expected_base_wait_s(), 0.0);
    EXPECT_EQ(c.sites[1].queue.seed_offset, 1u);
    EXPECT_DOUBLE_EQ(c.simulation.bootstrap_s, 0.0);
    EXPECT_DOUBLE_EQ(c.simulation.dispatch_c0_s, 0.0);
    const auto i = idealized(load_preset("integrated"));
    EXPECT_FALSE(i.simulation.staging);
    EXPECT_DOUBLE_EQ(i.simulation.bridge->idle_threshold_s, 0.0);
}
