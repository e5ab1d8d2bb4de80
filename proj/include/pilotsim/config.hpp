#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "bridge.hpp"
#include "error.hpp"
#include "resource.hpp"
#include "simulator.hpp"
#include "strategy.hpp"
#include "workload.hpp"

namespace pilotsim {

enum class StrategyKind { fixed, swift, aimes };

inline const char* to_string(StrategyKind k) {
    switch (k) {
        case StrategyKind::fixed: return "fixed";
        case StrategyKind::swift: return "swift";
        case StrategyKind::aimes: return "aimes";
    }
    return "?";
}

struct WorkloadSpec {
    WorkloadKind kind = WorkloadKind::bot;  // staged means the ExTASY-shaped workflow
    std::vector<long> sizes;                // BoT task counts, or workflow n values
    double task_duration_s = 1200.0;
    int task_cores = 1;
    std::uint64_t file_size_bytes = default_file_size_bytes;
    std::vector<double> stage_durations_s = default_extasy_stage_durations_s;

    Workload make(long n) const {
        return kind == WorkloadKind::bot ? make_bot(n, task_duration_s, task_cores)
                                         : make_extasy(n, file_size_bytes, stage_durations_s);
    }
};

struct StrategySpec {
    StrategyKind kind = StrategyKind::aimes;
    std::vector<std::string> sites;  // empty: every configured site, in order
    // fixed
    int pilots_per_site = 1;
    int cores_per_pilot = 16;
    double walltime_s = 1500.0;
    BindingMode binding = BindingMode::early_to_resource;
    PilotRefill refill = PilotRefill::none;
    // swift
    int max_pilots_per_site = 16;
    int max_nodes = 1;
    int cores_per_node = 16;
    double slack = 1.25;
    // aimes
    double concurrency_pct = 100.0;
    double resource_pct = 100.0;

    SchedulerParams scheduler;
};

struct SimulationSpec {
    double dispatch_c0_s = 0.1;
    double dispatch_c1_s = 0.05;
    double bootstrap_s = 150.0;
    double shutdown_s = 150.0;
    bool staging = false;
    double middleware_s = 0.0;
    bool staged = false;  // run stages as separate workloads
    std::optional<BufferOptions> bridge;

    Overheads overheads() const { return {bootstrap_s, shutdown_s}; }

    SimConfig sim_config(std::uint64_t seed) const {
        SimConfig c;
        c.seed = seed;
        c.dispatch_c0_s = dispatch_c0_s;
        c.dispatch_c1_s = dispatch_c1_s;
        c.staging = staging;
        c.middleware_s = middleware_s;
        c.bridge = bridge;
        return c;
    }
};

struct OutputSpec {
    std::string dir = "out";
    bool traces = false;
};

struct ExperimentConfig {
    std::string name;
    int repeats = 20;
    std::uint64_t seed = 1;
    WorkloadSpec workload;
    std::vector<Site> sites;
    StrategySpec strategy;
    SimulationSpec simulation;
    OutputSpec output;

    // Sites the strategy draws from, in strategy order.
    std::vector<Site> strategy_sites() const {
        if (strategy.sites.empty()) return sites;
        std::vector<Site> out;
        for (const auto& name : strategy.sites) {
            auto it = std::find_if(sites.begin(), sites.end(), [&](const Site& s) { return s.name == name; });
            require(it != sites.end(), Errc::parse_error, "field 'strategy.sites': unknown site '" + name + "'");
            out.push_back(*it);
        }
        return out;
    }

    ExecutionPlan plan_for(const Workload& w) const {
        const auto used = strategy_sites();
        const auto ov = simulation.overheads();
        switch (strategy.kind) {
            case StrategyKind::fixed: {
                FixedShape shape{strategy.pilots_per_site, strategy.cores_per_pilot, strategy.walltime_s,
                                 strategy.binding, ov, strategy.refill, strategy.scheduler};
                return plan_fixed(w, used, shape);
            }
            case StrategyKind::swift: {
                SwiftOptions opt{strategy.max_pilots_per_site, strategy.max_nodes, strategy.cores_per_node,
                                 strategy.slack, ov, strategy.scheduler};
                return plan_swift(w, used, opt);
            }
            case StrategyKind::aimes: {
                double longest = 0.0;
                for (const auto& t : w.tasks()) longest = std::max(longest, t.duration_s);
                AimesOptions opt{strategy.pilots_per_site, ov, strategy.concurrency_pct, strategy.resource_pct,
                                 strategy.scheduler};
                return plan_aimes(w, used, longest, opt);
            }
        }
        fail(Errc::invalid_argument, "unknown strategy kind");
    }

    void validate() const {
        auto field = [](bool ok, const std::string& name, const std::string& why) {
            require(ok, Errc::parse_error, "field '" + name + "': " + why);
        };
        field(!name.empty(), "name", "must not be empty");
        field(repeats >= 1, "repeats", "must be >= 1");
        field(!workload.sizes.empty(), "workload.sizes", "needs at least one size");
        for (long n : workload.sizes) field(n >= 1, "workload.sizes", "sizes must be >= 1");
        field(workload.task_duration_s > 0.0, "workload.task_duration_s", "must be > 0");
        field(workload.task_cores >= 1, "workload.task_cores", "must be >= 1");
        field(workload.stage_durations_s.size() == 4, "workload.stage_durations_s", "needs 4 entries");
        for (double d : workload.stage_durations_s) field(d > 0.0, "workload.stage_durations_s", "must be > 0");
        field(!sites.empty(), "sites", "needs at least one site");
        for (std::size_t i = 0; i < sites.size(); ++i) {
            try {
                sites[i].validate();
            } catch (const Error& e) {
                fail(Errc::parse_error, "field 'sites[" + std::to_string(i) + "]': " + e.what());
            }
            for (std::size_t j = 0; j < i; ++j)
                field(sites[j].name != sites[i].name, "sites[" + std::to_string(i) + "].name",
                      "duplicate site '" + sites[i].name + "'");
        }
        strategy_sites();
        field(strategy.pilots_per_site >= 1, "strategy.pilots_per_site", "must be >= 1");
        field(strategy.cores_per_pilot >= 1, "strategy.cores_per_pilot", "must be >= 1");
        field(strategy.walltime_s > 0.0, "strategy.walltime_s", "must be > 0");
        field(strategy.max_pilots_per_site >= 1, "strategy.max_pilots_per_site", "must be >= 1");
        field(strategy.max_nodes >= 1 && strategy.cores_per_node >= 1, "strategy.max_nodes",
              "box limits must be >= 1");
        field(strategy.slack >= 1.0, "strategy.slack", "must be >= 1");
        field(strategy.concurrency_pct > 0.0 && strategy.concurrency_pct <= 100.0, "strategy.concurrency_pct",
              "must lie in (0, 100]");
        field(strategy.resource_pct > 0.0 && strategy.resource_pct <= 100.0, "strategy.resource_pct",
              "must lie in (0, 100]");
        field(strategy.scheduler.interval_s > 0.0, "strategy.scheduler.interval_s", "must be > 0");
        field(strategy.scheduler.throttle.max_queued >= 1, "strategy.scheduler.max_queued", "must be >= 1");
        field(strategy.scheduler.throttle.max_submit_rate > 0.0, "strategy.scheduler.max_submit_rate",
              "must be > 0");
        field(strategy.scheduler.throttle.window_s > 0.0, "strategy.scheduler.window_s", "must be > 0");
        field(simulation.dispatch_c0_s >= 0.0, "simulation.dispatch_c0_s", "must be >= 0");
        field(simulation.dispatch_c1_s >= 0.0, "simulation.dispatch_c1_s", "must be >= 0");
        field(simulation.bootstrap_s >= 0.0, "simulation.bootstrap_s", "must be >= 0");
        field(simulation.shutdown_s >= 0.0, "simulation.shutdown_s", "must be >= 0");
        field(simulation.middleware_s >= 0.0, "simulation.middleware_s", "must be >= 0");
        if (simulation.bridge) {
            field(simulation.staged, "simulation.bridge", "needs simulation.mode: staged");
            field(simulation.bridge->idle_threshold_s >= 0.0, "simulation.bridge.idle_threshold_s", "must be >= 0");
            field(simulation.bridge->rate_window_s > 0.0, "simulation.bridge.rate_window_s", "must be > 0");
            field(simulation.bridge->min_rate_per_s > 0.0, "simulation.bridge.min_rate_per_s", "must be > 0");
        }
        field(!output.dir.empty(), "output.dir", "must not be empty");
    }
};

// ---- YAML ------------------------------------------------------------------------

namespace detail {

// A mapping node plus its dotted path, for diagnostics that name the offending field.
class Fields {
public:
    Fields(YAML::Node node, std::string path) : node_(std::move(node)), path_(std::move(path)) {
        if (!node_.IsMap())
            fail(Errc::parse_error, "field '" + (path_.empty() ? std::string("<root>") : path_) + "': expected a mapping");
    }

    std::string name(std::string_view key) const { return path_.empty() ? std::string(key) : path_ + "." + std::string(key); }

    bool has(std::string_view key) const { return static_cast<bool>(node_[std::string(key)]); }

    void allow_only(std::initializer_list<std::string_view> keys) const {
        for (const auto& kv : node_) {
            const auto k = kv.first.as<std::string>();
            if (std::find(keys.begin(), keys.end(), k) == keys.end())
                fail(Errc::parse_error, "field '" + name(k) + "': unknown field");
        }
    }

    template <class T>
    T get(std::string_view key, T fallback) const {
        auto n = node_[std::string(key)];
        if (!n) return fallback;
        return convert<T>(n, name(key));
    }

    template <class T>
    T need(std::string_view key) const {
        auto n = node_[std::string(key)];
        if (!n) fail(Errc::parse_error, "field '" + name(key) + "': missing");
        return convert<T>(n, name(key));
    }

    Fields child(std::string_view key) const { return {node_[std::string(key)], name(key)}; }
    YAML::Node raw(std::string_view key) const { return node_[std::string(key)]; }

    template <class T>
    static T convert(const YAML::Node& n, const std::string& where) {
        try {
            return n.as<T>();
        } catch (const YAML::Exception&) {
            fail(Errc::parse_error, "field '" + where + "': cannot read '" + YAML::Dump(n) + "' as the expected type");
        }
    }

private:
    YAML::Node node_;
    std::string path_;
};

inline QueueModel parse_queue(const Fields& f, std::size_t site_index) {
    f.allow_only({"kind", "value_s", "low_s", "high_s", "mu", "sigma", "site_correlation", "trace_s",
                  "size_penalty_s_per_core", "fairshare_s_per_pilot", "seed_offset"});
    QueueModel m;
    const auto kind = f.get<std::string>("kind", "constant");
    if (kind == "constant") m.kind = QueueKind::constant;
    else if (kind == "uniform") m.kind = QueueKind::uniform;
    else if (kind == "lognormal") m.kind = QueueKind::lognormal;
    else if (kind == "trace_replay") m.kind = QueueKind::trace_replay;
    else fail(Errc::parse_error, "field '" + f.name("kind") + "': unknown queue kind '" + kind + "'");
    m.value_s = f.get("value_s", 0.0);
    m.low_s = f.get("low_s", 0.0);
    m.high_s = f.get("high_s", 0.0);
    m.mu = f.get("mu", 0.0);
    m.sigma = f.get("sigma", 0.0);
    m.site_correlation = f.get("site_correlation", 0.0);
    m.trace_s = f.get("trace_s", std::vector<double>{});
    m.size_penalty_s_per_core = f.get("size_penalty_s_per_core", 0.0);
    m.fairshare_s_per_pilot = f.get("fairshare_s_per_pilot", 0.0);
    m.seed_offset = f.get<std::uint64_t>("seed_offset", site_index);
    return m;
}

inline BindingMode parse_binding(const std::string& s, const std::string& where) {
    if (s == "early_to_resource" || s == "early") return BindingMode::early_to_resource;
    if (s == "late_to_pilot" || s == "late") return BindingMode::late_to_pilot;
    fail(Errc::parse_error, "field '" + where + "': unknown binding '" + s + "'");
}

}  // namespace detail

inline ExperimentConfig parse_config(std::string_view text) {
    YAML::Node root;
    try {
        root = YAML::Load(std::string(text));
    } catch (const YAML::Exception& e) {
        fail(Errc::parse_error, std::string("config is not valid YAML: ") + e.what());
    }
    using detail::Fields;
    const Fields top(root, "");
    top.allow_only({"name", "repeats", "seed", "workload", "sites", "strategy", "simulation", "output"});

    ExperimentConfig c;
    c.name = top.need<std::string>("name");
    c.repeats = top.get("repeats", c.repeats);
    c.seed = top.get("seed", c.seed);

    {
        const auto f = top.child("workload");
        f.allow_only({"kind", "sizes", "task_duration_s", "task_cores", "file_size_bytes", "stage_durations_s"});
        const auto kind = f.get<std::string>("kind", "bot");
        if (kind == "bot") c.workload.kind = WorkloadKind::bot;
        else if (kind == "extasy") c.workload.kind = WorkloadKind::staged;
        else fail(Errc::parse_error, "field 'workload.kind': unknown workload kind '" + kind + "'");
        c.workload.sizes = f.need<std::vector<long>>("sizes");
        c.workload.task_duration_s = f.get("task_duration_s", c.workload.task_duration_s);
        c.workload.task_cores = f.get("task_cores", c.workload.task_cores);
        c.workload.file_size_bytes = f.get("file_size_bytes", c.workload.file_size_bytes);
        c.workload.stage_durations_s = f.get("stage_durations_s", c.workload.stage_durations_s);
    }

    {
        const auto list = top.raw("sites");
        if (!list || !list.IsSequence()) fail(Errc::parse_error, "field 'sites': expected a list of sites");
        for (std::size_t i = 0; i < list.size(); ++i) {
            const Fields f(list[i], "sites[" + std::to_string(i) + "]");
            f.allow_only({"name", "total_cores", "max_concurrent_pilots", "bandwidth_bytes_per_s",
                          "staging_latency_s", "queue"});
            Site s;
            s.name = f.need<std::string>("name");
            s.total_cores = f.need<int>("total_cores");
            s.max_concurrent_pilots = f.get("max_concurrent_pilots", s.max_concurrent_pilots);
            s.bandwidth_bytes_per_s = f.get("bandwidth_bytes_per_s", s.bandwidth_bytes_per_s);
            s.staging_latency_s = f.get("staging_latency_s", s.staging_latency_s);
            if (f.has("queue")) s.queue = detail::parse_queue(f.child("queue"), i);
            else s.queue.seed_offset = i;
            c.sites.push_back(std::move(s));
        }
    }

    {
        const auto f = top.child("strategy");
        f.allow_only({"kind", "sites", "pilots_per_site", "cores_per_pilot", "walltime_s", "binding", "refill",
                      "max_pilots_per_site", "max_nodes", "cores_per_node", "slack", "concurrency_pct",
                      "resource_pct", "scheduler"});
        auto& s = c.strategy;
        const auto kind = f.need<std::string>("kind");
        if (kind == "fixed") s.kind = StrategyKind::fixed;
        else if (kind == "swift") s.kind = StrategyKind::swift;
        else if (kind == "aimes") s.kind = StrategyKind::aimes;
        else fail(Errc::parse_error, "field 'strategy.kind': unknown strategy '" + kind + "'");
        s.sites = f.get("sites", s.sites);
        s.pilots_per_site = f.get("pilots_per_site", s.pilots_per_site);
        s.cores_per_pilot = f.get("cores_per_pilot", s.cores_per_pilot);
        s.walltime_s = f.get("walltime_s", s.walltime_s);
        if (f.has("binding")) s.binding = detail::parse_binding(f.need<std::string>("binding"), "strategy.binding");
        const auto refill = f.get<std::string>("refill", "none");
        if (refill == "none") s.refill = PilotRefill::none;
        else if (refill == "replicate") s.refill = PilotRefill::replicate;
        else fail(Errc::parse_error, "field 'strategy.refill': unknown refill '" + refill + "'");
        s.max_pilots_per_site = f.get("max_pilots_per_site", s.max_pilots_per_site);
        s.max_nodes = f.get("max_nodes", s.max_nodes);
        s.cores_per_node = f.get("cores_per_node", s.cores_per_node);
        s.slack = f.get("slack", s.slack);
        s.concurrency_pct = f.get("concurrency_pct", s.concurrency_pct);
        s.resource_pct = f.get("resource_pct", s.resource_pct);
        if (f.has("scheduler")) {
            const auto g = f.child("scheduler");
            g.allow_only({"interval_s", "weights", "max_queued", "max_submit_rate", "window_s"});
            s.scheduler.interval_s = g.get("interval_s", s.scheduler.interval_s);
            if (g.has("weights")) {
                const auto wf = g.child("weights");
                wf.allow_only({"queued", "completion", "failure"});
                s.scheduler.weights.queued = wf.get("queued", s.scheduler.weights.queued);
                s.scheduler.weights.completion = wf.get("completion", s.scheduler.weights.completion);
                s.scheduler.weights.failure = wf.get("failure", s.scheduler.weights.failure);
            }
            s.scheduler.throttle.max_queued = g.get("max_queued", s.scheduler.throttle.max_queued);
            s.scheduler.throttle.max_submit_rate = g.get("max_submit_rate", s.scheduler.throttle.max_submit_rate);
            s.scheduler.throttle.window_s = g.get("window_s", s.scheduler.throttle.window_s);
        }
    }

    if (top.has("simulation")) {
        const auto f = top.child("simulation");
        f.allow_only({"dispatch_c0_s", "dispatch_c1_s", "bootstrap_s", "shutdown_s", "staging", "middleware_s",
                      "mode", "bridge"});
        auto& s = c.simulation;
        s.dispatch_c0_s = f.get("dispatch_c0_s", s.dispatch_c0_s);
        s.dispatch_c1_s = f.get("dispatch_c1_s", s.dispatch_c1_s);
        s.bootstrap_s = f.get("bootstrap_s", s.bootstrap_s);
        s.shutdown_s = f.get("shutdown_s", s.shutdown_s);
        s.staging = f.get("staging", s.staging);
        s.middleware_s = f.get("middleware_s", s.middleware_s);
        const auto mode = f.get<std::string>("mode", "run");
        if (mode == "run") s.staged = false;
        else if (mode == "staged") s.staged = true;
        else fail(Errc::parse_error, "field 'simulation.mode': unknown mode '" + mode + "'");
        if (f.has("bridge")) {
            const auto b = f.child("bridge");
            b.allow_only({"idle_threshold_s", "policy", "rate_window_s", "min_rate_per_s"});
            BufferOptions o;
            o.idle_threshold_s = b.get("idle_threshold_s", o.idle_threshold_s);
            const auto policy = b.get<std::string>("policy", "idle_seconds");
            if (policy == "idle_seconds") o.policy = FlushPolicy::idle_seconds;
            else if (policy == "rate_below") o.policy = FlushPolicy::rate_below;
            else fail(Errc::parse_error, "field 'simulation.bridge.policy': unknown policy '" + policy + "'");
            o.rate_window_s = b.get("rate_window_s", o.rate_window_s);
            o.min_rate_per_s = b.get("min_rate_per_s", o.min_rate_per_s);
            s.bridge = o;
        }
    }

    if (top.has("output")) {
        const auto f = top.child("output");
        f.allow_only({"dir", "traces"});
        c.output.dir = f.get("dir", c.output.dir);
        c.output.traces = f.get("traces", c.output.traces);
    }

    c.validate();
    return c;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), Errc::invalid_argument, "cannot open config '" + path + "'");
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str());
}

// ---- bundled presets ----------------------------------------------------------

// Shared queue calibration: a fast and a slow primary site plus three mid-range ones.
// Waits are lognormal with a strong per-site common factor; larger pilots and later
// submissions at the same site wait longer.
namespace detail {

inline constexpr std::string_view site_stampede = R"(  - name: stampede
    total_cores: 102400
    max_concurrent_pilots: 50
    bandwidth_bytes_per_s: 1.0e7
    staging_latency_s: 0.05
    queue: {kind: lognormal, mu: 6.4, sigma: 0.8, site_correlation: 0.8, size_penalty_s_per_core: 0.5, fairshare_s_per_pilot: 30, seed_offset: 0}
)";

inline constexpr std::string_view site_gordon = R"(  - name: gordon
    total_cores: 16384
    max_concurrent_pilots: 50
    bandwidth_bytes_per_s: 1.0e7
    staging_latency_s: 0.05
    queue: {kind: lognormal, mu: 8.9, sigma: 1.0, site_correlation: 0.8, size_penalty_s_per_core: 0.5, fairshare_s_per_pilot: 30, seed_offset: 1}
)";

inline constexpr std::string_view site_supermic = R"(  - name: supermic
    total_cores: 7200
    max_concurrent_pilots: 50
    bandwidth_bytes_per_s: 1.0e7
    staging_latency_s: 0.05
    queue: {kind: lognormal, mu: 7.1, sigma: 0.9, site_correlation: 0.8, size_penalty_s_per_core: 0.5, fairshare_s_per_pilot: 30, seed_offset: 2}
)";

inline constexpr std::string_view site_comet = R"(  - name: comet
    total_cores: 46656
    max_concurrent_pilots: 50
    bandwidth_bytes_per_s: 1.0e7
    staging_latency_s: 0.05
    queue: {kind: lognormal, mu: 6.8, sigma: 0.9, site_correlation: 0.8, size_penalty_s_per_core: 0.5, fairshare_s_per_pilot: 30, seed_offset: 3}
)";

inline constexpr std::string_view site_bluewaters = R"(  - name: bluewaters
    total_cores: 396000
    max_concurrent_pilots: 50
    bandwidth_bytes_per_s: 1.0e7
    staging_latency_s: 0.05
    queue: {kind: lognormal, mu: 7.5, sigma: 1.0, site_correlation: 0.8, size_penalty_s_per_core: 0.5, fairshare_s_per_pilot: 30, seed_offset: 4}
)";

inline std::string preset_text_for(std::string_view name) {
    std::string head = "name: " + std::string(name) + "\nrepeats: 20\nseed: 1\n";
    const std::string sim_defaults =
        "  dispatch_c0_s: 0.1\n  dispatch_c1_s: 0.05\n  bootstrap_s: 150\n  shutdown_s: 150\n";
    const std::string output = "output:\n  dir: out/" + std::string(name) + "\n  traces: false\n";
    if (name == "exp1")
        return head +
               "workload:\n  kind: bot\n  sizes: [8, 32, 256, 2048]\n  task_duration_s: 1200\n  task_cores: 1\n"
               "sites:\n" + std::string(site_stampede) + std::string(site_gordon) +
               "strategy:\n  kind: fixed\n  pilots_per_site: 20\n  cores_per_pilot: 16\n  walltime_s: 1500\n"
               "  binding: early_to_resource\n  refill: replicate\n"
               "simulation:\n" + sim_defaults + "  staging: false\n  middleware_s: 5\n  mode: run\n" + output;
    if (name == "exp2")
        return head +
               "workload:\n  kind: bot\n  sizes: [32, 128, 512, 1024, 2048]\n  task_duration_s: 1200\n  task_cores: 1\n"
               "sites:\n" + std::string(site_stampede) + std::string(site_gordon) +
               "strategy:\n  kind: swift\n  max_pilots_per_site: 16\n  max_nodes: 1\n  cores_per_node: 16\n"
               "  slack: 1.25\n"
               "simulation:\n" + sim_defaults + "  staging: false\n  middleware_s: 5\n  mode: run\n" + output;
    if (name == "exp3")
        return head +
               "workload:\n  kind: bot\n  sizes: [8, 32, 256, 2048]\n  task_duration_s: 1200\n  task_cores: 1\n"
               "sites:\n" + std::string(site_stampede) + std::string(site_gordon) +
               "strategy:\n  kind: aimes\n  pilots_per_site: 1\n  concurrency_pct: 100\n  resource_pct: 100\n"
               "simulation:\n" + sim_defaults + "  staging: false\n  middleware_s: 5\n  mode: run\n" + output;
    if (name == "exp4")
        return head +
               "workload:\n  kind: bot\n  sizes: [8, 32, 256, 2048]\n  task_duration_s: 1200\n  task_cores: 1\n"
               "sites:\n" + std::string(site_stampede) + std::string(site_gordon) + std::string(site_supermic) +
               std::string(site_comet) +
               "strategy:\n  kind: aimes\n  pilots_per_site: 1\n  concurrency_pct: 100\n  resource_pct: 100\n"
               "simulation:\n" + sim_defaults + "  staging: false\n  middleware_s: 5\n  mode: run\n" + output;
    if (name == "integrated")
        return head +
               "workload:\n  kind: extasy\n  sizes: [256, 1024, 2048]\n  file_size_bytes: 200000\n"
               "  stage_durations_s: [300, 300, 180, 90]\n"
               "sites:\n" + std::string(site_stampede) + std::string(site_gordon) + std::string(site_supermic) +
               std::string(site_comet) + std::string(site_bluewaters) +
               "strategy:\n  kind: aimes\n  pilots_per_site: 1\n  concurrency_pct: 100\n  resource_pct: 100\n"
               "simulation:\n" + sim_defaults + "  staging: true\n  middleware_s: 5\n  mode: staged\n"
               "  bridge: {idle_threshold_s: 10, policy: idle_seconds}\n" + output;
    fail(Errc::invalid_argument, "unknown preset '" + std::string(name) + "'");
}

}  // namespace detail

inline const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names{"exp1", "exp2", "exp3", "exp4", "integrated"};
    return names;
}

inline std::string preset_text(std::string_view name) { return detail::preset_text_for(name); }

inline ExperimentConfig load_preset(std::string_view name) { return parse_config(preset_text(name)); }

// Same experiment under ideal conditions: no queue waits, overheads, staging or buffering delay.
inline ExperimentConfig idealized(ExperimentConfig c) {
    for (auto& s : c.sites) {
        const auto offset = s.queue.seed_offset;
        s.queue = QueueModel::constant(0.0);
        s.queue.seed_offset = offset;
    }
    c.simulation.dispatch_c0_s = 0.0;
    c.simulation.dispatch_c1_s = 0.0;
    c.simulation.bootstrap_s = 0.0;
    c.simulation.shutdown_s = 0.0;
    c.simulation.middleware_s = 0.0;
    c.simulation.staging = false;
    if (c.simulation.bridge) c.simulation.bridge->idle_threshold_s = 0.0;
    return c;
}

}  // namespace pilotsim
