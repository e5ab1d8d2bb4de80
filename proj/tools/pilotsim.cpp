// Experiment runner and submission service.
//
//   pilotsim run configs/exp3.yaml --repeats 5 --out out/exp3
//   pilotsim run --preset integrated --traces
//   pilotsim run configs/exp1.yaml --validate
//   pilotsim report configs/exp3.yaml --out out/exp3      (rebuild reports from stored traces)
//   pilotsim presets [name]
//   pilotsim --serve --port 8080

#include <csignal>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "pilotsim/bridge_http.hpp"
#include "pilotsim/pilotsim.hpp"

namespace {

pilotsim::BridgeServer* active_server = nullptr;

void on_signal(int) {
    if (active_server) active_server->stop();
}

pilotsim::ExperimentConfig load(const std::string& path, const std::string& preset) {
    if (!preset.empty()) return pilotsim::load_preset(preset);
    if (path.empty()) throw CLI::ValidationError("run", "give a config file or --preset");
    return pilotsim::load_config(path);
}

void print_summary(const pilotsim::ExperimentReport& report) {
    for (const auto& s : report.sizes) {
        if (!s.error.empty()) {
            std::cout << report.name << " size " << s.size << ": " << s.error << "\n";
            continue;
        }
        std::vector<pilotsim::TtcBreakdown> ok;
        std::vector<double> pes;
        std::size_t incomplete = 0;
        for (const auto& r : s.runs) {
            if (!r.completed()) ++incomplete;
            if (!r.error.empty()) continue;
            ok.push_back(r.breakdown);
            pes.push_back(r.p_es);
        }
        if (ok.empty()) {
            std::cout << report.name << " size " << s.size << ": no run produced metrics\n";
            continue;
        }
        const auto agg = pilotsim::aggregate(ok);
        std::printf("%s size %ld: TTC %.1f s (sd %.1f)  Tw %.1f s  TTC_i %.0f s  P_ES %.1f%%%s\n",
                    report.name.c_str(), s.size, agg.at("ttc_s").mean, agg.at("ttc_s").stddev, agg.at("tw_s").mean,
                    s.ttc_ideal_s, pilotsim::describe(pes).mean,
                    incomplete ? ("  [" + std::to_string(incomplete) + " incomplete]").c_str() : "");
    }
}

int serve(const std::string& host, int port, double idle_s, const std::string& policy,
          const std::string& config_path) {
    using namespace pilotsim;
    const auto cfg = config_path.empty() ? load_preset("integrated") : load_config(config_path);
    BufferOptions opt;
    opt.idle_threshold_s = idle_s;
    opt.policy = policy == "rate_below" ? FlushPolicy::rate_below : FlushPolicy::idle_seconds;
    std::uint64_t flushes = 0;
    BridgeServer server(opt, [&](const Workload& w, double now) {
        const auto plan = cfg.plan_for(w);
        const auto seed = cfg.seed + flushes++;
        const auto result = evaluate_trace(simulate(cfg, w, plan, seed), static_cast<long>(w.size()), 0, seed,
                                           ttc_ideal(plan, w));
        nlohmann::ordered_json j{{"flushed_at_s", now}, {"tasks", w.size()}, {"seed", seed}};
        if (result.error.empty()) {
            j["ttc_s"] = result.breakdown.ttc_s;
            j["tw_s"] = result.breakdown.tw_s;
            j["p_es"] = result.p_es;
        } else {
            j["error"] = result.error;
        }
        std::cerr << "flush: " << j.dump() << "\n";
        return j;
    });
    const bool bound = port == 0 ? (port = server.bind_any(host)) > 0 : server.bind(host, port);
    if (!bound) {
        std::cerr << "cannot bind " << host << ":" << port << "\n";
        return 1;
    }
    std::cerr << "listening on http://" << host << ":" << port << " (idle threshold " << idle_s << " s)\n";
    active_server = &server;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    server.serve();
    active_server = nullptr;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Pilot-job execution strategy simulator"};
    app.require_subcommand(0, 1);

    bool serve_flag = false;
    std::string host = "127.0.0.1";
    int port = 8080;
    double idle_s = 10.0;
    std::string policy = "idle_seconds";
    std::string serve_config;
    app.add_flag("--serve", serve_flag, "Start the task submission service");
    app.add_option("--host", host, "Service bind address");
    app.add_option("--port", port, "Service port (0 picks a free one)");
    app.add_option("--idle", idle_s, "Seconds without submissions before a flush");
    app.add_option("--policy", policy, "Flush policy")->check(CLI::IsMember({"idle_seconds", "rate_below"}));
    app.add_option("--sim-config", serve_config, "Experiment config whose sites and strategy run flushed workloads");

    std::string config_path, preset, out;
    std::optional<std::uint64_t> seed;
    std::optional<int> repeats;
    unsigned threads = 0;
    bool traces = false, validate_only = false;

    auto* run = app.add_subcommand("run", "Run an experiment and write reports");
    run->add_option("config", config_path, "Experiment config file");
    run->add_option("--preset", preset, "Bundled preset instead of a file")
        ->check(CLI::IsMember(pilotsim::preset_names()));
    run->add_option("--seed", seed, "Base seed (repeat k uses seed + k)");
    run->add_option("--repeats", repeats, "Repeats per workload size")->check(CLI::PositiveNumber);
    run->add_option("--out", out, "Output directory (default from config)");
    run->add_option("--threads", threads, "Worker threads (default: all cores)");
    run->add_flag("--traces", traces, "Also write one NDJSON trace per run");
    run->add_flag("--validate", validate_only, "Check the config and exit");

    auto* report = app.add_subcommand("report", "Rebuild reports from stored traces");
    report->add_option("config", config_path, "Experiment config file");
    report->add_option("--preset", preset, "Bundled preset instead of a file")
        ->check(CLI::IsMember(pilotsim::preset_names()));
    report->add_option("--out", out, "Directory holding traces/ (default from config)");
    report->add_option("--seed", seed, "Base seed the traces were run with");
    report->add_option("--repeats", repeats, "Repeats the traces were run with")->check(CLI::PositiveNumber);

    std::string preset_name;
    auto* presets = app.add_subcommand("presets", "List bundled presets or print one");
    presets->add_option("name", preset_name, "Preset to print")->check(CLI::IsMember(pilotsim::preset_names()));

    CLI11_PARSE(app, argc, argv);

    try {
        if (serve_flag) return serve(host, port, idle_s, policy, serve_config);

        if (presets->parsed()) {
            if (preset_name.empty())
                for (const auto& n : pilotsim::preset_names()) std::cout << n << "\n";
            else
                std::cout << pilotsim::preset_text(preset_name);
            return 0;
        }

        if (run->parsed()) {
            auto cfg = load(config_path, preset);
            if (seed) cfg.seed = *seed;
            if (repeats) cfg.repeats = *repeats;
            if (!out.empty()) cfg.output.dir = out;
            if (traces) cfg.output.traces = true;
            cfg.validate();
            if (validate_only) {
                std::cout << cfg.name << ": config ok\n";
                return 0;
            }
            const auto rep = pilotsim::run_experiment(cfg, threads);
            pilotsim::write_reports(rep, cfg.output.dir, cfg.output.traces);
            print_summary(rep);
            std::cout << "reports in " << cfg.output.dir << "\n";
            return rep.all_completed() ? 0 : 1;
        }

        if (report->parsed()) {
            auto cfg = load(config_path, preset);
            if (seed) cfg.seed = *seed;
            if (repeats) cfg.repeats = *repeats;
            if (!out.empty()) cfg.output.dir = out;
            const auto rep = pilotsim::report_from_traces(cfg, cfg.output.dir);
            pilotsim::write_reports(rep, cfg.output.dir, false);
            print_summary(rep);
            return rep.all_completed() ? 0 : 1;
        }

        std::cout << app.help();
        return 0;
    } catch (const CLI::Error& e) {
        return app.exit(e);
    } catch (const pilotsim::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
