#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "config.hpp"
#include "error.hpp"
#include "metrics.hpp"
#include "simulator.hpp"
#include "trace.hpp"

namespace pilotsim {

struct RunResult {
    long size = 0;
    int repeat = 0;
    std::uint64_t seed = 0;
    std::size_t units = 0;
    std::size_t failed_units = 0;
    double ttc_ideal_s = 0.0;
    TtcBreakdown breakdown;
    double p_es = 0.0;
    bool exceeds_ideal = false;
    std::string trace_hash;
    std::string error;  // set when metrics could not be computed
    Trace trace;

    bool completed() const { return error.empty() && failed_units == 0; }
};

struct SizeReport {
    long size = 0;
    std::string error;  // planning failure; no runs then
    double ttc_ideal_s = 0.0;
    std::vector<RunResult> runs;
};

struct ExperimentReport {
    std::string name;
    std::vector<SizeReport> sizes;

    bool all_completed() const {
        for (const auto& s : sizes) {
            if (!s.error.empty()) return false;
            for (const auto& r : s.runs)
                if (!r.completed()) return false;
        }
        return true;
    }
};

// Metrics for one stored trace; pure, so reports can be rebuilt from traces alone.
inline RunResult evaluate_trace(Trace trace, long size, int repeat, std::uint64_t seed, double ideal_s) {
    RunResult r;
    r.size = size;
    r.repeat = repeat;
    r.seed = seed;
    r.ttc_ideal_s = ideal_s;
    for (const auto& rec : trace.records) {
        if (rec.entity_kind != EntityKind::unit) continue;
        if (rec.state == "new" && rec.ref != "requeued") ++r.units;
        if (rec.state == "failed") ++r.failed_units;
    }
    r.trace_hash = trace.hash();
    try {
        r.breakdown = ttc(trace);
        r.p_es = p_es(ideal_s, r.breakdown.ttc_s);
        r.exceeds_ideal = p_es_exceeds_ideal(ideal_s, r.breakdown.ttc_s);
    } catch (const Error& e) {
        r.error = e.what();
    }
    r.trace = std::move(trace);
    return r;
}

inline Trace simulate(const ExperimentConfig& c, const Workload& w, const ExecutionPlan& plan, std::uint64_t seed) {
    Simulation sim(plan, w, c.sites, c.simulation.sim_config(seed));
    return c.simulation.staged ? sim.run_staged() : sim.run();
}

// Runs every size × repeat. Repeat k uses seed = base seed + k for every size, so sizes
// are compared under the same queue draws. Independent runs execute on `threads` workers.
inline ExperimentReport run_experiment(const ExperimentConfig& c, unsigned threads = 0) {
    c.validate();
    ExperimentReport report;
    report.name = c.name;

    struct Job {
        std::size_t size_index;
        int repeat;
    };
    std::vector<Job> jobs;
    std::vector<Workload> workloads;
    std::vector<std::optional<ExecutionPlan>> plans;
    for (std::size_t i = 0; i < c.workload.sizes.size(); ++i) {
        SizeReport s;
        s.size = c.workload.sizes[i];
        workloads.push_back(c.workload.make(s.size));
        try {
            plans.push_back(c.plan_for(workloads.back()));
            s.ttc_ideal_s = ttc_ideal(*plans.back(), workloads.back());
            s.runs.resize(static_cast<std::size_t>(c.repeats));
            for (int k = 0; k < c.repeats; ++k) jobs.push_back({i, k});
        } catch (const Error& e) {
            plans.emplace_back();
            s.error = e.what();
        }
        report.sizes.push_back(std::move(s));
    }

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (auto j = next.fetch_add(1); j < jobs.size(); j = next.fetch_add(1)) {
            const auto& job = jobs[j];
            auto& size = report.sizes[job.size_index];
            const auto seed = c.seed + static_cast<std::uint64_t>(job.repeat);
            auto& slot = size.runs[static_cast<std::size_t>(job.repeat)];
            try {
                auto trace = simulate(c, workloads[job.size_index], *plans[job.size_index], seed);
                slot = evaluate_trace(std::move(trace), size.size, job.repeat, seed, size.ttc_ideal_s);
            } catch (const Error& e) {
                slot = {};
                slot.size = size.size;
                slot.repeat = job.repeat;
                slot.seed = seed;
                slot.error = e.what();
            }
        }
    };
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(1, jobs.size())));
    std::vector<std::jthread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    pool.clear();
    return report;
}

// ---- report files ----------------------------------------------------------------

// Shortest round-trip decimal form, so regenerated reports are byte-identical.
inline std::string format_number(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return ec == std::errc{} ? std::string(buf, end) : std::string("nan");
}

inline std::vector<std::string> csv_columns() {
    std::vector<std::string> cols{"experiment", "size", "repeat", "seed", "completed", "failed_units",
                                  "ttc_ideal_s", "p_es", "p_es_rounded", "exceeds_ideal"};
    for (const auto& f : breakdown_fields()) cols.push_back(f);
    cols.emplace_back("trace_hash");
    cols.emplace_back("error");
    return cols;
}

inline std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + "\"";
}

inline std::string runs_csv(const ExperimentReport& report) {
    std::ostringstream out;
    const auto cols = csv_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
    out << "\n";
    for (const auto& s : report.sizes) {
        for (const auto& r : s.runs) {
            out << report.name << "," << r.size << "," << r.repeat << "," << r.seed << ","
                << (r.completed() ? 1 : 0) << "," << r.failed_units << "," << format_number(r.ttc_ideal_s) << ","
                << format_number(r.p_es) << "," << std::lround(r.p_es) << "," << (r.exceeds_ideal ? 1 : 0);
            for (double v : breakdown_values(r.breakdown)) out << "," << format_number(v);
            out << "," << r.trace_hash << "," << csv_escape(r.error) << "\n";
        }
    }
    return out.str();
}

inline nlohmann::ordered_json summary_json(const ExperimentReport& report) {
    nlohmann::ordered_json j;
    j["experiment"] = report.name;
    j["all_completed"] = report.all_completed();
    j["sizes"] = nlohmann::ordered_json::array();
    for (const auto& s : report.sizes) {
        nlohmann::ordered_json e;
        e["size"] = s.size;
        if (!s.error.empty()) {
            e["error"] = s.error;
            j["sizes"].push_back(std::move(e));
            continue;
        }
        e["ttc_ideal_s"] = s.ttc_ideal_s;
        std::vector<TtcBreakdown> ok;
        std::vector<double> pes;
        std::size_t incomplete = 0;
        for (const auto& r : s.runs) {
            if (!r.completed()) ++incomplete;
            if (!r.error.empty()) continue;
            ok.push_back(r.breakdown);
            pes.push_back(r.p_es);
        }
        e["runs"] = s.runs.size();
        e["incomplete_runs"] = incomplete;
        if (!ok.empty()) {
            e["breakdown"] = to_json(aggregate(ok));
            e["p_es"] = to_json(describe(pes));
            e["p_es_rounded"] = std::lround(describe(pes).mean);
        }
        j["sizes"].push_back(std::move(e));
    }
    return j;
}

// One row per experiment: mean P_ES per size, unrounded and rounded.
inline std::string pes_table_markdown(std::span<const ExperimentReport> reports) {
    std::vector<long> sizes;
    for (const auto& r : reports)
        for (const auto& s : r.sizes)
            if (std::find(sizes.begin(), sizes.end(), s.size) == sizes.end()) sizes.push_back(s.size);
    std::sort(sizes.begin(), sizes.end());
    std::ostringstream out;
    out << "| experiment |";
    for (long n : sizes) out << " " << n << " |";
    out << "\n|---|";
    for (std::size_t i = 0; i < sizes.size(); ++i) out << "---|";
    out << "\n";
    for (const auto& r : reports) {
        out << "| " << r.name << " |";
        for (long n : sizes) {
            auto it = std::find_if(r.sizes.begin(), r.sizes.end(), [&](const SizeReport& s) { return s.size == n; });
            std::vector<double> pes;
            if (it != r.sizes.end())
                for (const auto& run : it->runs)
                    if (run.error.empty()) pes.push_back(run.p_es);
            if (pes.empty()) {
                out << " - |";
                continue;
            }
            const double mean = describe(pes).mean;
            std::ostringstream cell;
            cell.setf(std::ios::fixed);
            cell.precision(2);
            cell << mean << " (" << std::lround(mean) << "%)";
            out << " " << cell.str() << " |";
        }
        out << "\n";
    }
    return out.str();
}

inline std::string trace_file_name(long size, int repeat) {
    return "trace_" + std::to_string(size) + "_" + std::to_string(repeat) + ".ndjson";
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), Errc::invalid_argument, "cannot write '" + path.string() + "'");
    out << text;
}

inline void write_reports(const ExperimentReport& report, const std::filesystem::path& dir, bool traces) {
    std::filesystem::create_directories(dir);
    write_text(dir / "runs.csv", runs_csv(report));
    write_text(dir / "summary.json", summary_json(report).dump(2) + "\n");
    write_text(dir / "pes_table.md", pes_table_markdown(std::span(&report, 1)));
    if (!traces) return;
    std::filesystem::create_directories(dir / "traces");
    for (const auto& s : report.sizes)
        for (const auto& r : s.runs) write_text(dir / "traces" / trace_file_name(r.size, r.repeat), r.trace.to_ndjson());
}

// Rebuilds a report from the traces written by write_reports(traces = true).
inline ExperimentReport report_from_traces(const ExperimentConfig& c, const std::filesystem::path& dir) {
    ExperimentReport report;
    report.name = c.name;
    for (long n : c.workload.sizes) {
        SizeReport s;
        s.size = n;
        try {
            const auto w = c.workload.make(n);
            s.ttc_ideal_s = ttc_ideal(c.plan_for(w), w);
        } catch (const Error& e) {
            s.error = e.what();
            report.sizes.push_back(std::move(s));
            continue;
        }
        for (int k = 0; k < c.repeats; ++k) {
            const auto path = dir / "traces" / trace_file_name(n, k);
            std::ifstream in(path, std::ios::binary);
            require(in.good(), Errc::invalid_argument, "missing trace '" + path.string() + "'");
            std::ostringstream text;
            text << in.rdbuf();
            s.runs.push_back(evaluate_trace(Trace::from_ndjson(text.str()), n, k,
                                            c.seed + static_cast<std::uint64_t>(k), s.ttc_ideal_s));
        }
        report.sizes.push_back(std::move(s));
    }
    return report;
}

}  // namespace pilotsim
