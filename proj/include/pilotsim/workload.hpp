#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "error.hpp"

namespace pilotsim {

using TaskId = std::string;

enum class FileOrigin { user_workstation, task_output };

struct FileRef {
    std::string id;
    std::uint64_t size_bytes = 0;
    FileOrigin origin = FileOrigin::user_workstation;

    bool operator==(const FileRef&) const = default;
};

struct Task {
    TaskId id;
    int cores = 1;
    double duration_s = 0.0;
    std::vector<FileRef> inputs;
    std::vector<FileRef> outputs;
    int stage = 0;

    bool operator==(const Task&) const = default;
};

enum class WorkloadKind { bot, staged };

inline constexpr std::uint64_t default_file_size_bytes = 200'000;

// Per-stage nominal durations for the ExTASY emulation; they add up to the 870 s
// aggregate profile of the four stages.
inline const std::vector<double> default_extasy_stage_durations_s{300.0, 300.0, 180.0, 90.0};

// Immutable collection of tasks plus the derived dependency graph.
class Workload {
public:
    Workload() = default;

    explicit Workload(std::vector<Task> tasks) : tasks_(std::move(tasks)) { build(); }

    const std::vector<Task>& tasks() const { return tasks_; }
    std::size_t size() const { return tasks_.size(); }
    bool empty() const { return tasks_.empty(); }
    int stages() const { return stages_; }
    WorkloadKind kind() const { return kind_; }

    const Task& task(std::size_t index) const { return tasks_.at(index); }

    std::size_t index_of(const TaskId& id) const {
        auto it = index_.find(id);
        require(it != index_.end(), Errc::invalid_argument, "unknown task id '" + id + "'");
        return it->second;
    }

    bool contains(const TaskId& id) const { return index_.contains(id); }

    // Indices of tasks producing at least one input of `index`; sorted, unique.
    const std::vector<std::size_t>& producers(std::size_t index) const { return producers_.at(index); }
    // Indices of tasks consuming at least one output of `index`; sorted, unique.
    const std::vector<std::size_t>& consumers(std::size_t index) const { return consumers_.at(index); }

    std::vector<std::size_t> stage_members(int stage) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < tasks_.size(); ++i)
            if (tasks_[i].stage == stage) out.push_back(i);
        return out;
    }

    int max_cores() const {
        int m = 0;
        for (const auto& t : tasks_) m = std::max(m, t.cores);
        return m;
    }

    double total_work_s() const {
        return std::accumulate(tasks_.begin(), tasks_.end(), 0.0,
                               [](double acc, const Task& t) { return acc + t.duration_s; });
    }

    // Kahn's algorithm over the producer edges; empty result only for an empty workload.
    std::vector<std::size_t> topological_order() const {
        std::vector<std::size_t> indegree(tasks_.size());
        for (std::size_t i = 0; i < tasks_.size(); ++i) indegree[i] = producers_[i].size();
        std::vector<std::size_t> frontier;
        for (std::size_t i = 0; i < tasks_.size(); ++i)
            if (indegree[i] == 0) frontier.push_back(i);
        std::vector<std::size_t> order;
        order.reserve(tasks_.size());
        for (std::size_t head = 0; head < frontier.size(); ++head) {
            const auto node = frontier[head];
            order.push_back(node);
            for (auto next : consumers_[node])
                if (--indegree[next] == 0) frontier.push_back(next);
        }
        require(order.size() == tasks_.size(), Errc::invalid_argument, "dependency graph has a cycle");
        return order;
    }

    bool operator==(const Workload& other) const { return tasks_ == other.tasks_; }

private:
    void build() {
        stages_ = 0;
        bool has_task_inputs = false;
        std::map<std::string, FileRef> files;
        std::unordered_map<std::string, std::size_t> producer_of;

        auto register_file = [&](const FileRef& f) {
            auto [it, inserted] = files.emplace(f.id, f);
            if (!inserted && !(it->second.size_bytes == f.size_bytes))
                fail(Errc::invalid_argument, "file '" + f.id + "' declared with conflicting sizes");
        };

        for (std::size_t i = 0; i < tasks_.size(); ++i) {
            const auto& t = tasks_[i];
            require(!t.id.empty(), Errc::invalid_argument, "task id must not be empty");
            require(t.cores >= 1, Errc::invalid_argument, "task '" + t.id + "': cores must be >= 1");
            require(t.duration_s > 0.0, Errc::invalid_argument,
                    "task '" + t.id + "': duration_s must be > 0");
            require(t.stage >= 0, Errc::invalid_argument, "task '" + t.id + "': stage must be >= 0");
            require(index_.emplace(t.id, i).second, Errc::invalid_argument,
                    "duplicate task id '" + t.id + "'");
            stages_ = std::max(stages_, t.stage + 1);
            for (const auto& f : t.outputs) {
                register_file(f);
                require(producer_of.emplace(f.id, i).second, Errc::invalid_argument,
                        "file '" + f.id + "' produced by more than one task");
            }
        }
        for (const auto& t : tasks_)
            for (const auto& f : t.inputs) register_file(f);

        producers_.assign(tasks_.size(), {});
        consumers_.assign(tasks_.size(), {});
        for (std::size_t i = 0; i < tasks_.size(); ++i) {
            const auto& t = tasks_[i];
            std::set<std::size_t> prods;
            for (const auto& f : t.inputs) {
                if (f.origin != FileOrigin::task_output) continue;
                has_task_inputs = true;
                auto it = producer_of.find(f.id);
                require(it != producer_of.end(), Errc::invalid_argument,
                        "task '" + t.id + "' consumes '" + f.id + "' which no task produces");
                require(tasks_[it->second].stage < t.stage, Errc::invalid_argument,
                        "task '" + t.id + "' consumes '" + f.id + "' from a stage that is not earlier");
                prods.insert(it->second);
            }
            producers_[i].assign(prods.begin(), prods.end());
            for (auto p : prods) consumers_[p].push_back(i);
        }
        kind_ = (stages_ <= 1 && !has_task_inputs) ? WorkloadKind::bot : WorkloadKind::staged;
        if (!tasks_.empty()) topological_order();
    }

    std::vector<Task> tasks_;
    std::unordered_map<TaskId, std::size_t> index_;
    std::vector<std::vector<std::size_t>> producers_;
    std::vector<std::vector<std::size_t>> consumers_;
    int stages_ = 0;
    WorkloadKind kind_ = WorkloadKind::bot;
};

inline Workload make_bot(long n, double duration_s, int cores_per_task) {
    require(n >= 1, Errc::invalid_argument, "bag of tasks needs n >= 1");
    require(duration_s > 0.0, Errc::invalid_argument, "task duration must be > 0");
    require(cores_per_task >= 1, Errc::invalid_argument, "cores per task must be >= 1");
    std::vector<Task> tasks;
    tasks.reserve(static_cast<std::size_t>(n));
    const auto width = std::to_string(n - 1).size();
    for (long i = 0; i < n; ++i) {
        auto num = std::to_string(i);
        num.insert(0, width - num.size(), '0');
        tasks.push_back(Task{"t" + num, cores_per_task, duration_s, {}, {}, 0});
    }
    return Workload(std::move(tasks));
}

// Four-stage simulation/analysis workflow:
//   stage 0: n 1-core tasks, inputs {green, azure, red}, one output each
//   stage 1: n 1-core tasks, input {stage-0 output i, red, blue}, one output each
//   stage 2: one n-core task, inputs {all stage-1 outputs, red}, n outputs
//   stage 3: one 1-core task, inputs {all stage-2 outputs, orange}, one output
inline Workload make_extasy(long n, std::uint64_t file_size_bytes = default_file_size_bytes,
                            const std::vector<double>& stage_durations_s = default_extasy_stage_durations_s) {
    require(n >= 1, Errc::invalid_argument, "workflow needs n >= 1");
    require(file_size_bytes >= 1, Errc::invalid_argument, "file size must be >= 1 byte");
    require(stage_durations_s.size() == 4, Errc::invalid_argument, "workflow needs 4 stage durations");
    for (double d : stage_durations_s)
        require(d > 0.0, Errc::invalid_argument, "stage durations must be > 0");

    auto user = [&](const char* name) { return FileRef{name, file_size_bytes, FileOrigin::user_workstation}; };
    auto produced = [&](std::string name) { return FileRef{std::move(name), file_size_bytes, FileOrigin::task_output}; };
    const auto width = std::to_string(n - 1).size();
    auto num = [&](long i) {
        auto s = std::to_string(i);
        s.insert(0, width - s.size(), '0');
        return s;
    };

    std::vector<Task> tasks;
    tasks.reserve(static_cast<std::size_t>(2 * n + 2));
    for (long i = 0; i < n; ++i)
        tasks.push_back(Task{"sim1." + num(i), 1, stage_durations_s[0],
                             {user("green"), user("azure"), user("red")},
                             {produced("sim1." + num(i) + ".out")}, 0});
    for (long i = 0; i < n; ++i)
        tasks.push_back(Task{"sim2." + num(i), 1, stage_durations_s[1],
                             {produced("sim1." + num(i) + ".out"), user("red"), user("blue")},
                             {produced("sim2." + num(i) + ".out")}, 1});
    Task analysis{"ana1", static_cast<int>(n), stage_durations_s[2], {}, {}, 2};
    for (long i = 0; i < n; ++i) analysis.inputs.push_back(produced("sim2." + num(i) + ".out"));
    analysis.inputs.push_back(user("red"));
    for (long i = 0; i < n; ++i) analysis.outputs.push_back(produced("ana1." + num(i) + ".out"));
    Task reduce{"ana2", 1, stage_durations_s[3], {}, {produced("ana2.out")}, 3};
    for (const auto& f : analysis.outputs) reduce.inputs.push_back(f);
    reduce.inputs.push_back(user("orange"));
    tasks.push_back(std::move(analysis));
    tasks.push_back(std::move(reduce));
    return Workload(std::move(tasks));
}

// Tasks whose task_output inputs all come from completed tasks, minus the completed ones.
// Returned in workload order.
inline std::vector<TaskId> ready_tasks(const Workload& w, const std::set<TaskId>& completed) {
    std::vector<char> done(w.size(), 0);
    for (const auto& id : completed) done[w.index_of(id)] = 1;
    std::vector<TaskId> out;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (done[i]) continue;
        const auto& prods = w.producers(i);
        if (std::all_of(prods.begin(), prods.end(), [&](std::size_t p) { return done[p] != 0; }))
            out.push_back(w.task(i).id);
    }
    return out;
}

// ---- JSON ------------------------------------------------------------------

inline const char* to_string(FileOrigin o) {
    return o == FileOrigin::task_output ? "task_output" : "user_workstation";
}

inline nlohmann::ordered_json file_to_json(const FileRef& f) {
    return {{"id", f.id}, {"size_bytes", f.size_bytes}, {"origin", to_string(f.origin)}};
}

inline nlohmann::ordered_json task_to_json(const Task& t) {
    nlohmann::ordered_json j;
    j["id"] = t.id;
    j["cores"] = t.cores;
    j["duration_s"] = t.duration_s;
    j["stage"] = t.stage;
    j["inputs"] = nlohmann::ordered_json::array();
    for (const auto& f : t.inputs) j["inputs"].push_back(file_to_json(f));
    j["outputs"] = nlohmann::ordered_json::array();
    for (const auto& f : t.outputs) j["outputs"].push_back(file_to_json(f));
    return j;
}

inline nlohmann::ordered_json to_json(const Workload& w) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& t : w.tasks()) arr.push_back(task_to_json(t));
    return arr;
}

namespace detail {

template <class Json>
const Json& field(const Json& obj, const char* name, const std::string& where) {
    auto it = obj.find(name);
    if (it == obj.end()) fail(Errc::parse_error, where + ": missing field '" + name + "'");
    return *it;
}

template <class Json>
FileRef file_from_json(const Json& j, FileOrigin default_origin, const std::string& where) {
    if (!j.is_object()) fail(Errc::parse_error, where + ": file reference must be an object");
    FileRef f;
    const auto& id = field(j, "id", where);
    if (!id.is_string()) fail(Errc::parse_error, where + ": file 'id' must be a string");
    f.id = id.template get<std::string>();
    const auto& size = field(j, "size_bytes", where);
    if (!size.is_number_integer() || size.template get<long long>() < 0)
        fail(Errc::parse_error, where + ": 'size_bytes' must be a nonnegative integer");
    f.size_bytes = size.template get<std::uint64_t>();
    f.origin = default_origin;
    if (auto it = j.find("origin"); it != j.end()) {
        const auto s = it->template get<std::string>();
        if (s == "task_output") f.origin = FileOrigin::task_output;
        else if (s == "user_workstation") f.origin = FileOrigin::user_workstation;
        else fail(Errc::parse_error, where + ": unknown file origin '" + s + "'");
    }
    return f;
}

}  // namespace detail

template <class Json>
Task task_from_json(const Json& j) {
    if (!j.is_object()) fail(Errc::parse_error, "task record must be an object");
    Task t;
    const auto& id = detail::field(j, "id", "task");
    if (!id.is_string()) fail(Errc::parse_error, "task: 'id' must be a string");
    t.id = id.template get<std::string>();
    const std::string where = "task '" + t.id + "'";
    const auto& cores = detail::field(j, "cores", where);
    if (!cores.is_number_integer()) fail(Errc::parse_error, where + ": 'cores' must be an integer");
    t.cores = cores.template get<int>();
    const auto& dur = detail::field(j, "duration_s", where);
    if (!dur.is_number()) fail(Errc::parse_error, where + ": 'duration_s' must be a number");
    t.duration_s = dur.template get<double>();
    if (auto it = j.find("stage"); it != j.end()) t.stage = it->template get<int>();
    for (const char* key : {"inputs", "outputs"}) {
        auto it = j.find(key);
        if (it == j.end()) continue;
        if (!it->is_array()) fail(Errc::parse_error, where + ": '" + key + "' must be an array");
        auto& dst = std::string(key) == "inputs" ? t.inputs : t.outputs;
        const auto def = std::string(key) == "outputs" ? FileOrigin::task_output : FileOrigin::user_workstation;
        for (const auto& f : *it) dst.push_back(detail::file_from_json(f, def, where));
    }
    return t;
}

template <class Json>
Workload workload_from_json(const Json& j) {
    if (!j.is_array()) fail(Errc::parse_error, "workload document must be an array of task records");
    std::vector<Task> tasks;
    tasks.reserve(j.size());
    for (const auto& rec : j) tasks.push_back(task_from_json(rec));
    return Workload(std::move(tasks));
}

}  // namespace pilotsim
