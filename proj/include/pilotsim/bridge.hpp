#pragma once

#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "error.hpp"
#include "workload.hpp"

namespace pilotsim {

// Task record accepted by the submission service. There is deliberately no stage or
// workflow field: the service only ever sees independent tasks.
struct TaskSubmission {
    std::string id;
    std::string executable;
    std::vector<std::string> arguments;
    int cores = 1;
    double duration_s = 0.0;
    std::vector<FileRef> inputs;
    std::vector<FileRef> outputs;

    Task to_task() const {
        Task t{id, cores, duration_s, inputs, outputs, 0};
        for (auto& f : t.inputs) f.origin = FileOrigin::user_workstation;
        for (auto& f : t.outputs) f.origin = FileOrigin::task_output;
        return t;
    }

    static TaskSubmission from_task(const Task& t, std::string executable = "emulated") {
        TaskSubmission s;
        s.id = t.id;
        s.executable = std::move(executable);
        s.cores = t.cores;
        s.duration_s = t.duration_s;
        s.inputs = t.inputs;
        s.outputs = t.outputs;
        return s;
    }

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["id"] = id;
        j["executable"] = executable;
        j["arguments"] = arguments;
        j["cores"] = cores;
        j["duration_s"] = duration_s;
        auto files = [](const std::vector<FileRef>& refs) {
            auto arr = nlohmann::ordered_json::array();
            for (const auto& f : refs) arr.push_back({{"id", f.id}, {"size_bytes", f.size_bytes}});
            return arr;
        };
        j["inputs"] = files(inputs);
        j["outputs"] = files(outputs);
        return j;
    }
};

// Raised for schema violations; `field` names the offending member.
class SubmissionRejected : public Error {
public:
    SubmissionRejected(std::string field, const std::string& reason)
        : Error(Errc::parse_error, reason), field_(std::move(field)) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

inline TaskSubmission parse_submission(const nlohmann::json& j) {
    if (!j.is_object()) throw SubmissionRejected("", "task record must be a JSON object");
    auto member = [&](const char* name) -> const nlohmann::json& {
        auto it = j.find(name);
        if (it == j.end()) throw SubmissionRejected(name, std::string("missing required field '") + name + "'");
        return *it;
    };
    TaskSubmission s;
    const auto& id = member("id");
    if (!id.is_string() || id.get<std::string>().empty())
        throw SubmissionRejected("id", "field 'id' must be a nonempty string");
    s.id = id.get<std::string>();
    const auto& exe = member("executable");
    if (!exe.is_string() || exe.get<std::string>().empty())
        throw SubmissionRejected("executable", "field 'executable' must be a nonempty string");
    s.executable = exe.get<std::string>();
    const auto& cores = member("cores");
    if (!cores.is_number_integer() || cores.get<long long>() < 1)
        throw SubmissionRejected("cores", "field 'cores' must be an integer >= 1");
    s.cores = cores.get<int>();
    const auto& dur = member("duration_s");
    if (!dur.is_number() || !(dur.get<double>() > 0.0))
        throw SubmissionRejected("duration_s", "field 'duration_s' must be a number > 0");
    s.duration_s = dur.get<double>();
    if (auto it = j.find("arguments"); it != j.end()) {
        if (!it->is_array()) throw SubmissionRejected("arguments", "field 'arguments' must be an array");
        for (const auto& a : *it) {
            if (!a.is_string()) throw SubmissionRejected("arguments", "field 'arguments' must hold strings");
            s.arguments.push_back(a.get<std::string>());
        }
    }
    for (const char* key : {"inputs", "outputs"}) {
        auto it = j.find(key);
        if (it == j.end()) continue;
        if (!it->is_array()) throw SubmissionRejected(key, std::string("field '") + key + "' must be an array");
        auto& dst = std::string_view(key) == "inputs" ? s.inputs : s.outputs;
        for (const auto& f : *it) {
            if (!f.is_object() || !f.contains("id") || !f["id"].is_string() || !f.contains("size_bytes") ||
                !f["size_bytes"].is_number_integer() || f["size_bytes"].get<long long>() < 0)
                throw SubmissionRejected(key, std::string("entries of '") + key +
                                                  "' need a string 'id' and a nonnegative integer 'size_bytes'");
            dst.push_back({f["id"].get<std::string>(), f["size_bytes"].get<std::uint64_t>(),
                           FileOrigin::user_workstation});
        }
    }
    return s;
}

struct Acknowledgment {
    bool accepted = false;
    std::string task_id;
    int status = 0;  // HTTP-style status code
    std::string reason;
    std::string field;

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j{{"accepted", accepted}, {"id", task_id}};
        if (!reason.empty()) j["reason"] = reason;
        if (!field.empty()) j["field"] = field;
        return j;
    }
};

enum class FlushPolicy {
    idle_seconds,  // flush once no task arrived for `idle_threshold_s`
    rate_below,    // flush once the arrival rate over `rate_window_s` drops below `min_rate_per_s`
};

struct BufferOptions {
    double idle_threshold_s = 10.0;
    FlushPolicy policy = FlushPolicy::idle_seconds;
    double rate_window_s = 10.0;
    double min_rate_per_s = 0.1;
};

struct FlushRecord {
    double time_s = 0.0;
    std::vector<std::string> task_ids;
};

// Buffers task submissions and releases them as one self-contained bag of tasks once
// submissions go quiet. Flush decisions depend only on the buffer and the clock.
class SubmissionBuffer {
public:
    explicit SubmissionBuffer(BufferOptions opt = {}) : opt_(opt) {
        require(opt_.idle_threshold_s >= 0.0, Errc::invalid_argument, "idle threshold must be >= 0");
        require(opt_.rate_window_s > 0.0 && opt_.min_rate_per_s > 0.0, Errc::invalid_argument,
                "rate policy parameters must be > 0");
    }

    const BufferOptions& options() const { return opt_; }

    Acknowledgment submit(const nlohmann::json& record, double now) {
        std::string id_hint;
        if (record.is_object() && record.contains("id") && record["id"].is_string())
            id_hint = record["id"].get<std::string>();
        if (auto it = acks_.find(id_hint); !id_hint.empty() && it != acks_.end()) return it->second;
        TaskSubmission s;
        try {
            s = parse_submission(record);
        } catch (const SubmissionRejected& e) {
            return {false, id_hint, 400, e.what(), e.field()};
        }
        Acknowledgment ack{true, s.id, 201, {}, {}};
        acks_.emplace(s.id, ack);
        location_.emplace(s.id, -1);
        pending_.push_back(std::move(s));
        last_submit_ = now;
        arrivals_.push_back(now);
        return ack;
    }

    Acknowledgment submit_text(std::string_view body, double now) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(body);
        } catch (const nlohmann::json::exception& e) {
            return {false, {}, 400, std::string("malformed JSON: ") + e.what(), {}};
        }
        return submit(j, now);
    }

    bool should_flush(double now) const {
        if (pending_.empty()) return false;
        if (opt_.policy == FlushPolicy::idle_seconds) return now - last_submit_ >= opt_.idle_threshold_s - 1e-9;
        int recent = 0;
        for (double t : arrivals_)
            if (t > now - opt_.rate_window_s) ++recent;
        return static_cast<double>(recent) / opt_.rate_window_s < opt_.min_rate_per_s;
    }

    // Returns every pending task as one bag of tasks and empties the buffer, or nothing
    // when the flush condition does not hold yet.
    std::optional<Workload> idle_flush(double now) {
        if (!should_flush(now)) return std::nullopt;
        std::vector<Task> tasks;
        tasks.reserve(pending_.size());
        FlushRecord rec{now, {}};
        const auto index = static_cast<long>(history_.size());
        for (const auto& s : pending_) {
            tasks.push_back(s.to_task());
            rec.task_ids.push_back(s.id);
            location_[s.id] = index;
        }
        pending_.clear();
        arrivals_.clear();
        history_.push_back(std::move(rec));
        return Workload(std::move(tasks));
    }

    std::size_t pending_size() const { return pending_.size(); }
    double last_submit_time() const { return last_submit_; }
    const std::vector<FlushRecord>& history() const { return history_; }

    // -1 while pending, otherwise the index of the flush that released it.
    std::optional<long> location(const std::string& id) const {
        auto it = location_.find(id);
        if (it == location_.end()) return std::nullopt;
        return it->second;
    }

    std::optional<TaskSubmission> find(const std::string& id) const {
        for (const auto& s : pending_)
            if (s.id == id) return s;
        return std::nullopt;
    }

private:
    BufferOptions opt_;
    std::vector<TaskSubmission> pending_;
    std::deque<double> arrivals_;
    double last_submit_ = 0.0;
    std::map<std::string, Acknowledgment> acks_;
    std::map<std::string, long> location_;
    std::vector<FlushRecord> history_;
};

struct HttpResponse {
    int status = 200;
    std::string body;
};

// Transport-independent REST surface of the submission service:
//   POST /tasks, GET /tasks/{id}, GET /workloads, GET /health.
// All buffer access is serialized; a flush is atomic with respect to submissions.
class BridgeService {
public:
    using Clock = std::function<double()>;
    using FlushHandler = std::function<nlohmann::ordered_json(const Workload&, double)>;

    BridgeService(BufferOptions opt, Clock clock, FlushHandler on_flush = {})
        : buffer_(opt), clock_(std::move(clock)), on_flush_(std::move(on_flush)) {}

    HttpResponse handle(std::string_view method, std::string_view path, std::string_view body = {}) {
        std::lock_guard lock(mutex_);
        const double now = clock_();
        if (path == "/health") {
            if (method != "GET") return method_not_allowed();
            return {200, nlohmann::ordered_json{{"status", "ok"}, {"pending", buffer_.pending_size()}}.dump()};
        }
        if (path == "/tasks") {
            if (method != "POST") return method_not_allowed();
            const auto ack = buffer_.submit_text(body, now);
            return {ack.status, ack.to_json().dump()};
        }
        if (path.starts_with("/tasks/")) {
            if (method != "GET") return method_not_allowed();
            const std::string id(path.substr(7));
            const auto where = buffer_.location(id);
            if (!where) return {404, nlohmann::ordered_json{{"error", "unknown task"}, {"id", id}}.dump()};
            nlohmann::ordered_json j{{"id", id}};
            if (*where < 0) {
                j["status"] = "pending";
                if (auto s = buffer_.find(id)) j["task"] = s->to_json();
            } else {
                j["status"] = "flushed";
                j["workload"] = *where;
            }
            return {200, j.dump()};
        }
        if (path == "/workloads") {
            if (method != "GET") return method_not_allowed();
            auto arr = nlohmann::ordered_json::array();
            for (std::size_t i = 0; i < buffer_.history().size(); ++i) {
                const auto& h = buffer_.history()[i];
                nlohmann::ordered_json j{{"index", i}, {"time_s", h.time_s}, {"tasks", h.task_ids}};
                if (i < results_.size() && !results_[i].is_null()) j["result"] = results_[i];
                arr.push_back(std::move(j));
            }
            return {200, arr.dump()};
        }
        return {404, R"({"error":"not found"})"};
    }

    // Flushes if the policy says so; returns whether a workload was released.
    bool poll() {
        std::lock_guard lock(mutex_);
        const double now = clock_();
        auto w = buffer_.idle_flush(now);
        if (!w) return false;
        results_.push_back(on_flush_ ? on_flush_(*w, now) : nlohmann::ordered_json());
        return true;
    }

    std::size_t flush_count() const {
        std::lock_guard lock(mutex_);
        return buffer_.history().size();
    }

private:
    static HttpResponse method_not_allowed() { return {405, R"({"error":"method not allowed"})"}; }

    mutable std::mutex mutex_;
    SubmissionBuffer buffer_;
    Clock clock_;
    FlushHandler on_flush_;
    std::vector<nlohmann::ordered_json> results_;
};

}  // namespace pilotsim
