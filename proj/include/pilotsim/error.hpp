#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pilotsim {

enum class Errc {
    invalid_argument,
    capacity_exceeded,
    rejected_submission,
    unschedulable,
    invalid_state,
    infeasible_plan,
    incomplete_trace,
    parse_error,
};

inline std::string_view to_string(Errc code) {
    switch (code) {
        case Errc::invalid_argument: return "invalid-argument";
        case Errc::capacity_exceeded: return "capacity-exceeded";
        case Errc::rejected_submission: return "rejected-submission";
        case Errc::unschedulable: return "unschedulable";
        case Errc::invalid_state: return "invalid-state";
        case Errc::infeasible_plan: return "infeasible-plan";
        case Errc::incomplete_trace: return "incomplete-trace";
        case Errc::parse_error: return "parse-error";
    }
    return "unknown";
}

// All library failures surface as this exception; `code()` carries the category.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, Errc code, const std::string& what) {
    if (!cond) fail(code, what);
}

}  // namespace pilotsim
