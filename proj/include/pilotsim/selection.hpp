#pragma once

#include <deque>
#include <limits>
#include <span>
#include <string>

#include "error.hpp"

namespace pilotsim {

// Inputs of the three-factor site score.
struct SiteScoreState {
    std::string site;
    int queued_count = 0;
    double completion_rate = 0.0;  // successful completions per second
    double failure_rate = 0.0;     // failures per second
};

struct SelectionWeights {
    double queued = 1.0;
    double completion = 1.0;
    double failure = 10.0;
};

inline double site_score(const SiteScoreState& s, const SelectionWeights& w) {
    return w.completion * s.completion_rate - w.queued * s.queued_count - w.failure * s.failure_rate;
}

// Highest score wins; equal scores go to the lexicographically smallest name.
inline std::string site_select(std::span<const SiteScoreState> states, const SelectionWeights& weights) {
    require(!states.empty(), Errc::invalid_argument, "site selection needs at least one site");
    const SiteScoreState* best = nullptr;
    double best_score = -std::numeric_limits<double>::infinity();
    for (const auto& s : states) {
        require(s.completion_rate >= 0.0 && s.failure_rate >= 0.0, Errc::invalid_argument,
                "site '" + s.site + "': rates must be >= 0");
        const double score = site_score(s, weights);
        if (best == nullptr || score > best_score || (score == best_score && s.site < best->site)) {
            best = &s;
            best_score = score;
        }
    }
    return best->site;
}

struct ThrottleLimits {
    int max_queued = std::numeric_limits<int>::max();
    double max_submit_rate = std::numeric_limits<double>::infinity();  // submissions per window
    double window_s = 1.0;
};

struct ThrottleState {
    int queued_count = 0;
    std::deque<double> recent_submits;  // submission timestamps, oldest first

    void record_submit(double now) { recent_submits.push_back(now); }

    void expire(double now, double window_s) {
        while (!recent_submits.empty() && recent_submits.front() <= now - window_s) recent_submits.pop_front();
    }

    int submits_in_window(double now, double window_s) const {
        int n = 0;
        for (double t : recent_submits)
            if (t > now - window_s) ++n;
        return n;
    }
};

// Both throttles must pass: the queued-task cap and the submission-rate cap.
inline bool throttle_gate(const ThrottleState& state, const ThrottleLimits& limits, double now) {
    require(limits.max_queued > 0 && limits.max_submit_rate > 0.0 && limits.window_s > 0.0,
            Errc::invalid_argument, "throttle limits must be positive");
    if (state.queued_count >= limits.max_queued) return false;
    return static_cast<double>(state.submits_in_window(now, limits.window_s)) < limits.max_submit_rate;
}

}  // namespace pilotsim
