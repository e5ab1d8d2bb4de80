#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "random.hpp"

namespace pilotsim {

enum class QueueKind { constant, uniform, lognormal, trace_replay };

// Batch-queue wait distribution of one site.
//
// Every kind adds two deterministic terms on top of its base draw:
//   size_penalty_s_per_core * pilot_cores      (larger requests wait longer)
//   fairshare_s_per_pilot   * draw_index       (each earlier submission at the site
//                                               lowers the user's priority)
// The lognormal kind mixes a per-site normal factor shared by all draws of a seed with
// a per-draw factor, weighted by `site_correlation`, so pilots queued on the same site
// at the same time see similar waits.
struct QueueModel {
    QueueKind kind = QueueKind::constant;
    double value_s = 0.0;                // constant
    double low_s = 0.0, high_s = 0.0;    // uniform
    double mu = 0.0, sigma = 0.0;        // lognormal, of ln(wait_s)
    double site_correlation = 0.0;       // lognormal, in [0, 1]
    std::vector<double> trace_s;         // trace_replay, cycled by draw index
    double size_penalty_s_per_core = 0.0;
    double fairshare_s_per_pilot = 0.0;
    std::uint64_t seed_offset = 0;

    static QueueModel constant(double seconds) {
        QueueModel m;
        m.kind = QueueKind::constant;
        m.value_s = seconds;
        return m;
    }
    static QueueModel uniform(double low, double high) {
        QueueModel m;
        m.kind = QueueKind::uniform;
        m.low_s = low;
        m.high_s = high;
        return m;
    }
    static QueueModel lognormal(double mu, double sigma, double correlation = 0.0) {
        QueueModel m;
        m.kind = QueueKind::lognormal;
        m.mu = mu;
        m.sigma = sigma;
        m.site_correlation = correlation;
        return m;
    }
    static QueueModel replay(std::vector<double> waits) {
        QueueModel m;
        m.kind = QueueKind::trace_replay;
        m.trace_s = std::move(waits);
        return m;
    }

    void validate() const {
        auto finite_nonneg = [](double v) { return std::isfinite(v) && v >= 0.0; };
        require(finite_nonneg(size_penalty_s_per_core), Errc::invalid_argument, "size penalty must be >= 0");
        require(finite_nonneg(fairshare_s_per_pilot), Errc::invalid_argument, "fair-share penalty must be >= 0");
        switch (kind) {
            case QueueKind::constant:
                require(finite_nonneg(value_s), Errc::invalid_argument, "constant wait must be >= 0");
                break;
            case QueueKind::uniform:
                require(finite_nonneg(low_s) && finite_nonneg(high_s) && low_s <= high_s,
                        Errc::invalid_argument, "uniform wait needs 0 <= low <= high");
                break;
            case QueueKind::lognormal:
                require(std::isfinite(mu) && finite_nonneg(sigma), Errc::invalid_argument,
                        "lognormal wait needs finite mu and sigma >= 0");
                require(site_correlation >= 0.0 && site_correlation <= 1.0, Errc::invalid_argument,
                        "site correlation must lie in [0, 1]");
                break;
            case QueueKind::trace_replay:
                require(!trace_s.empty(), Errc::invalid_argument, "trace_replay needs at least one wait");
                for (double w : trace_s)
                    require(finite_nonneg(w), Errc::invalid_argument, "replayed waits must be >= 0");
                break;
        }
    }

    // Mean of the base distribution, without the size or fair-share terms.
    double expected_base_wait_s() const {
        switch (kind) {
            case QueueKind::constant: return value_s;
            case QueueKind::uniform: return 0.5 * (low_s + high_s);
            case QueueKind::lognormal: return std::exp(mu + 0.5 * sigma * sigma);
            case QueueKind::trace_replay:
                return std::accumulate(trace_s.begin(), trace_s.end(), 0.0) / static_cast<double>(trace_s.size());
        }
        return 0.0;
    }
};

inline const char* to_string(QueueKind k) {
    switch (k) {
        case QueueKind::constant: return "constant";
        case QueueKind::uniform: return "uniform";
        case QueueKind::lognormal: return "lognormal";
        case QueueKind::trace_replay: return "trace_replay";
    }
    return "?";
}

struct Site {
    std::string name;
    int total_cores = 1;
    int max_concurrent_pilots = 1;
    QueueModel queue;
    double bandwidth_bytes_per_s = 1.0e7;
    double staging_latency_s = 0.0;

    void validate() const {
        require(!name.empty(), Errc::invalid_argument, "site name must not be empty");
        require(total_cores >= 1, Errc::invalid_argument, "site '" + name + "': total_cores must be >= 1");
        require(max_concurrent_pilots >= 1, Errc::invalid_argument,
                "site '" + name + "': max_concurrent_pilots must be >= 1");
        require(bandwidth_bytes_per_s > 0.0, Errc::invalid_argument,
                "site '" + name + "': bandwidth must be > 0");
        require(staging_latency_s >= 0.0, Errc::invalid_argument,
                "site '" + name + "': staging latency must be >= 0");
        queue.validate();
    }

    // Seconds to move one file between the user workstation and this site.
    double transfer_s(std::uint64_t bytes) const {
        return staging_latency_s + static_cast<double>(bytes) / bandwidth_bytes_per_s;
    }
};

// Wait for draw `index` of a site's stream; a pure function of its arguments.
inline double queue_wait_at(const QueueModel& m, int pilot_cores, std::uint64_t seed, std::uint64_t index) {
    const std::uint64_t stream = m.seed_offset;
    double base = 0.0;
    switch (m.kind) {
        case QueueKind::constant: base = m.value_s; break;
        case QueueKind::uniform:
            base = m.low_s + (m.high_s - m.low_s) * draw_uniform(seed, stream, index);
            break;
        case QueueKind::lognormal: {
            // The site factor sits on a reserved index so it is shared by all draws.
            const double site_z = draw_normal(seed, stream, std::numeric_limits<std::uint64_t>::max());
            const double own_z = draw_normal(seed, stream, index);
            const double rho = m.site_correlation;
            const double z = std::sqrt(rho) * site_z + std::sqrt(1.0 - rho) * own_z;
            base = std::exp(m.mu + m.sigma * z);
            break;
        }
        case QueueKind::trace_replay: base = m.trace_s[index % m.trace_s.size()]; break;
    }
    const double wait = base + m.size_penalty_s_per_core * pilot_cores +
                        m.fairshare_s_per_pilot * static_cast<double>(index);
    return std::isfinite(wait) ? std::max(0.0, wait) : std::numeric_limits<double>::max();
}

inline double sample_queue_wait(const Site& site, int pilot_cores, RngStream& stream) {
    require(pilot_cores >= 1, Errc::invalid_argument, "pilot needs at least one core");
    require(pilot_cores <= site.total_cores, Errc::capacity_exceeded,
            "pilot of " + std::to_string(pilot_cores) + " cores exceeds site '" + site.name + "' (" +
                std::to_string(site.total_cores) + " cores)");
    return queue_wait_at(site.queue, pilot_cores, stream.seed(), stream.take_index());
}

// Mutable per-site accounting owned by the simulator.
struct SiteLoad {
    int cores_held = 0;      // by active pilots
    int pilots_queued = 0;
    int pilots_active = 0;
    double observed_wait_sum_s = 0.0;
    int observed_waits = 0;

    int live_pilots() const { return pilots_queued + pilots_active; }
};

struct CapabilitySnapshot {
    std::string site;
    int free_cores = 0;
    int queue_length = 0;
    double mean_wait_s = 0.0;
    double time_s = 0.0;
};

// One snapshot per site. `loads` may be empty (all sites idle) or parallel to `sites`.
inline std::vector<CapabilitySnapshot> bundle_query(std::span<const Site> sites, std::span<const SiteLoad> loads,
                                                    double now) {
    require(loads.empty() || loads.size() == sites.size(), Errc::invalid_argument,
            "site loads must be empty or parallel to sites");
    std::vector<CapabilitySnapshot> out;
    out.reserve(sites.size());
    for (std::size_t i = 0; i < sites.size(); ++i) {
        const auto& s = sites[i];
        const SiteLoad load = loads.empty() ? SiteLoad{} : loads[i];
        CapabilitySnapshot snap;
        snap.site = s.name;
        snap.free_cores = std::max(0, s.total_cores - load.cores_held);
        snap.queue_length = std::max(0, load.pilots_queued);
        snap.mean_wait_s = load.observed_waits > 0 ? load.observed_wait_sum_s / load.observed_waits
                                                   : s.queue.expected_base_wait_s();
        snap.time_s = now;
        out.push_back(std::move(snap));
    }
    return out;
}

}  // namespace pilotsim
