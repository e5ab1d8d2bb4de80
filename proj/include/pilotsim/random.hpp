#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace pilotsim {

// Counter-based draws: every value is a pure function of (seed, stream, index, lane),
// independent of how many other draws happened in between.
inline std::uint64_t draw_bits(std::uint64_t seed, std::uint64_t stream, std::uint64_t index,
                               std::uint32_t lane = 0) {
    auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v & 0xffffffffu); };
    auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
    std::seed_seq seq{lo(seed), hi(seed), lo(stream), hi(stream), lo(index), hi(index), lane};
    std::mt19937_64 engine(seq);
    return engine();
}

// Uniform on the open interval (0, 1).
inline double draw_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t index,
                           std::uint32_t lane = 0) {
    const auto bits = draw_bits(seed, stream, index, lane) >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

// Standard normal via Box-Muller over two lanes.
inline double draw_normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t index,
                          std::uint32_t lane = 0) {
    const double u1 = draw_uniform(seed, stream, index, 2 * lane);
    const double u2 = draw_uniform(seed, stream, index, 2 * lane + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// A seeded stream with a running draw index.
class RngStream {
public:
    RngStream() = default;
    RngStream(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }
    std::uint64_t next_index() const { return index_; }
    std::uint64_t take_index() { return index_++; }

private:
    std::uint64_t seed_ = 0;
    std::uint64_t stream_ = 0;
    std::uint64_t index_ = 0;
};

}  // namespace pilotsim
