#include <cmath>

#include <gtest/gtest.h>

#include "oracle/enumerator.hpp"
#include "support.hpp"

using namespace pilotsim;

TEST(Oracle, CountsEveryPartition) {
    // Bell numbers when cores >= tasks.
    EXPECT_EQ(oracle::best_makespan(std::vector<double>(5, 1.0), 5).schedules, 52u);
    EXPECT_EQ(oracle::best_makespan(std::vector<double>(8, 1.0), 8).schedules, 4140u);
    // Stirling sums when cores are scarce: S(4,1) + S(4,2) = 1 + 7.
    EXPECT_EQ(oracle::best_makespan(std::vector<double>(4, 1.0), 2).schedules, 8u);
}

TEST(Oracle, KnownOptima) {
    EXPECT_DOUBLE_EQ(oracle::best_makespan({3, 3, 2, 2, 2}, 2).makespan, 6.0);
    EXPECT_DOUBLE_EQ(oracle::best_makespan({5, 1, 1, 1}, 3).makespan, 5.0);
    EXPECT_DOUBLE_EQ(oracle::best_makespan({}, 3).makespan, 0.0);
}

TEST(Oracle, SimulatorMatchesEnumerator) {
    const double duration = 60.0;
    for (int n = 1; n <= 8; ++n) {
        for (int c = 1; c <= 8; ++c) {
            const auto ref = oracle::best_makespan(std::vector<double>(static_cast<std::size_t>(n), duration), c);
            const auto w = make_bot(n, duration, 1);
            const std::vector<Site> sites{testing_support::site("s", 64)};
            FixedShape shape{1, c, ref.makespan + 1.0, BindingMode::late_to_pilot, {}, PilotRefill::none, {}};
            const auto trace = run(plan_fixed(w, sites, shape), w, sites, testing_support::zero_overheads());
            EXPECT_DOUBLE_EQ(testing_support::last_done(trace), ref.makespan) << "n=" << n << " c=" << c;
            EXPECT_DOUBLE_EQ(ttc(trace).ttc_s, ref.makespan) << "n=" << n << " c=" << c;
            EXPECT_DOUBLE_EQ(ref.makespan, std::ceil(double(n) / c) * duration);
        }
    }
}
