#include <gtest/gtest.h>

#include <cmath>

#include "rattle/rattling.hpp"

using namespace rattle;

namespace {

// Switch log on |n| <= N where, beyond the origin, node n switches iff pattern[n % len].
SwitchLog periodic_log(long N, double a, const std::vector<bool>& pattern, double horizon) {
    SwitchLog log;
    log.horizon = horizon;
    for (long n = -N; n <= N; ++n) {
        const long m = std::labs(n);
        const bool sw = m == 0 || pattern[static_cast<std::size_t>(m % static_cast<long>(pattern.size()))];
        const double t = a * static_cast<double>(m * m);
        log.records.push_back({n, sw && t <= horizon ? t : kNever});
    }
    return log;
}

} // namespace

TEST(Rattling, ExactQuadraticLawRecovered) {
    std::vector<SwitchRecord> recs;
    for (long n = 0; n <= 40; ++n) recs.push_back({n, 1.7 * n * n});
    const auto fit = rattling::fit_quadratic_law(recs);
    EXPECT_NEAR(fit.a_fit, 1.7, 1e-12);
    EXPECT_NEAR(fit.E_min, 0.0, 1e-9);
    EXPECT_EQ(fit.fitted, 31u);
}

TEST(Rattling, ResidualExponentOfPowerLaw) {
    std::vector<rattling::Residual> q;
    for (long n = 10; n <= 80; ++n) q.push_back({n, (n % 2 ? -1.0 : 1.0) * 0.3 * std::pow(n, 0.5)});
    EXPECT_NEAR(rattling::residual_exponent(q), 0.5, 1e-12);
}

TEST(Rattling, TooFewRecordsRejected) {
    std::vector<SwitchRecord> recs{{0, 0.0}, {1, 1.0}, {2, 4.0}};
    EXPECT_THROW(rattling::fit_quadratic_law(recs), Error);
}

TEST(Rattling, HorizonRuleDefersClassification) {
    const auto log = periodic_log(100, 1.0, {true, false}, 2500.0);
    rattling::QuadraticFit law;
    law.a_fit = 1.0;
    law.E_min = 1.0;
    EXPECT_EQ(rattling::classify(log, 40, law), rattling::NodeStatus::Switched);
    EXPECT_EQ(rattling::classify(log, 41, law), rattling::NodeStatus::NonSwitching);
    EXPECT_EQ(rattling::classify(log, 50, law), rattling::NodeStatus::Switched);
    EXPECT_EQ(rattling::classify(log, 49, law), rattling::NodeStatus::NonSwitching);
    EXPECT_EQ(rattling::classify(log, 51, law), rattling::NodeStatus::Undetermined);
    EXPECT_EQ(rattling::classify(log, 52, law), rattling::NodeStatus::Undetermined);
}

TEST(Rattling, RatioAndBlocksOnPeriodicPattern) {
    const auto log = periodic_log(200, 1.0, {true, true, false}, 1e9);
    rattling::QuadraticFit law;
    law.a_fit = 1.0;
    const auto r = rattling::switch_ratio(log, 1, rattling::guarded_extent(200), law);
    EXPECT_EQ(r.undetermined, 0);
    EXPECT_NEAR(r.ratio, 0.5, 0.01);
    const auto b = rattling::block_pattern(log, 2, 1, 20, 180, 2.0, -1.0, law);
    EXPECT_EQ(b.exact, b.blocks);
    EXPECT_TRUE(b.verdict);
    EXPECT_EQ(b.blocks, 2 * (180 - 3 - 20 + 1));
}

TEST(Rattling, BlockParameterChecks) {
    const auto log = periodic_log(50, 1.0, {true, false}, 1e9);
    rattling::QuadraticFit law;
    law.a_fit = 1.0;
    EXPECT_THROW(rattling::block_pattern(log, 2, 1, 0, 40, 2.0, -2.0, law), Error);
    EXPECT_THROW(rattling::block_pattern(log, 2, 2, 0, 40, 2.0, -2.0, law), Error);
    const auto none = rattling::switch_ratio(periodic_log(50, 1.0, {false}, 1e9), 1, 40, law);
    EXPECT_TRUE(std::isinf(none.ratio));
}

TEST(Rattling, GradientAndWeakLimitOnHandmadeTrajectory) {
    lattice1d::Trajectory traj;
    traj.N = 10;
    traj.times = {4.0};
    traj.u.push_back({});
    traj.xi.push_back({});
    for (long n = -10; n <= 10; ++n) {
        traj.u[0].push_back(-0.5 * static_cast<double>(n * n) + (n == 1 ? 0.75 : 0.0));
        traj.xi[0].push_back(std::labs(n) <= 2 ? (n % 2 ? 1 : -1) : 1);
    }
    SwitchLog log;
    for (long n = -10; n <= 10; ++n) log.records.push_back({n, std::labs(n) <= 2 ? 1.0 : kNever});
    const auto gb = rattling::gradient_bound(traj, log);
    // u on -2..2 is -2, -0.5, 0, 0.25, -2
    EXPECT_NEAR(gb.b, 2.25, 1e-12);
    EXPECT_EQ(gb.arg_k, 1);
    EXPECT_EQ(gb.samples, 4u);
    const auto prof = rattling::weak_limit_profile(traj, 0, 1.0, 1, 2.0, -2.0);
    ASSERT_EQ(prof.size(), 21u);
    EXPECT_DOUBLE_EQ(prof[10].average, -2.0);
    EXPECT_DOUBLE_EQ(prof[10].reference, 0.0);
    EXPECT_DOUBLE_EQ(prof[20].reference, 2.0);
    const auto wide = rattling::weak_limit_profile(traj, 0, 1.0, 3, 2.0, -2.0);
    EXPECT_EQ(wide.front().n, -9);
    EXPECT_NEAR(wide[9].average, (2.0 - 2.0 + 2.0) / 3.0, 1e-12);
}
