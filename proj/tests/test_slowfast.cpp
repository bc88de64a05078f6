#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "rattle/slowfast.hpp"

using namespace rattle;

TEST(SlowFast, CubicRootsSolveTheEquation) {
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> ud(-3.0, 3.0);
    for (const auto& g : {slowfast::fitzhugh_nagumo(), slowfast::rattling_cubic(0.3)}) {
        for (int i = 0; i < 200; ++i) {
            const double u = ud(rng);
            const auto r = g.roots(u);
            ASSERT_TRUE(r.size() == 1 || r.size() == 3);
            for (double v : r) EXPECT_NEAR(g(u, v), 0.0, 1e-11);
            EXPECT_TRUE(std::is_sorted(r.begin(), r.end()));
        }
    }
}

TEST(SlowFast, RattlingCubicFoldAndLowerValue) {
    const double beta = 0.25;
    const auto g = slowfast::rattling_cubic(beta);
    const auto r = g.roots(beta);
    ASSERT_EQ(r.size(), 3u);
    EXPECT_NEAR(r.front(), -2.0, 1e-12);
    EXPECT_NEAR(r.back(), 1.0, 1e-6);
    EXPECT_FALSE(g.upper(beta + 1e-3).has_value());
    EXPECT_TRUE(g.lower(beta + 1e-3).has_value());
    EXPECT_TRUE(g.upper(beta - 1e-3).has_value());
}

TEST(SlowFast, FrozenFastVariableGivesHeatSolution) {
    // u = -c x^2 + (1 - 2c) t solves u_t = u_xx + 1 away from the ends
    for (bool implicit : {false, true}) {
        slowfast::SlowFastConfig cfg;
        cfg.c = 0.25;
        cfg.L = 8.0;
        cfg.dx = 0.05;
        cfg.T = 0.5;
        cfg.freeze_fast = true;
        cfg.implicit = implicit;
        if (implicit) cfg.dt = 1e-3;
        cfg.snapshot_times = {cfg.T};
        const auto r = slowfast::simulate_slowfast(cfg);
        const auto& s = r.snapshots.back();
        EXPECT_DOUBLE_EQ(s.t, cfg.T);
        for (std::size_t i = 0; i < r.x.size(); ++i) {
            if (std::abs(r.x[i]) > 3.0) continue;
            EXPECT_NEAR(s.u[i], -0.25 * r.x[i] * r.x[i] + 0.5 * cfg.T, 1e-4) << r.x[i];
            EXPECT_EQ(s.v[i], slowfast::initial_fast_value(cfg));
        }
    }
}

TEST(SlowFast, FastVariableRelaxesToStableBranch) {
    slowfast::SlowFastConfig cfg;
    cfg.delta = 1e-3;
    cfg.T = 2.0;
    cfg.snapshot_times = {2.0};
    const auto r = slowfast::simulate_slowfast(cfg);
    const auto b = slowfast::branch_classify(cfg.g, r.x, r.snapshots[0].u, r.snapshots[0].v);
    EXPECT_GE(b.on_branch_fraction, 0.95);
    // far from the origin nodes never reached the threshold and stay on the upper branch
    EXPECT_EQ(b.label.front(), slowfast::Branch::Upper);
    EXPECT_EQ(b.label.back(), slowfast::Branch::Upper);
}

TEST(SlowFast, ExplicitStabilityEnforced) {
    slowfast::SlowFastConfig cfg;
    cfg.dt = 0.5 * cfg.dx * cfg.dx;
    try {
        slowfast::simulate_slowfast(cfg);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), "StabilityViolation");
    }
    cfg.implicit = true;
    cfg.T = 0.01;
    EXPECT_NO_THROW(slowfast::simulate_slowfast(cfg));
}

TEST(SlowFast, BranchClassifierRunLengths) {
    const auto g = slowfast::rattling_cubic(0.0);
    std::vector<double> x, u, v;
    for (int i = 0; i <= 40; ++i) {
        x.push_back(0.1 * i);
        u.push_back(-0.1);
        const auto r = g.roots(-0.1);
        v.push_back((i / 5) % 2 == 0 ? r.back() : r.front());
    }
    const auto s = slowfast::branch_classify(g, x, u, v);
    EXPECT_DOUBLE_EQ(s.on_branch_fraction, 1.0);
    ASSERT_EQ(s.run_lengths.size(), 7u);
    for (double len : s.run_lengths) EXPECT_NEAR(len, 0.5, 1e-12);
    EXPECT_NEAR(s.median_run, 0.5, 1e-12);
}
