#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "rattle/engine.hpp"
#include "rattle/transverse.hpp"

using namespace rattle;

namespace {

double phi_cos(double x) { return 0.2 / std::numbers::pi * std::cos(std::numbers::pi * x); }

transverse::TransverseProblem standard_problem(std::size_t cells = 2000) {
    return transverse::make_problem(phi_cos, cells, 0.5, 0.0, 1.0, 0.0, 0.02);
}

double curve_at(const transverse::BoundaryCurve& c, double t) {
    for (std::size_t k = 0; k + 1 < c.times.size(); ++k)
        if (t <= c.times[k + 1]) {
            const double w = (t - c.times[k]) / (c.times[k + 1] - c.times[k]);
            return (1.0 - w) * c.b[k] + w * c.b[k + 1];
        }
    return c.b.back();
}

// Max error of Crank-Nicolson against u = e^{-pi^2 t} cos(pi x) + h t (forcing h, insulated ends).
double manufactured_error(std::size_t cells, std::size_t steps) {
    const double h = 0.7, T = 0.05;
    auto p = transverse::make_problem([](double x) { return std::cos(std::numbers::pi * x); }, cells, 0.5, 10.0, h, h, T);
    p.time_steps = steps;
    const auto f = transverse::heat_solve(p, [h](std::size_t, std::vector<double>& F) { std::fill(F.begin(), F.end(), h); });
    double err = 0.0;
    const double decay = std::exp(-std::numbers::pi * std::numbers::pi * T);
    for (std::size_t i = 0; i < cells; ++i)
        err = std::max(err, std::abs(f.values.back()[i] - (decay * std::cos(std::numbers::pi * f.x[i]) + h * T)));
    return err;
}

} // namespace

TEST(Transverse, CrankNicolsonSecondOrder) {
    const double e1 = manufactured_error(100, 50), e2 = manufactured_error(200, 100), e3 = manufactured_error(400, 200);
    EXPECT_NEAR(std::log2(e1 / e2), 2.0, 0.15);
    EXPECT_NEAR(std::log2(e2 / e3), 2.0, 0.15);
}

TEST(Transverse, FixedPointConverges) {
    const auto p = standard_problem();
    const auto r = transverse::fixed_point_solve(p, 1e-8);
    EXPECT_LE(r.residual, 1e-6);
    EXPECT_DOUBLE_EQ(r.T, p.T);
    EXPECT_DOUBLE_EQ(r.curve.b.front(), 0.5);
    for (std::size_t k = 1; k < r.curve.b.size(); ++k) EXPECT_GE(r.curve.b[k], r.curve.b[k - 1]);
    EXPECT_GT(r.curve.b.back(), 0.55);
    const auto again = transverse::apply_R(p, r.curve);
    EXPECT_LE(again.sup_distance(r.curve), 1e-6);
}

TEST(Transverse, IndependentOfInitialGuess) {
    const auto p = standard_problem();
    const auto r1 = transverse::fixed_point_solve(p, 1e-8);
    auto ramp = transverse::constant_curve(p, 0.5);
    for (std::size_t k = 0; k < ramp.b.size(); ++k) ramp.b[k] = 0.5 + 0.3 * ramp.times[k] / p.T;
    const auto r2 = transverse::fixed_point_solve(p, 1e-8, 200, ramp);
    EXPECT_LE(r1.curve.sup_distance(r2.curve), 1e-5);
}

TEST(Transverse, ContinuityExponent) {
    const auto p = standard_problem();
    const auto r = transverse::fixed_point_solve(p, 1e-8);
    const auto probe = transverse::continuity_probe(p, r.curve, {1e-2, 1e-3, 1e-4});
    EXPECT_GE(probe.exponent, 0.25);
}

TEST(Transverse, AgreesWithRelayLattice) {
    const auto p = standard_problem();
    const auto r = transverse::fixed_point_solve(p, 1e-8);

    const std::size_t n = 400;
    const double h = 1.0 / n, w = 1.0 / (h * h);
    engine::Config ec;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::pair<std::size_t, double>> adj;
        if (i > 0) adj.emplace_back(i - 1, w);
        if (i + 1 < n) adj.emplace_back(i + 1, w);
        ec.graph.add_node(adj);
        const double x = (i + 0.5) * h;
        ec.x0.push_back(phi_cos(x));
        ec.xi0.push_back(x < 0.5 ? -1 : 1);
    }
    ec.relay = engine::RelaySpec{std::nullopt, 0.0, 1.0, 0.0};
    ec.horizon = p.T;
    const auto res = engine::simulate(ec);
    int compared = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = res.switch_time[i];
        if (!std::isfinite(t) || t <= 0.0) continue;
        ++compared;
        EXPECT_NEAR(curve_at(r.curve, t), (i + 0.5) * h, 1.5 * h) << "node " << i;
    }
    EXPECT_GE(compared, 10);
}

TEST(Transverse, InconsistentDataRejected) {
    auto p = transverse::make_problem([](double x) { return 0.1 - x * 0.01; }, 100, 0.5, 0.0, 1.0, 0.0, 0.02);
    EXPECT_THROW(transverse::fixed_point_solve(p), Error);
}

TEST(Transverse, LostTransversalityShrinksHorizon) {
    const auto p = transverse::make_problem(phi_cos, 800, 0.5, 0.0, 1.0, 0.0, 0.1);
    const auto r = transverse::fixed_point_solve(p, 1e-8);
    EXPECT_LT(r.T, p.T);
    EXPECT_LE(r.residual, 1e-8);
}
