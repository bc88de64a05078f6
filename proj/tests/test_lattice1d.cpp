#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "rattle/coeff.hpp"
#include "rattle/lattice1d.hpp"

using namespace rattle;

namespace {

// Fixed-step RK4 on the full lattice |n| <= M with insulated ends; a node switches
// (once, no lower threshold) when u_n reaches 0, located by linear interpolation.
std::vector<double> rk4_switch_times(double c, double h1, double h_m1, long M, double T, double dt, long report) {
    const std::size_t size = static_cast<std::size_t>(2 * M + 1);
    std::vector<double> u(size), ts(size, INFINITY);
    std::vector<int> xi(size, 1);
    for (long n = -M; n <= M; ++n) u[static_cast<std::size_t>(n + M)] = -c * static_cast<double>(n * n);
    ts[static_cast<std::size_t>(M)] = 0.0;
    xi[static_cast<std::size_t>(M)] = -1;
    auto rhs = [&](const std::vector<double>& x, std::vector<double>& d) {
        for (std::size_t i = 0; i < size; ++i) {
            const double l = i > 0 ? x[i - 1] : x[i];
            const double r = i + 1 < size ? x[i + 1] : x[i];
            d[i] = l - 2.0 * x[i] + r + (xi[i] > 0 ? h1 : h_m1);
        }
    };
    std::vector<double> k1(size), k2(size), k3(size), k4(size), tmp(size);
    const long steps = static_cast<long>(std::llround(T / dt));
    for (long s = 0; s < steps; ++s) {
        const double t = s * dt;
        rhs(u, k1);
        for (std::size_t i = 0; i < size; ++i) tmp[i] = u[i] + 0.5 * dt * k1[i];
        rhs(tmp, k2);
        for (std::size_t i = 0; i < size; ++i) tmp[i] = u[i] + 0.5 * dt * k2[i];
        rhs(tmp, k3);
        for (std::size_t i = 0; i < size; ++i) tmp[i] = u[i] + dt * k3[i];
        rhs(tmp, k4);
        for (std::size_t i = 0; i < size; ++i) {
            const double next = u[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            if (xi[i] > 0 && next >= 0.0) {
                ts[i] = t + dt * (-u[i]) / (next - u[i]);
                xi[i] = -1;
            }
            u[i] = next;
        }
    }
    return std::vector<double>(ts.begin() + M - report, ts.begin() + M + report + 1);
}

} // namespace

TEST(Lattice1D, MatchesFixedStepReference) {
    lattice1d::LatticeConfig cfg;
    cfg.c = 0.5;
    cfg.h1 = 2.0;
    cfg.h_m1 = -1.0;
    cfg.N = 20;
    cfg.T = 40.0;
    const auto sim = lattice1d::simulate(cfg);
    const auto ref = rk4_switch_times(0.5, 2.0, -1.0, 60, 40.0, 2e-4, 20);
    long switched = 0;
    for (long n = -20; n <= 20; ++n) {
        const double a = sim.t_switch(n), b = ref[static_cast<std::size_t>(n + 20)];
        if (std::isfinite(b) && b < 39.0) {
            ++switched;
            EXPECT_NEAR(a, b, 2e-3) << "n=" << n;
        } else if (!std::isfinite(b)) {
            EXPECT_FALSE(std::isfinite(a) && a < 39.0) << "n=" << n;
        }
    }
    EXPECT_GE(switched, 5);
}

TEST(Lattice1D, SuperpositionReproducesSimulation) {
    lattice1d::LatticeConfig cfg;
    cfg.N = 40;
    cfg.T = 1.3349427634 * 100.0 + 20.0;
    cfg.sample_times = {30.0, 90.0};
    const auto sim = lattice1d::simulate(cfg);
    for (std::size_t k = 0; k < cfg.sample_times.size(); ++k)
        for (long n = -8; n <= 8; n += 2) {
            const double ref = lattice1d::superpose_solution(0.5, 2.0, sim.log.records, n, sim.trajectory.times[k]);
            EXPECT_NEAR(sim.trajectory.value(n, k), ref, 1e-6) << n;
        }
    std::vector<SwitchRecord> prior;
    for (long n = -4; n <= 4; ++n) prior.push_back({n, sim.t_switch(n)});
    const auto t5 = lattice1d::superposition_switch_time(0.5, 2.0, prior, 5, 0.0, sim.t_switch(5) + 2.0, 0.0, 0.05);
    ASSERT_TRUE(t5.has_value());
    EXPECT_NEAR(*t5, sim.t_switch(5), 1e-7);
}

TEST(Lattice1D, MirrorSymmetric) {
    lattice1d::LatticeConfig cfg;
    cfg.N = 30;
    cfg.T = 300.0;
    cfg.h_m1 = -2.0;
    const auto sim = lattice1d::simulate(cfg);
    for (long n = 1; n <= 30; ++n) EXPECT_EQ(sim.t_switch(n), sim.t_switch(-n));
    EXPECT_EQ(sim.t_switch(0), 0.0);
}

TEST(Lattice1D, SubcriticalSourceNeverSwitches) {
    for (double h_m1 : {0.0, -1.0}) {
        lattice1d::LatticeConfig cfg;
        cfg.h1 = 1.0;
        cfg.h_m1 = h_m1;
        cfg.N = 80;
        cfg.T = 50.0;
        const auto sim = lattice1d::simulate(cfg);
        for (const auto& r : sim.log.records)
            if (r.n != 0) EXPECT_FALSE(r.switched()) << r.n;
    }
}

TEST(Lattice1D, GrowthRateMatchesCoefficient) {
    lattice1d::LatticeConfig cfg;
    cfg.N = 60;
    const double a = coeff::solve_a(0.5, 2.0).a;
    cfg.T = a * 900.0 + 30.0;
    const auto sim = lattice1d::simulate(cfg);
    EXPECT_NEAR(sim.t_switch(30) / (a * 900.0), 1.0, 0.01);
}

TEST(Lattice1D, ContaminationIsReported) {
    lattice1d::LatticeConfig cfg;
    cfg.N = 20;
    cfg.T = 15000.0;
    try {
        lattice1d::simulate(cfg);
        FAIL() << "expected BoundaryContamination";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::BoundaryContamination);
    }
}

TEST(Lattice1D, ValidationErrors) {
    lattice1d::LatticeConfig cfg;
    cfg.N = 5;
    EXPECT_THROW(lattice1d::simulate(cfg), Error);
    cfg.N = 20;
    cfg.h_m1 = 1.0;
    EXPECT_THROW(lattice1d::simulate(cfg), Error);
    cfg.h_m1 = 0.0;
    cfg.perturb = {1.0};
    EXPECT_THROW(lattice1d::simulate(cfg), Error);
}

TEST(Lattice1D, PerturbationRespected) {
    lattice1d::LatticeConfig cfg;
    cfg.N = 20;
    cfg.T = 5.0;
    cfg.sample_times = {0.0};
    cfg.perturb.assign(21, 0.0);
    cfg.perturb[3] = -0.25;
    const auto sim = lattice1d::simulate(cfg);
    EXPECT_NEAR(sim.trajectory.value(3, 0), -4.5 - 0.25, 1e-12);
    EXPECT_NEAR(sim.trajectory.value(-3, 0), -4.5 - 0.25, 1e-12);
}

TEST(Lattice1D, RescaleRoundTrip) {
    lattice1d::LatticeConfig cfg;
    cfg.N = 20;
    cfg.T = 20.0;
    cfg.sample_times = {5.0, 20.0};
    const auto sim = lattice1d::simulate(cfg);
    std::mt19937 rng(3);
    for (double eps : {0.1, 0.37, 2.0}) {
        const auto phys = lattice1d::rescale(eps, sim.trajectory);
        const auto back = lattice1d::unscale(eps, phys);
        for (std::size_t k = 0; k < back.times.size(); ++k) {
            EXPECT_NEAR(back.times[k], sim.trajectory.times[k], 1e-12 * sim.trajectory.times[k]);
            const long n = std::uniform_int_distribution<long>(-20, 20)(rng);
            EXPECT_NEAR(back.value(n, k), sim.trajectory.value(n, k), 1e-12 * (1.0 + std::abs(sim.trajectory.value(n, k))));
            EXPECT_DOUBLE_EQ(phys.value(n, k), eps * eps * sim.trajectory.value(n, k));
        }
        const auto log = lattice1d::rescale(eps, sim.log);
        EXPECT_DOUBLE_EQ(log.records[21].t_switch, eps * eps * sim.log.records[21].t_switch);
    }
}
