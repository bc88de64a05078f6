#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "rattle/lattice2d.hpp"

using namespace rattle;
using lattice2d::Coord;
using lattice2d::LatticeKind;

namespace {

// Fixed-step RK4 on the unreduced graph ball of radius M; returns switch times keyed by coordinate.
std::map<Coord, double> rk4_reference(LatticeKind k, double c, double h1, double h_m1, long M, double T, double dt) {
    const auto nodes = lattice2d::ball(k, M);
    std::map<Coord, std::size_t> index;
    for (std::size_t i = 0; i < nodes.size(); ++i) index[nodes[i]] = i;
    std::vector<std::vector<std::size_t>> adj(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i)
        for (const auto& s : lattice2d::detail::steps(k)) {
            const auto it = index.find({nodes[i][0] + s[0], nodes[i][1] + s[1]});
            if (it != index.end()) adj[i].push_back(it->second);
        }
    const std::size_t n = nodes.size();
    std::vector<double> u(n), ts(n, INFINITY);
    std::vector<int> xi(n, 1);
    for (std::size_t i = 0; i < n; ++i) {
        const auto [x, y] = lattice2d::detail::position(k, nodes[i]);
        u[i] = -c * (x * x + y * y);
    }
    xi[0] = -1;
    ts[0] = 0.0;
    auto rhs = [&](const std::vector<double>& v, std::vector<double>& d) {
        for (std::size_t i = 0; i < n; ++i) {
            double lap = 0.0;
            for (std::size_t j : adj[i]) lap += v[j] - v[i];
            d[i] = lap + (xi[i] > 0 ? h1 : h_m1);
        }
    };
    std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);
    const long steps = std::lround(T / dt);
    for (long s = 0; s < steps; ++s) {
        rhs(u, k1);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = u[i] + 0.5 * dt * k1[i];
        rhs(tmp, k2);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = u[i] + 0.5 * dt * k2[i];
        rhs(tmp, k3);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = u[i] + dt * k3[i];
        rhs(tmp, k4);
        for (std::size_t i = 0; i < n; ++i) {
            const double next = u[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            if (xi[i] > 0 && next >= 0.0) {
                ts[i] = s * dt + dt * (-u[i]) / (next - u[i]);
                xi[i] = -1;
            }
            u[i] = next;
        }
    }
    std::map<Coord, double> out;
    for (std::size_t i = 0; i < n; ++i) out[nodes[i]] = ts[i];
    return out;
}

void expect_equivariant(const lattice2d::Grid2D& g) {
    std::map<Coord, double> by;
    for (std::size_t i = 0; i < g.size(); ++i) by[g.coords[i]] = g.switch_time[i];
    for (const auto& [p, t] : by) {
        const Coord r = lattice2d::detail::rotate(g.kind, p);
        const Coord m = lattice2d::detail::reflect(p);
        EXPECT_EQ(by.at(r), t);
        EXPECT_EQ(by.at(m), t);
    }
}

} // namespace

TEST(Lattice2D, BallSizes) {
    EXPECT_EQ(lattice2d::ball(LatticeKind::Square, 3).size(), 25u);      // 2r^2 + 2r + 1
    EXPECT_EQ(lattice2d::ball(LatticeKind::Triangular, 3).size(), 37u);  // 3r^2 + 3r + 1
}

TEST(Lattice2D, RotationHasCorrectOrder) {
    for (auto k : {LatticeKind::Square, LatticeKind::Triangular}) {
        const int order = k == LatticeKind::Square ? 4 : 6;
        Coord p{3, -1};
        for (int i = 0; i < order; ++i) {
            if (i > 0) EXPECT_NE(p, (Coord{3, -1}));
            EXPECT_EQ(lattice2d::detail::ring(k, p), lattice2d::detail::ring(k, {3, -1}));
            p = lattice2d::detail::rotate(k, p);
        }
        EXPECT_EQ(p, (Coord{3, -1}));
    }
}

TEST(Lattice2D, SquareMatchesUnreducedReference) {
    lattice2d::Config2D cfg;
    cfg.kind = LatticeKind::Square;
    cfg.radius = 12;
    cfg.T = 12.0;
    const auto g = lattice2d::simulate2d(cfg);
    const auto ref = rk4_reference(LatticeKind::Square, 0.5, 3.0, -3.0, 40, 12.0, 5e-4);
    int compared = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double r = ref.at(g.coords[i]);
        if (std::isfinite(r) && r < 11.5) {
            EXPECT_NEAR(g.switch_time[i], r, 5e-3);
            ++compared;
        } else if (!std::isfinite(r)) {
            EXPECT_FALSE(g.switch_time[i] < 11.5);
        }
    }
    EXPECT_GE(compared, 9);
}

TEST(Lattice2D, TriangularMatchesUnreducedReference) {
    lattice2d::Config2D cfg;
    cfg.kind = LatticeKind::Triangular;
    cfg.h1 = 4.5;
    cfg.h_m1 = -4.5;
    cfg.radius = 10;
    cfg.T = 10.0;
    const auto g = lattice2d::simulate2d(cfg);
    const auto ref = rk4_reference(LatticeKind::Triangular, 0.5, 4.5, -4.5, 35, 10.0, 5e-4);
    int compared = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double r = ref.at(g.coords[i]);
        if (std::isfinite(r) && r < 9.5) {
            EXPECT_NEAR(g.switch_time[i], r, 5e-3);
            ++compared;
        } else if (!std::isfinite(r)) {
            EXPECT_FALSE(g.switch_time[i] < 9.5);
        }
    }
    EXPECT_GE(compared, 7);
}

TEST(Lattice2D, Equivariance) {
    for (auto k : {LatticeKind::Square, LatticeKind::Triangular}) {
        lattice2d::Config2D cfg;
        cfg.kind = k;
        cfg.radius = 15;
        cfg.h1 = k == LatticeKind::Square ? 3.0 : 4.5;
        cfg.h_m1 = -cfg.h1;
        cfg.T = 40.0;
        expect_equivariant(lattice2d::simulate2d(cfg));
    }
}

TEST(Lattice2D, NoSwitchBelowThreshold) {
    lattice2d::Config2D cfg;
    cfg.radius = 10;
    cfg.h1 = 2.0;
    cfg.h_m1 = -1.0;
    cfg.T = 30.0;
    const auto g = lattice2d::simulate2d(cfg);
    for (std::size_t i = 1; i < g.size(); ++i) EXPECT_FALSE(g.switched_by(i, cfg.T));
    EXPECT_DOUBLE_EQ(cfg.no_switch_threshold(), 2.0);
}

TEST(Lattice2D, RenderAndCensus) {
    lattice2d::Config2D cfg;
    cfg.radius = 8;
    cfg.T = 10.0;
    const auto g = lattice2d::simulate2d(cfg);
    const auto svg = lattice2d::render_switch_map(g, cfg.T);
    EXPECT_NE(svg.find("<svg"), std::string::npos);
    const auto census = lattice2d::ring_census(g, cfg.T);
    ASSERT_EQ(census.size(), 9u);
    EXPECT_EQ(census[0].first, 1);
    EXPECT_EQ(census[3].second, 12);
}

TEST(Lattice2D, ParseKind) {
    EXPECT_EQ(lattice2d::parse_kind("triangular"), LatticeKind::Triangular);
    EXPECT_THROW(lattice2d::parse_kind("hex"), Error);
}
