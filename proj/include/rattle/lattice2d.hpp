#pragma once

// Relay lattices on the square and triangular grids with radially quadratic
// data u(0) = -c |x|^2, switched only at the origin.
//
// Nodes inside the graph ball of radius R are reported. The dynamics are
// integrated for the deviation from the free solution
//     -c |x|^2 + (h1 - c deg s) t,     deg = 4 (square) or 6 (triangular),
// on a ball padded past R, reduced to one representative per orbit of the
// lattice point group (order 8 or 12). The reduced graph carries edge
// multiplicities, so symmetric data stay exactly symmetric and the unfolded
// fields are equivariant node for node.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <numbers>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "rattle/engine.hpp"
#include "rattle/error.hpp"
#include "rattle/io.hpp"

namespace rattle::lattice2d {

enum class LatticeKind { Square, Triangular };

inline std::string to_string(LatticeKind k) { return k == LatticeKind::Square ? "square" : "triangular"; }
inline LatticeKind parse_kind(const std::string& s) {
    if (s == "square") return LatticeKind::Square;
    if (s == "triangular") return LatticeKind::Triangular;
    throw validation_error("InvalidArgument", "lattice must be 'square' or 'triangular', got '" + s + "'");
}

using Coord = std::array<int, 2>;

namespace detail {

inline int degree(LatticeKind k) { return k == LatticeKind::Square ? 4 : 6; }

inline const std::vector<Coord>& steps(LatticeKind k) {
    static const std::vector<Coord> sq{{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
    static const std::vector<Coord> tri{{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, -1}, {-1, 1}};
    return k == LatticeKind::Square ? sq : tri;
}

/// Graph distance to the origin (axial coordinates for the triangular lattice).
inline int ring(LatticeKind k, Coord p) {
    const int a = std::abs(p[0]), b = std::abs(p[1]);
    if (k == LatticeKind::Square) return a + b;
    return (a + b + std::abs(p[0] + p[1])) / 2;
}

inline std::pair<double, double> position(LatticeKind k, Coord p) {
    if (k == LatticeKind::Square) return {p[0], p[1]};
    return {p[0] + 0.5 * p[1], 0.5 * std::numbers::sqrt3 * p[1]};
}

inline Coord rotate(LatticeKind k, Coord p) {
    if (k == LatticeKind::Square) return {-p[1], p[0]};
    return {-p[1], p[0] + p[1]};
}
inline Coord reflect(Coord p) { return {p[1], p[0]}; }

/// Full point-group orbit of p (8 or 12 images, possibly repeated).
inline std::vector<Coord> orbit(LatticeKind k, Coord p) {
    const int order = k == LatticeKind::Square ? 4 : 6;
    std::vector<Coord> out;
    Coord q = p;
    for (int r = 0; r < order; ++r) {
        out.push_back(q);
        out.push_back(reflect(q));
        q = rotate(k, q);
    }
    return out;
}

inline Coord canonical(LatticeKind k, Coord p) {
    const auto o = orbit(k, p);
    return *std::min_element(o.begin(), o.end());
}

inline std::uint64_t key(Coord p) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(p[0])) << 32) | static_cast<std::uint32_t>(p[1]);
}

} // namespace detail

struct Grid2D {
    LatticeKind kind = LatticeKind::Square;
    long radius = 0;
    double horizon = 0.0;
    std::vector<Coord> coords;
    std::vector<std::pair<double, double>> positions;
    std::vector<std::vector<std::size_t>> adjacency;
    std::vector<int> rings;
    std::vector<double> u;             ///< at the horizon
    std::vector<int> xi;               ///< at the horizon
    std::vector<double> switch_time;   ///< kNever if the node did not switch

    std::size_t size() const noexcept { return coords.size(); }
    bool switched_by(std::size_t i, double t) const { return switch_time[i] <= t; }
};

/// Nodes of the graph ball of radius r, sorted by (ring, coordinates).
inline std::vector<Coord> ball(LatticeKind k, long r) {
    std::vector<Coord> out;
    const int R = static_cast<int>(r);
    for (int i = -R; i <= R; ++i)
        for (int j = -R; j <= R; ++j)
            if (detail::ring(k, {i, j}) <= R) out.push_back({i, j});
    std::sort(out.begin(), out.end(), [k](Coord a, Coord b) {
        const int ra = detail::ring(k, a), rb = detail::ring(k, b);
        return ra != rb ? ra < rb : a < b;
    });
    return out;
}

inline Grid2D make_grid(LatticeKind k, long radius) {
    if (radius < 0) throw validation_error("InvalidArgument", "radius must be >= 0");
    Grid2D g;
    g.kind = k;
    g.radius = radius;
    g.coords = ball(k, radius);
    std::unordered_map<std::uint64_t, std::size_t> index;
    for (std::size_t i = 0; i < g.coords.size(); ++i) index.emplace(detail::key(g.coords[i]), i);
    g.adjacency.resize(g.coords.size());
    for (std::size_t i = 0; i < g.coords.size(); ++i) {
        g.positions.push_back(detail::position(k, g.coords[i]));
        g.rings.push_back(detail::ring(k, g.coords[i]));
        for (const auto& s : detail::steps(k)) {
            const auto it = index.find(detail::key({g.coords[i][0] + s[0], g.coords[i][1] + s[1]}));
            if (it != index.end()) g.adjacency[i].push_back(it->second);
        }
    }
    g.u.assign(g.size(), 0.0);
    g.xi.assign(g.size(), 1);
    g.switch_time.assign(g.size(), kNever);
    return g;
}

struct Config2D {
    double c = 0.5;
    double h1 = 3.0;
    double h_m1 = -3.0;
    LatticeKind kind = LatticeKind::Square;
    long radius = 60;
    double T = 100.0;
    double laplacian_scale = 1.0;
    std::optional<double> boundary_margin;   ///< default 0.1 c R^2 1e-3
    std::optional<long> pad;                 ///< default ceil(8 sqrt(T)) + 10
    double tol_event = 1e-10;
    double tol_state = 1e-6;

    double margin() const { return boundary_margin.value_or(0.1 * c * static_cast<double>(radius * radius) * 1e-3); }
    long padding() const { return pad.value_or(static_cast<long>(std::ceil(8.0 * std::sqrt(T))) + 10); }
    /// h1 at or below this value cannot switch any node beyond the origin.
    double no_switch_threshold() const { return c * detail::degree(kind) * laplacian_scale; }

    void validate() const {
        const auto bad = [](const std::string& what) { return validation_error("InvalidLatticeConfig", what); };
        if (!(c > 0.0)) throw bad("c must be positive");
        if (!(h_m1 <= 0.0 && 0.0 <= h1)) throw bad("branch values must satisfy h_m1 <= 0 <= h1");
        if (radius < 0) throw bad("radius must be >= 0");
        if (!(T > 0.0)) throw bad("horizon T must be positive");
        if (!(laplacian_scale > 0.0)) throw bad("laplacian_scale must be positive");
        if (!(tol_event > 0.0 && tol_state > 0.0)) throw bad("tolerances must be positive");
        if (pad && *pad < 0) throw bad("padding must be >= 0");
    }
};

inline Grid2D simulate2d(const Config2D& cfg) {
    cfg.validate();
    const LatticeKind k = cfg.kind;
    const long outer = cfg.radius + cfg.padding();
    const std::vector<Coord> nodes = ball(k, outer);

    // one representative per orbit, in ring order
    std::unordered_map<std::uint64_t, std::size_t> rep_index;
    std::vector<Coord> reps;
    for (const auto& p : nodes) {
        if (detail::canonical(k, p) != p) continue;
        rep_index.emplace(detail::key(p), reps.size());
        reps.push_back(p);
    }
    const auto rep_of = [&](Coord p) -> std::optional<std::size_t> {
        if (detail::ring(k, p) > outer) return std::nullopt;
        return rep_index.at(detail::key(detail::canonical(k, p)));
    };

    engine::Config ec;
    const std::size_t m = reps.size();
    std::size_t window = 0;
    for (std::size_t i = 0; i < m; ++i) {
        std::vector<std::pair<std::size_t, double>> adj;
        for (const auto& s : detail::steps(k)) {
            const auto j = rep_of({reps[i][0] + s[0], reps[i][1] + s[1]});
            if (!j) continue;
            auto it = std::find_if(adj.begin(), adj.end(), [&](const auto& e) { return e.first == *j; });
            if (it == adj.end()) adj.emplace_back(*j, cfg.laplacian_scale);
            else it->second += cfg.laplacian_scale;
        }
        ec.graph.add_node(adj);
        if (detail::ring(k, reps[i]) <= cfg.radius) window = i + 1;
    }
    ec.x0.assign(m, 0.0);
    ec.base.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        const auto [x, y] = detail::position(k, reps[i]);
        ec.base[i] = -cfg.c * (x * x + y * y);
    }
    ec.drift.assign(m, cfg.h1 - cfg.no_switch_threshold());
    ec.source.assign(m, -cfg.h1);
    ec.xi0.assign(m, 1);
    ec.xi0[0] = -1;
    ec.relay = engine::RelaySpec{std::nullopt, 0.0, cfg.h1, cfg.h_m1};
    ec.horizon = cfg.T;
    ec.tol_event = cfg.tol_event;
    ec.tol_touch = 1e-12 * cfg.c * static_cast<double>(std::max<long>(1, cfg.radius * cfg.radius));
    for (std::size_t i = 0; i < window; ++i)
        if (detail::ring(k, reps[i]) > cfg.radius - 5) ec.monitor_nodes.push_back(i);
    ec.monitor_level = -cfg.margin();
    ec.max_u = cfg.tol_state;

    const engine::Result res = engine::simulate(ec);

    Grid2D g = make_grid(k, cfg.radius);
    g.horizon = cfg.T;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const std::size_t r = *rep_of(g.coords[i]);
        g.u[i] = res.final_u[r];
        g.xi[i] = res.final_xi[r];
        g.switch_time[i] = r == 0 ? 0.0 : res.switch_time[r];
    }
    return g;
}

/// One polygon per node (square or hexagon), grey if switched by t, black otherwise.
inline std::string render_switch_map(const Grid2D& g, double t, double canvas = 720.0) {
    io::Svg svg(canvas, canvas);
    double extent = 0.5;
    for (const auto& [x, y] : g.positions) extent = std::max({extent, std::abs(x) + 0.6, std::abs(y) + 0.6});
    extent = io::round_2sig(extent);
    const double scale = canvas / (2.0 * extent);
    const auto map = [&](double x, double y) { return std::pair{canvas / 2 + x * scale, canvas / 2 - y * scale}; };
    for (std::size_t i = 0; i < g.size(); ++i) {
        const auto [cx, cy] = g.positions[i];
        std::vector<std::pair<double, double>> pts;
        if (g.kind == LatticeKind::Square) {
            for (auto [dx, dy] : {std::pair{-0.5, -0.5}, {0.5, -0.5}, {0.5, 0.5}, {-0.5, 0.5}})
                pts.push_back(map(cx + dx, cy + dy));
        } else {
            const double rad = 1.0 / std::numbers::sqrt3;
            for (int v = 0; v < 6; ++v) {
                const double ang = std::numbers::pi / 6.0 + v * std::numbers::pi / 3.0;
                pts.push_back(map(cx + rad * std::cos(ang), cy + rad * std::sin(ang)));
            }
        }
        svg.polygon(pts, g.switched_by(i, t) ? "#9a9a9a" : "#111111");
    }
    return svg.str();
}

/// Switched-node count per ring at time t.
inline std::vector<std::pair<long, long>> ring_census(const Grid2D& g, double t) {
    std::vector<std::pair<long, long>> out(static_cast<std::size_t>(g.radius + 1), {0, 0});
    for (std::size_t i = 0; i < g.size(); ++i) {
        auto& [sw, total] = out[static_cast<std::size_t>(g.rings[i])];
        ++total;
        if (g.switched_by(i, t)) ++sw;
    }
    return out;
}

} // namespace rattle::lattice2d
