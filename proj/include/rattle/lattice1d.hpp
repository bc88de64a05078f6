#pragma once

// The rescaled 1-D relay lattice
//     u_n' = u_{n+1} - 2u_n + u_{n-1} + H(u_n),   u_n(0) = -c n^2,
// with thresholds alpha = -inf, beta = 0, node 0 initially switched.
//
// The window |n| <= N is integrated on its fundamental domain 0 <= n <= N
// (u_{-1} = u_1), which makes u_n = u_{-n} and t_n = t_{-n} exact. The
// integrated variable is the deviation w = u + c n^2 - (h1 - 2c) t from the
// switch-free solution of the infinite lattice; w obeys
//     w_n' = (Delta w)_n + H(u_n) - h1
// and is truncated with a zero-flux end beyond the reported window: the
// integrated half-lattice extends `padding()` nodes past n = N so that the
// reflected deviation does not reach the window within the horizon.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "rattle/engine.hpp"
#include "rattle/error.hpp"
#include "rattle/green.hpp"
#include "rattle/records.hpp"

namespace rattle::lattice1d {

struct LatticeConfig {
    double c = 0.5;
    double h1 = 2.0;
    double h_m1 = 0.0;
    long N = 100;
    double T = 100.0;
    double tol_event = 1e-10;
    double tol_state = 1e-6;
    std::optional<double> boundary_margin; ///< default 0.1 c N^2 1e-3
    std::optional<double> tol_touch;       ///< default 1e-12 c N^2
    double abs_tol = 1e-10;
    double rel_tol = 1e-12;
    std::vector<double> sample_times;
    std::vector<double> perturb;           ///< optional symmetric perturbation of u(0), indexed 0..N
    std::optional<long> pad;               ///< extra integrated nodes past N, default ceil(10 sqrt(T)) + 20

    double margin() const { return boundary_margin.value_or(0.1 * c * static_cast<double>(N * N) * 1e-3); }
    long padding() const { return pad.value_or(static_cast<long>(std::ceil(10.0 * std::sqrt(T))) + 20); }
    double touch() const { return tol_touch.value_or(1e-12 * c * static_cast<double>(std::max<long>(1, N * N))); }

    void validate() const {
        const auto bad = [](const std::string& what) { return validation_error("InvalidLatticeConfig", what); };
        if (!(c > 0.0)) throw bad("c must be positive");
        if (!(h_m1 <= 0.0 && 0.0 <= h1)) throw bad("branch values must satisfy h_m1 <= 0 <= h1");
        if (N < 10) throw bad("window half-width N must be >= 10");
        if (!(T > 0.0)) throw bad("horizon T must be positive");
        if (!(tol_event > 0.0 && tol_state > 0.0 && abs_tol > 0.0 && rel_tol > 0.0)) throw bad("tolerances must be positive");
        if (!perturb.empty() && perturb.size() != static_cast<std::size_t>(N + 1))
            throw bad("perturbation must have N+1 entries");
        if (pad && *pad < 0) throw bad("padding must be >= 0");
    }
};

/// Field samples on the full window, u[k][n + N].
struct Trajectory {
    long N = 0;
    double spacing = 1.0;    ///< lattice spacing of the node positions (eps after rescaling)
    std::vector<double> times;
    std::vector<std::vector<double>> u;
    std::vector<std::vector<int>> xi;

    double value(long n, std::size_t k) const { return u.at(k).at(static_cast<std::size_t>(n + N)); }
    int config(long n, std::size_t k) const { return xi.at(k).at(static_cast<std::size_t>(n + N)); }
};

struct Simulation {
    LatticeConfig config;
    Trajectory trajectory;
    SwitchLog log;           ///< records for every n in [-N, N]
    std::vector<double> final_u;
    std::size_t steps = 0;

    double t_switch(long n) const {
        return log.records.at(static_cast<std::size_t>(n + config.N)).t_switch;
    }
};

namespace detail {

inline engine::Config engine_config(const LatticeConfig& cfg) {
    const std::size_t window = static_cast<std::size_t>(cfg.N + 1);
    const std::size_t m = window + static_cast<std::size_t>(cfg.padding());
    engine::Config ec;
    for (std::size_t i = 0; i < m; ++i) {
        std::vector<std::pair<std::size_t, double>> adj;
        if (i == 0) adj.emplace_back(1, 2.0);
        else {
            adj.emplace_back(i - 1, 1.0);
            if (i + 1 < m) adj.emplace_back(i + 1, 1.0);
        }
        ec.graph.add_node(adj);
    }
    ec.x0.assign(m, 0.0);
    std::copy(cfg.perturb.begin(), cfg.perturb.end(), ec.x0.begin());
    ec.base.resize(m);
    for (std::size_t i = 0; i < m; ++i) ec.base[i] = -cfg.c * static_cast<double>(i * i);
    ec.drift.assign(m, cfg.h1 - 2.0 * cfg.c);
    ec.source.assign(m, -cfg.h1);
    ec.xi0.assign(m, 1);
    ec.xi0[0] = -1;
    ec.relay = engine::RelaySpec{std::nullopt, 0.0, cfg.h1, cfg.h_m1};
    ec.horizon = cfg.T;
    ec.abs_tol = cfg.abs_tol;
    ec.rel_tol = cfg.rel_tol;
    ec.tol_event = cfg.tol_event;
    ec.tol_touch = cfg.touch();
    ec.sample_times = cfg.sample_times;
    for (std::size_t i = window - 5; i < window; ++i) ec.monitor_nodes.push_back(i);
    ec.monitor_level = -cfg.margin();
    ec.max_u = cfg.tol_state;
    return ec;
}

template <class T>
std::vector<T> unfold(const std::vector<T>& half, std::size_t m) {
    std::vector<T> full(2 * m - 1);
    for (std::size_t i = 0; i < m; ++i) {
        full[m - 1 + i] = half[i];
        full[m - 1 - i] = half[i];
    }
    return full;
}

} // namespace detail

/// Event-driven simulation over [0, T] with snapshots at config.sample_times.
inline Simulation simulate(const LatticeConfig& cfg) {
    cfg.validate();
    const engine::Result res = engine::simulate(detail::engine_config(cfg));

    Simulation sim;
    sim.config = cfg;
    sim.steps = res.steps;
    sim.log.horizon = cfg.T;
    const std::size_t m = static_cast<std::size_t>(cfg.N + 1);
    auto times = detail::unfold(res.switch_time, m);
    times[static_cast<std::size_t>(cfg.N)] = 0.0;
    for (long n = -cfg.N; n <= cfg.N; ++n)
        sim.log.records.push_back(SwitchRecord{n, times[static_cast<std::size_t>(n + cfg.N)]});
    sim.trajectory.N = cfg.N;
    for (const auto& s : res.samples) {
        sim.trajectory.times.push_back(s.t);
        sim.trajectory.u.push_back(detail::unfold(s.u, m));
        sim.trajectory.xi.push_back(detail::unfold(s.xi, m));
    }
    sim.final_u = detail::unfold(res.final_u, m);
    return sim;
}

/// u_n(t) of the infinite lattice from the switching history:
///     -c n^2 + (h1 - 2c) t - (h1 - h_m1) sum_{t_k < t} y_{n-k}(t - t_k).
/// Requires a record for every |k| <= |n| - 1.
inline double superpose_solution(double c, double h1, const std::vector<SwitchRecord>& records, long n, double t,
                                 double h_m1 = 0.0) {
    if (!(t >= 0.0)) throw validation_error("InvalidArgument", "t must be >= 0");
    const long an = std::labs(n);
    std::vector<char> seen(static_cast<std::size_t>(2 * an + 1), 0);
    double sum = 0.0;
    for (const auto& r : records) {
        if (std::labs(r.n) < an) seen[static_cast<std::size_t>(r.n + an)] = 1;
        if (r.switched() && r.t_switch < t) sum += green::green_y(n - r.n, t - r.t_switch);
    }
    for (long k = -(an - 1); k <= an - 1; ++k)
        if (!seen[static_cast<std::size_t>(k + an)])
            throw validation_error("IncompleteHistory", "missing switch record for node " + std::to_string(k));
    const double dn = static_cast<double>(n);
    return -c * dn * dn + (h1 - 2.0 * c) * t - (h1 - h_m1) * sum;
}

/// First time in (t_lo, t_hi] at which the superposed u_n reaches 0, assuming
/// `records` lists every switch that happens before it. Empty if none.
inline std::optional<double> superposition_switch_time(double c, double h1, const std::vector<SwitchRecord>& records,
                                                       long n, double t_lo, double t_hi, double h_m1 = 0.0,
                                                       double scan_step = 0.25, double tol = 1e-11) {
    auto u = [&](double t) { return superpose_solution(c, h1, records, n, t, h_m1); };
    double a = t_lo, ua = u(a);
    if (ua >= 0.0) return a;
    while (a < t_hi) {
        const double b = std::min(a + scan_step, t_hi);
        const double ub = u(b);
        if (ub >= 0.0) {
            double lo = a, hi = b;
            while (hi - lo > tol * std::max(1.0, hi)) {
                const double mid = 0.5 * (lo + hi);
                (u(mid) >= 0.0 ? hi : lo) = mid;
            }
            return hi;
        }
        a = b;
        ua = ub;
    }
    return std::nullopt;
}

/// Maps the unit-spacing lattice to grid step eps: u^eps_n(tau) = eps^2 u_n(tau / eps^2).
inline Trajectory rescale(double eps, const Trajectory& scaled) {
    if (!(eps > 0.0)) throw validation_error("InvalidArgument", "eps must be positive");
    Trajectory out = scaled;
    const double e2 = eps * eps;
    for (auto& t : out.times) t *= e2;
    for (auto& row : out.u)
        for (auto& v : row) v *= e2;
    out.spacing = scaled.spacing * eps;
    return out;
}

/// Inverse of rescale(eps, .).
inline Trajectory unscale(double eps, const Trajectory& physical) {
    if (!(eps > 0.0)) throw validation_error("InvalidArgument", "eps must be positive");
    Trajectory out = physical;
    const double e2 = eps * eps;
    for (auto& t : out.times) t /= e2;
    for (auto& row : out.u)
        for (auto& v : row) v /= e2;
    out.spacing = physical.spacing / eps;
    return out;
}

/// Switch moments under the same map: t^eps_n = eps^2 t_n.
inline SwitchLog rescale(double eps, const SwitchLog& scaled) {
    if (!(eps > 0.0)) throw validation_error("InvalidArgument", "eps must be positive");
    SwitchLog out = scaled;
    const double e2 = eps * eps;
    for (auto& r : out.records) r.t_switch *= e2;
    out.horizon *= e2;
    return out;
}

} // namespace rattle::lattice1d
