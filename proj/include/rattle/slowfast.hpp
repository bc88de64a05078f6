#pragma once

// Method of lines for
//     u_t = u_xx + v,   delta v_t = g(u, v)   on [-L, L], zero-flux ends,
// with a cubic fast nonlinearity g(u, v) = k0 + s u + v - v^3/3.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "rattle/error.hpp"

namespace rattle::slowfast {

/// g(u, v) = k0 + s u + v - v^3/3. Stable roots are those with |v| > 1.
struct Cubic {
    double k0 = 0.0;
    double s = 1.0;
    std::string name = "fhn";

    double operator()(double u, double v) const { return k0 + s * u + v - v * v * v / 3.0; }
    double dv(double v) const { return 1.0 - v * v; }

    /// Real roots v of g(u, v) = 0, ascending.
    std::vector<double> roots(double u) const {
        // v^3 - 3v - p = 0
        const double p = 3.0 * (k0 + s * u);
        std::vector<double> out;
        if (std::abs(p) <= 2.0) {
            const double th = std::acos(std::clamp(p / 2.0, -1.0, 1.0));
            for (int k = 0; k < 3; ++k) out.push_back(2.0 * std::cos((th - 2.0 * std::numbers::pi * k) / 3.0));
        } else {
            // one real root: v = cbrt(p/2 + sqrt(p^2/4 - 1)) + cbrt(p/2 - sqrt(p^2/4 - 1))
            const double d = std::sqrt(p * p / 4.0 - 1.0);
            out.push_back(std::cbrt(p / 2.0 + d) + std::cbrt(p / 2.0 - d));
        }
        std::sort(out.begin(), out.end());
        return out;
    }

    /// Upper stable root (v > 1) at u, if the upper branch exists there.
    std::optional<double> upper(double u) const {
        const auto r = roots(u);
        if (r.back() >= 1.0) return r.back();
        return std::nullopt;
    }
    std::optional<double> lower(double u) const {
        const auto r = roots(u);
        if (r.front() <= -1.0) return r.front();
        return std::nullopt;
    }
};

/// FitzHugh-Nagumo g(u, v) = u + v - v^3/3; its upper branch lives on u >= -2/3.
inline Cubic fitzhugh_nagumo() { return {0.0, 1.0, "fhn"}; }

/// g(u, v) = (beta - 2/3) - u + v - v^3/3: the upper branch exists for u <= beta with its
/// fold at (beta, 1); the lower branch exists for u >= beta - 4/3 and takes the value -2 at beta.
inline Cubic rattling_cubic(double beta = 0.0) { return {beta - 2.0 / 3.0, -1.0, "rattling"}; }

struct SlowFastConfig {
    double delta = 1e-3;
    double c = 0.25;
    double L = 8.0;
    double dx = 0.02;
    double T = 10.0;
    Cubic g = rattling_cubic();
    double beta = 0.0;              ///< threshold the data touch: u(x,0) = beta - c x^2
    bool implicit = false;          ///< backward-Euler diffusion (any dt) instead of explicit
    std::optional<double> dt;       ///< diffusion step; default 0.4 dx^2
    bool freeze_fast = false;       ///< skip the fast substeps (v stays at its initial value)
    std::vector<double> snapshot_times;
    std::vector<double> perturb;    ///< optional addition to u(x, 0), one value per grid node

    std::size_t nodes() const { return static_cast<std::size_t>(std::llround(2.0 * L / dx)) + 1; }
    double step() const { return dt.value_or(0.4 * dx * dx); }

    void validate() const {
        const auto bad = [](const std::string& what) { return validation_error("InvalidSlowFastConfig", what); };
        if (!(delta > 0.0)) throw bad("delta must be positive");
        if (!(c > 0.0)) throw bad("c must be positive");
        if (!(L > 0.0) || !(dx > 0.0) || dx > L) throw bad("need 0 < dx <= L");
        if (!(T > 0.0)) throw bad("horizon must be positive");
        if (!(step() > 0.0)) throw bad("dt must be positive");
        if (!implicit && step() > 0.4 * dx * dx * (1.0 + 1e-12))
            throw numerical_error("StabilityViolation", "explicit diffusion needs dt <= 0.4 dx^2");
        if (!perturb.empty() && perturb.size() != nodes()) throw bad("perturbation must have one value per node");
    }
};

struct Snapshot {
    double t = 0.0;
    std::vector<double> u;
    std::vector<double> v;
};

struct SlowFastResult {
    std::vector<double> x;
    std::vector<Snapshot> snapshots;
    std::size_t steps = 0;
    std::size_t fast_substeps = 0;   ///< per diffusion step
};

namespace detail {

/// Solves (I - dt D2) u_new = rhs with zero-flux ends (Thomas algorithm).
inline void implicit_diffusion(std::vector<double>& u, double r) {
    const std::size_t n = u.size();
    std::vector<double> cp(n), dp(n);
    auto off = [&](std::size_t i, bool left) {
        if (i == 0) return left ? 0.0 : -2.0 * r;
        if (i == n - 1) return left ? -2.0 * r : 0.0;
        return -r;
    };
    const double diag = 1.0 + 2.0 * r;
    cp[0] = off(0, false) / diag;
    dp[0] = u[0] / diag;
    for (std::size_t i = 1; i < n; ++i) {
        const double a = off(i, true);
        const double m = diag - a * cp[i - 1];
        cp[i] = i + 1 < n ? off(i, false) / m : 0.0;
        dp[i] = (u[i] - a * dp[i - 1]) / m;
    }
    u[n - 1] = dp[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) u[i] = dp[i] - cp[i] * u[i + 1];
}

} // namespace detail

/// Initial fast variable: the upper branch value at the threshold, H_1(beta).
inline double initial_fast_value(const SlowFastConfig& cfg) {
    const auto up = cfg.g.upper(cfg.beta);
    if (!up) throw validation_error("NoStableRoot", "g(beta, .) has no upper stable root");
    return *up;
}

/// Lie splitting: one diffusion step with v frozen, then the fast ODE per node with u frozen.
inline SlowFastResult simulate_slowfast(const SlowFastConfig& cfg) {
    cfg.validate();
    const std::size_t n = cfg.nodes();
    const double dx = 2.0 * cfg.L / static_cast<double>(n - 1);
    SlowFastResult res;
    res.x.resize(n);
    for (std::size_t i = 0; i < n; ++i) res.x[i] = -cfg.L + dx * static_cast<double>(i);

    std::vector<double> u(n), v(n, initial_fast_value(cfg)), lap(n);
    double u_max0 = -INFINITY;
    for (std::size_t i = 0; i < n; ++i) {
        u[i] = cfg.beta - cfg.c * res.x[i] * res.x[i] + (cfg.perturb.empty() ? 0.0 : cfg.perturb[i]);
        u_max0 = std::max(u_max0, u[i]);
    }

    const double dt_nominal = cfg.step();
    const std::size_t substeps =
        cfg.freeze_fast ? 0 : static_cast<std::size_t>(std::ceil(dt_nominal / (cfg.delta / 10.0)));
    res.fast_substeps = substeps;

    std::vector<double> targets = cfg.snapshot_times;
    std::sort(targets.begin(), targets.end());
    std::size_t next = 0;
    double t = 0.0;
    while (next < targets.size() && targets[next] <= 0.0) {
        res.snapshots.push_back({0.0, u, v});
        ++next;
    }

    double v_bound = 0.0;
    for (double val : v) v_bound = std::max(v_bound, std::abs(val));
    for (double val : cfg.g.roots(cfg.beta)) v_bound = std::max(v_bound, std::abs(val));

    while (t < cfg.T - 1e-14 * cfg.T) {
        double t_new = t + dt_nominal;
        if (next < targets.size() && targets[next] <= t_new + 1e-9 * dt_nominal) t_new = targets[next];
        if (t_new >= cfg.T - 1e-9 * dt_nominal) t_new = cfg.T;
        const double dt = t_new - t;
        const double r = dt / (dx * dx);

        // diffusion + slow forcing
        if (cfg.implicit) {
            for (std::size_t i = 0; i < n; ++i) u[i] += dt * v[i];
            detail::implicit_diffusion(u, r);
        } else {
            lap[0] = 2.0 * (u[1] - u[0]);
            lap[n - 1] = 2.0 * (u[n - 2] - u[n - 1]);
            for (std::size_t i = 1; i + 1 < n; ++i) lap[i] = u[i - 1] - 2.0 * u[i] + u[i + 1];
            for (std::size_t i = 0; i < n; ++i) u[i] += r * lap[i] + dt * v[i];
        }

        // fast relaxation, Heun substeps
        if (substeps > 0) {
            const std::size_t m = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(dt / (cfg.delta / 10.0))));
            const double h = dt / static_cast<double>(m) / cfg.delta;
            for (std::size_t i = 0; i < n; ++i) {
                double vi = v[i];
                const double ui = u[i];
                for (std::size_t k = 0; k < m; ++k) {
                    const double k1 = cfg.g(ui, vi);
                    const double k2 = cfg.g(ui, vi + h * k1);
                    vi += 0.5 * h * (k1 + k2);
                }
                v[i] = vi;
            }
        }
        t = t_new;
        ++res.steps;

        const double u_cap = std::max(0.0, u_max0) + t * v_bound + 1.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (!std::isfinite(u[i]) || !std::isfinite(v[i]) || u[i] > u_cap || std::abs(v[i]) > 10.0 * (v_bound + 1.0))
                throw numerical_error("BlowUp", "fields left the a priori bound at t=" + std::to_string(t));
        }
        while (next < targets.size() && targets[next] <= t) {
            res.snapshots.push_back({t, u, v});
            ++next;
        }
    }
    return res;
}

enum class Branch { Lower = -1, Fold = 0, Upper = 1 };

struct BranchSummary {
    std::vector<Branch> label;       ///< per node: branch of the nearest stable root
    std::vector<double> defect;      ///< |g(u, v)|
    double on_branch_fraction = 0.0; ///< fraction of nodes with defect <= tol
    std::vector<double> run_lengths; ///< lengths of interior alternating intervals (x units)
    double median_run = 0.0;         ///< NaN when there are no interior intervals
    std::size_t fold_nodes = 0;      ///< nodes whose v sits in the unstable middle band with defect > tol
};

/// Labels every node by the nearest stable root of g(u_i, .) and measures alternating intervals.
/// The outermost run on each side is unbounded and excluded from the run lengths.
inline BranchSummary branch_classify(const Cubic& g, const std::vector<double>& x, const std::vector<double>& u,
                                     const std::vector<double>& v, double tol = 1e-2) {
    if (u.size() != v.size() || u.size() != x.size() || u.empty())
        throw validation_error("InvalidArgument", "x, u and v must have equal nonzero length");
    BranchSummary s;
    std::size_t on = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const auto roots = g.roots(u[i]);
        double best = INFINITY, best_root = 0.0;
        for (double r : roots) {
            if (std::abs(r) < 1.0) continue;
            if (std::abs(v[i] - r) < best) best = std::abs(v[i] - r), best_root = r;
        }
        const double d = std::abs(g(u[i], v[i]));
        s.defect.push_back(d);
        Branch b = best_root > 0.0 ? Branch::Upper : Branch::Lower;
        if (d <= tol) ++on;
        else if (std::abs(v[i]) < 1.0) {
            b = Branch::Fold;
            ++s.fold_nodes;
        }
        s.label.push_back(b);
    }
    s.on_branch_fraction = static_cast<double>(on) / static_cast<double>(u.size());

    // runs of equal label; fold nodes are attached to the run they interrupt
    std::vector<std::pair<Branch, std::size_t>> runs; // (label, start index)
    for (std::size_t i = 0; i < s.label.size(); ++i) {
        if (s.label[i] == Branch::Fold) continue;
        if (runs.empty() || runs.back().first != s.label[i]) runs.push_back({s.label[i], i});
    }
    for (std::size_t k = 1; k + 1 < runs.size(); ++k) {
        const double a = x[runs[k].second], b = x[runs[k + 1].second];
        s.run_lengths.push_back(b - a);
    }
    if (s.run_lengths.empty()) {
        s.median_run = NAN;
    } else {
        auto sorted = s.run_lengths;
        std::sort(sorted.begin(), sorted.end());
        const std::size_t m = sorted.size();
        s.median_run = m % 2 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
    }
    return s;
}

} // namespace rattle::slowfast
