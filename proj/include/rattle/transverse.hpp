#pragma once

// One-dimensional hysteresis free boundary on (0, 1) with Neumann ends:
//     u_t = u_xx + F,   F = h_m1 on [0, b(t)],  h1 on (b(t), 1],
// where b(t) is the single discontinuity of the relay configuration. The
// forcing for a prescribed curve b0 gives u; the curve is recovered from u by
// following the root of u = beta with b(t) = running max of the root and
// frozen while u(b) < beta. A fixed point of that map solves the problem.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rattle/error.hpp"

namespace rattle::transverse {

struct TransverseProblem {
    std::vector<double> phi;          ///< initial data at the cell centers (i + 1/2)/cells
    double b_bar = 0.5;
    std::optional<double> alpha;      ///< empty: no lower threshold
    double beta = 0.0;
    double h1 = 1.0;
    double h_m1 = 0.0;
    double T = 0.02;
    std::size_t time_steps = 200;
    double tol_slope = 1e-3;

    std::size_t cells() const { return phi.size(); }
    double dx() const { return 1.0 / static_cast<double>(phi.size()); }
    double center(std::size_t i) const { return (static_cast<double>(i) + 0.5) * dx(); }
    double dt() const { return T / static_cast<double>(time_steps); }

    void validate() const {
        const auto bad = [](const std::string& what) { return validation_error("InvalidTransverseProblem", what); };
        if (phi.size() < 8) throw bad("need at least 8 cells");
        if (!(b_bar > 0.0 && b_bar < 1.0)) throw bad("b_bar must lie in (0, 1)");
        if (alpha && !(*alpha < beta)) throw bad("alpha must be < beta");
        if (!(T > 0.0) || time_steps == 0) throw bad("need T > 0 and time_steps >= 1");
        if (!(tol_slope > 0.0)) throw bad("tol_slope must be positive");
        const double h = dx();
        for (std::size_t i = 0; i < phi.size(); ++i) {
            const double x = center(i);
            if (!std::isfinite(phi[i])) throw bad("phi must be finite");
            if (alpha && x <= b_bar && !(phi[i] > *alpha))
                throw validation_error("InconsistentInitialData", "phi must exceed alpha on [0, b_bar]");
            if (x > b_bar + h && !(phi[i] < beta))
                throw validation_error("InconsistentInitialData", "phi must stay below beta right of b_bar");
        }
    }
};

/// Samples phi(x) at the cell centers of a uniform grid.
inline TransverseProblem make_problem(const std::function<double(double)>& phi, std::size_t cells, double b_bar,
                                      double beta, double h1, double h_m1, double T,
                                      std::optional<double> alpha = std::nullopt) {
    TransverseProblem p;
    p.phi.resize(cells);
    for (std::size_t i = 0; i < cells; ++i) p.phi[i] = phi((static_cast<double>(i) + 0.5) / static_cast<double>(cells));
    p.b_bar = b_bar;
    p.alpha = alpha;
    p.beta = beta;
    p.h1 = h1;
    p.h_m1 = h_m1;
    p.T = T;
    return p;
}

/// u at every time level, on the cell centers.
struct Field {
    std::vector<double> x;
    std::vector<double> times;
    std::vector<std::vector<double>> values;

    /// Linear interpolation in x at time level k (constant beyond the outer centers).
    double at(double xq, std::size_t k) const {
        const auto& u = values.at(k);
        if (xq <= x.front()) return u.front();
        if (xq >= x.back()) return u.back();
        const double h = x[1] - x[0];
        const std::size_t i = std::min(static_cast<std::size_t>((xq - x.front()) / h), x.size() - 2);
        const double w = (xq - x[i]) / h;
        return (1.0 - w) * u[i] + w * u[i + 1];
    }
};

struct BoundaryCurve {
    std::vector<double> times;
    std::vector<double> b;
    std::vector<double> a;      ///< root of u = beta where tracked, NaN while frozen

    double sup_distance(const BoundaryCurve& o) const {
        double d = 0.0;
        for (std::size_t k = 0; k < b.size(); ++k) d = std::max(d, std::abs(b[k] - o.b.at(k)));
        return d;
    }
};

inline BoundaryCurve constant_curve(const TransverseProblem& p, double value) {
    BoundaryCurve c;
    for (std::size_t k = 0; k <= p.time_steps; ++k) c.times.push_back(p.dt() * static_cast<double>(k));
    c.b.assign(c.times.size(), value);
    c.a.assign(c.times.size(), NAN);
    return c;
}

namespace detail {

/// Solves the tridiagonal system (1 + 2r) u_i - r (u_{i-1} + u_{i+1}) = rhs_i with Neumann ends.
inline void solve_neumann(std::vector<double>& rhs, double r, std::vector<double>& cp) {
    const std::size_t n = rhs.size();
    cp.resize(n);
    // cell-centred Neumann: the boundary rows have diagonal 1 + r
    double m = 1.0 + r;
    cp[0] = -r / m;
    rhs[0] /= m;
    for (std::size_t i = 1; i < n; ++i) {
        const double diag = i + 1 < n ? 1.0 + 2.0 * r : 1.0 + r;
        m = diag + r * cp[i - 1];
        cp[i] = i + 1 < n ? -r / m : 0.0;
        rhs[i] = (rhs[i] + r * rhs[i - 1]) / m;
    }
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] -= cp[i] * rhs[i + 1];
}

} // namespace detail

/// Crank-Nicolson for u_t = u_xx + F(x, t) on cell centers; `forcing(k, F)` fills the
/// cell averages of F at time level k.
inline Field heat_solve(const TransverseProblem& p, const std::function<void(std::size_t, std::vector<double>&)>& forcing) {
    const std::size_t n = p.cells();
    const double h = p.dx(), dt = p.dt(), r = 0.5 * dt / (h * h);
    Field f;
    for (std::size_t i = 0; i < n; ++i) f.x.push_back(p.center(i));
    f.times.push_back(0.0);
    f.values.push_back(p.phi);
    std::vector<double> u = p.phi, rhs(n), F0(n), F1(n), cp;
    forcing(0, F0);
    for (std::size_t k = 1; k <= p.time_steps; ++k) {
        forcing(k, F1);
        for (std::size_t i = 0; i < n; ++i) {
            const double left = i > 0 ? u[i - 1] : u[i];
            const double right = i + 1 < n ? u[i + 1] : u[i];
            rhs[i] = u[i] + r * (left - 2.0 * u[i] + right) + 0.5 * dt * (F0[i] + F1[i]);
        }
        detail::solve_neumann(rhs, r, cp);
        u = rhs;
        for (double v : u)
            if (!std::isfinite(v)) throw numerical_error("SolverFailure", "non-finite value in the heat solve");
        f.times.push_back(dt * static_cast<double>(k));
        f.values.push_back(u);
        std::swap(F0, F1);
    }
    return f;
}

/// Forcing h_m1 on [0, b0(t)], h1 beyond, with the cut cell weighted by volume fraction.
inline Field heat_solve_forced(const TransverseProblem& p, const BoundaryCurve& b0) {
    p.validate();
    if (b0.b.size() != p.time_steps + 1) throw validation_error("InvalidArgument", "b0 must have time_steps + 1 values");
    const double h = p.dx();
    return heat_solve(p, [&](std::size_t k, std::vector<double>& F) {
        const double b = std::clamp(b0.b[k], 0.0, 1.0);
        for (std::size_t i = 0; i < F.size(); ++i) {
            const double lo = h * static_cast<double>(i);
            const double frac = std::clamp((b - lo) / h, 0.0, 1.0);
            F[i] = frac * p.h_m1 + (1.0 - frac) * p.h1;
        }
    });
}

/// Root tracking: while u(b) >= beta the boundary advances to the first crossing of beta to
/// its right; otherwise it stays where it is.
inline BoundaryCurve boundary_from_solution(const TransverseProblem& p, const Field& u) {
    BoundaryCurve c;
    c.times = u.times;
    double b = p.b_bar;
    const double h = p.dx();
    const std::size_t n = p.cells();
    for (std::size_t k = 0; k < u.times.size(); ++k) {
        const auto& v = u.values[k];
        double a = NAN;
        if (u.at(b, k) >= p.beta) {
            // first center right of b with v < beta
            std::size_t j = static_cast<std::size_t>(std::clamp((b - 0.5 * h) / h, 0.0, static_cast<double>(n - 1)));
            while (j < n && (u.x[j] <= b || v[j] >= p.beta)) ++j;
            if (j >= n)
                throw numerical_error("TransversalityLost", "the threshold root left (0, 1) at t=" + std::to_string(u.times[k]));
            const double xl = std::max(b, u.x[j - 1]);
            const double vl = xl == u.x[j - 1] ? v[j - 1] : u.at(xl, k);
            const double slope = (v[j] - v[j - 1]) / h;
            if (std::abs(slope) < p.tol_slope)
                throw numerical_error("TransversalityLost", "|u_x| at the threshold root fell below tol_slope at t=" +
                                                                std::to_string(u.times[k]));
            a = vl >= p.beta ? xl + (vl - p.beta) / (vl - v[j]) * (u.x[j] - xl) : xl;
            b = std::max(b, a);
        }
        // a second region at or above beta to the right would start a new discontinuity
        for (std::size_t i = 0; i < n; ++i) {
            if (u.x[i] > b + h && v[i] >= p.beta)
                throw numerical_error("TransversalityLost", "a separate region reached beta at x=" +
                                                                std::to_string(u.x[i]) + ", t=" + std::to_string(u.times[k]));
        }
        c.b.push_back(b);
        c.a.push_back(a);
    }
    return c;
}

inline BoundaryCurve apply_R(const TransverseProblem& p, const BoundaryCurve& b0) {
    return boundary_from_solution(p, heat_solve_forced(p, b0));
}

struct FixedPointResult {
    Field u;
    BoundaryCurve curve;
    std::size_t iterations = 0;
    double residual = 0.0;             ///< sup |R(b) - b| at the returned curve
    double lambda = 1.0;               ///< damping in use at convergence
    double T = 0.0;                    ///< horizon actually solved (after any halving)
    std::vector<double> history;       ///< residual per iteration
};

/// Damped Picard iteration b <- (1 - lambda) b + lambda R(b). On a stall (no residual decrease over
/// 5 iterations) lambda is halved; below 1/64, or when an iterate loses transversality, the
/// horizon is halved and the iteration restarts.
inline FixedPointResult fixed_point_solve(TransverseProblem p, double tol_fp = 1e-8, std::size_t max_iter = 200,
                                          std::optional<BoundaryCurve> guess = std::nullopt, int max_halvings = 4) {
    p.validate();
    FixedPointResult res;
    for (int halving = 0; halving <= max_halvings; ++halving) {
        BoundaryCurve b = guess && guess->b.size() == p.time_steps + 1 ? *guess : constant_curve(p, p.b_bar);
        double lambda = 1.0, best = INFINITY;
        std::size_t since_best = 0;
        res.history.clear();
        for (std::size_t it = 1; it <= max_iter; ++it) {
            BoundaryCurve rb;
            try {
                rb = apply_R(p, b);
            } catch (const Error& e) {
                if (e.code() != "TransversalityLost" || halving == max_halvings) throw;
                break;
            }
            const double resid = rb.sup_distance(b);
            res.history.push_back(resid);
            if (resid <= tol_fp) {
                res.u = heat_solve_forced(p, b);
                res.curve = rb;
                res.curve.b = b.b;
                res.iterations = it;
                res.residual = resid;
                res.lambda = lambda;
                res.T = p.T;
                return res;
            }
            if (resid < 0.999 * best) {
                best = resid;
                since_best = 0;
            } else if (++since_best >= 5) {
                lambda *= 0.5;
                since_best = 0;
                best = resid;
                if (lambda < 1.0 / 64.0) break;
            }
            for (std::size_t k = 0; k < b.b.size(); ++k) b.b[k] = (1.0 - lambda) * b.b[k] + lambda * rb.b[k];
            b.a = rb.a;
        }
        p.T *= 0.5;
        guess.reset();
    }
    throw numerical_error("NoConvergence", "fixed-point iteration did not converge after horizon halvings");
}

struct ContinuityProbe {
    std::vector<double> input_distance;   ///< ||b01 - b02||
    std::vector<double> output_distance;  ///< ||R(b01) - R(b02)||
    double exponent = 0.0;                ///< log-log slope
};

/// Perturbs b by eta * (t / T) for each eta and fits ||dR|| ~ C ||db||^exponent.
inline ContinuityProbe continuity_probe(const TransverseProblem& p, const BoundaryCurve& b,
                                        const std::vector<double>& etas) {
    ContinuityProbe probe;
    const BoundaryCurve rb = apply_R(p, b);
    std::vector<double> lx, ly;
    for (double eta : etas) {
        BoundaryCurve b2 = b;
        for (std::size_t k = 0; k < b2.b.size(); ++k) b2.b[k] += eta * b2.times[k] / p.T;
        const double din = b2.sup_distance(b);
        const double dout = apply_R(p, b2).sup_distance(rb);
        probe.input_distance.push_back(din);
        probe.output_distance.push_back(dout);
        if (din > 0.0 && dout > 0.0) {
            lx.push_back(std::log(din));
            ly.push_back(std::log(dout));
        }
    }
    if (lx.size() < 2) throw numerical_error("InsufficientData", "continuity probe needs two nonzero responses");
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) mx += lx[i], my += ly[i];
    mx /= static_cast<double>(lx.size());
    my /= static_cast<double>(lx.size());
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) sxy += (lx[i] - mx) * (ly[i] - my), sxx += (lx[i] - mx) * (lx[i] - mx);
    probe.exponent = sxy / sxx;
    return probe;
}

} // namespace rattle::transverse
