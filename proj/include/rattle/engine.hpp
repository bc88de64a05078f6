#pragma once

// Event-driven integrator for relay lattices
//
//     x_i' = sum_k w_ik (x_k - x_i) + H(u_i) + s_i,   u_i = x_i + p_i + r_i t,
//
// where every node carries its own relay with thresholds alpha < beta and
// constant branch values. The affine background p + r t lets callers
// integrate the deviation from a known free solution (e.g. quadratic data
// on an infinite lattice) instead of the raw field. Between switches the
// right-hand side is fixed; switches are located on the dense output of an
// embedded Dormand-Prince 5(4) pair and committed atomically.

#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rattle/error.hpp"
#include "rattle/records.hpp"

namespace rattle::engine {

/// Weighted adjacency in compressed-row form.
struct Graph {
    std::vector<std::size_t> offsets{0};
    std::vector<std::size_t> neighbors;
    std::vector<double> weights;

    std::size_t size() const noexcept { return offsets.size() - 1; }

    /// Appends a node whose neighbor list is given as (index, weight) pairs.
    void add_node(std::span<const std::pair<std::size_t, double>> adj) {
        for (const auto& [j, w] : adj) {
            neighbors.push_back(j);
            weights.push_back(w);
        }
        offsets.push_back(neighbors.size());
    }

    /// Gershgorin bound on the spectral radius of the graph Laplacian.
    double spectral_bound() const {
        double bound = 0.0;
        for (std::size_t i = 0; i < size(); ++i) {
            double row = 0.0;
            for (std::size_t k = offsets[i]; k < offsets[i + 1]; ++k) row += std::abs(weights[k]);
            bound = std::max(bound, 2.0 * row);
        }
        return bound;
    }
};

struct RelaySpec {
    std::optional<double> alpha; ///< empty: no lower threshold (switches are permanent)
    double beta = 0.0;
    double h_hi = 1.0;           ///< branch value while xi = +1
    double h_lo = 0.0;           ///< branch value while xi = -1
};

struct Snapshot {
    double t = 0.0;
    std::vector<double> u;
    std::vector<int> xi;
};

struct Config {
    Graph graph;
    std::vector<double> x0;
    std::vector<double> base;    ///< p_i (defaults to 0)
    std::vector<double> drift;   ///< r_i (defaults to 0)
    std::vector<double> source;  ///< s_i (defaults to 0)
    std::vector<int> xi0;
    RelaySpec relay;
    double horizon = 1.0;

    double abs_tol = 1e-10;
    double rel_tol = 1e-12;
    double tol_event = 1e-10;    ///< time localisation of switches
    double tol_touch = 1e-12;    ///< a local maximum within this distance of a threshold counts as a touch
    double near_band = 1e-6;     ///< sampled values this close to a threshold trigger a maximum search
    double step_safety = 2.5;    ///< max step = step_safety / spectral bound

    std::vector<double> sample_times;

    /// Nodes whose value must stay <= monitor_level (boundary contamination tripwire).
    std::vector<std::size_t> monitor_nodes;
    double monitor_level = 0.0;
    /// If set, every node must satisfy u <= max_u (else NonPhysicalState).
    std::optional<double> max_u;
};

struct Result {
    std::vector<double> switch_time;  ///< first switch per node, kNever if none
    std::vector<int> final_xi;
    std::vector<double> final_u;
    std::vector<Snapshot> samples;
    std::size_t steps = 0;
    std::size_t events = 0;
};

namespace detail {

using State = std::vector<double>;

class Integrator {
public:
    explicit Integrator(const Config& cfg) : cfg_(cfg), n_(cfg.graph.size()) {
        validate();
        base_ = filled(cfg.base);
        drift_ = filled(cfg.drift);
        source_ = filled(cfg.source);
        xi_ = cfg.xi0;
    }

    Result run() {
        namespace odeint = boost::numeric::odeint;
        const double lam = cfg_.graph.spectral_bound();
        const double max_dt = lam > 0.0 ? cfg_.step_safety / lam : cfg_.horizon;
        auto stepper = odeint::make_dense_output(cfg_.abs_tol, cfg_.rel_tol, max_dt,
                                                 odeint::runge_kutta_dopri5<State>());
        auto sys = [this](const State& x, State& dx, double) { rhs(x, dx); };

        Result res;
        res.switch_time.assign(n_, kNever);
        std::vector<double> samples = cfg_.sample_times;
        std::sort(samples.begin(), samples.end());
        std::size_t next_sample = 0;

        State x = cfg_.x0;
        double t = 0.0;
        settle(x, t, res);
        while (next_sample < samples.size() && samples[next_sample] <= t) {
            if (samples[next_sample] == t) res.samples.push_back(snapshot(x, t));
            ++next_sample;
        }

        double dt = std::min(max_dt, 1e-3 * std::max(1.0, cfg_.horizon));
        stepper.initialize(x, t, dt);
        State probe(n_);
        while (t < cfg_.horizon) {
            const auto [t0, t1] = stepper.do_step(sys);
            ++res.steps;
            const double t_end = std::min(t1, cfg_.horizon);
            const std::optional<double> te = earliest_event(stepper, t0, t_end, probe);
            const double t_stop = te.value_or(t_end);

            for (; next_sample < samples.size() && samples[next_sample] <= t_stop; ++next_sample) {
                stepper.calc_state(samples[next_sample], probe);
                check_state(probe, samples[next_sample]);
                res.samples.push_back(snapshot(probe, samples[next_sample]));
            }
            if (te) {
                stepper.calc_state(*te, x);
                t = *te;
                commit_at(stepper, x, t, res);
                settle(x, t, res);
                check_state(x, t);
                stepper.initialize(x, t, std::max(stepper.current_time_step(), 1e-8));
            } else {
                t = t_end;
                if (t1 > cfg_.horizon) stepper.calc_state(t, x);
                else x = stepper.current_state();
                check_state(x, t);
            }
        }
        res.final_xi = xi_;
        res.final_u.resize(n_);
        for (std::size_t i = 0; i < n_; ++i) res.final_u[i] = u_of(x, i, t);
        return res;
    }

private:
    std::vector<double> filled(const std::vector<double>& v) const {
        if (v.empty()) return std::vector<double>(n_, 0.0);
        return v;
    }

    void validate() const {
        const auto bad = [](const std::string& what) { return validation_error("InvalidEngineConfig", what); };
        if (n_ == 0) throw bad("empty graph");
        if (cfg_.x0.size() != n_ || cfg_.xi0.size() != n_) throw bad("x0/xi0 size mismatch");
        for (const auto* v : {&cfg_.base, &cfg_.drift, &cfg_.source})
            if (!v->empty() && v->size() != n_) throw bad("background/source size mismatch");
        if (!(cfg_.horizon > 0.0)) throw bad("horizon must be positive");
        if (cfg_.relay.alpha && !(*cfg_.relay.alpha < cfg_.relay.beta)) throw bad("alpha must be < beta");
        for (int v : cfg_.xi0)
            if (v != 1 && v != -1) throw bad("xi0 entries must be +1 or -1");
        for (auto i : cfg_.monitor_nodes)
            if (i >= n_) throw bad("monitor node out of range");
    }

    double u_of(const State& x, std::size_t i, double t) const { return x[i] + base_[i] + drift_[i] * t; }

    /// Signed distance to the threshold that would switch node i (>= 0 means reached).
    std::optional<double> gap(const State& x, std::size_t i, double t) const {
        const double u = u_of(x, i, t);
        if (xi_[i] > 0) return u - cfg_.relay.beta;
        if (cfg_.relay.alpha) return *cfg_.relay.alpha - u;
        return std::nullopt;
    }

    void rhs(const State& x, State& dx) const {
        const auto& g = cfg_.graph;
        for (std::size_t i = 0; i < n_; ++i) {
            double lap = 0.0;
            for (std::size_t k = g.offsets[i]; k < g.offsets[i + 1]; ++k)
                lap += g.weights[k] * (x[g.neighbors[k]] - x[i]);
            dx[i] = lap + (xi_[i] > 0 ? cfg_.relay.h_hi : cfg_.relay.h_lo) + source_[i];
        }
    }

    Snapshot snapshot(const State& x, double t) const {
        Snapshot s{t, std::vector<double>(n_), xi_};
        for (std::size_t i = 0; i < n_; ++i) s.u[i] = u_of(x, i, t);
        return s;
    }

    void flip(std::size_t i, double t, Result& res) {
        xi_[i] = -xi_[i];
        if (!std::isfinite(res.switch_time[i])) res.switch_time[i] = t;
    }

    /// Commits every node that has reached its threshold at time t.
    void settle(const State& x, double t, Result& res) {
        for (std::size_t i = 0; i < n_; ++i) {
            const auto g = gap(x, i, t);
            if (g && *g >= -cfg_.tol_touch) {
                if (*g > std::max(1e-6, 1e3 * cfg_.tol_touch) && t == 0.0)
                    throw validation_error("InconsistentInitialData",
                                           "initial value beyond a threshold at node " + std::to_string(i));
                flip(i, t, res);
                ++res.events;
            }
        }
    }

    template <class Dense>
    double node_gap(Dense& dense, std::size_t i, double t, State& probe) const {
        dense.calc_state(t, probe);
        return *gap(probe, i, t);
    }

    template <class Dense>
    std::optional<double> earliest_event(Dense& dense, double t0, double t1, State& probe) {
        if (!(t1 > t0)) return std::nullopt;
        constexpr int kSamples = 6;
        std::array<double, kSamples> ts{};
        std::array<State, kSamples> xs;
        for (int k = 0; k < kSamples; ++k) {
            ts[k] = t0 + (t1 - t0) * k / (kSamples - 1);
            xs[k].resize(n_);
            if (k == kSamples - 1 && t1 == dense.current_time()) xs[k] = dense.current_state();
            else dense.calc_state(ts[k], xs[k]);
        }
        std::optional<double> best;
        for (std::size_t i = 0; i < n_; ++i) {
            if (!gap(xs[0], i, ts[0])) continue;
            std::array<double, kSamples> g{};
            int first_hit = -1, arg_max = 0;
            for (int k = 0; k < kSamples; ++k) {
                g[k] = *gap(xs[k], i, ts[k]);
                if (first_hit < 0 && k > 0 && g[k] >= 0.0) first_hit = k;
                if (g[k] > g[arg_max]) arg_max = k;
            }
            std::optional<double> hit;
            if (first_hit > 0) {
                hit = bisect_root(dense, i, ts[first_hit - 1], ts[first_hit], probe);
            } else if (g[arg_max] >= -cfg_.near_band) {
                const double lo = ts[std::max(arg_max - 1, 0)];
                const double hi = ts[std::min(arg_max + 1, kSamples - 1)];
                const auto [tm, gm] = maximize(dense, i, lo, hi, probe);
                if (gm >= -cfg_.tol_touch) hit = tm;
            }
            if (hit && *hit > t0 && (!best || *hit < *best)) best = hit;
        }
        return best;
    }

    template <class Dense>
    double bisect_root(Dense& dense, std::size_t i, double lo, double hi, State& probe) const {
        // gap(lo) < 0 <= gap(hi); returns the first touch to within tol_event
        double glo = node_gap(dense, i, lo, probe);
        double ghi = node_gap(dense, i, hi, probe);
        while (hi - lo > cfg_.tol_event) {
            double mid = 0.5 * (lo + hi);
            if (ghi > glo && hi - lo > 64 * cfg_.tol_event) {
                // regula falsi step, safeguarded towards the midpoint
                const double rf = lo - glo * (hi - lo) / (ghi - glo);
                mid = std::clamp(rf, lo + 0.05 * (hi - lo), hi - 0.05 * (hi - lo));
            }
            const double gm = node_gap(dense, i, mid, probe);
            if (gm >= 0.0) {
                hi = mid;
                ghi = gm;
            } else {
                lo = mid;
                glo = gm;
            }
        }
        return hi;
    }

    template <class Dense>
    std::pair<double, double> maximize(Dense& dense, std::size_t i, double lo, double hi, State& probe) const {
        constexpr double inv_phi = 0.6180339887498949;
        double a = lo, b = hi;
        double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
        double gc = node_gap(dense, i, c, probe), gd = node_gap(dense, i, d, probe);
        while (b - a > cfg_.tol_event) {
            if (gc >= 0.0) return {bisect_root(dense, i, a, c, probe), gc};
            if (gd >= 0.0) return {bisect_root(dense, i, a, d, probe), gd};
            if (gc > gd) {
                b = d;
                d = c;
                gd = gc;
                c = b - inv_phi * (b - a);
                gc = node_gap(dense, i, c, probe);
            } else {
                a = c;
                c = d;
                gc = gd;
                d = a + inv_phi * (b - a);
                gd = node_gap(dense, i, d, probe);
            }
        }
        return gc > gd ? std::pair{c, gc} : std::pair{d, gd};
    }

    /// All nodes whose first touch lies within tol_event of t switch together at t.
    template <class Dense>
    void commit_at(Dense& dense, const State& x, double t, Result& res) {
        State probe(n_);
        const double t_ahead = std::min(t + cfg_.tol_event, dense.current_time());
        dense.calc_state(t_ahead, probe);
        std::size_t committed = 0;
        for (std::size_t i = 0; i < n_; ++i) {
            const auto g_now = gap(x, i, t);
            if (!g_now) continue;
            const auto g_ahead = gap(probe, i, t_ahead);
            if (*g_now >= -cfg_.tol_touch || (g_ahead && *g_ahead >= 0.0)) {
                flip(i, t, res);
                ++committed;
            }
        }
        if (committed == 0) {
            // the located touch was a tangency resolved to within tol_touch
            std::size_t arg = n_;
            double best = -std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < n_; ++i) {
                const auto g = gap(x, i, t);
                if (g && *g > best) {
                    best = *g;
                    arg = i;
                }
            }
            if (arg < n_) {
                flip(arg, t, res);
                ++committed;
            }
        }
        res.events += committed;
    }

    void check_state(const State& x, double t) const {
        for (auto i : cfg_.monitor_nodes) {
            if (u_of(x, i, t) > cfg_.monitor_level)
                throw Error(ErrorKind::BoundaryContamination, "BoundaryContamination",
                            "outer band reached the monitor level at t=" + std::to_string(t) +
                                "; enlarge the window or shorten the horizon");
        }
        if (cfg_.max_u) {
            for (std::size_t i = 0; i < n_; ++i) {
                if (u_of(x, i, t) > *cfg_.max_u)
                    throw numerical_error("NonPhysicalState", "u exceeds the admissible bound at node " +
                                                                  std::to_string(i) + ", t=" + std::to_string(t));
            }
        }
    }

    const Config& cfg_;
    std::size_t n_;
    std::vector<double> base_, drift_, source_;
    std::vector<int> xi_;
};

} // namespace detail

/// Runs the configured lattice to its horizon.
inline Result simulate(const Config& cfg) { return detail::Integrator(cfg).run(); }

} // namespace rattle::engine
