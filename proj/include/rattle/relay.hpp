#pragma once

// Scalar hysteresis operators driven by piecewise-linear inputs: the
// non-ideal relay, Alt's relay and an admissibility test for the
// (set-valued) completed relay.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rattle/error.hpp"

namespace rattle::relay {

/// Continuous piecewise-linear function sampled at strictly increasing times.
class Signal {
public:
    Signal() = default;

    Signal(std::vector<double> times, std::vector<double> values)
        : times_(std::move(times)), values_(std::move(values)) {
        if (times_.size() != values_.size())
            throw validation_error("InvalidSignal", "times and values differ in length");
        if (times_.empty()) throw validation_error("InvalidSignal", "empty signal");
        for (std::size_t i = 0; i < times_.size(); ++i) {
            if (!std::isfinite(times_[i]) || !std::isfinite(values_[i]))
                throw validation_error("InvalidSignal", "non-finite sample at index " + std::to_string(i));
            if (i > 0 && !(times_[i] > times_[i - 1]))
                throw validation_error("InvalidSignal", "times not strictly increasing at index " + std::to_string(i));
        }
    }

    std::size_t size() const noexcept { return times_.size(); }
    std::span<const double> times() const noexcept { return times_; }
    std::span<const double> values() const noexcept { return values_; }
    double time(std::size_t i) const { return times_[i]; }
    double value(std::size_t i) const { return values_[i]; }
    double front_value() const { return values_.front(); }

    /// Linear interpolation; constant extrapolation outside the sampled range.
    double at(double t) const {
        if (t <= times_.front()) return values_.front();
        if (t >= times_.back()) return values_.back();
        auto it = std::upper_bound(times_.begin(), times_.end(), t);
        const std::size_t i = static_cast<std::size_t>(it - times_.begin()) - 1;
        const double w = (t - times_[i]) / (times_[i + 1] - times_[i]);
        return values_[i] + w * (values_[i + 1] - values_[i]);
    }

    /// Exact resampling of the interpolant (the grid must lie in range).
    Signal resample(std::span<const double> grid) const {
        std::vector<double> t(grid.begin(), grid.end()), v;
        v.reserve(t.size());
        for (double s : t) v.push_back(at(s));
        return Signal(std::move(t), std::move(v));
    }

private:
    std::vector<double> times_;
    std::vector<double> values_;
};

using Branch = std::function<double(double)>;

struct RelayParams {
    std::optional<double> alpha; ///< lower threshold; empty means no lower threshold
    double beta = 0.0;
    Branch branch_hi;            ///< H_1, defined for u <= beta
    Branch branch_lo;            ///< H_{-1}, defined for u >= alpha

    static RelayParams constant(std::optional<double> alpha, double beta, double h_hi = 1.0,
                                double h_lo = -1.0) {
        RelayParams p;
        p.alpha = alpha;
        p.beta = beta;
        p.branch_hi = [h_hi](double) { return h_hi; };
        p.branch_lo = [h_lo](double) { return h_lo; };
        p.validate();
        return p;
    }

    bool has_alpha() const noexcept { return alpha.has_value(); }

    double branch(int xi, double u) const { return xi > 0 ? branch_hi(u) : branch_lo(u); }

    /// Checks alpha < beta and that the branches differ on [alpha, beta]
    /// (at 33 sample points when alpha is finite, at beta otherwise).
    void validate() const {
        if (!branch_hi || !branch_lo) throw validation_error("InvalidRelay", "missing branch evaluator");
        if (!std::isfinite(beta)) throw validation_error("InvalidRelay", "beta must be finite");
        if (alpha) {
            if (!(*alpha < beta)) throw validation_error("InvalidRelay", "alpha must be < beta");
            constexpr int samples = 33;
            for (int k = 0; k < samples; ++k) {
                const double u = *alpha + (beta - *alpha) * k / (samples - 1);
                if (branch_hi(u) == branch_lo(u))
                    throw validation_error("InvalidRelay", "branches coincide at u=" + std::to_string(u));
            }
        } else if (branch_hi(beta) == branch_lo(beta)) {
            throw validation_error("InvalidRelay", "branches coincide at beta");
        }
    }
};

struct RelayState {
    int xi = 1;
    int xi0 = 1;
    std::optional<double> switched_at;
};

/// Initial configuration for input value u0. Values outside (alpha, beta)
/// force the configuration; a forced value contradicting xi0 is an error,
/// except for u0 exactly on a threshold (reaching a threshold switches).
inline RelayState relay_init(const RelayParams& params, int xi0, double u0, double t0 = 0.0) {
    if (xi0 != 1 && xi0 != -1) throw validation_error("InvalidConfiguration", "xi0 must be +1 or -1");
    RelayState s{xi0, xi0, std::nullopt};
    if (u0 > params.beta) {
        if (xi0 != -1) throw validation_error("InconsistentInitialData", "u0 > beta requires xi0 = -1");
    } else if (params.alpha && u0 < *params.alpha) {
        if (xi0 != 1) throw validation_error("InconsistentInitialData", "u0 < alpha requires xi0 = +1");
    } else if (u0 == params.beta && xi0 == 1) {
        s.xi = -1;
        s.switched_at = t0;
    } else if (params.alpha && u0 == *params.alpha && xi0 == -1) {
        s.xi = 1;
        s.switched_at = t0;
    }
    return s;
}

struct RelayTrace {
    Signal output;                   ///< v, right-continuous; switch instants are sample points
    std::vector<int> xi;             ///< configuration at each output sample
    std::vector<double> switch_times;
    RelayState final_state;
};

/// Non-ideal relay along a piecewise-linear input. Switching instants are
/// the exact roots of the linear interpolant on each segment.
inline RelayTrace relay_trace(const RelayParams& params, RelayState state, const Signal& input) {
    const double beta = params.beta;
    auto check_domain = [&](int xi, double u) {
        if (xi > 0 && u > beta)
            throw numerical_error("DomainError", "input above beta on the upper branch");
        if (xi < 0 && params.alpha && u < *params.alpha)
            throw numerical_error("DomainError", "input below alpha on the lower branch");
    };

    std::vector<double> t_out, v_out, switches;
    std::vector<int> xi_out;
    auto emit = [&](double t, double u) {
        check_domain(state.xi, u);
        if (!t_out.empty() && t == t_out.back()) {
            v_out.back() = params.branch(state.xi, u);
            xi_out.back() = state.xi;
            return;
        }
        t_out.push_back(t);
        v_out.push_back(params.branch(state.xi, u));
        xi_out.push_back(state.xi);
    };
    auto flip = [&](double t) {
        state.xi = -state.xi;
        if (!state.switched_at) state.switched_at = t;
        switches.push_back(t);
    };

    const double t0 = input.time(0);
    const double u0 = input.value(0);
    if (state.xi > 0 && u0 > beta) throw validation_error("InconsistentInitialData", "u(0) > beta with xi = +1");
    if (state.xi < 0 && params.alpha && u0 < *params.alpha)
        throw validation_error("InconsistentInitialData", "u(0) < alpha with xi = -1");
    if (state.xi > 0 && u0 == beta) flip(t0);
    else if (state.xi < 0 && params.alpha && u0 == *params.alpha) flip(t0);
    emit(t0, u0);

    for (std::size_t i = 0; i + 1 < input.size(); ++i) {
        const double ta = input.time(i), tb = input.time(i + 1);
        const double ua = input.value(i), ub = input.value(i + 1);
        double cur_t = ta, cur_u = ua;
        for (;;) {
            std::optional<double> level;
            if (state.xi > 0 && cur_u < beta && ub >= beta) level = beta;
            else if (state.xi < 0 && params.alpha && cur_u > *params.alpha && ub <= *params.alpha)
                level = *params.alpha;
            if (!level) break;
            double ts = ub == *level ? tb : ta + (*level - ua) / (ub - ua) * (tb - ta);
            ts = std::clamp(ts, cur_t, tb);
            flip(ts);
            emit(ts, *level);
            cur_t = ts;
            cur_u = *level;
        }
        emit(tb, ub);
    }
    return RelayTrace{Signal(std::move(t_out), std::move(v_out)), std::move(xi_out), std::move(switches), state};
}

namespace detail {
inline void require_unit_branches(const RelayParams& params) {
    const double probe[] = {params.beta - 1.0, params.beta, params.alpha.value_or(params.beta - 2.0)};
    for (double u : probe) {
        if (params.branch_hi(u) != 1.0 || params.branch_lo(u) != -1.0)
            throw validation_error("InvalidRelay", "operator is defined for constant branches +1/-1 only");
    }
}
} // namespace detail

/// Alt's relay (constant branches +1/-1). While the input dwells on a
/// threshold the output ramps towards the opposite branch at `ramp_rate`;
/// the instant the input leaves the threshold the output takes the pure
/// branch value valid after the threshold was reached (-1 at beta, +1 at alpha).
inline Signal alt_relay_trace(const RelayParams& params, int xi0, const Signal& input, double ramp_rate = 1.0) {
    detail::require_unit_branches(params);
    if (xi0 != 1 && xi0 != -1) throw validation_error("InvalidConfiguration", "xi0 must be +1 or -1");
    const double beta = params.beta;
    const auto at_alpha = [&](double u) { return params.alpha && u == *params.alpha; };

    double v;
    const double u0 = input.value(0);
    if (u0 > beta) v = -1.0;
    else if (params.alpha && u0 < *params.alpha) v = 1.0;
    else v = xi0;
    if ((u0 > beta && xi0 != -1) || (params.alpha && u0 < *params.alpha && xi0 != 1))
        throw validation_error("InconsistentInitialData", "xi0 inconsistent with u(0)");

    std::vector<double> t_out, v_out;
    const std::size_t n = input.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double t = input.time(i), u = input.value(i);
        if (i > 0) {
            const double up = input.value(i - 1), tp = input.time(i - 1);
            if (up == beta && u == beta) v = std::max(-1.0, v - ramp_rate * (t - tp));
            else if (at_alpha(up) && at_alpha(u)) v = std::min(1.0, v + ramp_rate * (t - tp));
            else if (up < beta && u > beta && v > -1.0) {
                // interior crossing of beta: output -1 from the crossing instant
                const double ts = tp + (beta - up) / (u - up) * (t - tp);
                t_out.push_back(ts);
                v_out.push_back(-1.0);
                v = -1.0;
            } else if (params.alpha && up > *params.alpha && u < *params.alpha && v < 1.0) {
                const double ts = tp + (*params.alpha - up) / (u - up) * (t - tp);
                t_out.push_back(ts);
                v_out.push_back(1.0);
                v = 1.0;
            }
        }
        // leaving a threshold (in either direction) selects the pure branch
        const bool leaves_next = i + 1 < n && input.value(i + 1) != u;
        if (u == beta && leaves_next) v = -1.0;
        if (at_alpha(u) && leaves_next) v = 1.0;
        if (u > beta) v = -1.0;
        if (params.alpha && u < *params.alpha) v = 1.0;
        t_out.push_back(t);
        v_out.push_back(v);
    }
    return Signal(std::move(t_out), std::move(v_out));
}

/// Membership of `candidate` in the completed relay's output set for the
/// given input, checked at the common sampling resolution.
inline bool completed_relay_admissible(const RelayParams& params, double xi0, const Signal& input,
                                       const Signal& candidate, double tol = 1e-12) {
    detail::require_unit_branches(params);
    if (input.size() != candidate.size())
        throw validation_error("GridMismatch", "candidate and input sampled on different grids");
    for (std::size_t i = 0; i < input.size(); ++i)
        if (input.time(i) != candidate.time(i))
            throw validation_error("GridMismatch", "time grids differ at index " + std::to_string(i));
    if (xi0 < -1.0 || xi0 > 1.0) throw validation_error("InvalidConfiguration", "xi0 must lie in [-1, 1]");

    const double beta = params.beta;
    const double alpha = params.alpha.value_or(-INFINITY);
    const auto inside = [&](double u) { return u > alpha && u < beta; };

    // graph membership
    for (std::size_t i = 0; i < input.size(); ++i) {
        const double u = input.value(i), v = candidate.value(i);
        if (v < -1.0 - tol || v > 1.0 + tol) return false;
        if (u < alpha && std::abs(v - 1.0) > tol) return false;
        if (u > beta && std::abs(v + 1.0) > tol) return false;
    }
    // initial condition
    const double u0 = input.value(0), v0 = candidate.value(0);
    if (inside(u0) && std::abs(v0 - xi0) > tol) return false;
    if (u0 == alpha && (v0 < xi0 - tol || v0 > 1.0 + tol)) return false;
    if (u0 == beta && (v0 < -1.0 - tol || v0 > xi0 + tol)) return false;

    // constancy inside (alpha, beta) and monotonicity at the thresholds
    for (std::size_t i = 0; i + 1 < input.size(); ++i) {
        const double ua = input.value(i), ub = input.value(i + 1);
        const double va = candidate.value(i), vb = candidate.value(i + 1);
        const bool touches_beta = std::max(ua, ub) >= beta;
        const bool touches_alpha = std::min(ua, ub) <= alpha;
        if (!touches_beta && !touches_alpha) {
            if (std::abs(vb - va) > tol) return false;
        } else if (touches_beta && !touches_alpha) {
            if (vb > va + tol) return false;
        } else if (touches_alpha && !touches_beta) {
            if (vb < va - tol) return false;
        }
    }
    return true;
}

} // namespace rattle::relay
