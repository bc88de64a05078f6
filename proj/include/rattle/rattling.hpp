#pragma once

// Post-processing of switch logs and trajectories: the quadratic switching
// law t_n = a n^2 + q_n, the switched/non-switched ratio, the periodic block
// pattern, the spatial gradient bound and moving averages of the relay output.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "rattle/error.hpp"
#include "rattle/lattice1d.hpp"
#include "rattle/records.hpp"

namespace rattle::rattling {

struct Residual {
    long n = 0;
    double q = 0.0;
};

struct QuadraticFit {
    double a_fit = 0.0;
    std::vector<Residual> q;   ///< for every switching n >= 1
    double E_min = 0.0;        ///< max |q_n| / sqrt(n)
    long n_min = 0;
    std::size_t fitted = 0;    ///< number of records in the least-squares tail
};

/// Least squares of t_n on n^2 (no intercept) over switching n >= n_min.
/// With a_hint the coefficient is taken as given and only q, E_min are computed.
inline QuadraticFit fit_quadratic_law(const std::vector<SwitchRecord>& records, std::optional<double> a_hint = {},
                                      long n_min = 10) {
    QuadraticFit fit;
    fit.n_min = n_min;
    double num = 0.0, den = 0.0;
    for (const auto& r : records) {
        if (r.n < n_min || !r.switched()) continue;
        const double n2 = static_cast<double>(r.n) * static_cast<double>(r.n);
        num += r.t_switch * n2;
        den += n2 * n2;
        ++fit.fitted;
    }
    if (!a_hint && fit.fitted < 10)
        throw validation_error("InsufficientData", "need >= 10 switching nodes with n >= " + std::to_string(n_min) +
                                                       ", got " + std::to_string(fit.fitted));
    fit.a_fit = a_hint ? *a_hint : num / den;

    std::vector<SwitchRecord> sorted;
    for (const auto& r : records)
        if (r.n >= 1 && r.switched()) sorted.push_back(r);
    std::sort(sorted.begin(), sorted.end(), [](const auto& x, const auto& y) { return x.n < y.n; });
    for (const auto& r : sorted) {
        const double n = static_cast<double>(r.n);
        const double q = r.t_switch - fit.a_fit * n * n;
        fit.q.push_back({r.n, q});
        fit.E_min = std::max(fit.E_min, std::abs(q) / std::sqrt(n));
    }
    return fit;
}

/// Slope of the regression of log|q_n| on log n over n >= n_min (zero residuals skipped).
inline double residual_exponent(const std::vector<Residual>& q, long n_min = 10) {
    std::vector<double> xs, ys;
    for (const auto& r : q) {
        if (r.n < n_min || r.q == 0.0) continue;
        xs.push_back(std::log(static_cast<double>(r.n)));
        ys.push_back(std::log(std::abs(r.q)));
    }
    if (xs.size() < 3) throw validation_error("InsufficientData", "need >= 3 nonzero residuals for the exponent fit");
    const double k = static_cast<double>(xs.size());
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / k;
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / k;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    return sxy / sxx;
}

/// Classification of a node within a finite horizon.
enum class NodeStatus { Switched, NonSwitching, Undetermined };

/// A node counts as non-switching only if the horizon exceeds a n^2 + 3 E sqrt(n).
inline NodeStatus classify(const SwitchLog& log, long n, const QuadraticFit& law) {
    const SwitchRecord* r = log.find(n);
    if (r == nullptr) return NodeStatus::Undetermined;
    if (r->switched() && r->t_switch <= log.horizon) return NodeStatus::Switched;
    const double an = static_cast<double>(std::labs(n));
    const double expected = law.a_fit * an * an + 3.0 * law.E_min * std::sqrt(an);
    return log.horizon > expected ? NodeStatus::NonSwitching : NodeStatus::Undetermined;
}

/// Largest index outside the 10% guard band of a window of half-width N.
inline long guarded_extent(long N) { return static_cast<long>(std::floor(0.9 * static_cast<double>(N))); }

struct RatioTally {
    long switched = 0;
    long non_switching = 0;
    long undetermined = 0;
    double ratio = 0.0;        ///< non_switching / switched, +inf when nothing switched
};

/// Non-switching / switching count among u_{+-j}, j_min <= j <= j_max (u_0 once when j_min = 0).
inline RatioTally switch_ratio(const SwitchLog& log, long j_min, long j_max, const QuadraticFit& law) {
    if (!(0 <= j_min && j_min < j_max)) throw validation_error("InvalidArgument", "need 0 <= j_min < j_max");
    RatioTally tally;
    auto count = [&](long n) {
        switch (classify(log, n, law)) {
        case NodeStatus::Switched: ++tally.switched; break;
        case NodeStatus::NonSwitching: ++tally.non_switching; break;
        case NodeStatus::Undetermined: ++tally.undetermined; break;
        }
    };
    for (long j = j_min; j <= j_max; ++j) {
        count(j);
        if (j != 0) count(-j);
    }
    tally.ratio = tally.switched == 0 ? std::numeric_limits<double>::infinity()
                                      : static_cast<double>(tally.non_switching) / static_cast<double>(tally.switched);
    return tally;
}

struct BlockTally {
    long blocks = 0;
    long exact = 0;            ///< blocks with exactly p_s switching nodes
    double fraction = 0.0;
    bool verdict = false;      ///< fraction >= 0.9
};

/// Sliding blocks {u_{j+1}, ..., u_{j+p_s+p_ns}} for j_start <= j, block end <= j_end,
/// on both sides of the origin; blocks with undetermined nodes are skipped.
inline BlockTally block_pattern(const SwitchLog& log, long p_s, long p_ns, long j_start, long j_end, double h1,
                                double h_m1, const QuadraticFit& law) {
    if (p_s < 1 || p_ns < 0 || std::gcd(p_s, p_ns) != 1)
        throw validation_error("InvalidArgument", "need p_s >= 1, p_ns >= 0 and gcd(p_s, p_ns) = 1");
    if (!(h1 > 0.0) ||
        std::abs(static_cast<double>(p_ns) / static_cast<double>(p_s) - std::abs(h_m1) / h1) > 1e-12)
        throw validation_error("ParamMismatch", "p_ns/p_s must equal |h_m1|/h1");
    const long len = p_s + p_ns;
    BlockTally tally;
    for (int side : {1, -1}) {
        for (long j = j_start; j + len <= j_end; ++j) {
            long s = 0;
            bool known = true;
            for (long k = j + 1; k <= j + len; ++k) {
                const NodeStatus st = classify(log, side * k, law);
                if (st == NodeStatus::Undetermined) known = false;
                if (st == NodeStatus::Switched) ++s;
            }
            if (!known) continue;
            ++tally.blocks;
            if (s == p_s) ++tally.exact;
        }
    }
    tally.fraction = tally.blocks == 0 ? 0.0 : static_cast<double>(tally.exact) / static_cast<double>(tally.blocks);
    tally.verdict = tally.blocks > 0 && tally.fraction >= 0.9;
    return tally;
}

struct GradientBound {
    double b = 0.0;
    std::size_t samples = 0;   ///< sampled (k, t) pairs in the region
    long arg_k = 0;
    double arg_t = 0.0;
};

/// max |u_{k+1}(t) - u_k(t)| over snapshot times t and |k|, |k+1| <= n(t),
/// where n(t) is the largest n with t_n <= t.
inline GradientBound gradient_bound(const lattice1d::Trajectory& traj, const SwitchLog& log) {
    GradientBound out;
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        const double t = traj.times[i];
        long reach = -1;
        for (const auto& r : log.records)
            if (r.n >= 0 && r.switched() && r.t_switch <= t) reach = std::max(reach, r.n);
        reach = std::min(reach, traj.N);
        for (long k = -reach; k + 1 <= reach; ++k) {
            const double d = std::abs(traj.value(k + 1, i) - traj.value(k, i));
            ++out.samples;
            if (d > out.b) {
                out.b = d;
                out.arg_k = k;
                out.arg_t = t;
            }
        }
    }
    return out;
}

struct ProfilePoint {
    long n = 0;
    double average = 0.0;      ///< moving average of H over the window
    double reference = 0.0;    ///< 0 inside |n| < sqrt(t/a), h1 outside
};

/// Centered moving averages of H(u_n) = h1 or h_m1 at snapshot `index`.
inline std::vector<ProfilePoint> weak_limit_profile(const lattice1d::Trajectory& traj, std::size_t index, double a,
                                                    long window_width, double h1, double h_m1) {
    if (window_width < 1) throw validation_error("InvalidArgument", "window_width must be >= 1");
    if (!(a > 0.0)) throw validation_error("InvalidArgument", "a must be positive");
    const double t = traj.times.at(index);
    const double radius = std::sqrt(t / a);
    const long lo_off = (window_width - 1) / 2, hi_off = window_width / 2;
    std::vector<ProfilePoint> out;
    for (long n = -traj.N + lo_off; n + hi_off <= traj.N; ++n) {
        double sum = 0.0;
        for (long k = n - lo_off; k <= n + hi_off; ++k) sum += traj.config(k, index) > 0 ? h1 : h_m1;
        const double ref = std::abs(static_cast<double>(n)) < radius ? 0.0 : h1;
        out.push_back({n, sum / static_cast<double>(window_width), ref});
    }
    return out;
}

struct RattlingReport {
    QuadraticFit law;
    RatioTally ratio;
    std::optional<BlockTally> blocks;
    GradientBound gradient;
    std::vector<ProfilePoint> weak_limit;
};

} // namespace rattle::rattling
