#pragma once

// Rattling coefficient: the positive root a of
//     g(a) = -c + (h1 - 2c) a - h1 I_f(a),
// and the check of the switching-time law |t_n - a n^2| <= E sqrt(n).

#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "rattle/error.hpp"
#include "rattle/green.hpp"
#include "rattle/records.hpp"

namespace rattle::coeff {

struct RattlingCoefficient {
    double c = 0.0;
    double h1 = 0.0;
    double a = 0.0;
    double residual = 0.0;
    std::pair<double, double> bracket{0.0, 0.0};
};

inline double g_residual(double c, double h1, double a, bool adaptive = true) {
    const double If = adaptive ? green::integral_If_adaptive(a, 1e-11) : green::integral_If(a);
    return -c + (h1 - 2.0 * c) * a - h1 * If;
}

inline RattlingCoefficient solve_a(double c, double h1) {
    if (!(c > 0.0) || !std::isfinite(c) || !std::isfinite(h1))
        throw validation_error("InvalidArgument", "c must be positive and h1 finite");
    if (!(h1 > 2.0 * c))
        throw validation_error("NoBracket", "h1 <= 2c: no switching beyond the origin, the equation has no positive root");

    // g depends on (c, h1) only through h1/c up to the factor c
    const double k = h1 / c;
    auto g = [k](double a) { return g_residual(1.0, k, a); };

    double lo = 1e-6, hi = lo;
    double g_lo = g(lo);
    if (!(g_lo < 0.0)) throw numerical_error("NoBracket", "g(0+) is not negative");
    double g_hi = g_lo;
    for (int i = 0; i < 200 && g_hi < 0.0; ++i) {
        lo = hi;
        g_lo = g_hi;
        hi *= 2.0;
        g_hi = g(hi);
    }
    if (!(g_hi >= 0.0)) throw numerical_error("NoBracket", "no sign change of g on the geometric scan");

    const std::pair<double, double> bracket{lo, hi};
    std::uintmax_t max_iter = 200;
    const auto tol = [](double x, double y) { return std::abs(x - y) <= 1e-13 * std::max(1.0, std::abs(x)); };
    const auto [r_lo, r_hi] = boost::math::tools::toms748_solve(g, lo, hi, g_lo, g_hi, tol, max_iter);
    const double a = 0.5 * (r_lo + r_hi);
    return RattlingCoefficient{c, h1, a, g_residual(c, h1, a), bracket};
}

struct HypothesisReport {
    double E = 0.0;
    long n0 = 0;
    std::vector<SwitchRecord> records;  ///< t_n for 0 <= n <= n0
    std::vector<double> q;              ///< q_n = t_n - a n^2
    bool verdict = true;
    double max_normalized_residual = 0.0; ///< max over 1 <= n <= n0 of |q_n| / sqrt(n)
    double E_min = 0.0;
};

/// Checks |t_n - a n^2| <= E sqrt(n) for 1 <= n <= n0 on a simulated switch log.
inline HypothesisReport verify_hypothesis(double c, double h1, double a, double E, long n0, const SwitchLog& log) {
    if (!(c > 0.0 && h1 > 2.0 * c)) throw validation_error("InvalidArgument", "requires 0 < 2c < h1");
    if (!(a > 0.0) || !(E > 0.0)) throw validation_error("InvalidArgument", "a and E must be positive");
    if (n0 < 0) throw validation_error("InvalidArgument", "n0 must be >= 0");

    HypothesisReport rep;
    rep.E = E;
    rep.n0 = n0;
    for (long n = 0; n <= n0; ++n) {
        const SwitchRecord* r = log.find(n);
        if (r == nullptr || !r->switched()) {
            const double need = a * static_cast<double>(n * n) + E * std::sqrt(static_cast<double>(n));
            throw numerical_error("MissingSwitch", "node " + std::to_string(n) + " did not switch by t=" +
                                                       std::to_string(log.horizon) + " (expected near " +
                                                       std::to_string(need) + ")");
        }
        rep.records.push_back(*r);
        const double qn = r->t_switch - a * static_cast<double>(n * n);
        rep.q.push_back(qn);
        if (n >= 1) {
            const double norm = std::abs(qn) / std::sqrt(static_cast<double>(n));
            rep.max_normalized_residual = std::max(rep.max_normalized_residual, norm);
            if (norm > E) rep.verdict = false;
        }
    }
    rep.E_min = rep.max_normalized_residual;
    return rep;
}

} // namespace rattle::coeff
