#pragma once

// Discrete Green function of the lattice heat equation with a unit source
// at the origin, its large-time similarity profile f, and the integral I_f.
//
// The lattice heat kernel has the Fourier representation
//     p_n(t) = (1/pi) int_0^pi exp(-4 t sin^2(theta/2)) cos(n theta) dtheta,
// and integrating in time gives
//     y_n(t) = (1/pi) int_0^pi t * phi1(4 t sin^2(theta/2)) cos(n theta) dtheta,
// with phi1(z) = (1 - e^{-z}) / z. Both integrands are entire and
// 2pi-periodic, so the trapezoidal rule with M panels is exact up to the
// aliases p_{n +- 2M}, y_{n +- 2M}; M is chosen so those are below 1e-16.

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/numeric/odeint.hpp>

#include <cmath>
#include <cstdlib>
#include <map>
#include <memory>
#include <numbers>
#include <tuple>
#include <vector>

#include "rattle/error.hpp"

namespace rattle::green {

inline constexpr double kTolGreen = 1e-9;

/// heat_kernel / green_y are validated for t <= kMaxTime and |n| <= kMaxIndex.
inline constexpr double kMaxTime = 1e6;
inline constexpr long kMaxIndex = 1'000'000;

namespace detail {

inline void check_range(long n, double t) {
    if (!(t >= 0.0) || !std::isfinite(t)) throw validation_error("InvalidArgument", "t must be a finite value >= 0");
    if (t > kMaxTime || std::labs(n) > kMaxIndex)
        throw numerical_error("OutOfRange", "(n, t) outside the validated range |n| <= 1e6, t <= 1e6");
}

inline long panels(long n, double t) {
    return std::max<long>(64, std::labs(n) + static_cast<long>(std::ceil(6.0 * std::sqrt(t))) + 32);
}

/// Trapezoidal rule for (1/pi) int_0^pi g(theta) cos(n theta) dtheta.
template <class G>
double cosine_coefficient(long n, long m, G&& g) {
    const long an = std::labs(n);
    const double h = std::numbers::pi / static_cast<double>(m);
    double sum = 0.5 * g(0.0) + 0.5 * g(std::numbers::pi) * (an % 2 == 0 ? 1.0 : -1.0);
    for (long j = 1; j < m; ++j) {
        const double theta = h * static_cast<double>(j);
        sum += g(theta) * std::cos(static_cast<double>(an) * theta);
    }
    return sum / static_cast<double>(m);
}

inline double phi1(double z) { return z == 0.0 ? 1.0 : -std::expm1(-z) / z; }

} // namespace detail

/// p_n(t): solution of p' = Delta p with p_n(0) = delta_{n0}.
inline double heat_kernel(long n, double t) {
    detail::check_range(n, t);
    if (t == 0.0) return n == 0 ? 1.0 : 0.0;
    return detail::cosine_coefficient(n, detail::panels(n, t), [t](double theta) {
        const double s = std::sin(0.5 * theta);
        return std::exp(-4.0 * t * s * s);
    });
}

/// y_n(t) = int_0^t p_n(s) ds, the response to a unit source at node 0.
inline double green_y(long n, double t) {
    detail::check_range(n, t);
    if (t == 0.0) return 0.0;
    return detail::cosine_coefficient(n, detail::panels(n, t), [t](double theta) {
        const double s = std::sin(0.5 * theta);
        return t * detail::phi1(4.0 * t * s * s);
    });
}

/// y_n(t) by direct integration of the source problem on the window
/// |k| <= max(4 sqrt(t) + 50, |n| + 50) with zero-flux ends.
inline double green_y_ode(long n, double t, double tol = 1e-13) {
    detail::check_range(n, t);
    if (t == 0.0) return 0.0;
    const long half = std::max(static_cast<long>(std::ceil(4.0 * std::sqrt(t) + 50.0)), std::labs(n) + 50);
    const std::size_t size = static_cast<std::size_t>(2 * half + 1);
    using State = std::vector<double>;
    State y(size, 0.0);
    auto rhs = [size, half](const State& x, State& dx, double) {
        for (std::size_t i = 0; i < size; ++i) {
            double lap = 0.0;
            if (i > 0) lap += x[i - 1] - x[i];
            if (i + 1 < size) lap += x[i + 1] - x[i];
            dx[i] = lap;
        }
        dx[static_cast<std::size_t>(half)] += 1.0;
    };
    namespace odeint = boost::numeric::odeint;
    auto stepper = odeint::make_controlled(tol, tol, 0.5, odeint::runge_kutta_dopri5<State>());
    odeint::integrate_adaptive(stepper, rhs, y, 0.0, t, std::min(0.01, t));
    return y[static_cast<std::size_t>(half + n)];
}

/// Both routes; throws ToleranceNotMet when they disagree by more than 10 tol.
inline double green_y_checked(long n, double t, double tol = kTolGreen) {
    const double primary = green_y(n, t);
    const double oracle = green_y_ode(n, t);
    if (std::abs(primary - oracle) > 10.0 * tol)
        throw numerical_error("ToleranceNotMet", "green_y routes disagree at n=" + std::to_string(n) +
                                                     ", t=" + std::to_string(t));
    return primary;
}

/// h(x) = exp(-x^2/4) / (2 sqrt(pi))
inline double gaussian_h(double x) { return std::exp(-0.25 * x * x) * 0.5 * std::numbers::inv_sqrtpi; }

/// f(x) = 2x int_x^inf y^{-2} h(y) dy.
///
/// Integrating by parts gives f(x) = ierfc(x/2) with
/// ierfc(z) = exp(-z^2)/sqrt(pi) - z erfc(z). The difference cancels for
/// large z, so z >= 6 uses the asymptotic series
/// ierfc(z) ~ exp(-z^2)/(2 sqrt(pi) z^2) sum_k (-1)^k (2k+1)!! / (2z^2)^k,
/// truncated at its smallest term (below 1e-15 relative for z >= 6).
inline double f_profile(double x) {
    if (!(x >= 0.0)) throw validation_error("InvalidArgument", "f_profile requires x >= 0");
    const double z = 0.5 * x;
    if (z < 6.0) return std::exp(-z * z) * std::numbers::inv_sqrtpi - z * std::erfc(z);
    const double w = 1.0 / (2.0 * z * z);
    double term = 1.0, sum = 1.0;
    for (int k = 1; k < 60; ++k) {
        const double next = -term * (2.0 * k + 1.0) * w;
        if (std::abs(next) >= std::abs(term)) break;
        term = next;
        sum += term;
        if (std::abs(term) < 1e-17 * std::abs(sum)) break;
    }
    return std::exp(-z * z) * std::numbers::inv_sqrtpi * w * sum;
}

/// Large-time profile sqrt(t) f(|n| / sqrt(t)).
inline double green_asymptotic(long n, double t) {
    if (!(t > 0.0)) throw validation_error("InvalidArgument", "green_asymptotic requires t > 0");
    const double rt = std::sqrt(t);
    return rt * f_profile(static_cast<double>(std::labs(n)) / rt);
}

namespace detail {
// Integrand of I_f after x = cos(theta): sqrt(a) sin^2(theta) f(tan(theta/2)/sqrt(a)).
inline double if_integrand(double a, double theta) {
    const double s = std::sin(theta);
    const double ra = std::sqrt(a);
    return ra * s * s * f_profile(std::tan(0.5 * theta) / ra);
}
inline void check_a(double a) {
    if (!(a > 0.0) || !std::isfinite(a)) throw validation_error("InvalidArgument", "I_f requires a > 0");
}
} // namespace detail

/// I_f(a) with a fixed 256-node Gauss-Legendre rule in theta.
inline double integral_If(double a) {
    detail::check_a(a);
    return boost::math::quadrature::gauss<double, 256>::integrate(
        [a](double theta) { return detail::if_integrand(a, theta); }, 0.0, std::numbers::pi);
}

/// I_f(a) by adaptive Gauss-Kronrod refinement to the requested relative tolerance.
inline double integral_If_adaptive(double a, double rel_tol = 1e-11) {
    detail::check_a(a);
    double err = 0.0;
    const double v = boost::math::quadrature::gauss_kronrod<double, 21>::integrate(
        [a](double theta) { return detail::if_integrand(a, theta); }, 0.0, std::numbers::pi, 20, rel_tol, &err);
    if (!std::isfinite(v) || err > 1e3 * rel_tol * std::abs(v))
        throw numerical_error("QuadratureFailure", "adaptive refinement of I_f stalled at a=" + std::to_string(a));
    return v;
}

/// y_n(t) for 0 <= n <= n_max on a time grid (y is even in n).
struct GreenTable {
    long n_max = 0;
    std::vector<double> times;
    std::vector<std::vector<double>> values; // values[time index][n]

    double at(long n, std::size_t time_index) const {
        const long an = std::labs(n);
        if (an > n_max) throw validation_error("OutOfRange", "n beyond table range");
        return values.at(time_index)[static_cast<std::size_t>(an)];
    }
};

inline GreenTable make_green_table(long n_max, std::vector<double> times) {
    GreenTable table{n_max, std::move(times), {}};
    table.values.reserve(table.times.size());
    for (double t : table.times) {
        std::vector<double> row(static_cast<std::size_t>(n_max + 1));
        for (long n = 0; n <= n_max; ++n) row[static_cast<std::size_t>(n)] = green_y(n, t);
        table.values.push_back(std::move(row));
    }
    return table;
}

/// Memoizes tables keyed by (n_max, time grid, tolerance).
class GreenCache {
public:
    std::shared_ptr<const GreenTable> get(long n_max, const std::vector<double>& times, double tol = kTolGreen) {
        auto key = std::make_tuple(n_max, times, tol);
        if (auto it = cache_.find(key); it != cache_.end()) return it->second;
        auto table = std::make_shared<const GreenTable>(make_green_table(n_max, times));
        cache_.emplace(std::move(key), table);
        return table;
    }
    std::size_t size() const noexcept { return cache_.size(); }

private:
    std::map<std::tuple<long, std::vector<double>, double>, std::shared_ptr<const GreenTable>> cache_;
};

} // namespace rattle::green
