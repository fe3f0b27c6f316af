#ifndef QDRIFT_QUADRATURE_HPP
#define QDRIFT_QUADRATURE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "errors.hpp"

namespace qdrift::quad {

inline constexpr double default_tolerance = 1e-12;

/// The Kronrod error estimate stalls just above this (rounding noise), and
/// asking for less only exhausts the recursion depth.
inline constexpr double tolerance_floor = 1e-13;

/// Adaptive Gauss-Kronrod (G7/K15) over a finite interval, split at the
/// supplied breakpoints so that kinks never sit inside a panel.  `tol` is
/// relative and floored at tolerance_floor.
template <class F>
double integrate(F&& f, double a, double b, std::span<const double> breaks = {},
                 double tol = default_tolerance) {
    if (!(a < b)) return 0.0;
    tol = std::max(tol, tolerance_floor);
    std::vector<double> cuts{a};
    for (double c : breaks)
        if (c > a && c < b) cuts.push_back(c);
    cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        if (cuts[i + 1] <= cuts[i]) continue;
        // boost compares an unscaled error estimate with a length-scaled
        // tolerance, so each piece is mapped onto [0, 1] first
        const double lo = cuts[i], len = cuts[i + 1] - cuts[i];
        auto unit = [&](double u) { return len * f(lo + len * u); };
        double err = 0.0;
        total += boost::math::quadrature::gauss_kronrod<double, 15>::integrate(unit, 0.0, 1.0, 20, tol, &err);
    }
    if (!std::isfinite(total)) throw ConvergenceError("quadrature produced a non-finite value");
    return total;
}

/// Nodes and weights of an n-point Gauss-Legendre rule mapped to [a, b].
struct GaussPanel {
    static constexpr int order = 4;

    static void append(double a, double b, std::vector<double>& nodes, std::vector<double>& weights) {
        using rule = boost::math::quadrature::gauss<double, order>;
        const auto& x = rule::abscissa();
        const auto& w = rule::weights();
        const double mid = 0.5 * (a + b);
        const double half = 0.5 * (b - a);
        // boost stores the non-negative half of a symmetric rule
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (x[i] == 0.0) {
                nodes.push_back(mid);
                weights.push_back(half * w[i]);
                continue;
            }
            nodes.push_back(mid - half * x[i]);
            weights.push_back(half * w[i]);
            nodes.push_back(mid + half * x[i]);
            weights.push_back(half * w[i]);
        }
    }
};

/// Composite trapezoid rule on (possibly non-uniform) abscissae.
inline double trapezoid(std::span<const double> x, std::span<const double> y) {
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < x.size(); ++i) s += 0.5 * (x[i + 1] - x[i]) * (y[i] + y[i + 1]);
    return s;
}

/// Trapezoid weights for the abscissae `x`.
inline std::vector<double> trapezoid_weights(std::span<const double> x) {
    std::vector<double> w(x.size(), 0.0);
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
        const double h = 0.5 * (x[i + 1] - x[i]);
        w[i] += h;
        w[i + 1] += h;
    }
    return w;
}

/// Trapezoid integral over a symmetric uniform grid with the leading 1/L tail
/// term removed: integrands decaying like 1/x^2 (indicator metrics) leave a
/// truncation error c/L + O(1/L^3), so 2*I(L) - I(L/2) cancels the c/L part.
/// Requires (n - 1) divisible by 4 so that +-L/2 lands on grid nodes.
inline double tail_extrapolated_integral(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    if (n < 5 || (n - 1) % 4 != 0) return trapezoid(x, y);
    const std::size_t lo = (n - 1) / 4;
    const std::size_t len = (n - 1) / 2 + 1;
    const double full = trapezoid(x, y);
    const double half = trapezoid(x.subspan(lo, len), y.subspan(lo, len));
    return 2.0 * full - half;
}

} // namespace qdrift::quad

#endif // QDRIFT_QUADRATURE_HPP
