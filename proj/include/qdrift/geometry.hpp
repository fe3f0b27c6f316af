#ifndef QDRIFT_GEOMETRY_HPP
#define QDRIFT_GEOMETRY_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "payoff.hpp"
#include "quadrature.hpp"

namespace qdrift {

using cplx = std::complex<double>;

/// g and its first two x-derivatives at a point.
struct MetricJet {
    double g;
    double dg;
    double d2g;
};

/// One-dimensional Riemannian metric g(x) = |dU/dx| on a single delta segment.
/// Seller segments carry orientation -1; downstream drift contributions are
/// multiplied by it.
class Metric {
public:
    using JetFn = std::function<MetricJet(double)>;

    Metric(JetFn jet, double lo, double hi, int orientation = 1, std::optional<Payoff> source = std::nullopt,
           std::vector<double> breakpoints = {})
        : jet_(std::move(jet)), lo_(lo), hi_(hi), orientation_(orientation), source_(std::move(source)),
          breakpoints_(std::move(breakpoints)) {
        if (!(hi > lo)) throw DomainError("metric domain must have positive length");
        if (orientation != 1 && orientation != -1) throw DomainError("metric orientation must be +1 or -1");
    }

    double operator()(double x) const { return jet_(x).g; }
    MetricJet jet(double x) const { return jet_(x); }
    double lo() const noexcept { return lo_; }
    double hi() const noexcept { return hi_; }
    int orientation() const noexcept { return orientation_; }
    const std::optional<Payoff>& source() const noexcept { return source_; }
    /// Interior points where g'' (or higher) may jump.
    const std::vector<double>& breakpoints() const noexcept { return breakpoints_; }
    bool contains(double x) const noexcept { return x >= lo_ && x <= hi_; }

private:
    JetFn jet_;
    double lo_;
    double hi_;
    int orientation_;
    std::optional<Payoff> source_;
    std::vector<double> breakpoints_;
};

inline Metric metric_from_payoff(const Payoff& p, const DeltaSegment& segment) {
    if (segment.sign == 0) throw DomainError("metric is undefined where the payoff delta vanishes");
    const double s = static_cast<double>(segment.sign);
    std::vector<double> interior;
    for (double b : payoff_breakpoints(p))
        if (b > segment.lo && b < segment.hi) interior.push_back(b);
    auto jet = [p, s](double x) {
        return MetricJet{s * payoff_derivative(p, x, 1), s * payoff_derivative(p, x, 2),
                         s * payoff_derivative(p, x, 3)};
    };
    return Metric(jet, segment.lo, segment.hi, segment.sign, p, std::move(interior));
}

/// g = 1 on the whole line (forward payoff).
inline Metric unit_metric() {
    constexpr double inf = std::numeric_limits<double>::infinity();
    return metric_from_payoff(Payoff::forward(0.0), {-inf, inf, 1});
}

/// g = 1 on (k, inf) (buyer segment of a call struck at k).
inline Metric indicator_metric(double k = 0.0) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    return metric_from_payoff(Payoff::call(k), {k, inf, 1});
}

/// Metrics of every non-neutral delta segment of p.
inline std::vector<Metric> payoff_metrics(const Payoff& p) {
    std::vector<Metric> out;
    for (const auto& seg : segment_delta(p))
        if (seg.sign != 0) out.push_back(metric_from_payoff(p, seg));
    return out;
}

/// Abelian connection component A_x and section Q of the general Laplacian
/// g^{-1/2}(d + A) g^{-1/2}(d + A) + Q.
struct ConnectionCoefficients {
    std::function<double(double)> a_x;
    std::function<double(double)> da_x;
    std::function<double(double)> q;
};

namespace detail {

inline void require_smooth(const Metric& g) {
    if (!g.breakpoints().empty()) throw DomainError("metric is not twice differentiable inside its domain");
}

} // namespace detail

/// A = -g^{1/2} d(g^{-1/2})/dx = g'/(2g),  Q = -A^2/g - A'/g.
inline ConnectionCoefficients connection_coefficients(const Metric& g) {
    detail::require_smooth(g);
    auto a = [g](double x) {
        const auto j = g.jet(x);
        return j.dg / (2.0 * j.g);
    };
    auto da = [g](double x) {
        const auto j = g.jet(x);
        return j.d2g / (2.0 * j.g) - j.dg * j.dg / (2.0 * j.g * j.g);
    };
    auto q = [g, a, da](double x) {
        const double gx = g(x);
        const double ax = a(x);
        return -ax * ax / gx - da(x) / gx;
    };
    return {a, da, q};
}

/// The connection that does cancel the first- and zeroth-order terms of the
/// expanded general Laplacian: A = g'/(4g), Q = (A^2 - A')/g.
inline ConnectionCoefficients simplifying_connection(const Metric& g) {
    detail::require_smooth(g);
    auto a = [g](double x) {
        const auto j = g.jet(x);
        return j.dg / (4.0 * j.g);
    };
    auto da = [g](double x) {
        const auto j = g.jet(x);
        return j.d2g / (4.0 * j.g) - j.dg * j.dg / (4.0 * j.g * j.g);
    };
    auto q = [g, a, da](double x) {
        const double ax = a(x);
        return (ax * ax - da(x)) / g(x);
    };
    return {a, da, q};
}

/// Grid assembly of g^{-1/2}(d + A) g^{-1/2}(d + A) f + Q f minus f''/g on a
/// uniform grid, second-order central differences.  Entries within two nodes
/// of either end are left at zero.
inline std::vector<double> laplacian_residual(const Metric& g, const ConnectionCoefficients& c,
                                              std::span<const double> x, std::span<const double> f) {
    const std::size_t n = x.size();
    if (n < 5 || f.size() != n) throw DomainError("laplacian_residual needs matching grids of >= 5 points");
    const double h = x[1] - x[0];
    std::vector<double> inner(n, 0.0), out(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double df = (f[i + 1] - f[i - 1]) / (2.0 * h);
        inner[i] = (df + c.a_x(x[i]) * f[i]) / std::sqrt(g(x[i]));
    }
    for (std::size_t i = 2; i + 2 < n; ++i) {
        const double du = (inner[i + 1] - inner[i - 1]) / (2.0 * h);
        const double gi = g(x[i]);
        const double lap = (du + c.a_x(x[i]) * inner[i]) / std::sqrt(gi) + c.q(x[i]) * f[i];
        const double simple = (f[i + 1] - 2.0 * f[i] + f[i - 1]) / (h * h) / gi;
        out[i] = lap - simple;
    }
    return out;
}

/// Result of the integrating-factor eigenfunction.
struct NaiveEigenValue {
    cplx value;
    double anchor; ///< lower end of the path integral
};

/// (dU/dx)^{-1/2} exp(i lambda/sigma^2 \int_anchor^x (dU/ds)^{-1} ds).  The
/// anchor is 0 when 0 lies inside the delta segment holding x, otherwise the
/// segment's finite lower (or upper) endpoint.
inline NaiveEigenValue naive_eigenfunction(const Payoff& p, double lambda, double sigma, double x) {
    const auto segs = segment_delta(p);
    auto it = std::find_if(segs.begin(), segs.end(), [x](const DeltaSegment& s) { return x >= s.lo && x < s.hi; });
    if (it == segs.end() || it->sign == 0) throw DomainError("naive eigenfunction evaluated on a zero-delta region");
    double anchor;
    if (it->lo < 0.0 && it->hi > 0.0)
        anchor = 0.0;
    else if (std::isfinite(it->lo))
        anchor = it->lo;
    else
        anchor = it->hi;
    const auto breaks = payoff_breakpoints(p);
    auto inv_delta = [&p](double s) { return 1.0 / payoff_delta(p, s); };
    double path = 0.0;
    if (x > anchor)
        path = quad::integrate(inv_delta, anchor, x, breaks);
    else if (x < anchor)
        path = -quad::integrate(inv_delta, x, anchor, breaks);
    const cplx amp = std::pow(cplx(payoff_delta(p, x), 0.0), -0.5);
    return {amp * std::polar(1.0, lambda / (sigma * sigma) * path), anchor};
}

/// g(x)^{-1/2} e^{i lambda x / sigma^2}.
inline cplx geometric_eigenfunction(const Metric& g, double lambda, double sigma, double x) {
    if (!g.contains(x)) throw DomainError("geometric eigenfunction evaluated outside the metric domain");
    const double gx = g(x);
    if (!(gx > 0.0)) throw DomainError("metric vanishes at the evaluation point");
    return std::polar(1.0 / std::sqrt(gx), lambda * x / (sigma * sigma));
}

/// The first-order pricing generator in metric coordinates,
/// Op phi = -i sigma^2 (phi' + g'/(2g) phi), applied by central differences
/// to the geometric eigenfunction; returns max|(Op - lambda) phi| / max|phi|.
inline double eigen_residual(const Metric& g, double lambda, double sigma, std::span<const double> x) {
    const std::size_t n = x.size();
    if (n < 3) throw DomainError("eigen_residual needs at least three grid points");
    std::vector<cplx> phi(n);
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        phi[i] = geometric_eigenfunction(g, lambda, sigma, x[i]);
        scale = std::max(scale, std::abs(phi[i]));
    }
    const double s2 = sigma * sigma;
    double worst = 0.0;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const cplx d = (phi[i + 1] - phi[i - 1]) / (x[i + 1] - x[i - 1]);
        const auto j = g.jet(x[i]);
        const cplx op = cplx(0.0, -s2) * (d + j.dg / (2.0 * j.g) * phi[i]);
        worst = std::max(worst, std::abs(op - lambda * phi[i]));
    }
    return worst / scale;
}

} // namespace qdrift

#endif // QDRIFT_GEOMETRY_HPP
