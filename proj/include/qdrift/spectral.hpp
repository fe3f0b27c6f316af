#ifndef QDRIFT_SPECTRAL_HPP
#define QDRIFT_SPECTRAL_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "geometry.hpp"
#include "quadrature.hpp"
#include "state.hpp"

namespace qdrift {

inline constexpr const char* transform_convention =
    "ft-of-sqrt-g-psi, kernel e^{-i lambda x/sigma^2}, no 2pi prefactor";

/// Samples of psi~(lambda / sigma_H^2) = \int sqrt(g) psi e^{-i lambda x / sigma_H^2} dx.
struct ReturnDistribution {
    std::vector<double> lambda;
    std::vector<cplx> psi_tilde;
    double sigma_h = 0.0;
    double mass = 0.0; ///< trapezoid \int |psi~|^2 d lambda over the window
    int orientation = 1;
    std::string convention = transform_convention;

    std::vector<double> density() const {
        std::vector<double> d(psi_tilde.size());
        for (std::size_t i = 0; i < d.size(); ++i) d[i] = std::norm(psi_tilde[i]);
        return d;
    }
};

struct TransformSettings {
    double panel_tolerance = 1e-9; ///< absolute, per Gauss panel
    double tail_ratio = 1e-6;      ///< end-of-window density relative to the peak
};

namespace detail {

/// Uniform lambda grid; exactly antisymmetric when lambda_min == -lambda_max.
inline std::vector<double> lambda_grid(double lambda_min, double lambda_max, std::size_t n) {
    std::vector<double> out(n);
    const double span = static_cast<double>(n - 1);
    if (lambda_min == -lambda_max) {
        for (std::size_t j = 0; j < n; ++j)
            out[j] = lambda_max * (2.0 * static_cast<double>(j) - span) / span;
    } else {
        for (std::size_t j = 0; j < n; ++j)
            out[j] = lambda_min + (lambda_max - lambda_min) * static_cast<double>(j) / span;
    }
    return out;
}

struct Quadrature {
    std::vector<double> nodes;
    std::vector<cplx> values; ///< weight * sqrt(g) * psi at each node
};

/// Gauss panels on [a, b]: never wider than a quarter period of the kernel at
/// k_max, refined until a panel and its two halves agree within tol for the
/// extreme wavenumbers.
template <class F>
Quadrature oscillatory_panels(F&& integrand, double a, double b, std::vector<double> breaks, double k_max,
                              double base_width, double tol) {
    std::vector<double> cuts{a};
    for (double c : breaks)
        if (c > a && c < b) cuts.push_back(c);
    cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());

    double width = base_width;
    if (k_max > 0.0) width = std::min(width, 0.25 * 2.0 * std::numbers::pi / k_max);

    auto panel_sum = [&](double lo, double hi, double k) {
        std::vector<double> xs, ws;
        quad::GaussPanel::append(lo, hi, xs, ws);
        cplx s = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) s += ws[i] * integrand(xs[i]) * std::polar(1.0, -k * xs[i]);
        return s;
    };

    Quadrature q;
    std::vector<std::pair<double, double>> stack;
    for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
        const double lo = cuts[c], hi = cuts[c + 1];
        if (!(hi > lo)) continue;
        const auto m = static_cast<std::size_t>(std::ceil((hi - lo) / width));
        for (std::size_t i = m; i-- > 0;) {
            const double p0 = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(m);
            const double p1 = i + 1 == m ? hi : lo + (hi - lo) * static_cast<double>(i + 1) / static_cast<double>(m);
            stack.emplace_back(p0, p1);
        }
        while (!stack.empty()) {
            auto [p0, p1] = stack.back();
            stack.pop_back();
            const double mid = 0.5 * (p0 + p1);
            double diff = 0.0;
            for (double k : {0.0, k_max, -k_max}) {
                const cplx whole = panel_sum(p0, p1, k);
                const cplx halves = panel_sum(p0, mid, k) + panel_sum(mid, p1, k);
                diff = std::max(diff, std::abs(whole - halves));
            }
            if (diff > tol && (p1 - p0) > 1e-12 * std::max(1.0, std::abs(mid))) {
                stack.emplace_back(mid, p1);
                stack.emplace_back(p0, mid);
                continue;
            }
            std::vector<double> ws;
            const std::size_t start = q.nodes.size();
            quad::GaussPanel::append(p0, p1, q.nodes, ws);
            for (std::size_t i = 0; i < ws.size(); ++i) q.values.push_back(ws[i] * integrand(q.nodes[start + i]));
        }
    }
    return q;
}

/// psi~_j = sum_q values_q e^{-i k_j x_q} for j in [j0, j1).  Node phases
/// advance by a per-node rotation and are re-seeded every 256 samples.
inline void accumulate_kernel(const Quadrature& q, const std::vector<double>& k, std::size_t j0, std::size_t j1,
                              std::vector<cplx>& out) {
    constexpr std::size_t reseed = 256;
    if (j1 <= j0) return;
    const std::size_t m = q.nodes.size();
    const double dk = k.size() > 1 ? (k.back() - k.front()) / static_cast<double>(k.size() - 1) : 0.0;
    std::vector<double> vr(m), vi(m), pr(m), pi(m), sr(m), si(m);
    for (std::size_t i = 0; i < m; ++i) {
        vr[i] = q.values[i].real();
        vi[i] = q.values[i].imag();
        sr[i] = std::cos(dk * q.nodes[i]);
        si[i] = -std::sin(dk * q.nodes[i]);
    }
    for (std::size_t j = j0; j < j1; ++j) {
        if ((j - j0) % reseed == 0) {
            for (std::size_t i = 0; i < m; ++i) {
                pr[i] = std::cos(k[j] * q.nodes[i]);
                pi[i] = -std::sin(k[j] * q.nodes[i]);
            }
        }
        double ar = 0.0, ai = 0.0;
        double* __restrict prp = pr.data();
        double* __restrict pip = pi.data();
        const double* __restrict vrp = vr.data();
        const double* __restrict vip = vi.data();
        const double* __restrict srp = sr.data();
        const double* __restrict sip = si.data();
#pragma omp simd reduction(+ : ar, ai)
        for (std::size_t i = 0; i < m; ++i) {
            const double a = prp[i], b = pip[i];
            ar += vrp[i] * a - vip[i] * b;
            ai += vrp[i] * b + vip[i] * a;
            prp[i] = a * srp[i] - b * sip[i];
            pip[i] = a * sip[i] + b * srp[i];
        }
        out[j] = {ar, ai};
    }
}

} // namespace detail

namespace detail {

/// Overlap of the metric domain with the state support.
inline std::pair<double, double> transform_domain(const MarketState& state, const Metric& metric) {
    const auto [s_lo, s_hi] = state.support();
    const double a = std::max(metric.lo(), s_lo);
    const double b = std::min(metric.hi(), s_hi);
    if (!(b > a)) throw DomainError("metric domain and state support do not overlap");
    return {a, b};
}

inline Quadrature transform_quadrature(const MarketState& state, const Metric& metric, double k_max,
                                       const TransformSettings& settings) {
    const auto [a, b] = transform_domain(state, metric);
    double base_width;
    std::vector<double> breaks = metric.breakpoints();
    if (state.is_gaussian()) {
        base_width = 0.25 * state.gaussian().sigma_s;
    } else {
        const auto& gx = state.grid().x;
        base_width = 4.0 * (gx.back() - gx.front()) / static_cast<double>(gx.size() - 1);
        for (double x : gx) breaks.push_back(x);
    }
    auto integrand = [&](double x) -> cplx {
        const double g = metric(x);
        return g > 0.0 ? std::sqrt(g) * state(x) : cplx{0.0, 0.0};
    };
    return oscillatory_panels(integrand, a, b, breaks, k_max, base_width, settings.panel_tolerance);
}

} // namespace detail

/// Expand the market state over the metric eigenfunctions on a fixed lambda window.
inline ReturnDistribution eigen_transform(const MarketState& state, const Metric& metric, double sigma_h,
                                          double lambda_min, double lambda_max, std::size_t n,
                                          const TransformSettings& settings = {}) {
    if (n < 64) throw DomainError("eigen_transform needs at least 64 lambda samples");
    if (!(lambda_max > lambda_min)) throw DomainError("eigen_transform needs lambda_min < lambda_max");
    if (!(sigma_h > 0.0)) throw DomainError("sigma_H must be positive");

    const double s2 = sigma_h * sigma_h;
    ReturnDistribution d;
    d.sigma_h = sigma_h;
    d.orientation = metric.orientation();
    d.lambda = detail::lambda_grid(lambda_min, lambda_max, n);
    std::vector<double> k(n);
    for (std::size_t j = 0; j < n; ++j) k[j] = d.lambda[j] / s2;
    const double k_max = std::max(std::abs(k.front()), std::abs(k.back()));
    const auto q = detail::transform_quadrature(state, metric, k_max, settings);

    d.psi_tilde.assign(n, cplx{0.0, 0.0});
    const unsigned threads = std::max(1u, std::min(8u, std::thread::hardware_concurrency()));
    if (threads == 1) {
        detail::accumulate_kernel(q, k, 0, n, d.psi_tilde);
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (n + threads - 1) / threads;
        for (unsigned t = 0; t < threads; ++t) {
            const std::size_t j0 = t * chunk, j1 = std::min(n, j0 + chunk);
            pool.emplace_back([&, j0, j1] { detail::accumulate_kernel(q, k, j0, j1, d.psi_tilde); });
        }
        for (auto& th : pool) th.join();
    }

    const auto dens = d.density();
    d.mass = quad::trapezoid(d.lambda, dens);
    const double peak = *std::max_element(dens.begin(), dens.end());
    if (!(peak > 0.0) || !std::isfinite(d.mass)) throw DomainError("return distribution has zero mass");
    if (dens.front() > settings.tail_ratio * peak || dens.back() > settings.tail_ratio * peak)
        throw WidenGridError("return distribution does not decay inside the lambda window",
                             2.0 * std::max(std::abs(lambda_min), std::abs(lambda_max)));
    return d;
}

/// Symmetric lambda window widened (doubling, spacing kept) until the tails
/// decay at both the window ends and the half-window points, so the moments
/// sit in the asymptotic tail regime used by the extrapolation.  Candidate
/// windows are screened on a coarse 129-point grid before the full transform.
inline ReturnDistribution auto_transform(const MarketState& state, const Metric& metric, double sigma_h,
                                         const TransformSettings& settings = {}) {
    if (!(sigma_h > 0.0)) throw DomainError("sigma_H must be positive");
    const auto [a, b] = detail::transform_domain(state, metric);

    double k_window;
    if (state.is_gaussian()) {
        const auto& g = state.gaussian();
        const double spread = std::sqrt(0.25 + 0.5 * g.alpha * g.alpha) / g.sigma_s;
        k_window = std::abs(g.k0) + 8.0 * spread;
    } else {
        k_window = std::abs(expected_momentum(state)) + 8.0 / std::sqrt(state_variance(state));
    }
    const double dk = std::numbers::pi / (2.0 * (b - a));
    const double s2 = sigma_h * sigma_h;
    const double half_ratio = 4.0 * settings.tail_ratio;

    auto tails_ok = [&](const std::vector<double>& dens) {
        const std::size_t n = dens.size();
        const double peak = *std::max_element(dens.begin(), dens.end());
        const std::size_t lo = (n - 1) / 4, hi = 3 * (n - 1) / 4;
        return dens.front() <= settings.tail_ratio * peak && dens.back() <= settings.tail_ratio * peak &&
               dens[lo] <= half_ratio * peak && dens[hi] <= half_ratio * peak;
    };

    for (int attempt = 0; attempt < 20; ++attempt, k_window *= 2.0) {
        const auto m = static_cast<std::size_t>(std::ceil(k_window / (2.0 * dk)));
        const std::size_t n = std::max<std::size_t>(4 * m + 1, 65);
        if (n > (std::size_t{1} << 23)) break;

        const auto q = detail::transform_quadrature(state, metric, k_window, settings);
        const auto probe_k = detail::lambda_grid(-k_window, k_window, 129);
        std::vector<cplx> probe(probe_k.size());
        detail::accumulate_kernel(q, probe_k, 0, probe_k.size(), probe);
        std::vector<double> probe_dens(probe.size());
        for (std::size_t i = 0; i < probe.size(); ++i) probe_dens[i] = std::norm(probe[i]);
        if (!tails_ok(probe_dens)) continue;

        try {
            const double lam = s2 * k_window;
            auto d = eigen_transform(state, metric, sigma_h, -lam, lam, n, settings);
            if (tails_ok(d.density())) return d;
        } catch (const WidenGridError&) {
        }
    }
    throw ConvergenceError("return distribution tails did not converge within the widening budget");
}

struct DistributionMoments {
    double mean;
    double variance;
};

/// Mean and variance of rho(lambda) = |psi~|^2 / m on the window (trapezoid).
inline DistributionMoments distribution_moments(const ReturnDistribution& d) {
    if (!(d.mass > 0.0)) throw DomainError("distribution has no mass");
    const auto dens = d.density();
    std::vector<double> y(dens.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = d.lambda[i] * dens[i];
    const double mean = quad::trapezoid(d.lambda, y) / d.mass;
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = (d.lambda[i] - mean) * (d.lambda[i] - mean) * dens[i];
    return {mean, quad::trapezoid(d.lambda, y) / d.mass};
}

/// \int |psi~|^2 d lambda with the 1/Lambda truncation term removed.
inline double extrapolated_mass(const ReturnDistribution& d) {
    return quad::tail_extrapolated_integral(d.lambda, d.density());
}

/// \int lambda |psi~|^2 d lambda with the 1/Lambda truncation term removed.
inline double extrapolated_first_moment(const ReturnDistribution& d) {
    const auto dens = d.density();
    std::vector<double> y(dens.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = d.lambda[i] * dens[i];
    return quad::tail_extrapolated_integral(d.lambda, y);
}

/// \int g |psi|^2 dx over the metric domain.
inline double metric_weighted_norm(const MarketState& state, const Metric& metric) {
    const auto [s_lo, s_hi] = state.support();
    const double a = std::max(metric.lo(), s_lo);
    const double b = std::min(metric.hi(), s_hi);
    if (!(b > a)) return 0.0;
    if (state.is_grid()) {
        const auto& g = state.grid();
        std::vector<double> xs, ys;
        for (std::size_t i = 0; i < g.x.size(); ++i)
            if (g.x[i] >= a && g.x[i] <= b) {
                xs.push_back(g.x[i]);
                ys.push_back(metric(g.x[i]) * std::norm(g.psi[i]));
            }
        return quad::trapezoid(xs, ys);
    }
    auto f = [&](double x) { return metric(x) * std::norm(state(x)); };
    return quad::integrate(f, a, b, metric.breakpoints(), quad::tolerance_floor);
}

/// |m / (2 pi sigma_H^2) - \int g |psi|^2| / \int g |psi|^2.
inline double parseval_check(const ReturnDistribution& d, const MarketState& state, const Metric& metric) {
    const double rhs = metric_weighted_norm(state, metric);
    const double lhs = extrapolated_mass(d) / (2.0 * std::numbers::pi * d.sigma_h * d.sigma_h);
    return std::abs(lhs - rhs) / rhs;
}

} // namespace qdrift

#endif // QDRIFT_SPECTRAL_HPP
