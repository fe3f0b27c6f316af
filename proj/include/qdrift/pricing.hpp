#ifndef QDRIFT_PRICING_HPP
#define QDRIFT_PRICING_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <future>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <thread>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "geometry.hpp"
#include "payoff.hpp"
#include "quadrature.hpp"
#include "spectral.hpp"
#include "state.hpp"

namespace qdrift {

/// H = -(sigma_H^2 / 2) d^2/dx^2 + V(x).
struct HamiltonianSpec {
    double sigma_h = 0.2;
    std::function<double(double)> potential = [](double) { return 0.0; };
    bool v_constant = true; ///< V' == 0 everywhere

    static HamiltonianSpec free(double sigma_h) {
        if (!(sigma_h > 0.0)) throw DomainError("sigma_H must be positive");
        HamiltonianSpec h;
        h.sigma_h = sigma_h;
        return h;
    }

    static HamiltonianSpec with_potential(double sigma_h, std::function<double(double)> v) {
        auto h = free(sigma_h);
        h.potential = std::move(v);
        h.v_constant = false;
        return h;
    }
};

/// p0 + mu t, discounted.
struct PriceExpansion {
    double p0 = 0.0;
    double mu = 0.0;                   ///< commutator drift
    std::optional<double> mu_spectral; ///< cross-check, when requested
    int order = 1;
    double t = 0.0;
    double horizon = std::numeric_limits<double>::infinity(); ///< |mu| t <= 0.1 |p0|
    double rate = 0.0;
    double price = 0.0;
};

namespace detail {

inline double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }
inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

/// E[(X-K)^+] for X ~ N(m, s^2).
inline double bachelier_call(double m, double s, double k) {
    const double d = (m - k) / s;
    return (m - k) * normal_cdf(d) + s * normal_pdf(d);
}

inline std::vector<double> breaks_inside(const Payoff& p, double a, double b) {
    std::vector<double> out;
    for (double x : payoff_breakpoints(p))
        if (x > a && x < b) out.push_back(x);
    return out;
}

/// Trapezoid sum over the grid abscissae.
inline double grid_sum(const GridState& g, std::span<const double> y) { return quad::trapezoid(g.x, y); }

} // namespace detail

/// \int U0(x) |psi(x)|^2 dx.
inline double zeroth_price(const MarketState& state, const Payoff& p) {
    if (state.is_gaussian()) {
        const auto& g = state.gaussian();
        const double m = g.x0, s = g.sigma_s, k = p.strike;
        switch (p.kind) {
        case PayoffKind::forward: return m - k;
        case PayoffKind::call: return detail::bachelier_call(m, s, k);
        case PayoffKind::put: return detail::bachelier_call(m, s, k) - (m - k);
        case PayoffKind::straddle: return 2.0 * detail::bachelier_call(m, s, k) - (m - k);
        default: break;
        }
        const auto [a, b] = state.support();
        auto f = [&](double x) { return payoff_value(p, x) * std::norm(state(x)); };
        const double v = quad::integrate(f, a, b, detail::breaks_inside(p, a, b), quad::tolerance_floor);
        if (!std::isfinite(v)) throw ConvergenceError("zeroth-order price integral diverged");
        return v;
    }
    const auto& g = state.grid();
    std::vector<double> y(g.x.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = payoff_value(p, g.x[i]) * std::norm(g.psi[i]);
    const double v = detail::grid_sum(g, y);
    if (!std::isfinite(v)) throw ConvergenceError("zeroth-order price sum diverged");
    return v;
}

/// Re \int psi* [-i s^2 U' psi' - (i s^2 / 2) U'' psi] dx.  The U'' term (kink
/// deltas included) has zero real part, leaving s^2 \int U' Im(psi* psi') dx.
inline double quantum_drift_commutator(const MarketState& state, const Payoff& p, const HamiltonianSpec& h) {
    const double s2 = h.sigma_h * h.sigma_h;
    if (state.is_gaussian()) {
        const auto [a, b] = state.support();
        auto f = [&](double x) {
            const cplx v = state(x);
            return payoff_delta(p, x) * std::imag(std::conj(v) * state.derivative(x));
        };
        return s2 * quad::integrate(f, a, b, detail::breaks_inside(p, a, b), quad::tolerance_floor);
    }
    const auto& g = state.grid();
    const std::size_t n = g.x.size();
    if (n < 512) throw DomainError("commutator drift on a grid needs at least 512 points");
    std::vector<double> y(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const cplx d = (g.psi[i + 1] - g.psi[i - 1]) / (g.x[i + 1] - g.x[i - 1]);
        y[i] = payoff_delta(p, g.x[i]) * std::imag(std::conj(g.psi[i]) * d);
    }
    return s2 * detail::grid_sum(g, y);
}

/// Fixed constant turning \int lambda |psi~|^2 d lambda / sigma_H^2 into a
/// drift.  With the pinned transform convention Plancherel gives exactly
/// 1 / (2 pi); calibrate_spectral_constant re-derives it numerically.
inline constexpr double spectral_drift_constant = 1.0 / (2.0 * std::numbers::pi);

/// c / sigma_H^2 * orientation * \int lambda |psi~|^2 d lambda.
inline double quantum_drift_spectral(const ReturnDistribution& d) {
    if (!(d.mass > 0.0) || !std::isfinite(d.mass)) throw ConvergenceError("return distribution has no finite mass");
    const double m1 = extrapolated_first_moment(d);
    return spectral_drift_constant / (d.sigma_h * d.sigma_h) * d.orientation * m1;
}

/// Sum over the delta segments of a payoff.
inline double quantum_drift_spectral(std::span<const ReturnDistribution> parts) {
    double mu = 0.0;
    for (const auto& d : parts) mu += quantum_drift_spectral(d);
    return mu;
}

/// Transforms of the state over every non-neutral delta segment of p.
inline std::vector<ReturnDistribution> payoff_distributions(const MarketState& state, const Payoff& p,
                                                            double sigma_h, const TransformSettings& settings = {}) {
    std::vector<ReturnDistribution> out;
    for (const auto& m : payoff_metrics(p)) {
        const auto [s_lo, s_hi] = state.support();
        if (std::max(m.lo(), s_lo) >= std::min(m.hi(), s_hi)) continue;
        out.push_back(auto_transform(state, m, sigma_h, settings));
    }
    return out;
}

inline double spectral_drift(const MarketState& state, const Payoff& p, double sigma_h,
                             const TransformSettings& settings = {}) {
    const auto parts = payoff_distributions(state, p, sigma_h, settings);
    return quantum_drift_spectral(parts);
}

/// Ratio commutator / (\int lambda |psi~|^2 / sigma_H^2) on a boosted Gaussian
/// under the forward payoff.
inline double calibrate_spectral_constant(double sigma_s = 0.2, double sigma_h = 0.2, double k0 = 0.5) {
    const auto state = make_gaussian(0.0, sigma_s, 0.0, k0);
    const auto d = auto_transform(state, unit_metric(), sigma_h);
    const double raw = extrapolated_first_moment(d) / (sigma_h * sigma_h);
    return quantum_drift_commutator(state, Payoff::forward(0.0), HamiltonianSpec::free(sigma_h)) / raw;
}

/// e^{-rt} (p0 + mu t), with the spectral drift attached when asked for.
inline PriceExpansion first_order_price(const MarketState& state, const Payoff& p, const HamiltonianSpec& h, double t,
                                        double r = 0.0, bool spectral_cross_check = false) {
    if (!(t >= 0.0)) throw DomainError("time must be non-negative");
    PriceExpansion e;
    e.p0 = zeroth_price(state, p);
    e.mu = quantum_drift_commutator(state, p, h);
    if (spectral_cross_check) e.mu_spectral = spectral_drift(state, p, h.sigma_h);
    e.t = t;
    e.rate = r;
    if (e.mu != 0.0) e.horizon = 0.1 * std::abs(e.p0) / std::abs(e.mu);
    e.price = std::exp(-r * t) * (e.p0 + e.mu * t);
    return e;
}

struct MartingaleReport {
    double expected_momentum;
    double commutator_norm; ///< sup |V'| over the state's support
    bool arbitrage_free;
};

/// E[P] and sup |V'|; both must vanish (to 1e-10) for the arbitrage-free flag.
inline MartingaleReport martingale_check(const MarketState& state, const HamiltonianSpec& h) {
    MartingaleReport r{expected_momentum(state), 0.0, false};
    if (!h.v_constant) {
        const auto [a, b] = state.support();
        constexpr int samples = 2001;
        constexpr double dx = 1e-5;
        for (int i = 0; i < samples; ++i) {
            const double x = a + (b - a) * i / (samples - 1);
            const double dv = (h.potential(x + dx) - h.potential(x - dx)) / (2.0 * dx);
            r.commutator_norm = std::max(r.commutator_norm, std::abs(dv));
        }
    }
    r.arbitrage_free = std::abs(r.expected_momentum) <= 1e-10 && r.commutator_norm <= 1e-10;
    return r;
}

struct SweepRow {
    double sigma_h;
    double mu;
    double width;          ///< lambda-space standard deviation of the first segment's distribution
    double rescaling_error; ///< width / (width_ref * (sigma_h / sigma_ref)^2) - 1
};

/// Drift and lambda-space width per sigma_H; the first entry is the reference
/// for the rescaling check.  Each sigma_H runs as its own task; results do not
/// depend on scheduling.
inline std::vector<SweepRow> classical_limit_sweep(const MarketState& state, const Payoff& p,
                                                   std::span<const double> sigmas) {
    if (sigmas.empty()) throw DomainError("sweep needs at least one sigma_H");
    for (double s : sigmas)
        if (!(s > 0.0)) throw DomainError("sigma_H values must be positive");
    const auto metrics = payoff_metrics(p);
    if (metrics.empty()) throw DomainError("payoff has no non-neutral delta segment");
    auto one = [&](double s) {
        const auto d = auto_transform(state, metrics.front(), s);
        return SweepRow{s, quantum_drift_commutator(state, p, HamiltonianSpec::free(s)),
                        std::sqrt(distribution_moments(d).variance), 0.0};
    };
    std::vector<SweepRow> rows;
    if (std::thread::hardware_concurrency() > 1 && sigmas.size() > 1) {
        std::vector<std::future<SweepRow>> tasks;
        for (double s : sigmas) tasks.push_back(std::async(std::launch::async, one, s));
        for (auto& t : tasks) rows.push_back(t.get());
    } else {
        for (double s : sigmas) rows.push_back(one(s));
    }
    const double ref_width = rows.front().width, ref_sigma = rows.front().sigma_h;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const double s = rows[i].sigma_h;
        rows[i].rescaling_error = rows[i].width / (ref_width * (s * s) / (ref_sigma * ref_sigma)) - 1.0;
    }
    return rows;
}

} // namespace qdrift

#endif // QDRIFT_PRICING_HPP
