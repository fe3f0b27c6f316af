#ifndef QDRIFT_STATE_HPP
#define QDRIFT_STATE_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "errors.hpp"
#include "quadrature.hpp"

namespace qdrift {

using cplx = std::complex<double>;

/// Chirped, boosted Gaussian wave-function.
///
/// psi(x) = (2 pi s^2)^(-1/4) exp(-(x-x0)^2 / (4 s^2))
///          * exp(i alpha (x-x0)^2 / (2 sqrt2 s^2)) * exp(i k0 x)
///
/// so that |psi|^2 is exactly the normal density N(x0, s^2).
struct GaussianState {
    double x0 = 0.0;
    double sigma_s = 1.0;
    double alpha = 0.0;
    double k0 = 0.0;
};

/// Sampled wave-function on strictly increasing abscissae.
struct GridState {
    std::vector<double> x;
    std::vector<cplx> psi;
};

/// Bookkeeping attached by grid sampling.
struct SamplingReport {
    double captured_mass = 1.0; ///< mass of the source inside [x_min, x_max]
    double raw_norm = 1.0;      ///< trapezoid norm before renormalisation
    std::optional<std::string> warning;
};

class MarketState {
public:
    explicit MarketState(GaussianState g) : rep_(g) {
        if (!(g.sigma_s > 0.0) || !std::isfinite(g.sigma_s))
            throw DomainError("sigma_s must be positive");
    }

    explicit MarketState(GridState g, std::optional<SamplingReport> report = std::nullopt)
        : rep_(std::move(g)), report_(std::move(report)) {
        const auto& s = std::get<GridState>(rep_);
        if (s.x.size() != s.psi.size()) throw DomainError("grid abscissae and amplitudes differ in length");
        if (s.x.size() < 2) throw DomainError("grid state needs at least two points");
        for (std::size_t i = 0; i + 1 < s.x.size(); ++i)
            if (!(s.x[i + 1] > s.x[i])) throw DomainError("grid abscissae must be strictly increasing");
    }

    bool is_gaussian() const noexcept { return std::holds_alternative<GaussianState>(rep_); }
    bool is_grid() const noexcept { return std::holds_alternative<GridState>(rep_); }
    const GaussianState& gaussian() const { return std::get<GaussianState>(rep_); }
    const GridState& grid() const { return std::get<GridState>(rep_); }
    const std::optional<SamplingReport>& sampling() const noexcept { return report_; }

    /// psi(x); grid states interpolate linearly and vanish outside the grid.
    cplx operator()(double x) const {
        if (is_gaussian()) {
            const auto& g = gaussian();
            const double d = x - g.x0;
            const double s2 = g.sigma_s * g.sigma_s;
            const double amp = std::pow(2.0 * std::numbers::pi * s2, -0.25) * std::exp(-d * d / (4.0 * s2));
            const double phase = g.alpha * d * d / (2.0 * std::numbers::sqrt2 * s2) + g.k0 * x;
            return std::polar(amp, phase);
        }
        const auto& s = grid();
        if (x < s.x.front() || x > s.x.back()) return {0.0, 0.0};
        auto it = std::upper_bound(s.x.begin(), s.x.end(), x);
        std::size_t j = (it == s.x.end()) ? s.x.size() - 1 : static_cast<std::size_t>(it - s.x.begin());
        if (j == 0) return s.psi.front();
        const double t = (x - s.x[j - 1]) / (s.x[j] - s.x[j - 1]);
        return (1.0 - t) * s.psi[j - 1] + t * s.psi[j];
    }

    /// d psi / dx for closed-form states.
    cplx derivative(double x) const {
        const auto& g = gaussian();
        const double d = x - g.x0;
        const double s2 = g.sigma_s * g.sigma_s;
        const cplx log_slope{-d / (2.0 * s2), g.alpha * d / (std::numbers::sqrt2 * s2) + g.k0};
        return log_slope * (*this)(x);
    }

    /// Interval outside of which |psi|^2 is negligible (< 1e-30 relative).
    std::pair<double, double> support() const {
        if (is_gaussian()) {
            const auto& g = gaussian();
            return {g.x0 - 12.0 * g.sigma_s, g.x0 + 12.0 * g.sigma_s};
        }
        return {grid().x.front(), grid().x.back()};
    }

private:
    std::variant<GaussianState, GridState> rep_;
    std::optional<SamplingReport> report_;
};

inline MarketState make_gaussian(double x0, double sigma_s, double alpha = 0.0, double k0 = 0.0) {
    return MarketState(GaussianState{x0, sigma_s, alpha, k0});
}

inline double grid_norm(const GridState& g) {
    std::vector<double> dens(g.psi.size());
    for (std::size_t i = 0; i < dens.size(); ++i) dens[i] = std::norm(g.psi[i]);
    return quad::trapezoid(g.x, dens);
}

inline MarketState normalize(const MarketState& state) {
    if (state.is_gaussian()) return state;
    GridState g = state.grid();
    const double n2 = grid_norm(g);
    if (!(n2 > 0.0) || !std::isfinite(n2)) throw DomainError("cannot normalise a zero or non-finite state");
    const double scale = 1.0 / std::sqrt(n2);
    for (auto& v : g.psi) v *= scale;
    return MarketState(std::move(g), state.sampling());
}

/// Complex conjugate state; flips chirp and boost.
inline MarketState conjugate(const MarketState& state) {
    if (state.is_gaussian()) {
        auto g = state.gaussian();
        g.alpha = -g.alpha;
        g.k0 = -g.k0;
        return MarketState(g);
    }
    GridState g = state.grid();
    for (auto& v : g.psi) v = std::conj(v);
    return MarketState(std::move(g), state.sampling());
}

/// Re <psi| -i d/dx |psi>.  Grid states use central differences (one-sided
/// at the ends) with trapezoid weights.
inline double expected_momentum(const MarketState& state) {
    if (state.is_gaussian()) return state.gaussian().k0;
    const auto& g = state.grid();
    const std::size_t n = g.x.size();
    if (n < 3) throw DomainError("momentum needs at least three grid points");
    const auto w = quad::trapezoid_weights(g.x);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        cplx d;
        if (i == 0)
            d = (g.psi[1] - g.psi[0]) / (g.x[1] - g.x[0]);
        else if (i == n - 1)
            d = (g.psi[n - 1] - g.psi[n - 2]) / (g.x[n - 1] - g.x[n - 2]);
        else
            d = (g.psi[i + 1] - g.psi[i - 1]) / (g.x[i + 1] - g.x[i - 1]);
        acc += w[i] * std::imag(std::conj(g.psi[i]) * d);
    }
    return acc;
}

inline double position_mean(const MarketState& state) {
    if (state.is_gaussian()) return state.gaussian().x0;
    const auto& g = state.grid();
    std::vector<double> y(g.x.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = g.x[i] * std::norm(g.psi[i]);
    return quad::trapezoid(g.x, y) / grid_norm(g);
}

inline double state_variance(const MarketState& state) {
    if (state.is_gaussian()) return state.gaussian().sigma_s * state.gaussian().sigma_s;
    const auto& g = state.grid();
    const double mean = position_mean(state);
    std::vector<double> y(g.x.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = (g.x[i] - mean) * (g.x[i] - mean) * std::norm(g.psi[i]);
    return quad::trapezoid(g.x, y) / grid_norm(g);
}

/// Uniform sampling on [x_min, x_max] followed by renormalisation.
inline MarketState to_grid(const MarketState& state, double x_min, double x_max, std::size_t n) {
    if (!(x_min < x_max)) throw DomainError("to_grid needs x_min < x_max");
    if (n < 16) throw DomainError("to_grid needs at least 16 points");
    GridState g;
    g.x.resize(n);
    g.psi.resize(n);
    const double h = (x_max - x_min) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        g.x[i] = (i + 1 == n) ? x_max : x_min + static_cast<double>(i) * h;
        g.psi[i] = state(g.x[i]);
    }
    SamplingReport rep;
    rep.raw_norm = grid_norm(g);
    if (state.is_gaussian()) {
        const auto& s = state.gaussian();
        auto cdf = [&](double x) { return 0.5 * std::erfc(-(x - s.x0) / (s.sigma_s * std::numbers::sqrt2)); };
        rep.captured_mass = cdf(x_max) - cdf(x_min);
    } else {
        rep.captured_mass = rep.raw_norm / grid_norm(state.grid());
    }
    if (rep.captured_mass < 1.0 - 1e-6)
        rep.warning = "grid truncates " + std::to_string(1.0 - rep.captured_mass) + " of the probability mass";
    return normalize(MarketState(std::move(g), rep));
}

/// Default bounds: x0 +- 10 sigma_s for closed forms.
inline MarketState to_grid(const MarketState& state, std::size_t n) {
    if (state.is_gaussian()) {
        const auto& g = state.gaussian();
        return to_grid(state, g.x0 - 10.0 * g.sigma_s, g.x0 + 10.0 * g.sigma_s, n);
    }
    const auto& g = state.grid();
    return to_grid(state, g.x.front(), g.x.back(), n);
}

inline nlohmann::json to_json(const MarketState& state) {
    if (state.is_gaussian()) {
        const auto& g = state.gaussian();
        return {{"kind", "gaussian"}, {"x0", g.x0}, {"sigma_s", g.sigma_s}, {"alpha", g.alpha}, {"k0", g.k0}};
    }
    const auto& g = state.grid();
    std::vector<double> re(g.psi.size()), im(g.psi.size());
    for (std::size_t i = 0; i < re.size(); ++i) {
        re[i] = g.psi[i].real();
        im[i] = g.psi[i].imag();
    }
    return {{"kind", "grid"}, {"x", g.x}, {"re", re}, {"im", im}};
}

inline MarketState state_from_json(const nlohmann::json& j) {
    try {
        const std::string kind = j.at("kind").get<std::string>();
        if (kind == "gaussian") {
            return make_gaussian(j.value("x0", 0.0), j.at("sigma_s").get<double>(), j.value("alpha", 0.0),
                                 j.value("k0", 0.0));
        }
        if (kind == "grid") {
            GridState g;
            g.x = j.at("x").get<std::vector<double>>();
            const auto re = j.at("re").get<std::vector<double>>();
            const auto im = j.at("im").get<std::vector<double>>();
            if (re.size() != g.x.size() || im.size() != g.x.size())
                throw ValidationError("grid state arrays differ in length");
            g.psi.resize(re.size());
            for (std::size_t i = 0; i < re.size(); ++i) g.psi[i] = {re[i], im[i]};
            return MarketState(std::move(g));
        }
        throw ValidationError("unknown state kind '" + kind + "'");
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed state: ") + e.what());
    }
}

} // namespace qdrift

#endif // QDRIFT_STATE_HPP
