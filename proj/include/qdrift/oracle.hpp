#ifndef QDRIFT_ORACLE_HPP
#define QDRIFT_ORACLE_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "payoff.hpp"
#include "pricing.hpp"
#include "state.hpp"

namespace qdrift {

/// x_i = x_min + i h, i = 0..n-1.
struct UniformGrid {
    double x_min = 0.0;
    double h = 1.0;
    std::size_t n = 0;

    double x(std::size_t i) const noexcept { return x_min + static_cast<double>(i) * h; }
    double x_max() const noexcept { return x(n - 1); }
    std::vector<double> points() const {
        std::vector<double> out(n);
        for (std::size_t i = 0; i < n; ++i) out[i] = x(i);
        return out;
    }
};

inline UniformGrid make_uniform_grid(double x_min, double x_max, std::size_t n) {
    if (!(x_max > x_min) || n < 2) throw DomainError("grid needs x_min < x_max and n >= 2");
    return {x_min, (x_max - x_min) / static_cast<double>(n - 1), n};
}

/// Checks that abscissae are uniform to 1e-9 relative spacing.
inline UniformGrid uniform_grid_of(std::span<const double> x) {
    if (x.size() < 2) throw DomainError("grid needs at least two points");
    const double h = (x.back() - x.front()) / static_cast<double>(x.size() - 1);
    for (std::size_t i = 0; i + 1 < x.size(); ++i)
        if (std::abs((x[i + 1] - x[i]) - h) > 1e-9 * h) throw DomainError("grid is not uniform");
    return {x.front(), h, x.size()};
}

/// Real symmetric tridiagonal operator on a uniform grid, Dirichlet outside.
struct GridOperator {
    UniformGrid grid;
    std::vector<double> diag;
    std::vector<double> off; ///< off[i] couples i and i+1
    bool hermitian = true;

    template <class T>
    std::vector<T> apply(std::span<const T> v) const {
        const std::size_t n = diag.size();
        std::vector<T> out(n);
        for (std::size_t i = 0; i < n; ++i) {
            T s = diag[i] * v[i];
            if (i > 0) s += off[i - 1] * v[i - 1];
            if (i + 1 < n) s += off[i] * v[i + 1];
            out[i] = s;
        }
        return out;
    }
};

/// -(sigma^2 / 2) D2 + diag(V).
inline GridOperator build_hamiltonian_grid(const HamiltonianSpec& h, const UniformGrid& grid) {
    if (grid.n < 256) throw DomainError("Hamiltonian grid needs at least 256 points");
    if (!(h.sigma_h > 0.0)) throw DomainError("sigma_H must be positive");
    const double c = 0.5 * h.sigma_h * h.sigma_h / (grid.h * grid.h);
    GridOperator op{grid, std::vector<double>(grid.n), std::vector<double>(grid.n - 1, -c), true};
    for (std::size_t i = 0; i < grid.n; ++i) op.diag[i] = 2.0 * c + h.potential(grid.x(i));
    return op;
}

inline GridOperator build_hamiltonian_grid(const HamiltonianSpec& h, std::span<const double> x) {
    return build_hamiltonian_grid(h, uniform_grid_of(x));
}

/// Cayley step (I + i H dt/2) psi_new = (I - i H dt/2) psi_old with a
/// factorisation reused across steps.
class CayleyStepper {
public:
    CayleyStepper(const GridOperator& op, double dt) : op_(op), dt_(dt) {
        const std::size_t n = op.diag.size();
        const cplx half(0.0, 0.5 * dt);
        c_.resize(n);
        inv_.resize(n);
        // Thomas elimination of the constant left-hand matrix
        cplx denom = 1.0 + half * op.diag[0];
        for (std::size_t i = 0; i < n; ++i) {
            if (i > 0) denom = 1.0 + half * op.diag[i] - half * op.off[i - 1] * c_[i - 1];
            if (std::abs(denom) == 0.0) throw ConvergenceError("Cayley solve hit a singular pivot");
            inv_[i] = 1.0 / denom;
            c_[i] = i + 1 < n ? half * op.off[i] * inv_[i] : 0.0;
        }
    }

    void step(std::vector<cplx>& psi) const {
        const std::size_t n = psi.size();
        const cplx half(0.0, 0.5 * dt_);
        rhs_.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            cplx s = op_.diag[i] * psi[i];
            if (i > 0) s += op_.off[i - 1] * psi[i - 1];
            if (i + 1 < n) s += op_.off[i] * psi[i + 1];
            rhs_[i] = psi[i] - half * s;
        }
        psi[0] = rhs_[0] * inv_[0];
        for (std::size_t i = 1; i < n; ++i) psi[i] = (rhs_[i] - half * op_.off[i - 1] * psi[i - 1]) * inv_[i];
        for (std::size_t i = n - 1; i-- > 0;) psi[i] -= c_[i] * psi[i + 1];
    }

private:
    const GridOperator& op_;
    double dt_;
    std::vector<cplx> c_;
    std::vector<cplx> inv_;
    mutable std::vector<cplx> rhs_;
};

namespace detail {

inline void require_on_grid(const MarketState& state, const GridOperator& op) {
    if (!state.is_grid()) throw DomainError("evolution needs a grid state");
    const auto& x = state.grid().x;
    if (x.size() != op.grid.n || std::abs(x.front() - op.grid.x_min) > 1e-12 * std::max(1.0, std::abs(x.front())) ||
        std::abs(x.back() - op.grid.x_max()) > 1e-9 * std::max(1.0, std::abs(x.back())))
        throw DomainError("state does not live on the operator's grid");
}

} // namespace detail

/// e^{-iHt} psi by `steps` Cayley steps of size t / steps.
inline MarketState evolve_state(const MarketState& state, const GridOperator& op, double t, std::size_t steps) {
    if (steps < 1) throw DomainError("evolution needs at least one step");
    detail::require_on_grid(state, op);
    GridState g = state.grid();
    if (t == 0.0) return MarketState(std::move(g), state.sampling());
    CayleyStepper stepper(op, t / static_cast<double>(steps));
    for (std::size_t s = 0; s < steps; ++s) stepper.step(g.psi);
    return MarketState(std::move(g), state.sampling());
}

/// Expectations of U, X and P along a uniformly sampled evolution.
struct EvolutionResult {
    std::vector<double> times;
    std::vector<double> e_u;
    std::vector<double> e_x;
    std::vector<double> e_p;
    std::vector<double> norm;
    double max_boundary_mass = 0.0;
};

struct EvolutionSettings {
    std::size_t grid_n = 4096;
    double dt_max = 1e-4;          ///< upper bound on the Cayley step
    double boundary_mass = 1e-8;   ///< tolerated mass in the outer 5% on either side
    std::optional<double> x_min;   ///< overrides the automatic domain
    std::optional<double> x_max;
};

/// Domain x0 +- (10 sigma_S + sigma_H^2 t (|k0| + 10 sigma_p)) for closed forms.
inline std::pair<double, double> evolution_domain(const GaussianState& g, double sigma_h, double t_max) {
    const double sp = std::sqrt(0.25 + 0.5 * g.alpha * g.alpha) / g.sigma_s;
    const double half = 10.0 * g.sigma_s + sigma_h * sigma_h * t_max * (std::abs(g.k0) + 10.0 * sp);
    return {g.x0 - half, g.x0 + half};
}

namespace detail {

struct GridMoments {
    double u, x, p, norm, edge;
};

/// Plain h-weighted sums (the inner product in which the grid H is
/// Hermitian).  Momentum by central differences, end points excluded.
inline GridMoments grid_moments(const UniformGrid& grid, std::span<const cplx> psi, std::span<const double> u) {
    const std::size_t n = psi.size();
    const std::size_t edge = std::max<std::size_t>(1, n / 20);
    GridMoments m{0.0, 0.0, 0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < n; ++i) {
        const double d = std::norm(psi[i]);
        m.norm += d;
        m.u += u[i] * d;
        m.x += grid.x(i) * d;
        if (i < edge || i >= n - edge) m.edge += d;
        if (i > 0 && i + 1 < n) m.p += std::imag(std::conj(psi[i]) * (psi[i + 1] - psi[i - 1])) / (2.0 * grid.h);
    }
    m.u *= grid.h;
    m.x *= grid.h;
    m.p *= grid.h;
    m.norm *= grid.h;
    m.edge *= grid.h;
    return m;
}

} // namespace detail

/// Samples t_j = j t_max / (samples - 1).  Closed-form states are sampled on
/// the automatic domain (or the settings' override) first.
inline EvolutionResult heisenberg_expectation_curve(const MarketState& state, const Payoff& p, const HamiltonianSpec& h,
                                                    double t_max, std::size_t samples,
                                                    const EvolutionSettings& settings = {}) {
    if (samples < 2) throw DomainError("expectation curve needs at least two samples");
    if (!(t_max > 0.0)) throw DomainError("t_max must be positive");
    MarketState grid_state = state;
    if (state.is_gaussian()) {
        auto [lo, hi] = evolution_domain(state.gaussian(), h.sigma_h, t_max);
        if (settings.x_min) lo = *settings.x_min;
        if (settings.x_max) hi = *settings.x_max;
        grid_state = to_grid(state, lo, hi, settings.grid_n);
    }
    const auto& x = grid_state.grid().x;
    const auto op = build_hamiltonian_grid(h, x);
    std::vector<double> u(x.size());
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = payoff_value(p, x[i]);

    const double interval = t_max / static_cast<double>(samples - 1);
    const auto per = static_cast<std::size_t>(std::ceil(interval / settings.dt_max - 1e-9));
    const CayleyStepper stepper(op, interval / static_cast<double>(per));

    EvolutionResult r;
    std::vector<cplx> psi = grid_state.grid().psi;
    for (std::size_t j = 0; j < samples; ++j) {
        if (j > 0)
            for (std::size_t s = 0; s < per; ++s) stepper.step(psi);
        const auto m = detail::grid_moments(op.grid, psi, u);
        r.times.push_back(static_cast<double>(j) * interval);
        r.e_u.push_back(m.u);
        r.e_x.push_back(m.x);
        r.e_p.push_back(m.p);
        r.norm.push_back(m.norm);
        r.max_boundary_mass = std::max(r.max_boundary_mass, m.edge);
        if (m.edge > settings.boundary_mass) {
            const double span = x.back() - x.front();
            throw BoundaryMassError("evolved state reaches the grid boundary; widen the domain", x.front() - 0.5 * span,
                                    x.back() + 0.5 * span);
        }
    }
    return r;
}

/// dE[U]/dt at t = 0 by Neville extrapolation to zero step of the forward
/// differences (E(t_j) - E(0)) / t_j over the first four nonzero samples.
inline double finite_diff_drift(const EvolutionResult& r) {
    if (r.times.size() < 5 || r.times.front() != 0.0)
        throw DomainError("finite-difference drift needs t = 0 and at least four later samples");
    constexpr std::size_t m = 4;
    double t[m], d[m];
    for (std::size_t j = 0; j < m; ++j) {
        t[j] = r.times[j + 1];
        d[j] = (r.e_u[j + 1] - r.e_u[0]) / t[j];
    }
    for (std::size_t level = 1; level < m; ++level)
        for (std::size_t j = 0; j + level < m; ++j)
            d[j] = (t[j + level] * d[j] - t[j] * d[j + 1]) / (t[j + level] - t[j]);
    return d[0];
}

/// Evolution-based drift: five samples spaced by `delta`.
inline double evolution_drift(const MarketState& state, const Payoff& p, const HamiltonianSpec& h,
                              double delta = 1e-3, const EvolutionSettings& settings = {}) {
    return finite_diff_drift(heisenberg_expectation_curve(state, p, h, 4.0 * delta, 5, settings));
}

/// <psi| i[H_h, U] |psi> for the grid Hamiltonian: sigma^2 sum (dU/h) Im(psi_j* psi_{j+1}).
inline double grid_commutator_drift(const MarketState& state, const Payoff& p, const HamiltonianSpec& h) {
    if (!state.is_grid()) throw DomainError("grid drift needs a grid state");
    const auto& g = state.grid();
    const auto grid = uniform_grid_of(g.x);
    double acc = 0.0;
    for (std::size_t j = 0; j + 1 < grid.n; ++j) {
        const double du = payoff_value(p, g.x[j + 1]) - payoff_value(p, g.x[j]);
        acc += du * std::imag(std::conj(g.psi[j]) * g.psi[j + 1]);
    }
    return h.sigma_h * h.sigma_h * acc / grid.h;
}

inline void write_csv(std::ostream& os, const EvolutionResult& r) {
    os << "t,E_U,E_X,E_P,norm\n";
    os.precision(17);
    for (std::size_t j = 0; j < r.times.size(); ++j)
        os << r.times[j] << ',' << r.e_u[j] << ',' << r.e_x[j] << ',' << r.e_p[j] << ',' << r.norm[j] << '\n';
}

} // namespace qdrift

#endif // QDRIFT_ORACLE_HPP
