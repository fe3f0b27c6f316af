#ifndef QDRIFT_HIGHER_ORDER_HPP
#define QDRIFT_HIGHER_ORDER_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <sstream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "oracle.hpp"
#include "payoff.hpp"
#include "pricing.hpp"
#include "quadrature.hpp"
#include "state.hpp"

namespace qdrift {

/// A payout with four analytic derivatives.  `value_ld` evaluates U in
/// extended precision for the nested-commutator grid oracle.
struct SmoothPayout {
    std::function<std::array<double, 5>(double)> jet; ///< U, U', U'', U''', U''''
    std::function<long double(long double)> value_ld;
    std::string name;

    double operator()(double x, int order) const { return jet(x)[static_cast<std::size_t>(order)]; }
};

inline SmoothPayout smooth_payout(const Payoff& p) {
    SmoothPayout s;
    s.jet = [p](double x) {
        return std::array<double, 5>{payoff_derivative(p, x, 0), payoff_derivative(p, x, 1),
                                     payoff_derivative(p, x, 2), payoff_derivative(p, x, 3),
                                     payoff_derivative(p, x, 4)};
    };
    if (p.kind == PayoffKind::smooth_call) {
        const long double b = p.beta, k = p.strike;
        s.value_ld = [b, k](long double x) {
            const long double z = b * (x - k);
            return (std::max(z, 0.0L) + std::log1p(std::exp(-std::abs(z)))) / b;
        };
    } else {
        s.value_ld = [p](long double x) { return static_cast<long double>(payoff_value(p, static_cast<double>(x))); };
    }
    s.name = to_string(p.kind);
    return s;
}

/// U = e^x.
inline SmoothPayout exponential_payout() {
    SmoothPayout s;
    s.jet = [](double x) {
        const double e = std::exp(x);
        return std::array<double, 5>{e, e, e, e, e};
    };
    s.value_ld = [](long double x) { return std::exp(x); };
    s.name = "exponential";
    return s;
}

/// (L^2 U) psi = c3 psi''' + c2 psi'' + c1 psi' + c0 psi for the generator
/// D = a2 d^2/dx^2 with a2 = -(sigma^2/2) / U'.
struct L2Coefficients {
    std::function<double(double)> c3, c2, c1, c0;
};

namespace detail {

struct A2Jet {
    double a, da, d2a;
};

inline A2Jet a2_jet(const std::array<double, 5>& u, double sigma) {
    if (u[1] == 0.0) throw DomainError("payout delta vanishes; the second-order generator is undefined");
    const double s = 0.5 * sigma * sigma;
    const double u1 = u[1], u2 = u[2], u3 = u[3];
    return {-s / u1, s * u2 / (u1 * u1), s * (u3 / (u1 * u1) - 2.0 * u2 * u2 / (u1 * u1 * u1))};
}

} // namespace detail

/// Coefficients of [D, [D, U]] from the general product-rule expansion with
/// M = [D, U] = m1 d/dx + m0, m1 = 2 a2 U', m0 = a2 U''.
inline L2Coefficients collect_l2_coefficients(const SmoothPayout& u, double sigma) {
    if (!(sigma > 0.0)) throw DomainError("sigma_H must be positive");
    L2Coefficients c;
    c.c3 = [u, sigma](double x) {
        const auto j = u.jet(x);
        const auto a = detail::a2_jet(j, sigma);
        const double m1 = 2.0 * a.a * j[1];
        return a.a * m1 - m1 * a.a;
    };
    c.c2 = [u, sigma](double x) {
        const auto j = u.jet(x);
        const auto a = detail::a2_jet(j, sigma);
        const double m1 = 2.0 * a.a * j[1];
        const double dm1 = 2.0 * (a.da * j[1] + a.a * j[2]);
        return 2.0 * a.a * dm1 - m1 * a.da;
    };
    c.c1 = [u, sigma](double x) {
        const auto j = u.jet(x);
        const auto a = detail::a2_jet(j, sigma);
        const double d2m1 = 2.0 * (a.d2a * j[1] + 2.0 * a.da * j[2] + a.a * j[3]);
        const double dm0 = a.da * j[2] + a.a * j[3];
        return a.a * (d2m1 + 2.0 * dm0);
    };
    c.c0 = [u, sigma](double x) {
        const auto j = u.jet(x);
        const auto a = detail::a2_jet(j, sigma);
        const double d2m0 = a.d2a * j[2] + 2.0 * a.da * j[3] + a.a * j[4];
        return a.a * d2m0;
    };
    return c;
}

inline L2Coefficients collect_l2_coefficients(const Payoff& p, double sigma) {
    return collect_l2_coefficients(smooth_payout(p), sigma);
}

/// p = U''/U' and its first two derivatives.
struct PJet {
    double p, dp, d2p;
};

inline PJet p_jet(const std::array<double, 5>& u) {
    const double u1 = u[1], u2 = u[2], u3 = u[3], u4 = u[4];
    if (u1 == 0.0) throw DomainError("payout delta vanishes");
    const double r = u2 / u1;
    return {r, u3 / u1 - r * r, u4 / u1 - 3.0 * u2 * u3 / (u1 * u1) + 2.0 * r * r * r};
}

/// The regrouped form (sigma^4 / (2 U')) [(p psi')' + p''/2 psi], which equals
/// the collected L^2 U operator applied to psi.
inline double sl_regrouped(const SmoothPayout& u, double sigma, double x, double psi, double dpsi, double d2psi) {
    const auto j = u.jet(x);
    const auto pj = p_jet(j);
    const double s4 = std::pow(sigma, 4);
    return s4 / (2.0 * j[1]) * (pj.p * d2psi + pj.dp * dpsi + 0.5 * pj.d2p * psi);
}

/// (p psi')' + q psi = lambda_scale * lambda * w psi on [a, b], Dirichlet,
/// with p = U''/U', q = p''/2, w = U', lambda_scale = 2 / sigma^4.
struct SLProblem {
    std::function<double(double)> p, dp, q, w;
    double a = 0.0;
    double b = 1.0;
    double sigma = 1.0;
    double lambda_scale = 2.0;
    SmoothPayout source;
};

inline SLProblem build_sl_problem(const SmoothPayout& u, double sigma, double a, double b) {
    if (!(b > a)) throw DomainError("Sturm-Liouville domain needs a < b");
    if (!(sigma > 0.0)) throw DomainError("sigma_H must be positive");
    constexpr int scan = 2001;
    for (int order : {1, 2}) {
        double bad_lo = 0.0, bad_hi = 0.0;
        bool bad = false;
        for (int i = 0; i < scan; ++i) {
            const double x = a + (b - a) * i / (scan - 1);
            if (!(u(x, order) > 0.0)) {
                if (!bad) bad_lo = x;
                bad_hi = x;
                bad = true;
            } else if (bad) {
                break;
            }
        }
        if (bad) {
            std::ostringstream os;
            os << (order == 1 ? "U'" : "U''") << " <= 0 on [" << bad_lo << ", " << bad_hi << "]";
            throw DomainError(os.str());
        }
    }
    SLProblem sl;
    sl.p = [u](double x) { return p_jet(u.jet(x)).p; };
    sl.dp = [u](double x) { return p_jet(u.jet(x)).dp; };
    sl.q = [u](double x) { return 0.5 * p_jet(u.jet(x)).d2p; };
    sl.w = [u](double x) { return u(x, 1); };
    sl.a = a;
    sl.b = b;
    sl.sigma = sigma;
    sl.lambda_scale = 2.0 / std::pow(sigma, 4);
    sl.source = u;
    return sl;
}

inline SLProblem build_sl_problem(const Payoff& p, double sigma, double a, double b) {
    return build_sl_problem(smooth_payout(p), sigma, a, b);
}

/// -phi_ss + Q(s) phi = Lambda phi with s = \int_a^x U'/sqrt(U''), h = U''^{1/4}
/// (= (p w)^{1/4}), psi = phi / h, Q = h_ss / h - q / w, Lambda = -lambda_scale lambda.
struct WKBForm {
    std::vector<double> x; ///< tabulation abscissae
    std::vector<double> s; ///< s(x_i), strictly increasing, s(a) = 0
    std::function<double(double)> ds_dx;
    std::function<double(double)> h;
    std::function<double(double)> q_of_x;
    double s_max = 0.0;

    /// Inverse of s(x) by interpolation refined with Newton steps.
    double x_of_s(double sv) const {
        if (sv <= 0.0) return x.front();
        if (sv >= s_max) return x.back();
        auto it = std::upper_bound(s.begin(), s.end(), sv);
        const auto j = static_cast<std::size_t>(it - s.begin());
        const double t = (sv - s[j - 1]) / (s[j] - s[j - 1]);
        double xv = x[j - 1] + t * (x[j] - x[j - 1]);
        for (int k = 0; k < 3; ++k) {
            const double sx = s[j - 1] + quad::integrate(ds_dx, x[j - 1], xv, {});
            xv -= (sx - sv) / ds_dx(xv);
        }
        return xv;
    }

    double q_of_s(double sv) const { return q_of_x(x_of_s(sv)); }
};

inline WKBForm liouville_transform(const SLProblem& sl, std::size_t table = 2048) {
    const auto u = sl.source;
    WKBForm f;
    f.ds_dx = [u](double x) { return u(x, 1) / std::sqrt(u(x, 2)); };
    f.h = [u](double x) { return std::pow(u(x, 2), 0.25); };
    f.q_of_x = [u, sl](double x) {
        const auto j = u.jet(x);
        const double u1 = j[1], u2 = j[2], u3 = j[3], u4 = j[4];
        const double h = std::pow(u2, 0.25);
        const double dh = 0.25 * std::pow(u2, -0.75) * u3;
        const double d2h = 0.25 * (-0.75 * std::pow(u2, -1.75) * u3 * u3 + std::pow(u2, -0.75) * u4);
        const double ds = u1 / std::sqrt(u2);
        const double d2s = std::sqrt(u2) - 0.5 * u1 * u3 * std::pow(u2, -1.5);
        const double h_ss = (d2h * ds - dh * d2s) / (ds * ds * ds);
        return h_ss / h - sl.q(x) / sl.w(x);
    };
    f.x.resize(table + 1);
    f.s.resize(table + 1);
    f.x[0] = sl.a;
    f.s[0] = 0.0;
    for (std::size_t i = 1; i <= table; ++i) {
        f.x[i] = i == table ? sl.b : sl.a + (sl.b - sl.a) * static_cast<double>(i) / static_cast<double>(table);
        f.s[i] = f.s[i - 1] + quad::integrate(f.ds_dx, f.x[i - 1], f.x[i], {});
        if (!(f.s[i] > f.s[i - 1])) throw ConvergenceError("Liouville coordinate s(x) is not strictly increasing");
    }
    f.s_max = f.s.back();
    return f;
}

/// Eigenvalues Lambda of -(p psi')' - q psi = Lambda w psi (ascending) with the
/// matching lambda = -Lambda / lambda_scale of the equation as posed, plus
/// eigenvectors on the interior grid.
struct SLSpectrum {
    std::vector<double> big_lambda;
    std::vector<double> lambda;
    std::vector<double> x;
    std::vector<std::vector<double>> vectors;
};

/// Second-order finite differences with p at half nodes; n interior nodes.
struct SLMatrices {
    Eigen::MatrixXd a; ///< symmetric
    Eigen::VectorXd w; ///< diagonal weight
    std::vector<double> x;
};

namespace detail {

struct Tridiagonal {
    std::vector<double> diag, off, w, x;
};

inline Tridiagonal sl_tridiagonal(const SLProblem& sl, std::size_t n) {
    const double h = (sl.b - sl.a) / static_cast<double>(n + 1);
    Tridiagonal t;
    t.diag.resize(n);
    t.off.resize(n - 1);
    t.w.resize(n);
    t.x.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = sl.a + static_cast<double>(i + 1) * h;
        const double pl = sl.p(x - 0.5 * h), pr = sl.p(x + 0.5 * h);
        t.x[i] = x;
        t.diag[i] = (pl + pr) / (h * h) - sl.q(x);
        if (i + 1 < n) t.off[i] = -pr / (h * h);
        t.w[i] = sl.w(x);
        if (!(t.w[i] > 0.0)) throw DomainError("Sturm-Liouville weight is not positive definite");
    }
    return t;
}

/// Eigenvector of a symmetric tridiagonal matrix by inverse iteration.
inline std::vector<double> tridiagonal_eigenvector(const std::vector<double>& d, const std::vector<double>& e,
                                                   double shift) {
    const std::size_t n = d.size();
    std::vector<double> v(n, 1.0), c(n), z(n);
    for (int it = 0; it < 4; ++it) {
        // Thomas solve of (T - shift) z = v
        double denom = d[0] - shift;
        if (denom == 0.0) denom = 1e-300;
        c[0] = n > 1 ? e[0] / denom : 0.0;
        z[0] = v[0] / denom;
        for (std::size_t i = 1; i < n; ++i) {
            denom = d[i] - shift - e[i - 1] * c[i - 1];
            if (denom == 0.0) denom = 1e-300;
            c[i] = i + 1 < n ? e[i] / denom : 0.0;
            z[i] = (v[i] - e[i - 1] * z[i - 1]) / denom;
        }
        for (std::size_t i = n - 1; i-- > 0;) z[i] -= c[i] * z[i + 1];
        double norm = 0.0;
        for (double a : z) norm += a * a;
        norm = std::sqrt(norm);
        for (std::size_t i = 0; i < n; ++i) v[i] = z[i] / norm;
    }
    // fix the sign so the first sizeable component is positive
    for (double a : v)
        if (std::abs(a) > 1e-8) {
            if (a < 0.0)
                for (auto& b : v) b = -b;
            break;
        }
    return v;
}

inline std::vector<double> tridiagonal_eigenvalues(const std::vector<double>& d, const std::vector<double>& e) {
    const auto n = static_cast<Eigen::Index>(d.size());
    Eigen::VectorXd dv(n), ev(std::max<Eigen::Index>(n - 1, 0));
    for (Eigen::Index i = 0; i < n; ++i) dv[i] = d[static_cast<std::size_t>(i)];
    for (Eigen::Index i = 0; i + 1 < n; ++i) ev[i] = e[static_cast<std::size_t>(i)];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.computeFromTridiagonal(dv, ev, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw ConvergenceError("tridiagonal eigensolve did not converge");
    std::vector<double> out(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = solver.eigenvalues()[i];
    return out;
}

} // namespace detail

inline SLMatrices assemble_sl_dense(const SLProblem& sl, std::size_t n) {
    const auto t = detail::sl_tridiagonal(sl, n);
    const auto m = static_cast<Eigen::Index>(n);
    SLMatrices out{Eigen::MatrixXd::Zero(m, m), Eigen::VectorXd(m), t.x};
    for (Eigen::Index i = 0; i < m; ++i) {
        const auto k = static_cast<std::size_t>(i);
        out.a(i, i) = t.diag[k];
        if (i + 1 < m) out.a(i, i + 1) = out.a(i + 1, i) = t.off[k];
        out.w[i] = t.w[k];
    }
    return out;
}

/// First k eigenpairs of the generalized symmetric-definite problem, reduced
/// to W^{-1/2} A W^{-1/2} (still tridiagonal).
inline SLSpectrum sl_eigensolve(const SLProblem& sl, std::size_t n, std::size_t k) {
    if (n < 128) throw DomainError("Sturm-Liouville eigensolve needs at least 128 grid points");
    if (k < 1 || k > n) throw DomainError("eigen count must be in [1, n]");
    auto t = detail::sl_tridiagonal(sl, n);
    std::vector<double> d(n), e(n - 1), rw(n);
    for (std::size_t i = 0; i < n; ++i) rw[i] = 1.0 / std::sqrt(t.w[i]);
    for (std::size_t i = 0; i < n; ++i) d[i] = t.diag[i] * rw[i] * rw[i];
    for (std::size_t i = 0; i + 1 < n; ++i) e[i] = t.off[i] * rw[i] * rw[i + 1];
    const auto values = detail::tridiagonal_eigenvalues(d, e);

    SLSpectrum out;
    out.x = t.x;
    for (std::size_t j = 0; j < k; ++j) {
        const double big = values[j];
        out.big_lambda.push_back(big);
        out.lambda.push_back(-big / sl.lambda_scale);
        const double gap = j + 1 < n ? values[j + 1] - big : std::abs(big);
        auto v = detail::tridiagonal_eigenvector(d, e, big - 1e-6 * std::max(gap, 1e-12));
        for (std::size_t i = 0; i < n; ++i) v[i] *= rw[i];
        out.vectors.push_back(std::move(v));
    }
    return out;
}

/// Eigenvalues Lambda of -phi_ss + Q phi = Lambda phi on [0, s_max], Dirichlet,
/// n interior nodes uniform in s.
inline std::vector<double> wkb_eigenvalues(const WKBForm& f, std::size_t n, std::size_t k) {
    if (n < 128) throw DomainError("transformed eigensolve needs at least 128 grid points");
    if (k < 1 || k > n) throw DomainError("eigen count must be in [1, n]");
    const double h = f.s_max / static_cast<double>(n + 1);
    std::vector<double> d(n), e(n - 1, -1.0 / (h * h));
    for (std::size_t i = 0; i < n; ++i) d[i] = 2.0 / (h * h) + f.q_of_s(static_cast<double>(i + 1) * h);
    auto values = detail::tridiagonal_eigenvalues(d, e);
    values.resize(k);
    return values;
}

/// Grid oracle for [D, [D, U]] f with D = diag(a2) D2 (Dirichlet), assembled
/// entrywise as sum_k D_ik D_kj (U_i - 2 U_k + U_j) in extended precision.
/// Rows within two nodes of either end are left at zero.
inline std::vector<double> nested_commutator_apply(const SmoothPayout& u, double sigma, std::span<const double> x,
                                                   std::span<const double> f) {
    const std::size_t n = x.size();
    if (n < 5 || f.size() != n) throw DomainError("nested commutator needs matching grids of >= 5 points");
    const auto grid = uniform_grid_of(x);
    const long double h2 = static_cast<long double>(grid.h) * grid.h;
    std::vector<long double> uv(n), a(n);
    for (std::size_t i = 0; i < n; ++i) {
        const long double xi = static_cast<long double>(grid.x_min) + static_cast<long double>(i) * grid.h;
        uv[i] = u.value_ld(xi);
        a[i] = -0.5L * sigma * sigma / static_cast<long double>(u(x[i], 1));
    }
    auto dcoef = [&](std::size_t i, std::size_t k) -> long double {
        return (i == k ? -2.0L : 1.0L) * a[i] / h2;
    };
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 2; i + 2 < n; ++i) {
        long double acc = 0.0L;
        for (std::size_t kk = i - 1; kk <= i + 1; ++kk)
            for (std::size_t j = kk - 1; j <= kk + 1; ++j)
                acc += dcoef(i, kk) * dcoef(kk, j) * ((uv[i] - uv[kk]) + (uv[j] - uv[kk])) * f[j];
        out[i] = static_cast<double>(acc);
    }
    return out;
}

/// Re sum_k (it)^k / k! <psi| L^k U |psi> on the state's grid, L Q = [H, Q].
/// <L^k U> = sum_j C(k, j) (-1)^j <H^{k-j} psi| U |H^j psi>.
inline double power_series_expectation(const MarketState& state, const Payoff& p, const HamiltonianSpec& hs, double t,
                                       int k_max) {
    if (!state.is_grid()) throw DomainError("power series expectation needs a grid state");
    if (k_max < 0 || k_max > 6) throw DomainError("k_max must lie in [0, 6]");
    const auto& g = state.grid();
    const auto op = build_hamiltonian_grid(hs, g.x);
    const std::size_t n = g.x.size();
    std::vector<std::vector<cplx>> hpow{g.psi};
    for (int k = 1; k <= k_max; ++k) hpow.push_back(op.apply<cplx>(hpow.back()));
    std::vector<double> u(n);
    for (std::size_t i = 0; i < n; ++i) u[i] = payoff_value(p, g.x[i]);
    auto bracket = [&](int l, int r) {
        cplx s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            s += std::conj(hpow[static_cast<std::size_t>(l)][i]) * u[i] * hpow[static_cast<std::size_t>(r)][i];
        return s * op.grid.h;
    };
    cplx total = 0.0;
    double factor = 1.0; // t^k / k!
    for (int k = 0; k <= k_max; ++k) {
        if (k > 0) factor *= t / k;
        cplx lk = 0.0;
        double binom = 1.0;
        for (int j = 0; j <= k; ++j) {
            lk += ((j % 2) ? -binom : binom) * bracket(k - j, j);
            binom = binom * (k - j) / (j + 1);
        }
        static const cplx i_pow[4] = {{1.0, 0.0}, {0.0, 1.0}, {-1.0, 0.0}, {0.0, -1.0}};
        const cplx term = i_pow[k % 4] * factor * lk;
        if (!std::isfinite(std::abs(term)) || std::abs(term) > 1e200) {
            std::ostringstream os;
            os << "power series term of order " << k << " overflows (|term| = " << std::abs(term) << ")";
            throw ConvergenceError(os.str());
        }
        total += term;
    }
    return total.real();
}

} // namespace qdrift

#endif // QDRIFT_HIGHER_ORDER_HPP
