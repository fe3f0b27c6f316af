#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include <qdrift/higher_order.hpp>

using namespace qdrift;

namespace {

struct TestFunction {
    std::vector<double> x, f, d1, d2;
};

/// Random sine combination vanishing at both ends of [a, b].
TestFunction sample_function(double a, double b, std::size_t n, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double c[4];
    for (double& v : c) v = u(rng);
    TestFunction t;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
        double f = 0.0, f1 = 0.0, f2 = 0.0;
        for (int m = 0; m < 4; ++m) {
            const double k = (m + 1) * std::numbers::pi / (b - a);
            f += c[m] * std::sin(k * (x - a));
            f1 += c[m] * k * std::cos(k * (x - a));
            f2 -= c[m] * k * k * std::sin(k * (x - a));
        }
        t.x.push_back(x);
        t.f.push_back(f);
        t.d1.push_back(f1);
        t.d2.push_back(f2);
    }
    return t;
}

} // namespace

TEST(HigherOrder, ThirdDerivativeCoefficientVanishes) {
    for (const auto& u : {exponential_payout(), smooth_payout(Payoff::smooth_call(0.0, 3.0))}) {
        const auto c = collect_l2_coefficients(u, 0.7);
        for (double x = -1.0; x <= 1.0; x += 0.125) EXPECT_LE(std::abs(c.c3(x)), 1e-12);
    }
}

TEST(HigherOrder, ExponentialCoefficientsInClosedForm) {
    // U = e^x: a2 = -(s^2/2) e^{-x}, m1 = -s^2, m0 = -s^2/2, so only c2 survives.
    const double s = 0.9, s4 = std::pow(s, 4);
    const auto c = collect_l2_coefficients(exponential_payout(), s);
    for (double x : {-0.5, 0.0, 0.4}) {
        EXPECT_NEAR(c.c2(x), 0.5 * s4 * std::exp(-x), 1e-12);
        EXPECT_NEAR(c.c1(x), 0.0, 1e-12);
        EXPECT_NEAR(c.c0(x), 0.0, 1e-12);
    }
}

TEST(HigherOrder, CollectedCoefficientsMatchNestedCommutator) {
    for (const auto& u : {exponential_payout(), smooth_payout(Payoff::smooth_call(0.0, 1.0))}) {
        const double sigma = 1.0;
        const auto c = collect_l2_coefficients(u, sigma);
        const auto t = sample_function(0.0, 1.0, 2048, 7);
        const auto grid = nested_commutator_apply(u, sigma, t.x, t.f);
        double worst = 0.0, scale = 0.0;
        for (std::size_t i = 2; i + 2 < t.x.size(); ++i) {
            const double xi = t.x[i];
            const double exact = c.c2(xi) * t.d2[i] + c.c1(xi) * t.d1[i] + c.c0(xi) * t.f[i];
            worst = std::max(worst, std::abs(grid[i] - exact));
            scale = std::max(scale, std::abs(exact));
        }
        EXPECT_LT(worst / scale, 1e-4) << u.name;
    }
}

TEST(HigherOrder, RegroupedFormEqualsCollectedOperator) {
    const auto u = smooth_payout(Payoff::smooth_call(0.2, 2.0));
    const double sigma = 0.5;
    const auto c = collect_l2_coefficients(u, sigma);
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> v(-1.0, 1.0);
    for (int i = 0; i < 50; ++i) {
        const double x = 2.0 * v(rng), f = v(rng), f1 = v(rng), f2 = v(rng);
        const double collected = c.c2(x) * f2 + c.c1(x) * f1 + c.c0(x) * f;
        EXPECT_NEAR(sl_regrouped(u, sigma, x, f, f1, f2), collected, 1e-12 * (1.0 + std::abs(collected)));
    }
}

TEST(HigherOrder, ExponentialSturmLiouvilleSpectrum) {
    const auto sl = build_sl_problem(exponential_payout(), 1.0, 0.0, 1.0);
    const auto base = sl_eigensolve(sl, 256, 3);
    const auto fine = sl_eigensolve(sl, 513, 3);
    const std::vector<double> expected{5.82653, 23.4144, 52.7281};
    for (std::size_t j = 0; j < 3; ++j) {
        EXPECT_NEAR(fine.big_lambda[j], expected[j], 1e-4 * expected[j]);
        EXPECT_LT(std::abs(base.big_lambda[j] - fine.big_lambda[j]) / fine.big_lambda[j], 1e-3);
        EXPECT_DOUBLE_EQ(base.lambda[j], -base.big_lambda[j] / sl.lambda_scale);
    }
}

TEST(HigherOrder, DenseAndTridiagonalSolversAgree) {
    const auto sl = build_sl_problem(exponential_payout(), 1.0, 0.0, 1.0);
    const auto m = assemble_sl_dense(sl, 200);
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(m.a, Eigen::MatrixXd(m.w.asDiagonal()));
    const auto tri = sl_eigensolve(sl, 200, 3);
    for (Eigen::Index j = 0; j < 3; ++j)
        EXPECT_NEAR(ges.eigenvalues()[j], tri.big_lambda[static_cast<std::size_t>(j)], 1e-8 * ges.eigenvalues()[j]);
}

TEST(HigherOrder, EigenvectorsSolveThePencil) {
    const auto sl = build_sl_problem(exponential_payout(), 1.0, 0.0, 1.0);
    const auto m = assemble_sl_dense(sl, 256);
    const auto sp = sl_eigensolve(sl, 256, 2);
    for (std::size_t j = 0; j < 2; ++j) {
        Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(sp.vectors[j].data(), 256);
        const Eigen::VectorXd r = m.a * v - sp.big_lambda[j] * m.w.cwiseProduct(v);
        EXPECT_LT(r.norm() / (m.a * v).norm(), 1e-8);
    }
}

TEST(HigherOrder, LiouvilleNormalFormOfExponential) {
    const auto sl = build_sl_problem(exponential_payout(), 1.0, 0.0, 1.0);
    const auto form = liouville_transform(sl);
    EXPECT_NEAR(form.s_max, 2.0 * std::exp(0.5) - 2.0, 1e-10);
    EXPECT_NEAR(form.h(1.0), std::exp(0.25), 1e-14);
    EXPECT_NEAR(form.x_of_s(form.s_max / 2.0), 2.0 * std::log(0.5 * std::exp(0.5) + 0.5), 1e-10);
    const auto fine = sl_eigensolve(sl, 513, 3);
    const auto wkb = wkb_eigenvalues(form, 512, 3);
    for (std::size_t j = 0; j < 3; ++j) EXPECT_LT(std::abs(wkb[j] - fine.big_lambda[j]) / fine.big_lambda[j], 1e-2);
}

TEST(HigherOrder, SmoothCallSpectrumIsIsospectral) {
    const auto sl = build_sl_problem(Payoff::smooth_call(0.0, 1.0), 0.2, -2.0, 2.0);
    const auto direct = sl_eigensolve(sl, 512, 3);
    const auto wkb = wkb_eigenvalues(liouville_transform(sl), 512, 3);
    for (std::size_t j = 0; j < 3; ++j)
        EXPECT_LT(std::abs(wkb[j] - direct.big_lambda[j]) / std::abs(direct.big_lambda[j]), 1e-3);
}

TEST(HigherOrder, SturmLiouvilleNeedsConvexIncreasingPayout) {
    EXPECT_THROW(build_sl_problem(Payoff::forward(0.0), 0.2, -1.0, 1.0), DomainError);
    EXPECT_THROW(build_sl_problem(Payoff::call(0.0), 0.2, -1.0, 1.0), DomainError);
    EXPECT_THROW(sl_eigensolve(build_sl_problem(exponential_payout(), 1.0, 0.0, 1.0), 64, 3), DomainError);
}

TEST(HigherOrder, PowerSeriesAgreesWithEvolution) {
    const auto st = to_grid(make_gaussian(0.0, 0.2, 1.0), -2.5, 2.5, 4096);
    const auto h = HamiltonianSpec::free(0.2);
    const auto p = Payoff::call(0.0);
    EXPECT_NEAR(power_series_expectation(st, p, h, 0.01, 0), zeroth_price(st, p), 1e-14);
    const double p0 = power_series_expectation(st, p, h, 0.0, 0);
    const double mu = power_series_expectation(st, p, h, 1.0, 1) - p0;
    EXPECT_NEAR(mu, grid_commutator_drift(st, p, h), 1e-12);
    EvolutionSettings s;
    s.dt_max = 1e-5;
    const auto r = heisenberg_expectation_curve(st, p, h, 1e-3, 2, s);
    EXPECT_NEAR(power_series_expectation(st, p, h, 1e-3, 4), r.e_u[1], 1e-10);
    EXPECT_THROW(power_series_expectation(make_gaussian(0.0, 0.2), p, h, 0.1, 2), DomainError);
    EXPECT_THROW(power_series_expectation(st, p, h, 0.1, 7), DomainError);
}
