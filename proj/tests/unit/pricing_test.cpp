#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include <qdrift/pricing.hpp>

using namespace qdrift;

namespace {

const double kSqrtPi = std::sqrt(std::numbers::pi);

} // namespace

TEST(Pricing, BachelierCallAtTheMoney) {
    EXPECT_NEAR(zeroth_price(make_gaussian(0.0, 0.2), Payoff::call(0.0)), 0.2 / std::sqrt(2.0 * std::numbers::pi),
                1e-15);
    EXPECT_NEAR(zeroth_price(make_gaussian(0.0, 0.2), Payoff::call(0.0)), 0.0797884561, 1e-10);
}

TEST(Pricing, ClosedFormsAgreeWithQuadrature) {
    const auto st = make_gaussian(0.1, 0.3, 0.5);
    // A steep smooth call approximates the call within log(2)/beta * density scale.
    EXPECT_NEAR(zeroth_price(st, Payoff::smooth_call(0.05, 400.0)), zeroth_price(st, Payoff::call(0.05)), 1e-3);
    const double digital = zeroth_price(st, Payoff::digital(0.05, 1e-4));
    EXPECT_NEAR(digital, 0.5 * std::erfc((0.05 - 0.1) / (0.3 * std::numbers::sqrt2)), 1e-8);
    EXPECT_NEAR(zeroth_price(st, Payoff::call(0.2)) - zeroth_price(st, Payoff::put(0.2)), 0.1 - 0.2, 1e-14);
}

TEST(Pricing, GridZerothPriceConverges) {
    const auto st = make_gaussian(0.0, 0.2, 1.0);
    EXPECT_NEAR(zeroth_price(to_grid(st, 4096), Payoff::call(0.0)), zeroth_price(st, Payoff::call(0.0)), 1e-6);
}

TEST(Pricing, CommutatorDriftReferenceValues) {
    const auto h = HamiltonianSpec::free(0.2);
    const auto chirped = make_gaussian(0.0, 0.2, 1.0);
    // sigma_H^2 alpha / (2 sigma_S sqrt(pi)) for the at-the-money call.
    EXPECT_NEAR(quantum_drift_commutator(chirped, Payoff::call(0.0), h), 0.04 / (0.4 * kSqrtPi), 1e-12);
    EXPECT_NEAR(quantum_drift_commutator(chirped, Payoff::call(0.0), h), 0.0564189583548, 1e-12);
    EXPECT_NEAR(quantum_drift_commutator(chirped, Payoff::straddle(0.0), h), 0.11283791671, 1e-10);
    EXPECT_NEAR(quantum_drift_commutator(chirped, Payoff::smooth_call(0.0, 10.0), h), 0.0428298473242, 1e-11);
    const auto boosted = make_gaussian(0.0, 0.2, 0.0, 0.5);
    EXPECT_NEAR(quantum_drift_commutator(boosted, Payoff::forward(0.0), h), 0.02, 1e-12);
    EXPECT_NEAR(quantum_drift_commutator(boosted, Payoff::call(0.0), h), 0.01, 1e-12);
    EXPECT_NEAR(quantum_drift_commutator(boosted, Payoff::smooth_call(0.0, 10.0), h), 0.01, 1e-12);
}

TEST(Pricing, RealStatesHaveNoDrift) {
    const auto h = HamiltonianSpec::free(0.2);
    for (const auto& p : {Payoff::call(0.1), Payoff::straddle(-0.2), Payoff::smooth_call(0.0, 3.0)})
        EXPECT_NEAR(quantum_drift_commutator(make_gaussian(0.05, 0.2), p, h), 0.0, 1e-14);
}

TEST(Pricing, DriftScalesWithSigmaHSquared) {
    const auto st = make_gaussian(0.0, 0.2, 1.0);
    const double a = quantum_drift_commutator(st, Payoff::call(0.0), HamiltonianSpec::free(0.1));
    const double b = quantum_drift_commutator(st, Payoff::call(0.0), HamiltonianSpec::free(0.2));
    EXPECT_NEAR(b / a, 4.0, 1e-12);
}

TEST(Pricing, GridCommutatorDriftConverges) {
    const auto st = make_gaussian(0.0, 0.2, 1.0);
    EXPECT_NEAR(quantum_drift_commutator(to_grid(st, 8192), Payoff::call(0.0), HamiltonianSpec::free(0.2)),
                0.0564189583548, 1e-5);
    EXPECT_THROW(quantum_drift_commutator(to_grid(st, 256), Payoff::call(0.0), HamiltonianSpec::free(0.2)),
                 DomainError);
}

TEST(Pricing, SpectralConstantCalibratesToInverseTwoPi) {
    EXPECT_NEAR(calibrate_spectral_constant(), 1.0 / (2.0 * std::numbers::pi), 1e-8);
    EXPECT_NEAR(calibrate_spectral_constant(0.3, 0.1, -0.7), 1.0 / (2.0 * std::numbers::pi), 1e-8);
}

TEST(Pricing, SpectralDriftMatchesCommutatorOnForward) {
    const auto st = make_gaussian(0.0, 0.25, 0.6, 0.3);
    const auto p = Payoff::forward(0.0);
    const double c = quantum_drift_commutator(st, p, HamiltonianSpec::free(0.2));
    EXPECT_NEAR(spectral_drift(st, p, 0.2), c, 1e-8 * std::abs(c));
}

TEST(Pricing, FirstOrderPriceIsDiscounted) {
    const auto st = make_gaussian(0.0, 0.2, 1.0);
    const auto e = first_order_price(st, Payoff::call(0.0), HamiltonianSpec::free(0.2), 0.1, 0.05);
    EXPECT_NEAR(e.price, std::exp(-0.005) * (e.p0 + 0.1 * e.mu), 1e-15);
    EXPECT_NEAR(e.horizon, 0.1 * e.p0 / e.mu, 1e-15);
    EXPECT_FALSE(e.mu_spectral.has_value());
    EXPECT_THROW(first_order_price(st, Payoff::call(0.0), HamiltonianSpec::free(0.2), -1.0), DomainError);
    const auto real = first_order_price(make_gaussian(0.0, 0.2), Payoff::call(0.0), HamiltonianSpec::free(0.2), 1.0);
    EXPECT_TRUE(std::isinf(real.horizon));
}

TEST(Pricing, MartingaleCheckFlagsForces) {
    const auto free = martingale_check(make_gaussian(0.0, 0.2, 1.0), HamiltonianSpec::free(0.2));
    EXPECT_TRUE(free.arbitrage_free);
    const auto boosted = martingale_check(make_gaussian(0.0, 0.2, 0.0, 0.5), HamiltonianSpec::free(0.2));
    EXPECT_FALSE(boosted.arbitrage_free);
    EXPECT_NEAR(boosted.expected_momentum, 0.5, 1e-12);
    const auto linear = martingale_check(make_gaussian(0.0, 0.2),
                                         HamiltonianSpec::with_potential(0.2, [](double x) { return 0.3 * x; }));
    EXPECT_FALSE(linear.arbitrage_free);
    EXPECT_NEAR(linear.commutator_norm, 0.3, 1e-8);
}

TEST(Pricing, PotentialDoesNotEnterTheDrift) {
    const auto st = make_gaussian(0.0, 0.2, 1.0, 0.2);
    const auto p = Payoff::straddle(0.1);
    const double free = quantum_drift_commutator(st, p, HamiltonianSpec::free(0.2));
    const double with_v =
        quantum_drift_commutator(st, p, HamiltonianSpec::with_potential(0.2, [](double x) { return 0.5 * x * x; }));
    EXPECT_EQ(free, with_v);
}

TEST(Pricing, SweepWidthScalesWithSigmaHSquared) {
    const std::vector<double> sigmas{0.1, 0.2, 0.4};
    const auto rows = classical_limit_sweep(make_gaussian(0.0, 0.2, 0.5, 0.3), Payoff::forward(0.0), sigmas);
    ASSERT_EQ(rows.size(), 3u);
    for (const auto& r : rows) EXPECT_LT(std::abs(r.rescaling_error), 1e-6);
    EXPECT_NEAR(rows[2].mu / rows[0].mu, 16.0, 1e-9);
    EXPECT_THROW(classical_limit_sweep(make_gaussian(0.0, 0.2), Payoff::forward(0.0), {}), DomainError);
}
