#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include <qdrift/payoff.hpp>

using namespace qdrift;

TEST(Payoff, ParityRelations) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int i = 0; i < 100; ++i) {
        const double x = u(rng), k = 0.5 * u(rng);
        const double c = payoff_value(Payoff::call(k), x), p = payoff_value(Payoff::put(k), x);
        EXPECT_NEAR(c - p, payoff_value(Payoff::forward(k), x), 1e-14);
        EXPECT_NEAR(c + p, payoff_value(Payoff::straddle(k), x), 1e-14);
    }
}

TEST(Payoff, DigitalRampCentredOnStrike) {
    const auto d = Payoff::digital(0.5, 0.01);
    EXPECT_DOUBLE_EQ(payoff_value(d, 0.5), 0.5);
    EXPECT_DOUBLE_EQ(payoff_value(d, 0.4), 0.0);
    EXPECT_DOUBLE_EQ(payoff_value(d, 0.6), 1.0);
    EXPECT_NEAR(payoff_delta(d, 0.502), 100.0, 1e-9);
    EXPECT_THROW(Payoff::digital(0.0, 0.0), DomainError);
}

TEST(Payoff, SmoothCallApproachesCall) {
    const auto s = Payoff::smooth_call(0.2, 200.0);
    for (double x : {-1.0, 0.0, 0.5, 1.3})
        EXPECT_NEAR(payoff_value(s, x), payoff_value(Payoff::call(0.2), x), std::log(2.0) / 200.0 + 1e-12);
    EXPECT_NEAR(payoff_delta(Payoff::smooth_call(0.0, 3.0), 0.0), 0.5, 1e-14);
}

TEST(Payoff, SmoothCallDerivativesMatchDifferences) {
    const auto s = Payoff::smooth_call(0.1, 4.0);
    for (double x : {-0.5, 0.1, 0.8})
        for (int order = 1; order <= 3; ++order) {
            const double h = 1e-4;
            const double fd =
                (payoff_derivative(s, x + h, order - 1) - payoff_derivative(s, x - h, order - 1)) / (2.0 * h);
            EXPECT_NEAR(payoff_derivative(s, x, order), fd, 1e-6 * (1.0 + std::abs(fd)));
        }
}

TEST(Payoff, DeltaSegmentsCarryTheDeltaSign) {
    for (const auto& p : {Payoff::call(0.3), Payoff::put(-0.2), Payoff::straddle(0.0), Payoff::forward(1.0)}) {
        const auto segs = segment_delta(p);
        ASSERT_FALSE(segs.empty());
        for (const auto& s : segs) {
            const double lo = std::isfinite(s.lo) ? s.lo : s.hi - 10.0;
            const double hi = std::isfinite(s.hi) ? s.hi : lo + 10.0;
            const double d = payoff_delta(p, 0.5 * (lo + hi));
            EXPECT_EQ(s.sign, d > 0.0 ? 1 : (d < 0.0 ? -1 : 0));
        }
    }
    const auto st = segment_delta(Payoff::straddle(0.0));
    ASSERT_EQ(st.size(), 2u);
    EXPECT_EQ(st[0].sign, -1);
    EXPECT_EQ(st[1].sign, 1);
}

TEST(Payoff, MonotoneDecompositionReproducesThePayout) {
    PiecewiseCubic pc;
    pc.nodes = {-1.0, 0.0, 1.0};
    pc.coeffs = {{0.0, 1.0, -3.0, 1.0}, {-1.0, -2.0, 0.0, 1.0}};
    pc.left_slope = 1.0;
    pc.right_slope = 1.0;
    const auto cubic = Payoff::custom(pc);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (const auto& p : {Payoff::straddle(0.1), Payoff::put(0.2), cubic}) {
        const auto parts = decompose_monotone(p);
        for (int i = 0; i < 200; ++i) {
            const double x = u(rng);
            double sum = 0.0;
            for (const auto& [piece, sign] : parts) {
                sum += sign * payoff_value(piece, x);
                EXPECT_GE(payoff_delta(piece, x), -1e-12);
            }
            EXPECT_NEAR(sum, payoff_value(p, x), 1e-10);
        }
    }
}

TEST(Payoff, CustomCubicIsContinuousAtNodes) {
    PiecewiseCubic pc;
    pc.nodes = {0.0, 1.0};
    pc.coeffs = {{0.0, 1.0, 0.0, 0.0}};
    pc.left_slope = 1.0;
    pc.right_slope = 1.0;
    const auto p = Payoff::custom(pc);
    EXPECT_NEAR(payoff_value(p, -0.5), -0.5, 1e-14);
    EXPECT_NEAR(payoff_value(p, 1.5), 1.5, 1e-14);
}

TEST(Payoff, JsonRoundTrip) {
    const auto p = payoff_from_json(to_json(Payoff::smooth_call(0.3, 7.0)));
    EXPECT_EQ(p.kind, PayoffKind::smooth_call);
    EXPECT_DOUBLE_EQ(p.beta, 7.0);
    EXPECT_DOUBLE_EQ(p.strike, 0.3);
}
