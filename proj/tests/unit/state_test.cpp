#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include <qdrift/state.hpp>

using namespace qdrift;

namespace {

double normal_pdf(double x, double m, double s) {
    const double z = (x - m) / s;
    return std::exp(-0.5 * z * z) / (s * std::sqrt(2.0 * std::numbers::pi));
}

} // namespace

TEST(State, GaussianDensityIsNormalWhateverThePhase) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const double x0 = u(rng), s = 0.1 + 0.5 * (u(rng) + 1.0), alpha = 2.0 * u(rng), k0 = 3.0 * u(rng);
        const auto st = make_gaussian(x0, s, alpha, k0);
        for (double z : {-2.0, -0.3, 0.0, 0.7, 1.9}) {
            const double x = x0 + z * s;
            EXPECT_NEAR(std::norm(st(x)), normal_pdf(x, x0, s), 1e-12 * normal_pdf(x, x0, s));
        }
    }
}

TEST(State, ClosedFormMoments) {
    const auto st = make_gaussian(0.3, 0.2, 1.0, 0.5);
    EXPECT_NEAR(position_mean(st), 0.3, 1e-12);
    EXPECT_NEAR(state_variance(st), 0.04, 1e-12);
    EXPECT_NEAR(expected_momentum(st), 0.5, 1e-12);
}

TEST(State, DerivativeMatchesCentralDifference) {
    const auto st = make_gaussian(0.1, 0.3, -0.7, 1.2);
    for (double x : {-0.4, 0.0, 0.25, 0.6}) {
        const double h = 1e-5;
        const cplx fd = (st(x + h) - st(x - h)) / (2.0 * h);
        EXPECT_LT(std::abs(fd - st.derivative(x)), 1e-7 * std::abs(st.derivative(x)) + 1e-9);
    }
}

TEST(State, GridSamplingKeepsMomentsAndNorm) {
    const auto st = make_gaussian(0.0, 0.2, 1.0, 0.5);
    const auto g = to_grid(st, 4096);
    ASSERT_TRUE(g.is_grid());
    EXPECT_NEAR(grid_norm(g.grid()), 1.0, 1e-12);
    EXPECT_NEAR(expected_momentum(g), 0.5, 1e-4);
    EXPECT_NEAR(state_variance(g), 0.04, 1e-6);
    ASSERT_TRUE(g.sampling().has_value());
    EXPECT_FALSE(g.sampling()->warning.has_value());
}

TEST(State, TruncatingGridWarns) {
    const auto g = to_grid(make_gaussian(0.0, 0.2), -0.2, 0.2, 512);
    ASSERT_TRUE(g.sampling()->warning.has_value());
    EXPECT_NEAR(g.sampling()->captured_mass, std::erf(1.0 / std::numbers::sqrt2), 1e-12);
}

TEST(State, ConjugateFlipsChirpAndBoost) {
    const auto c = conjugate(make_gaussian(0.1, 0.2, 1.0, 0.5));
    EXPECT_DOUBLE_EQ(c.gaussian().alpha, -1.0);
    EXPECT_DOUBLE_EQ(c.gaussian().k0, -0.5);
    const auto g = conjugate(to_grid(make_gaussian(0.0, 0.2, 1.0), 256));
    EXPECT_NEAR(expected_momentum(g), 0.0, 1e-12);
}

TEST(State, JsonRoundTrip) {
    const auto st = make_gaussian(0.1, 0.2, 1.0, -0.5);
    const auto back = state_from_json(to_json(st));
    EXPECT_DOUBLE_EQ(back.gaussian().alpha, 1.0);
    EXPECT_DOUBLE_EQ(back.gaussian().k0, -0.5);
    const auto g = to_grid(st, 64);
    const auto gb = state_from_json(to_json(g));
    ASSERT_EQ(gb.grid().psi.size(), 64u);
    EXPECT_EQ(gb.grid().psi[10], g.grid().psi[10]);
}

TEST(State, RejectsBadInput) {
    EXPECT_THROW(make_gaussian(0.0, 0.0), DomainError);
    EXPECT_THROW(make_gaussian(0.0, -1.0), DomainError);
    EXPECT_THROW(MarketState(GridState{{0.0, 0.0}, {1.0, 1.0}}), DomainError);
    EXPECT_THROW(state_from_json(nlohmann::json{{"kind", "wavelet"}}), ValidationError);
    EXPECT_THROW(state_from_json(nlohmann::json{{"kind", "gaussian"}}), ValidationError);
}
