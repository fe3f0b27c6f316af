#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include <qdrift/spectral.hpp>

using namespace qdrift;

namespace {

/// Fourier transform of the real Gaussian at k = lambda / sigma_H^2.
double gaussian_ft(double s, double k) {
    return std::pow(2.0 * std::numbers::pi * s * s, -0.25) * 2.0 * s * std::sqrt(std::numbers::pi) *
           std::exp(-s * s * k * k);
}

} // namespace

TEST(Spectral, FlatMetricGivesTheFourierTransform) {
    const double s = 0.2, sh = 0.2;
    const auto d = eigen_transform(make_gaussian(0.0, s), unit_metric(), sh, -2.0, 2.0, 201);
    for (std::size_t j = 0; j < d.lambda.size(); j += 25) {
        const double k = d.lambda[j] / (sh * sh);
        // a few Gauss panels at the default 1e-9 panel tolerance
        EXPECT_NEAR(d.psi_tilde[j].real(), gaussian_ft(s, k), 1e-8);
        EXPECT_NEAR(d.psi_tilde[j].imag(), 0.0, 1e-8);
    }
}

TEST(Spectral, BoostShiftsTheDistribution) {
    const double sh = 0.2, k0 = 0.5;
    const auto d = auto_transform(make_gaussian(0.0, 0.2, 0.0, k0), unit_metric(), sh);
    EXPECT_NEAR(distribution_moments(d).mean, sh * sh * k0, 1e-9);
    EXPECT_NEAR(distribution_moments(d).variance, std::pow(sh * sh, 2) / (4.0 * 0.04), 1e-9);
}

TEST(Spectral, ParsevalHoldsOnBothMetrics) {
    const auto st = make_gaussian(0.0, 0.2, 1.0);
    const auto flat = auto_transform(st, unit_metric(), 0.2);
    EXPECT_LT(parseval_check(flat, st, unit_metric()), 1e-8);
    const auto ind = auto_transform(st, indicator_metric(), 0.2);
    EXPECT_LT(parseval_check(ind, st, indicator_metric()), 1e-6);
}

TEST(Spectral, RescalingCovarianceInSigmaH) {
    const auto st = make_gaussian(0.1, 0.3, 0.8, 0.2);
    const auto a = eigen_transform(st, unit_metric(), 0.2, -1.0, 1.0, 129);
    const auto b = eigen_transform(st, unit_metric(), 0.1, -0.25, 0.25, 129);
    for (std::size_t j = 0; j < 129; ++j) EXPECT_LT(std::abs(a.psi_tilde[j] - b.psi_tilde[j]), 1e-12);
}

TEST(Spectral, ConjugationMirrorsTheDensity) {
    const auto st = make_gaussian(0.0, 0.2, 1.0, 0.3);
    const auto a = eigen_transform(st, unit_metric(), 0.2, -1.0, 1.0, 129);
    const auto b = eigen_transform(conjugate(st), unit_metric(), 0.2, -1.0, 1.0, 129);
    const auto da = a.density(), db = b.density();
    for (std::size_t j = 0; j < 129; ++j) EXPECT_NEAR(da[j], db[128 - j], 1e-12);
    EXPECT_NEAR(distribution_moments(a).mean, -distribution_moments(b).mean, 1e-12);
}

TEST(Spectral, GridStateMatchesClosedForm) {
    const auto st = make_gaussian(0.0, 0.2, 1.0);
    const auto a = eigen_transform(st, unit_metric(), 0.2, -1.0, 1.0, 65);
    const auto b = eigen_transform(to_grid(st, 4001), unit_metric(), 0.2, -1.0, 1.0, 65);
    for (std::size_t j = 0; j < 65; ++j) EXPECT_LT(std::abs(a.psi_tilde[j] - b.psi_tilde[j]), 1e-5);
}

TEST(Spectral, NarrowWindowAsksToWiden) {
    try {
        eigen_transform(make_gaussian(0.0, 0.2), unit_metric(), 0.2, -0.05, 0.05, 65);
        FAIL() << "expected WidenGridError";
    } catch (const WidenGridError& e) {
        EXPECT_DOUBLE_EQ(e.suggested_lambda_max(), 0.1);
    }
}

TEST(Spectral, RejectsBadArguments) {
    const auto st = make_gaussian(0.0, 0.2);
    EXPECT_THROW(eigen_transform(st, unit_metric(), 0.2, -1.0, 1.0, 10), DomainError);
    EXPECT_THROW(eigen_transform(st, unit_metric(), 0.2, 1.0, -1.0, 65), DomainError);
    EXPECT_THROW(auto_transform(st, unit_metric(), 0.0), DomainError);
}

TEST(Spectral, IndicatorWidensRealGaussian) {
    const auto st = make_gaussian(0.0, 0.2);
    const auto flat = distribution_moments(auto_transform(st, unit_metric(), 0.2));
    const auto ind = distribution_moments(auto_transform(st, indicator_metric(), 0.2));
    EXPECT_NEAR(flat.mean, 0.0, 1e-6);
    EXPECT_NEAR(ind.mean, 0.0, 1e-6);
    EXPECT_GT(ind.variance, flat.variance);
}
