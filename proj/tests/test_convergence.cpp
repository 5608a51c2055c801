#include <gtest/gtest.h>

#include <cmath>

#include "test_support.hpp"

using namespace sdde;

TEST(RateFit, RecoversExactPowerLaw) {
    std::vector<double> d{1.0 / 16, 1.0 / 32, 1.0 / 64, 1.0 / 128, 1.0 / 256};
    std::vector<double> e;
    for (double x : d) e.push_back(3.0 * std::pow(x, 0.7));
    const auto fit = fit_rate(d, e);
    EXPECT_NEAR(fit.slope, 0.7, 1e-12);
    EXPECT_NEAR(fit.intercept, std::log(3.0), 1e-12);
    EXPECT_NEAR(fit.r2, 1.0, 1e-12);
    for (double r : fit.residuals) EXPECT_NEAR(r, 0.0, 1e-12);
}

TEST(RateFit, Rejections) {
    EXPECT_THROW(fit_rate({0.1, 0.05, 0.025}, {1.0, 0.7, 0.5}), FitError);
    EXPECT_THROW(fit_rate({0.1, 0.05, 0.025, 0.0125}, {1.0, 0.0, 0.5, 0.4}), FitError);
    EXPECT_THROW(fit_rate({0.1, 0.1, 0.1, 0.1}, {1.0, 0.9, 0.5, 0.4}), FitError);
    EXPECT_THROW(fit_rate({0.1, 0.05}, {1.0}), FitError);
}

TEST(CoupledErrors, ExactForConstantCoefficients) {
    const auto m = testing_models::constant_theta_model(0.3, 4.0, 0.5, 0.02, 5.0);
    ConvergenceStudy s;
    s.steps = {4, 8, 16, 32};
    s.reference_steps = 256;
    s.n_paths = 50;
    s.seed = 3;
    for (const auto& e : coupled_errors(m, s)) EXPECT_LT(e.e_hat, 1e-11);
}

TEST(CoupledErrors, Preconditions) {
    const auto m = testing_models::positivity_model();
    ConvergenceStudy s;
    s.steps = {16, 24};
    s.reference_steps = 256;
    EXPECT_THROW(coupled_errors(m, s), DomainError);
    s.steps = {};
    EXPECT_THROW(coupled_errors(m, s), DomainError);

    const CatalogModel bad(AnyCoefficient(ConstantCoefficient{0.1}), AnyCoefficient(ConstantCoefficient{0.1}),
                           AnySegment(ConstantSegment{1.0}), 0.25,
                           LevySpec(1.0, JumpDistribution::double_exponential(0.5, 5.0, 5.0)));
    s.steps = {16};
    EXPECT_THROW(coupled_errors(bad, s), ValidationError);
}

TEST(CoupledErrors, StrongRateOnPositivityModel) {
    const auto m = testing_models::positivity_model();
    ConvergenceStudy s;
    s.steps = {16, 32, 64, 128};
    s.reference_steps = 2048;
    s.n_paths = 400;
    s.seed = 12;
    const auto est = coupled_errors(m, s);
    for (std::size_t i = 1; i < est.size(); ++i) EXPECT_LT(est[i].e_hat, est[i - 1].e_hat);
    for (const auto& e : est) EXPECT_GT(e.sup_moment, 0.0);
    const auto fit = fit_rate(est);
    EXPECT_GE(fit.slope, 0.4);
    EXPECT_GE(fit.r2, 0.9);
    // thread count changes nothing
    s.threads = 3;
    const auto again = coupled_errors(m, s);
    for (std::size_t i = 0; i < est.size(); ++i) EXPECT_DOUBLE_EQ(again[i].e_hat, est[i].e_hat);
}

TEST(GridHolding, DeterministicClosedForm) {
    const double f = 0.4;
    const auto m = testing_models::riskless_model(f, 2.0);
    const std::size_t n = 16;
    const double dt = 1.0 / static_cast<double>(n);
    const auto est = grid_holding_error(m, 1.0, {n}, 5, 1, 2.0);
    double expect = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double sk = 2.0 * std::exp(f * static_cast<double>(k) * dt);
        expect += std::pow(sk * std::expm1(0.5 * f * dt), 2.0);
    }
    expect /= static_cast<double>(n);
    ASSERT_EQ(est.size(), 1u);
    EXPECT_NEAR(est[0].value, expect, 1e-14);
    EXPECT_NEAR(est[0].std_error, 0.0, 1e-18);
}

TEST(GridHolding, FirstOrderInStep) {
    const auto m = testing_models::positivity_model();
    const auto est = grid_holding_error(m, 1.0, {16, 32, 64, 128, 256}, 400, 21);
    std::vector<double> d, v;
    for (const auto& e : est) {
        d.push_back(e.delta);
        v.push_back(e.value);
    }
    EXPECT_GE(fit_rate(d, v).slope, 0.8);
}
