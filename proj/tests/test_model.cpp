#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace sdde;

TEST(Catalog, CoefficientsAndDeclaredBounds) {
    const ScaledSine s{0.15, 209.11, 0.0};
    EXPECT_NEAR(s(209.11 * std::numbers::pi / 2.0), 0.15, 1e-15);
    EXPECT_DOUBLE_EQ(s.declared().upper, 0.15);
    EXPECT_DOUBLE_EQ(s.declared().lipschitz, 0.15 / 209.11);
    const AffineClipped a{1.0, 2.0, 0.0, 3.0};
    EXPECT_DOUBLE_EQ(a(-5.0), 0.0);
    EXPECT_DOUBLE_EQ(a(0.5), 2.0);
    EXPECT_DOUBLE_EQ(a(5.0), 3.0);
    AnyCoefficient c(ConstantCoefficient{0.2});
    EXPECT_DOUBLE_EQ(c(17.0), 0.2);
    c.declare({-1.0, 1.0, 0.0});
    EXPECT_DOUBLE_EQ(c.declared().lower, -1.0);
    const ExpSegment e{209.11, 0.11};
    EXPECT_DOUBLE_EQ(e(0.0), 209.11);
    EXPECT_NEAR(e(-1.0), 209.11 * std::exp(-0.11), 1e-12);
}

TEST(Validation, AcceptanceModelPasses) {
    const auto model = testing_models::positivity_model();
    const auto rep = validate_model(model);
    EXPECT_TRUE(rep.passed()) << rep.failures();
    ASSERT_NE(rep.find("positivity_margin"), nullptr);
    EXPECT_NEAR(rep.find("positivity_margin")->witness, 0.9, 1e-12);
}

TEST(Validation, UnboundedNegativeJumpsFail) {
    const CatalogModel m(AnyCoefficient(ConstantCoefficient{0.1}), AnyCoefficient(ConstantCoefficient{0.1}),
                         AnySegment(ConstantSegment{1.0}), 0.1,
                         LevySpec(1.0, JumpDistribution::double_exponential(0.5, 5.0, 5.0)));
    const auto rep = validate_model(m);
    EXPECT_FALSE(rep.passed());
    EXPECT_FALSE(rep.find("bounded_negative_jumps")->passed);
    EXPECT_EQ(rep.find("bounded_negative_jumps")->detail, "unbounded negative jumps");
}

TEST(Validation, PositivityMarginFails) {
    const CatalogModel m(AnyCoefficient(ConstantCoefficient{0.1}), AnyCoefficient(ConstantCoefficient{1.0}),
                         AnySegment(ConstantSegment{1.0}), 0.1,
                         LevySpec(1.0, JumpDistribution::double_exponential(0.5, 5.0, 5.0, 1.0)));
    EXPECT_FALSE(validate_model(m).find("positivity_margin")->passed);
    // negative g against unbounded positive marks
    const CatalogModel n(AnyCoefficient(ConstantCoefficient{0.1}), AnyCoefficient(ConstantCoefficient{-0.1}),
                         AnySegment(ConstantSegment{1.0}), 0.1,
                         LevySpec(1.0, JumpDistribution::double_exponential(0.5, 5.0, 5.0, 1.0)));
    EXPECT_FALSE(validate_model(n).find("positivity_margin")->passed);
}

TEST(Validation, UnderstatedDeclarationsAreCaught) {
    AnyCoefficient f(ScaledSine{1.0, 0.5, 0.0});
    f.declare({-1.0, 1.0, 0.1}); // true Lipschitz constant is 2
    const CatalogModel m(f, AnyCoefficient(ConstantCoefficient{0.1}), AnySegment(ConstantSegment{1.0}), 0.1,
                         LevySpec(1.0, JumpDistribution::double_exponential(0.5, 5.0, 5.0, 1.0)));
    const auto rep = validate_model(m);
    EXPECT_FALSE(rep.find("lipschitz")->passed);
    EXPECT_TRUE(rep.find("drift_bounded")->passed);

    AnyCoefficient g(ConstantCoefficient{0.3});
    g.declare({0.0, 0.2, 0.0});
    const CatalogModel n(AnyCoefficient(ConstantCoefficient{0.1}), g, AnySegment(ConstantSegment{1.0}), 0.1,
                         LevySpec(1.0, JumpDistribution::double_exponential(0.5, 5.0, 5.0, 1.0)));
    EXPECT_FALSE(validate_model(n).find("jump_coefficient_bounded")->passed);
}

TEST(Validation, InitialSegment) {
    AnySegment bad(ExpSegment{1.0, 3.0});
    bad.declare({1.0, 0.1}); // slope reaches 3
    const CatalogModel m(AnyCoefficient(ConstantCoefficient{0.1}), AnyCoefficient(ConstantCoefficient{0.1}), bad,
                         0.5, LevySpec(1.0, JumpDistribution::double_exponential(0.5, 5.0, 5.0, 1.0)));
    const auto rep = validate_model(m);
    EXPECT_FALSE(rep.find("initial_holder")->passed);
    EXPECT_TRUE(rep.find("initial_positive")->passed);

    const CatalogModel z(AnyCoefficient(ConstantCoefficient{0.1}), AnyCoefficient(ConstantCoefficient{0.1}),
                         AnySegment(ConstantSegment{0.0}), 0.5,
                         LevySpec(1.0, JumpDistribution::double_exponential(0.5, 5.0, 5.0, 1.0)));
    EXPECT_FALSE(validate_model(z).find("initial_positive")->passed);
}

TEST(Model, RejectsNonPositiveDelay) {
    EXPECT_THROW(CatalogModel(AnyCoefficient(ConstantCoefficient{0.1}), AnyCoefficient(ConstantCoefficient{0.1}),
                              AnySegment(ConstantSegment{1.0}), 0.0,
                              LevySpec(1.0, JumpDistribution::double_exponential(0.5, 5.0, 5.0, 1.0))),
                 DomainError);
}
