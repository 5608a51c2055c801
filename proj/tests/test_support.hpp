#pragma once

// Models shared by the test binaries.

#include "sdde/sdde.hpp"

namespace testing_models {

using namespace sdde;

/// b = .25, f = .05, g = .05 + .05 sin(x), lambda = 5, truncated double-exponential.
inline CatalogModel positivity_model() {
    return CatalogModel(AnyCoefficient(ConstantCoefficient{0.05}),
                        AnyCoefficient(ScaledSine{0.05, 1.0, 0.05}), AnySegment(ConstantSegment{1.0}), 0.25,
                        LevySpec(5.0, JumpDistribution::double_exponential(0.5, 5.0, 5.0, 1.0)));
}

/// Constant coefficients with theta = `th` under rate r (derived convention).
inline CatalogModel constant_theta_model(double g, double lambda, double th, double r, double s0,
                                         JumpDistribution dist = JumpDistribution::double_exponential(0.4, 3.0, 3.0, 1.0),
                                         double delay = 0.25) {
    const double l = mean(dist);
    const double f = r + (th - 1.0) * g * lambda * l;
    return CatalogModel(AnyCoefficient(ConstantCoefficient{f}), AnyCoefficient(ConstantCoefficient{g}),
                        AnySegment(ConstantSegment{s0}), delay, LevySpec(lambda, std::move(dist)));
}

inline CatalogModel riskless_model(double f, double s0, double delay = 0.25) {
    return CatalogModel(AnyCoefficient(ConstantCoefficient{f}), AnyCoefficient(ConstantCoefficient{0.0}),
                        AnySegment(ConstantSegment{s0}), delay,
                        LevySpec(3.0, JumpDistribution::double_exponential(0.5, 5.0, 5.0, 1.0)));
}

} // namespace testing_models
