#include <gtest/gtest.h>

#include <algorithm>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <complex>
#include <vector>

#include "sdde/jump_measure.hpp"

using namespace sdde;
using boost::math::quadrature::gauss_kronrod;

namespace {

// Independent restatement of the mark density for the oracles below.
struct Law {
    double p, eta, theta, R;
    double pdf(double z) const {
        if (z >= 0.0) return p * eta * std::exp(-eta * z);
        if (std::isfinite(R) && z <= -R) return 0.0;
        const double norm = std::isfinite(R) ? theta / (1.0 - std::exp(-theta * R)) : theta;
        return (1.0 - p) * norm * std::exp(theta * z);
    }
    JumpDistribution dist() const { return JumpDistribution::double_exponential(p, eta, theta, R); }
};

// E[h(Y)] by Boost quadrature: exp-sinh on the positive half line, tanh-sinh on
// the negative side (finite or infinite).
template <class H>
double boost_expect(const Law& law, H h) {
    boost::math::quadrature::exp_sinh<double> es;
    // exp_sinh probes huge abscissae where h * pdf would be inf * 0
    const auto weighted = [&](double z) {
        const double w = law.pdf(z);
        return w == 0.0 ? decltype(h(z) * w){} : h(z) * w;
    };
    const double pos = es.integrate(weighted);
    double neg = 0.0;
    if (std::isfinite(law.R)) {
        neg = gauss_kronrod<double, 61>::integrate([&](double z) { return h(z) * law.pdf(z); }, -law.R, 0.0, 15,
                                                  1e-13);
    } else {
        neg = es.integrate([&](double u) { return weighted(-u); });
    }
    return pos + neg;
}

double boost_cdf(const Law& law, double z) {
    boost::math::quadrature::tanh_sinh<double> ts;
    boost::math::quadrature::exp_sinh<double> es;
    const auto pdf = [&](double y) { return law.pdf(y); };
    const double lo = std::isfinite(law.R) ? -law.R : -kInf;
    const double top = std::min(z, 0.0);
    double c = 0.0;
    if (top > lo) c += std::isfinite(lo) ? ts.integrate(pdf, lo, top) : es.integrate([&](double u) { return law.pdf(top - u); });
    if (z > 0.0) c += ts.integrate(pdf, 0.0, z);
    return c;
}

const Law kLaws[] = {
    {0.5, 5.0, 5.0, 1.0},
    {0.6, 12.8, 8.4, kInf},
    {0.4, 3.0, 3.0, 1.0},
    {0.0, 1.0, 2.0, 0.7},
    {1.0, 4.0, 4.0, kInf},
};

} // namespace

TEST(JumpDistribution, RejectsBadParameters) {
    EXPECT_THROW(JumpDistribution({{0.5, 1.0}}, {{0.4, 1.0}}), DomainError);
    EXPECT_THROW(JumpDistribution({{1.0, 0.0}}, {}), DomainError);
    EXPECT_THROW(JumpDistribution({{1.5, 1.0}}, {{-0.5, 1.0}}), DomainError);
    EXPECT_THROW(JumpDistribution({}, {{1.0, 1.0, 0.0}}), DomainError);
    EXPECT_THROW(LevySpec(0.0, JumpDistribution::double_exponential(0.5, 1, 1)), DomainError);
}

TEST(JumpDistribution, SupportQueries) {
    const auto d = JumpDistribution::double_exponential(0.5, 5, 5, 1.0);
    EXPECT_FALSE(d.unbounded_below());
    EXPECT_DOUBLE_EQ(d.support_radius(), 1.0);
    EXPECT_TRUE(JumpDistribution::double_exponential(0.5, 5, 5).unbounded_below());
    EXPECT_TRUE(JumpDistribution({{1.0, 2.0}}, {}).has_positive_support());
    EXPECT_FALSE(JumpDistribution({}, {{1.0, 2.0, 1.0}}).has_positive_support());
}

TEST(JumpMeasure, DensityIntegratesToOne) {
    for (const auto& law : kLaws) {
        const auto d = law.dist();
        const double total = boost_expect(law, [](double) { return 1.0; });
        EXPECT_NEAR(total, 1.0, 1e-10);
        // library density agrees with the restated one
        for (double z : {-0.9, -0.3, -1e-9, 0.0, 0.2, 1.5}) EXPECT_NEAR(density(d, z), law.pdf(z), 1e-12);
    }
}

TEST(JumpMeasure, MomentsMatchQuadrature) {
    for (const auto& law : kLaws) {
        const auto d = law.dist();
        EXPECT_NEAR(mean(d), boost_expect(law, [](double z) { return z; }), 1e-11);
        EXPECT_NEAR(second_moment(d), boost_expect(law, [](double z) { return z * z; }), 1e-10);
        EXPECT_NEAR(expectation(d, [](double z) { return z * z * z; }),
                    boost_expect(law, [](double z) { return z * z * z; }), 1e-9);
    }
}

TEST(JumpMeasure, CdfMatchesIntegratedDensity) {
    for (const auto& law : kLaws) {
        const auto d = law.dist();
        for (double z : {-0.8, -0.2, 0.0, 0.1, 0.5, 2.0}) {
            const double oracle = boost_cdf(law, z);
            EXPECT_NEAR(cdf(d, z), oracle, 1e-7) << "z = " << z;
        }
    }
}

TEST(JumpMeasure, LevyQMoment) {
    const LevySpec spec(5.0, kLaws[0].dist());
    EXPECT_THROW(levy_q_moment(spec, 0.5), DomainError);
    const double oracle = 5.0 * boost_expect(kLaws[0], [](double z) { return std::pow(1.0 + std::abs(z), 2.5); });
    EXPECT_NEAR(levy_q_moment(spec, 2.5), oracle, 1e-9 * oracle);
}

// Kolmogorov-Smirnov at the 1% level; a fresh seed is tried up to three times
// so a single unlucky sample does not fail the suite.
TEST(JumpMeasure, SamplerPassesKolmogorovSmirnov) {
    constexpr int n = 20000;
    const double critical = 1.628 / std::sqrt(static_cast<double>(n));
    for (const auto& law : kLaws) {
        const auto d = law.dist();
        bool passed = false;
        double stat = 0.0;
        for (std::uint64_t attempt = 0; attempt < 3 && !passed; ++attempt) {
            RandomStream rng(1000 + attempt, 0);
            std::vector<double> xs(n);
            for (auto& x : xs) x = sample_jump(d, rng);
            std::sort(xs.begin(), xs.end());
            stat = 0.0;
            for (int i = 0; i < n; ++i) {
                const double f = cdf(d, xs[i]);
                stat = std::max({stat, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
            }
            passed = stat < critical;
        }
        EXPECT_TRUE(passed) << "KS statistic " << stat;
        if (std::isfinite(law.R)) {
            RandomStream rng(77, 1);
            for (int i = 0; i < 10000; ++i) ASSERT_GT(sample_jump(d, rng), -law.R);
        }
    }
}

TEST(JumpMeasure, JumpTimesArePoissonAndSorted) {
    RandomStream idle(1, 1);
    EXPECT_TRUE(sample_jump_times(3.0, 1.0, 1.0, idle).empty());
    double total = 0.0;
    const int reps = 4000;
    for (int i = 0; i < reps; ++i) {
        RandomStream rng(5, i);
        const auto ts = sample_jump_times(3.0, 0.0, 2.0, rng);
        ASSERT_TRUE(std::is_sorted(ts.begin(), ts.end()));
        for (double t : ts) {
            ASSERT_GT(t, 0.0);
            ASSERT_LE(t, 2.0);
        }
        total += static_cast<double>(ts.size());
    }
    // mean 6, sd of the average sqrt(6 / reps)
    EXPECT_NEAR(total / reps, 6.0, 4.0 * std::sqrt(6.0 / reps));
}

TEST(JumpMeasure, LogDomain) {
    const auto d = JumpDistribution::double_exponential(0.5, 5, 5, 1.0);
    EXPECT_NO_THROW(require_log_domain(d, 0.99));
    EXPECT_THROW(require_log_domain(d, 1.0), DomainError);
    EXPECT_THROW(require_log_domain(d, -0.1), DomainError);
    EXPECT_THROW(power_moment(JumpDistribution::double_exponential(0.5, 5, 5), 0.1, 1.0), DomainError);
    EXPECT_NO_THROW(require_log_domain(JumpDistribution({}, {{1.0, 2.0, kInf}}), -0.5));
}

TEST(JumpMeasure, PowerMomentMatchesQuadratureOracle) {
    const double gs[] = {0.05, 0.3, 0.5};
    for (const auto& law : kLaws) {
        if (!std::isfinite(law.R) && law.p < 1.0) continue; // needs bounded negative marks for g > 0
        const auto d = law.dist();
        for (double g : gs) {
            if (std::isfinite(law.R) && 1.0 - g * law.R <= 0.0) continue;
            for (double c0 : {0.0, 1.0}) {
                for (double xi : {0.0, 0.7, 3.0, 9.0, 25.0}) {
                    const std::complex<double> c{c0, xi};
                    const double re = boost_expect(law, [&](double z) { return std::exp(c * std::log1p(g * z)).real(); });
                    const double im = boost_expect(law, [&](double z) { return std::exp(c * std::log1p(g * z)).imag(); });
                    const auto v = power_moment(d, g, c);
                    EXPECT_NEAR(v.real(), re, 1e-9) << "g " << g << " c " << c;
                    EXPECT_NEAR(v.imag(), im, 1e-9) << "g " << g << " c " << c;
                    // conjugate symmetry
                    const auto w = power_moment(d, g, std::conj(c));
                    EXPECT_NEAR(std::abs(w - std::conj(v)), 0.0, 1e-12);
                }
            }
        }
    }
}

TEST(JumpMeasure, PowerMomentNegativeCoefficient) {
    // purely negative marks with g < 0 push the price up
    const JumpDistribution d({}, {{0.7, 2.0, 1.5}, {0.3, 4.0, kInf}});
    const double g = -0.3;
    for (double xi : {2.0, 6.0, 40.0}) {
        const std::complex<double> c{1.0, xi};
        const auto rot = power_moment(d, g, c);
        const auto direct = expectation(d, [&](double z) { return std::exp(c * std::log1p(z * g)); }, jump_integral_options());
        EXPECT_LT(std::abs(rot - direct), 1e-11);
    }
}

TEST(JumpMeasure, ComplexJumpIntegralIdentities) {
    const LevySpec spec(4.0, kLaws[2].dist());
    const double g = 0.5;
    EXPECT_EQ(complex_jump_integral(spec, g, 0.0), std::complex<double>(0.0));
    EXPECT_EQ(complex_jump_integral(spec, 0.0, {1.0, 2.0}), std::complex<double>(0.0));
    // c = 1: E[g Y - ln(1 + g Y)]
    const double oracle = boost_expect(kLaws[2], [g](double z) { return g * z - std::log1p(g * z); });
    EXPECT_NEAR(complex_jump_integral(spec, g, 1.0).real(), oracle, 1e-12);
    EXPECT_NEAR(log_moment(spec.dist, g), boost_expect(kLaws[2], [g](double z) { return std::log1p(g * z); }), 1e-12);
}
