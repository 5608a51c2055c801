#pragma once

// Hyper-exponential jump marks (optionally truncated on the negative side)
// and the Levy measure nu(dz) = lambda * f_Y(z) dz built on them.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "sdde/errors.hpp"
#include "sdde/quadrature.hpp"
#include "sdde/rng.hpp"

namespace sdde {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct PositiveTerm {
    double weight;
    double rate;
};

struct NegativeTerm {
    double weight;
    double rate;
    double truncation = kInf; // marks live in (-truncation, 0)
};

class JumpDistribution {
public:
    JumpDistribution(std::vector<PositiveTerm> pos, std::vector<NegativeTerm> neg)
        : pos_(std::move(pos)), neg_(std::move(neg)) {
        double total = 0.0;
        for (const auto& t : pos_) {
            if (!(t.weight >= 0.0)) throw DomainError("jump weight must be >= 0");
            if (!(t.rate > 0.0) || !std::isfinite(t.rate)) throw DomainError("jump rate must be > 0");
            total += t.weight;
        }
        for (const auto& t : neg_) {
            if (!(t.weight >= 0.0)) throw DomainError("jump weight must be >= 0");
            if (!(t.rate > 0.0) || !std::isfinite(t.rate)) throw DomainError("jump rate must be > 0");
            if (!(t.truncation > 0.0)) throw DomainError("truncation must be > 0");
            total += t.weight;
        }
        if (std::abs(total - 1.0) > 1e-12) {
            throw DomainError("jump weights must sum to 1 (got " + std::to_string(total) + ")");
        }
    }

    /// Two-sided exponential with weight p on the positive side.
    static JumpDistribution double_exponential(double p, double eta, double theta,
                                               double truncation = kInf) {
        return JumpDistribution({{p, eta}}, {{1.0 - p, theta, truncation}});
    }

    [[nodiscard]] const std::vector<PositiveTerm>& positive() const noexcept { return pos_; }
    [[nodiscard]] const std::vector<NegativeTerm>& negative() const noexcept { return neg_; }

    /// True when some negative component with positive weight is untruncated.
    [[nodiscard]] bool unbounded_below() const noexcept {
        for (const auto& t : neg_) {
            if (t.weight > 0.0 && !std::isfinite(t.truncation)) return true;
        }
        return false;
    }

    [[nodiscard]] bool has_positive_support() const noexcept {
        for (const auto& t : pos_) {
            if (t.weight > 0.0) return true;
        }
        return false;
    }

    /// R = max_j R_j over negative components carrying weight (0 if none,
    /// +inf when unbounded).
    [[nodiscard]] double support_radius() const noexcept {
        double r = 0.0;
        for (const auto& t : neg_) {
            if (t.weight > 0.0) r = std::max(r, t.truncation);
        }
        return r;
    }

    /// Density limits at zero from the right and from the left.
    [[nodiscard]] double density_right_of_zero() const noexcept {
        double d = 0.0;
        for (const auto& t : pos_) d += t.weight * t.rate;
        return d;
    }
    [[nodiscard]] double density_left_of_zero() const noexcept {
        double d = 0.0;
        for (const auto& t : neg_) d += t.weight * normaliser(t);
        return d;
    }

    /// theta / (1 - exp(-theta R)); theta for an untruncated component.
    static double normaliser(const NegativeTerm& t) noexcept {
        if (!std::isfinite(t.truncation)) return t.rate;
        return -t.rate / std::expm1(-t.rate * t.truncation);
    }

private:
    std::vector<PositiveTerm> pos_;
    std::vector<NegativeTerm> neg_;
};

struct LevySpec {
    double intensity; // jumps per unit model time
    JumpDistribution dist;

    LevySpec(double lambda, JumpDistribution d) : intensity(lambda), dist(std::move(d)) {
        if (!(intensity > 0.0) || !std::isfinite(intensity)) {
            throw DomainError("jump intensity must be > 0");
        }
    }
};

inline double density(const JumpDistribution& dist, double z) noexcept {
    double d = 0.0;
    if (z >= 0.0) {
        for (const auto& t : dist.positive()) d += t.weight * t.rate * std::exp(-t.rate * z);
    } else {
        for (const auto& t : dist.negative()) {
            if (z > -t.truncation) {
                d += t.weight * JumpDistribution::normaliser(t) * std::exp(t.rate * z);
            }
        }
    }
    return d;
}

inline double cdf(const JumpDistribution& dist, double z) noexcept {
    double neg_mass = 0.0;
    for (const auto& t : dist.negative()) neg_mass += t.weight;
    if (z < 0.0) {
        double c = 0.0;
        for (const auto& t : dist.negative()) {
            if (z <= -t.truncation) continue;
            // P(Y <= z | component) = (e^{theta z} - e^{-theta R}) / (1 - e^{-theta R})
            if (!std::isfinite(t.truncation)) {
                c += t.weight * std::exp(t.rate * z);
            } else {
                c += t.weight * std::expm1(t.rate * (z + t.truncation)) /
                     std::expm1(t.rate * t.truncation);
            }
        }
        return c;
    }
    double c = neg_mass;
    for (const auto& t : dist.positive()) c += t.weight * (-std::expm1(-t.rate * z));
    return c;
}

/// Mean magnitude of one negative component.
inline double negative_term_magnitude(const NegativeTerm& t) noexcept {
    if (!std::isfinite(t.truncation)) return 1.0 / t.rate;
    return 1.0 / t.rate - t.truncation / std::expm1(t.rate * t.truncation);
}

inline double mean(const JumpDistribution& dist) noexcept {
    double m = 0.0;
    for (const auto& t : dist.positive()) m += t.weight / t.rate;
    for (const auto& t : dist.negative()) m -= t.weight * negative_term_magnitude(t);
    return m;
}

/// L = E[Y], the mean jump mark.
inline double mean_jump(const LevySpec& spec) noexcept { return mean(spec.dist); }

/// E[Y^2].
inline double second_moment(const JumpDistribution& dist) noexcept {
    double m = 0.0;
    for (const auto& t : dist.positive()) m += t.weight * 2.0 / (t.rate * t.rate);
    for (const auto& t : dist.negative()) {
        if (!std::isfinite(t.truncation)) {
            m += t.weight * 2.0 / (t.rate * t.rate);
        } else {
            // E[X^2] for X ~ Exp(theta) truncated to (0, R)
            const double th = t.rate;
            const double r = t.truncation;
            const double tail = std::exp(-th * r);
            const double raw = 2.0 / (th * th) - tail * (r * r + 2.0 * r / th + 2.0 / (th * th));
            m += t.weight * raw / (-std::expm1(-th * r));
        }
    }
    return m;
}

/// Support of a single component is cut at this many mean lengths; the
/// neglected tail mass is below e^{-50}.
inline constexpr double kTailCutoff = 50.0;

/// E[h(Y)] by adaptive quadrature, one panel family per mixture component.
/// h may return double or std::complex<double>.
template <class H>
auto expectation(const JumpDistribution& dist, H&& h, const quad::Options& opt = {})
    -> std::decay_t<std::invoke_result_t<H&, double>> {
    using V = std::decay_t<std::invoke_result_t<H&, double>>;
    V total{};
    for (const auto& t : dist.positive()) {
        if (t.weight == 0.0) continue;
        const double upper = kTailCutoff / t.rate;
        auto integrand = [&](double z) -> V {
            return h(z) * (t.weight * t.rate * std::exp(-t.rate * z));
        };
        total += quad::integrate_or_throw(integrand, 0.0, upper, opt,
                                          {1.0 / t.rate, 5.0 / t.rate, 15.0 / t.rate})
                     .value;
    }
    for (const auto& t : dist.negative()) {
        if (t.weight == 0.0) continue;
        const double lower = -std::min(t.truncation, kTailCutoff / t.rate);
        const double norm = JumpDistribution::normaliser(t);
        auto integrand = [&](double z) -> V {
            return h(z) * (t.weight * norm * std::exp(t.rate * z));
        };
        total += quad::integrate_or_throw(integrand, lower, 0.0, opt,
                                          {-1.0 / t.rate, -5.0 / t.rate, -15.0 / t.rate})
                     .value;
    }
    return total;
}

/// \int (1 + |z|)^q nu(dz). Finite for every law in this family.
inline double levy_q_moment(const LevySpec& spec, double q) {
    if (!(q >= 1.0)) throw DomainError("levy_q_moment requires q >= 1");
    const double e = expectation(spec.dist, [q](double z) { return std::pow(1.0 + std::abs(z), q); });
    if (!std::isfinite(e)) throw QuadratureError("levy_q_moment diverged");
    return spec.intensity * e;
}

/// One mark: pick a component by weight, then invert its (truncated) CDF.
inline double sample_jump(const JumpDistribution& dist, RandomStream& rng) {
    const double pick = rng.uniform();
    const double u = rng.uniform();
    double acc = 0.0;
    const PositiveTerm* last_pos = nullptr;
    const NegativeTerm* last_neg = nullptr;
    for (const auto& t : dist.positive()) {
        if (t.weight == 0.0) continue;
        last_pos = &t;
        last_neg = nullptr;
        acc += t.weight;
        if (pick < acc) return -std::log(u) / t.rate;
    }
    for (const auto& t : dist.negative()) {
        if (t.weight == 0.0) continue;
        last_neg = &t;
        last_pos = nullptr;
        acc += t.weight;
        if (pick < acc) {
            if (!std::isfinite(t.truncation)) return std::log(u) / t.rate;
            return std::log1p(u * std::expm1(-t.rate * t.truncation)) / t.rate;
        }
    }
    // Rounding left pick above the accumulated weight: use the last component.
    if (last_pos) return -std::log(u) / last_pos->rate;
    if (!std::isfinite(last_neg->truncation)) return std::log(u) / last_neg->rate;
    return std::log1p(u * std::expm1(-last_neg->rate * last_neg->truncation)) / last_neg->rate;
}

/// Homogeneous Poisson arrivals on (t0, t1], in increasing order.
inline std::vector<double> sample_jump_times(double lambda, double t0, double t1, RandomStream& rng) {
    if (!(lambda >= 0.0)) throw DomainError("intensity must be >= 0");
    std::vector<double> times;
    if (!(t1 > t0) || lambda == 0.0) return times;
    double t = t0;
    for (;;) {
        t += rng.exponential() / lambda;
        if (t > t1) break;
        if (t > t0 && (times.empty() || t > times.back())) times.push_back(t);
    }
    return times;
}

/// Throws DomainError unless 1 + z*g > 0 on the whole support of `dist`.
inline void require_log_domain(const JumpDistribution& dist, double g) {
    if (g > 0.0) {
        const double r = dist.support_radius();
        if (!(1.0 - g * r > 0.0)) {
            throw DomainError("1 + z*g <= 0 on the jump support (g = " + std::to_string(g) +
                              ", R = " + std::to_string(r) + ")");
        }
    } else if (g < 0.0 && dist.has_positive_support()) {
        throw DomainError("negative g with unbounded positive jumps makes 1 + z*g <= 0");
    }
}

inline quad::Options jump_integral_options() {
    quad::Options o;
    o.abs_tol = 1e-13;
    o.rel_tol = 1e-11;
    o.max_panels = 20000;
    return o;
}

namespace detail {

/// \int_0^inf (x + t e^{i phi})^c exp(beta (x + t e^{i phi} - 1)) e^{i phi} dt for
/// x > 0, Im c > 0 and beta cos(phi) < 0. The integrand lives in the upper half
/// plane, away from the branch cut, and decays along the ray.
inline std::complex<double> ray_integral(double x, double phi, double beta, std::complex<double> c) {
    const std::complex<double> dir = std::polar(1.0, phi);
    const double decay = -beta * std::cos(phi);
    const auto h = [&](double t) {
        const std::complex<double> u = x + t * dir;
        return std::exp(c * std::log(u) + beta * (u - 1.0)) * dir;
    };
    const double scale = x / std::max(1.0, std::abs(c.imag()));
    const double upper = (kTailCutoff + 20.0) / decay + 10.0 * scale;
    std::vector<double> breaks;
    for (double b = scale; b < upper; b *= 8.0) breaks.push_back(b);
    quad::Options opt;
    opt.abs_tol = 1e-15;
    opt.rel_tol = 1e-12;
    opt.max_panels = 2000;
    return quad::integrate_or_throw(h, 0.0, upper, opt, breaks).value;
}

/// E[(1 + g Y)^c] for Im c > 0 by contour rotation: with u = 1 + g y each
/// mixture component becomes \int u^c e^{beta (u - 1)} du over a real segment,
/// and the segment is traded for rays into the upper half plane.
inline std::complex<double> power_moment_rotated(const JumpDistribution& dist, double g,
                                                 std::complex<double> c) {
    constexpr double kUp = std::numbers::pi / 4.0;         // for beta < 0
    constexpr double kBack = 3.0 * std::numbers::pi / 4.0; // for beta > 0
    std::complex<double> total{};
    const double ag = std::abs(g);
    for (const auto& t : dist.positive()) {
        if (t.weight == 0.0) continue;
        // g > 0 here (require_log_domain): u in [1, inf), beta = -eta / g
        total += t.weight * t.rate / ag * ray_integral(1.0, kUp, -t.rate / g, c);
    }
    for (const auto& t : dist.negative()) {
        if (t.weight == 0.0) continue;
        const double k = t.weight * JumpDistribution::normaliser(t) / ag;
        if (g > 0.0) {
            // u in [1 - g R, 1], beta = theta / g
            const double beta = t.rate / g;
            total += k * (ray_integral(1.0 - g * t.truncation, kBack, beta, c) - ray_integral(1.0, kBack, beta, c));
        } else {
            // u in [1, 1 + |g| R], beta = -theta / |g|
            const double beta = -t.rate / ag;
            std::complex<double> v = ray_integral(1.0, kUp, beta, c);
            if (std::isfinite(t.truncation)) v -= ray_integral(1.0 + ag * t.truncation, kUp, beta, c);
            total += k * v;
        }
    }
    return total;
}

} // namespace detail

/// E[(1 + g Y)^c], with the real branch of the logarithm.
inline std::complex<double> power_moment(const JumpDistribution& dist, double g, std::complex<double> c) {
    require_log_domain(dist, g);
    if (g == 0.0 || c == std::complex<double>{}) return 1.0;
    // Real-axis quadrature turns oscillatory as |Im c| grows; rotate instead.
    constexpr double kRotateAbove = 4.0;
    if (c.imag() >= kRotateAbove) return detail::power_moment_rotated(dist, g, c);
    if (c.imag() <= -kRotateAbove) return std::conj(detail::power_moment_rotated(dist, g, std::conj(c)));
    return expectation(
        dist, [g, c](double z) { return std::exp(c * std::log1p(z * g)); }, jump_integral_options());
}

/// E[ln(1 + g Y)].
inline double log_moment(const JumpDistribution& dist, double g) {
    require_log_domain(dist, g);
    if (g == 0.0) return 0.0;
    return expectation(dist, [g](double z) { return std::log1p(z * g); }, jump_integral_options());
}

/// \int [ (1 + z g)^c - c ln(1 + z g) - 1 ] f_Y(z) dz.
inline std::complex<double> complex_jump_integral(const LevySpec& spec, double g_val,
                                                  std::complex<double> c) {
    require_log_domain(spec.dist, g_val);
    if (g_val == 0.0 || c == std::complex<double>{}) return 0.0;
    return expectation(
        spec.dist,
        [g_val, c](double z) {
            const double l = std::log1p(z * g_val);
            return std::exp(c * l) - c * l - 1.0;
        },
        jump_integral_options());
}

} // namespace sdde
