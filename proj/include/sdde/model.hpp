#pragma once

// The delayed jump model dS = f(S(t-b)) S dt + g(S(t-b)) S(t-) dZ, its
// coefficient catalog, and the assumption checks that gate simulation.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "sdde/errors.hpp"
#include "sdde/jump_measure.hpp"

namespace sdde {

/// What the user promises about a coefficient function. These are
/// hypotheses, not inferred: the validator only spot-checks them.
struct CoefficientBounds {
    double lower;
    double upper;
    double lipschitz;
};

template <class C>
concept Coefficient = requires(const C& c, double x) {
    { c(x) } -> std::convertible_to<double>;
    { c.declared() } -> std::convertible_to<CoefficientBounds>;
};

struct HolderBound {
    double exponent; // gamma in [1/2, 1]
    double constant;
};

template <class P>
concept InitialSegment = requires(const P& p, double s, double delay) {
    { p(s) } -> std::convertible_to<double>;
    { p.holder(delay) } -> std::convertible_to<HolderBound>;
};

// ---------------------------------------------------------------------------
// Coefficient catalog

struct ConstantCoefficient {
    double value;
    double operator()(double) const noexcept { return value; }
    [[nodiscard]] CoefficientBounds declared() const noexcept { return {value, value, 0.0}; }
};

/// offset + amplitude * sin(x / scale)
struct ScaledSine {
    double amplitude;
    double scale;
    double offset = 0.0;
    double operator()(double x) const noexcept { return offset + amplitude * std::sin(x / scale); }
    [[nodiscard]] CoefficientBounds declared() const noexcept {
        const double a = std::abs(amplitude);
        return {offset - a, offset + a, a / std::abs(scale)};
    }
};

/// clamp(intercept + slope * x, lower, upper)
struct AffineClipped {
    double intercept;
    double slope;
    double lower;
    double upper;
    double operator()(double x) const noexcept {
        return std::clamp(intercept + slope * x, lower, upper);
    }
    [[nodiscard]] CoefficientBounds declared() const noexcept {
        return {lower, upper, std::abs(slope)};
    }
};

/// Catalog entry chosen at run time (config files). Declared bounds default
/// to the entry's analytic ones and may be overridden.
class AnyCoefficient {
public:
    using Variant = std::variant<ConstantCoefficient, ScaledSine, AffineClipped>;

    template <class C>
        requires std::constructible_from<Variant, C>
    AnyCoefficient(C c) : impl_(std::move(c)) {} // NOLINT(google-explicit-constructor)

    double operator()(double x) const {
        return std::visit([x](const auto& c) { return c(x); }, impl_);
    }
    [[nodiscard]] CoefficientBounds declared() const {
        if (override_) return *override_;
        return std::visit([](const auto& c) { return c.declared(); }, impl_);
    }
    void declare(CoefficientBounds b) { override_ = b; }
    [[nodiscard]] const Variant& variant() const noexcept { return impl_; }

private:
    Variant impl_;
    std::optional<CoefficientBounds> override_;
};

// ---------------------------------------------------------------------------
// Initial segments on [-b, 0]

struct ConstantSegment {
    double value;
    double operator()(double) const noexcept { return value; }
    [[nodiscard]] HolderBound holder(double) const noexcept { return {1.0, 0.0}; }
};

/// scale * exp(rate * s)
struct ExpSegment {
    double scale;
    double rate;
    double operator()(double s) const noexcept { return scale * std::exp(rate * s); }
    [[nodiscard]] HolderBound holder(double delay) const noexcept {
        const double slope = std::abs(scale * rate) * std::max(1.0, std::exp(-rate * delay));
        return {1.0, slope};
    }
};

class AnySegment {
public:
    using Variant = std::variant<ConstantSegment, ExpSegment>;

    template <class P>
        requires std::constructible_from<Variant, P>
    AnySegment(P p) : impl_(std::move(p)) {} // NOLINT(google-explicit-constructor)

    double operator()(double s) const {
        return std::visit([s](const auto& p) { return p(s); }, impl_);
    }
    [[nodiscard]] HolderBound holder(double delay) const {
        if (override_) return *override_;
        return std::visit([delay](const auto& p) { return p.holder(delay); }, impl_);
    }
    void declare(HolderBound h) { override_ = h; }
    [[nodiscard]] const Variant& variant() const noexcept { return impl_; }

private:
    Variant impl_;
    std::optional<HolderBound> override_;
};

// ---------------------------------------------------------------------------

template <Coefficient F, Coefficient G, InitialSegment Phi>
struct DelayedJumpModel {
    F f;
    G g;
    Phi phi;
    double delay;
    LevySpec levy;

    DelayedJumpModel(F drift, G jump_coef, Phi initial, double b, LevySpec lv)
        : f(std::move(drift)), g(std::move(jump_coef)), phi(std::move(initial)), delay(b),
          levy(std::move(lv)) {
        if (!(delay > 0.0) || !std::isfinite(delay)) throw DomainError("delay must be > 0");
    }

    /// Mean jump mark L.
    [[nodiscard]] double mean_mark() const noexcept { return mean(levy.dist); }
};

using CatalogModel = DelayedJumpModel<AnyCoefficient, AnyCoefficient, AnySegment>;

template <class F, class G, class Phi>
DelayedJumpModel<F, G, Phi> make_model(F f, G g, Phi phi, double delay, LevySpec levy) {
    return {std::move(f), std::move(g), std::move(phi), delay, std::move(levy)};
}

template <class M>
concept ModelType = requires(const M& m, double x) {
    { m.f(x) } -> std::convertible_to<double>;
    { m.g(x) } -> std::convertible_to<double>;
    { m.phi(x) } -> std::convertible_to<double>;
    { m.delay } -> std::convertible_to<double>;
    { m.levy } -> std::convertible_to<const LevySpec&>;
    { m.f.declared() } -> std::convertible_to<CoefficientBounds>;
    { m.g.declared() } -> std::convertible_to<CoefficientBounds>;
};

/// True when g is declared identically zero.
template <ModelType M>
bool jump_coefficient_vanishes(const M& m) {
    const auto b = m.g.declared();
    return b.lower == 0.0 && b.upper == 0.0;
}

// ---------------------------------------------------------------------------
// Validation

struct Check {
    std::string name;
    bool passed;
    double witness;
    std::string detail;
};

struct ValidationReport {
    std::vector<Check> checks;

    [[nodiscard]] bool passed() const noexcept {
        return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
    }
    [[nodiscard]] const Check* find(const std::string& name) const noexcept {
        for (const auto& c : checks) {
            if (c.name == name) return &c;
        }
        return nullptr;
    }
    [[nodiscard]] std::string failures() const {
        std::ostringstream os;
        for (const auto& c : checks) {
            if (!c.passed) os << c.name << ": " << c.detail << "; ";
        }
        return os.str();
    }
};

struct ValidationOptions {
    double state_lower = 0.0;    // spot-check grid for coefficients
    double state_upper = 0.0;    // 0 = derive from the initial segment
    std::size_t grid_points = 10000;
    double min_positivity_margin = 1e-9; // epsilon_pos
};

/// inf over z in the jump support and g in [g_lo, g_hi] of 1 + z*g.
inline double positivity_margin(const JumpDistribution& dist, double g_lo, double g_hi) {
    double margin = 1.0;
    const double radius = dist.support_radius();
    if (radius > 0.0 && g_hi > 0.0) margin = std::min(margin, 1.0 - radius * g_hi);
    if (dist.has_positive_support() && g_lo < 0.0) margin = -kInf;
    return margin;
}

template <ModelType M>
ValidationReport validate_model(const M& model, const ValidationOptions& opt = {}) {
    ValidationReport rep;
    const double b = model.delay;
    const std::size_t npts = std::max<std::size_t>(opt.grid_points, 2);

    const double phi0 = model.phi(0.0);
    rep.checks.push_back({"initial_positive", phi0 > 0.0, phi0,
                          phi0 > 0.0 ? "phi(0) > 0" : "phi(0) must be > 0"});

    {
        const auto h = model.phi.holder(b);
        bool ok = h.exponent >= 0.5 && h.exponent <= 1.0;
        double worst = 0.0;
        for (std::size_t i = 0; i + 1 < npts; ++i) {
            const double s0 = -b + b * static_cast<double>(i) / static_cast<double>(npts - 1);
            const double s1 = -b + b * static_cast<double>(i + 1) / static_cast<double>(npts - 1);
            const double ratio = std::abs(model.phi(s1) - model.phi(s0)) / std::pow(s1 - s0, h.exponent);
            worst = std::max(worst, ratio);
        }
        ok = ok && worst <= h.constant * (1.0 + 1e-6) + 1e-12;
        rep.checks.push_back({"initial_holder", ok, worst,
                              ok ? "declared Holder bound holds on the sample grid"
                                 : "initial segment violates its declared Holder bound"});
    }

    const bool unbounded = model.levy.dist.unbounded_below();
    rep.checks.push_back({"bounded_negative_jumps", !unbounded, model.levy.dist.support_radius(),
                          unbounded ? "unbounded negative jumps" : "negative jumps bounded by R"});

    double upper = opt.state_upper;
    if (!(upper > opt.state_lower)) {
        double phi_max = 0.0;
        for (std::size_t i = 0; i < 64; ++i) {
            phi_max = std::max(phi_max, std::abs(model.phi(-b * static_cast<double>(i) / 63.0)));
        }
        upper = std::max(100.0, 10.0 * phi_max);
    }
    const auto fb = model.f.declared();
    const auto gb = model.g.declared();

    double f_max = 0.0, f_lo = kInf, f_hi = -kInf, g_lo = kInf, g_hi = -kInf;
    double f_slope = 0.0, g_slope = 0.0;
    double prev_x = 0.0, prev_f = 0.0, prev_g = 0.0;
    for (std::size_t i = 0; i < npts; ++i) {
        const double x = opt.state_lower + (upper - opt.state_lower) * static_cast<double>(i) /
                                               static_cast<double>(npts - 1);
        const double fx = model.f(x);
        const double gx = model.g(x);
        f_max = std::max(f_max, std::abs(fx));
        f_lo = std::min(f_lo, fx);
        f_hi = std::max(f_hi, fx);
        g_lo = std::min(g_lo, gx);
        g_hi = std::max(g_hi, gx);
        if (i > 0) {
            f_slope = std::max(f_slope, std::abs(fx - prev_f) / (x - prev_x));
            g_slope = std::max(g_slope, std::abs(gx - prev_g) / (x - prev_x));
        }
        prev_x = x;
        prev_f = fx;
        prev_g = gx;
    }
    const double eps = 1e-12;
    {
        const bool ok = std::isfinite(fb.lower) && std::isfinite(fb.upper) &&
                        f_lo >= fb.lower - eps && f_hi <= fb.upper + eps;
        rep.checks.push_back({"drift_bounded", ok, f_max,
                              ok ? "f within declared bounds" : "f leaves its declared bounds"});
    }
    {
        const bool ok = g_lo >= gb.lower - eps && g_hi <= gb.upper + eps;
        rep.checks.push_back({"jump_coefficient_bounded", ok, std::max(std::abs(g_lo), std::abs(g_hi)),
                              ok ? "g within declared bounds" : "g leaves its declared bounds"});
    }
    {
        const bool ok = f_slope <= fb.lipschitz * (1.0 + 1e-6) + 1e-9 &&
                        g_slope <= gb.lipschitz * (1.0 + 1e-6) + 1e-9;
        rep.checks.push_back({"lipschitz", ok, std::max(f_slope, g_slope),
                              ok ? "observed slopes within declared Lipschitz constants"
                                 : "observed slope exceeds a declared Lipschitz constant"});
    }
    {
        const double declared_margin = positivity_margin(model.levy.dist, gb.lower, gb.upper);
        const double sampled_margin = positivity_margin(model.levy.dist, g_lo, g_hi);
        const double margin = std::min(declared_margin, sampled_margin);
        const bool ok = margin >= opt.min_positivity_margin;
        std::ostringstream os;
        os << "inf 1 + z*g = " << margin << " (alpha0 = " << 1.0 - margin << ")";
        rep.checks.push_back({"positivity_margin", ok, margin, os.str()});
    }
    {
        double rho2 = kInf;
        bool ok = true;
        try {
            rho2 = levy_q_moment(model.levy, 2.0);
            ok = std::isfinite(rho2);
        } catch (const QuadratureError&) {
            ok = false;
        }
        rep.checks.push_back({"levy_moments", ok, rho2,
                              ok ? "int (1+|z|)^2 nu(dz) finite" : "Levy moment diverged"});
    }
    return rep;
}

} // namespace sdde
