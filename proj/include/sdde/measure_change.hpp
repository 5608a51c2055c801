#pragma once

// Market price of risk theta, the Girsanov density that turns P into the
// martingale measure Q, and simulation of the asset under Q by thinning.
//
// Under Q the jump intensity becomes lambda_Q(t) = (1 - theta(t)) lambda with
// unchanged marks, and the discounted price solves
//   dS~(t) = S~(t-) g(S(t-b)) \int z N~_Q(dt, dz).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "sdde/engine.hpp"
#include "sdde/errors.hpp"
#include "sdde/model.hpp"
#include "sdde/rng.hpp"

namespace sdde {

enum class ThetaConvention {
    derived, // 1 + (f - r) / (g lambda L): makes S~ driftless under Q
    legacy,  // (f + g - r) / (lambda L g); not a martingale measure, for comparison runs
};

struct MarketSpec {
    double r;
    double strike;
    double maturity;
    double valuation_time = 0.0;

    void validate() const {
        if (!(strike >= 0.0)) throw DomainError("strike must be >= 0");
        if (!(maturity > 0.0)) throw DomainError("maturity must be > 0");
        if (!(valuation_time >= 0.0 && valuation_time <= maturity)) {
            throw DomainError("valuation time must lie in [0, T]");
        }
    }
};

template <ModelType M>
double theta(const M& model, double r, double delayed_value,
             ThetaConvention conv = ThetaConvention::derived) {
    const double g = model.g(delayed_value);
    const double denom = g * model.levy.intensity * model.mean_mark();
    if (denom == 0.0) {
        throw DegenerateMarketError("g(x) * lambda * L = 0 at x = " + std::to_string(delayed_value) +
                                    "; no measure change exists");
    }
    const double f = model.f(delayed_value);
    if (conv == ThetaConvention::legacy) return (f + g - r) / denom;
    return 1.0 + (f - r) / denom;
}

struct ThetaBounds {
    double lower;
    double upper;
};

/// theta range implied by the declared bounds of f and g; nullopt-like
/// (infinite) bounds when g * lambda * L can vanish.
template <ModelType M>
ThetaBounds theta_bounds(const M& model, double r, ThetaConvention conv = ThetaConvention::derived) {
    const auto fb = model.f.declared();
    const auto gb = model.g.declared();
    const double lam_l = model.levy.intensity * model.mean_mark();
    double d0 = gb.lower * lam_l;
    double d1 = gb.upper * lam_l;
    if (d0 > d1) std::swap(d0, d1);
    if (lam_l == 0.0 || (d0 <= 0.0 && d1 >= 0.0)) return {-kInf, kInf};
    const double n0 = fb.lower - r;
    const double n1 = fb.upper - r;
    const double c = conv == ThetaConvention::legacy ? 1.0 / lam_l : 1.0;
    const double corners[] = {n0 / d0, n0 / d1, n1 / d0, n1 / d1};
    const double lo = *std::min_element(std::begin(corners), std::end(corners));
    const double hi = *std::max_element(std::begin(corners), std::end(corners));
    // the legacy convention adds g/(lambda L g) = 1/(lambda L), constant in x
    return {c + lo, c + hi};
}

/// (1 - theta) ln(1 - theta) + theta, the Novikov integrand per unit of nu-mass.
inline double novikov_integrand(double th) {
    if (th >= 1.0) return kInf;
    return (1.0 - th) * std::log1p(-th) + th;
}

struct AdmissibilityReport {
    ThetaBounds theta{};
    double novikov_bound = kInf; // bound on \int_0^T \int {(1-th)ln(1-th)+th} nu(dz) ds
    double epsilon = 1e-6;
    std::vector<Check> checks;
    std::vector<std::string> warnings;

    [[nodiscard]] bool passed() const noexcept {
        return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
    }
    [[nodiscard]] std::string failures() const {
        std::ostringstream os;
        for (const auto& c : checks) {
            if (!c.passed) os << c.name << ": " << c.detail << "; ";
        }
        return os.str();
    }
};

template <ModelType M>
AdmissibilityReport check_admissibility(const M& model, double r, double horizon = 1.0,
                                        ThetaConvention conv = ThetaConvention::derived,
                                        double epsilon = 1e-6) {
    AdmissibilityReport rep;
    rep.epsilon = epsilon;
    rep.theta = theta_bounds(model, r, conv);
    const bool defined = std::isfinite(rep.theta.lower) && std::isfinite(rep.theta.upper);
    rep.checks.push_back({"theta_defined", defined, model.levy.intensity * model.mean_mark(),
                          defined ? "g * lambda * L bounded away from 0"
                                  : "g * lambda * L can vanish: theta unbounded"});
    const bool below_one = defined && rep.theta.upper <= 1.0 - epsilon;
    {
        std::ostringstream os;
        os << "theta in [" << rep.theta.lower << ", " << rep.theta.upper << "]";
        rep.checks.push_back({"theta_below_one", below_one, rep.theta.upper, os.str()});
    }
    if (below_one) {
        rep.novikov_bound = horizon * model.levy.intensity *
                            std::max(novikov_integrand(rep.theta.lower), novikov_integrand(rep.theta.upper));
    }
    const bool novikov = std::isfinite(rep.novikov_bound);
    rep.checks.push_back({"novikov", novikov, rep.novikov_bound,
                          novikov ? "Novikov exponent finite" : "Novikov exponent not bounded"});
    if (defined && rep.theta.lower < 0.0) {
        rep.warnings.push_back("theta can be negative: the Q jump intensity exceeds the P intensity");
    }
    return rep;
}

/// Observed prices on [t - b, t] at spacing dt: values[i] = S(t - b + i dt).
struct HistoryPath {
    double t;
    double dt;
    std::vector<double> values;

    [[nodiscard]] double current() const { return values.back(); }
};

template <ModelType M>
HistoryPath initial_history(const M& model, double dt) {
    std::size_t m = 0;
    if (!is_integer_ratio(model.delay, dt, m)) {
        throw HistoryError("delay is not an integer multiple of dt");
    }
    HistoryPath h{0.0, dt, {}};
    h.values.resize(m + 1);
    for (std::size_t i = 0; i <= m; ++i) {
        h.values[i] = model.phi((static_cast<double>(i) - static_cast<double>(m)) * dt);
    }
    return h;
}

template <ModelType M>
std::size_t require_history(const M& model, const HistoryPath& h) {
    std::size_t m = 0;
    if (!(h.dt > 0.0) || !is_integer_ratio(model.delay, h.dt, m)) {
        throw HistoryError("history spacing must divide the delay");
    }
    if (h.values.size() != m + 1) {
        throw HistoryError("history must cover [t - b, t] with " + std::to_string(m + 1) +
                           " points, got " + std::to_string(h.values.size()));
    }
    for (double v : h.values) {
        if (!(v > 0.0)) throw HistoryError("history values must be > 0");
    }
    return m;
}

/// Asset path under Q from a history; values[0] = S(t), values[k] = S(t + k dt)
/// (the last step may be shorter so the path ends exactly at T).
struct QPath {
    double start;
    double dt;
    std::vector<double> values;
    std::vector<JumpPoint> jumps;
    std::size_t proposals = 0;
};

/// Thinning simulator for the Q-dynamics. Jumps are proposed at the majorant
/// rate lambda (1 - theta_lo) and kept with probability (1 - theta(t)) lambda / majorant.
template <ModelType M>
class QSimulator {
public:
    QSimulator(const M& model, double r, ThetaConvention conv = ThetaConvention::derived)
        : model_(model), r_(r), conv_(conv), riskless_(jump_coefficient_vanishes(model)) {
        if (!riskless_) {
            bounds_ = theta_bounds(model, r, conv);
            if (!std::isfinite(bounds_.lower) || !(bounds_.upper < 1.0)) {
                throw ValidationError("model is not admissible: theta bounds [" +
                                      std::to_string(bounds_.lower) + ", " +
                                      std::to_string(bounds_.upper) + "]");
            }
            majorant_ = model.levy.intensity * (1.0 - bounds_.lower);
        }
    }

    [[nodiscard]] double majorant() const noexcept { return majorant_; }
    [[nodiscard]] ThetaBounds bounds() const noexcept { return bounds_; }

    QPath run(const HistoryPath& history, double maturity, RandomStream& rng, bool keep_jumps = true) const {
        const std::size_t m = require_history(model_, history);
        const double dt = history.dt;
        QPath out{history.t, dt, {}, {}, 0};
        const double remaining = maturity - history.t;
        const auto steps = remaining > 0.0
                               ? static_cast<std::size_t>(std::ceil(remaining / dt - 1e-9))
                               : std::size_t{0};
        std::vector<double> ext(history.values);
        ext.reserve(m + 1 + steps);
        out.values.reserve(steps + 1);
        out.values.push_back(history.current());

        const double lambda = model_.levy.intensity;
        const double mark_mean = model_.mean_mark();
        double next_proposal = riskless_ ? kInf : history.t + rng.exponential() / majorant_;
        for (std::size_t k = 0; k < steps; ++k) {
            const double u = history.t + static_cast<double>(k) * dt;
            const double u_end = k + 1 == steps ? maturity : u + dt;
            const double h = u_end - u;
            const double x = ext[k];
            double s = ext.back();
            if (riskless_) {
                s *= std::exp(r_ * h);
            } else {
                const double th = theta(model_, r_, x, conv_);
                if (th < bounds_.lower - 1e-12 || !(th < 1.0)) {
                    throw ValidationError("theta(t) = " + std::to_string(th) +
                                          " escaped its thinning bounds");
                }
                const double g = model_.g(x);
                const double lambda_q = (1.0 - th) * lambda;
                const double accept = lambda_q / majorant_;
                double jump_product = 1.0;
                while (next_proposal <= u_end) {
                    ++out.proposals;
                    if (rng.uniform() < accept) {
                        const double y = sample_jump(model_.levy.dist, rng);
                        const double factor = 1.0 + g * y;
                        if (!(factor > 0.0)) {
                            throw PositivityError("Q jump factor " + std::to_string(factor));
                        }
                        jump_product *= factor;
                        if (keep_jumps) {
                            const double v = s * jump_product *
                                             std::exp((r_ - g * lambda_q * mark_mean) * (next_proposal - u));
                            out.jumps.push_back({next_proposal, y, factor, v, k});
                        }
                    }
                    next_proposal += rng.exponential() / majorant_;
                }
                s *= jump_product * std::exp((r_ - g * lambda_q * mark_mean) * h);
            }
            ext.push_back(s);
            out.values.push_back(s);
        }
        return out;
    }

private:
    const M& model_;
    double r_;
    ThetaConvention conv_;
    bool riskless_;
    ThetaBounds bounds_{0.0, 0.0};
    double majorant_ = 0.0;
};

/// Q-path from inception on `grid`, returned in the engine's path layout.
template <ModelType M>
SimPath simulate_q_path(const M& model, double r, const SimGrid& grid, RandomStream& rng,
                        ThetaConvention conv = ThetaConvention::derived) {
    QSimulator<M> sim(model, r, conv);
    auto q = sim.run(initial_history(model, grid.dt), grid.horizon, rng);
    return {grid, std::move(q.values), std::move(q.jumps)};
}

template <ModelType M>
SimPath simulate_q_path(const M& model, double r, const SimGrid& grid, std::uint64_t seed,
                        ThetaConvention conv = ThetaConvention::derived) {
    auto rng = stream_for(seed, 0);
    return simulate_q_path(model, r, grid, rng, conv);
}

/// Girsanov density S^theta(T) along a P-path of the scheme:
///   exp( sum_jumps ln(1 - theta(tau_i)) + \int_0^T theta(s) lambda ds ),
/// theta frozen at the scheme's delayed state on each step.
template <ModelType M>
double radon_nikodym(const M& model, double r, const SimPath& path,
                     ThetaConvention conv = ThetaConvention::derived) {
    const auto& grid = path.grid;
    const double lambda = model.levy.intensity;
    double log_density = 0.0;
    std::vector<double> step_theta(grid.steps);
    for (std::size_t k = 0; k < grid.steps; ++k) {
        step_theta[k] = theta(model, r, delayed_value(path, model, k), conv);
        log_density += step_theta[k] * lambda * (grid.time(k + 1) - grid.time(k));
    }
    for (const auto& j : path.jumps) {
        const double one_minus = 1.0 - step_theta[j.step];
        if (!(one_minus > 0.0)) {
            throw DomainError("1 - theta <= 0 at a jump time; density undefined");
        }
        log_density += std::log(one_minus);
    }
    return std::exp(log_density);
}

} // namespace sdde
