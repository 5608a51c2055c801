#pragma once

// European call valuation: Monte-Carlo under Q, Fourier inversion in the last
// delay period, and Black-Scholes baselines.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "sdde/engine.hpp"
#include "sdde/errors.hpp"
#include "sdde/jump_measure.hpp"
#include "sdde/measure_change.hpp"
#include "sdde/model.hpp"
#include "sdde/parallel.hpp"
#include "sdde/quadrature.hpp"
#include "sdde/rng.hpp"

namespace sdde {

enum class OptionKind { call, put };

struct PricingResult {
    double price = 0.0;
    double std_error = 0.0;
    std::string method;
    std::size_t n_paths = 0;
    std::uint64_t seed = 0;
    std::map<std::string, double> diagnostics;
};

inline double payoff(OptionKind kind, double s, double k) noexcept {
    return kind == OptionKind::call ? std::max(s - k, 0.0) : std::max(k - s, 0.0);
}

/// Mean and standard error of `xs`, both scaled by `scale`, with
/// order-fixed summation.
inline std::pair<double, double> mean_and_stderr(const std::vector<double>& xs, double scale = 1.0) {
    const auto n = static_cast<double>(xs.size());
    const double mean = pairwise_sum(xs) / n;
    if (xs.size() < 2) return {scale * mean, 0.0};
    const double ss = pairwise_sum(xs.begin(), xs.end(), [mean](double x) { return (x - mean) * (x - mean); });
    return {scale * mean, scale * std::sqrt(ss / (n - 1.0) / n)};
}

/// S(T) under Q for n_paths paths restarted from `history`; path i uses stream (seed, i).
template <ModelType M>
std::vector<double> q_terminal_values(const M& model, double r, double maturity, const HistoryPath& history,
                                      std::size_t n_paths, std::uint64_t seed, unsigned threads = 1,
                                      ThetaConvention conv = ThetaConvention::derived) {
    if (n_paths < 1) throw DomainError("n_paths must be >= 1");
    const QSimulator<M> sim(model, r, conv);
    std::vector<double> out(n_paths);
    parallel_for(n_paths, threads, [&](std::size_t i) {
        try {
            auto rng = stream_for(seed, i);
            out[i] = sim.run(history, maturity, rng, false).values.back();
        } catch (const Error& e) {
            throw PathError(i, e.what());
        }
    });
    return out;
}

/// S(T) of the log-EM scheme under P (no measure change).
template <ModelType M>
std::vector<double> p_terminal_values(const M& model, const SimGrid& grid, std::size_t n_paths,
                                      std::uint64_t seed, unsigned threads = 1) {
    if (n_paths < 1) throw DomainError("n_paths must be >= 1");
    std::vector<double> out(n_paths);
    parallel_for(n_paths, threads, [&](std::size_t i) {
        try {
            auto rng = stream_for(seed, i);
            const auto js = draw_jump_stream(model.levy, grid.horizon, rng);
            out[i] = log_em_path(model, grid, js).terminal();
        } catch (const Error& e) {
            throw PathError(i, e.what());
        }
    });
    return out;
}

/// Discounted payoffs of one strike strip on shared terminal values.
inline std::vector<PricingResult> strip_from_terminals(const std::vector<double>& terminals,
                                                       const std::vector<double>& strikes, double discount,
                                                       OptionKind kind, const std::string& method,
                                                       std::uint64_t seed) {
    std::vector<PricingResult> out;
    out.reserve(strikes.size());
    std::vector<double> pay(terminals.size());
    for (double k : strikes) {
        for (std::size_t i = 0; i < terminals.size(); ++i) pay[i] = payoff(kind, terminals[i], k);
        const auto [mean, se] = mean_and_stderr(pay, discount);
        PricingResult res{mean, se, method, terminals.size(), seed, {}};
        res.diagnostics["strike"] = k;
        out.push_back(std::move(res));
    }
    return out;
}

struct McOptions {
    unsigned threads = 1;
    OptionKind kind = OptionKind::call;
    ThetaConvention convention = ThetaConvention::derived;
};

/// Conditional value at history.t for several strikes on common random numbers.
template <ModelType M>
std::vector<PricingResult> price_mc_conditional_strip(const M& model, const MarketSpec& market,
                                                      const HistoryPath& history,
                                                      const std::vector<double>& strikes, std::size_t n_paths,
                                                      std::uint64_t seed, const McOptions& opt = {}) {
    market.validate();
    require_history(model, history);
    if (history.t > market.maturity) throw HistoryError("history ends after maturity");
    const double tau = market.maturity - history.t;
    if (jump_coefficient_vanishes(model)) {
        // riskless growth: S(T) = S(t) e^{r tau}
        const double st = history.current() * std::exp(market.r * tau);
        return strip_from_terminals({st}, strikes, std::exp(-market.r * tau), opt.kind, "mc-deterministic",
                                    seed);
    }
    const auto adm = check_admissibility(model, market.r, market.maturity, opt.convention);
    if (!adm.passed()) throw ValidationError("model not admissible: " + adm.failures());
    const auto terminals = q_terminal_values(model, market.r, market.maturity, history, n_paths, seed,
                                             opt.threads, opt.convention);
    return strip_from_terminals(terminals, strikes, std::exp(-market.r * tau), opt.kind, "mc", seed);
}

template <ModelType M>
PricingResult price_mc_conditional(const M& model, const MarketSpec& market, const HistoryPath& history,
                                   std::size_t n_paths, std::uint64_t seed, const McOptions& opt = {}) {
    return price_mc_conditional_strip(model, market, history, {market.strike}, n_paths, seed, opt).front();
}

/// Value at inception; the history is the initial segment sampled at grid.dt.
template <ModelType M>
std::vector<PricingResult> price_mc_strip(const M& model, const MarketSpec& market, const SimGrid& grid,
                                          const std::vector<double>& strikes, std::size_t n_paths,
                                          std::uint64_t seed, const McOptions& opt = {}) {
    if (market.valuation_time != 0.0) {
        throw PreconditionError("price_mc prices at t = 0; use the conditional variant for t > 0");
    }
    if (std::abs(grid.horizon - market.maturity) > 1e-12 * market.maturity) {
        throw DomainError("grid horizon differs from maturity");
    }
    return price_mc_conditional_strip(model, market, initial_history(model, grid.dt), strikes, n_paths, seed,
                                      opt);
}

template <ModelType M>
PricingResult price_mc(const M& model, const MarketSpec& market, const SimGrid& grid, std::size_t n_paths,
                       std::uint64_t seed, const McOptions& opt = {}) {
    return price_mc_strip(model, market, grid, {market.strike}, n_paths, seed, opt).front();
}

// ---------------------------------------------------------------------------
// Fourier pricing in the last delay period

namespace detail {

/// expm1 for complex arguments without cancellation near 0.
inline std::complex<double> expm1(std::complex<double> z) {
    const double a = z.real();
    const double b = z.imag();
    const double s = std::sin(0.5 * b);
    return {std::expm1(a) * std::cos(b) - 2.0 * s * s, std::exp(a) * std::sin(b)};
}

} // namespace detail

/// One piece of [t, T] with constant g and Q-intensity; weight = lambda_Q * duration.
struct FourierBucket {
    double g;
    double weight;
    double log_mean; // E[ln(1 + g Y)]
};

/// A jump of the weighted density of Y (continuous part) at `location`.
struct DensityJump {
    double location;
    double size;
};

struct FourierContext {
    double t = 0.0;
    double tau = 0.0;
    double spot = 0.0; // S(t)
    double r = 0.0;
    double ln_a = 0.0;
    double total_weight = 0.0; // Lambda = \int lambda_Q du
    double y0 = 0.0;           // value of Y when no jump occurs
    double variance_proxy = 0.0;
    bool deterministic = false;
    std::vector<FourierBucket> buckets;
    const LevySpec* levy = nullptr;

    [[nodiscard]] double a() const { return std::exp(ln_a); }
    [[nodiscard]] double discounted_spot() const { return spot * std::exp(-r * t); }
};

template <ModelType M>
FourierContext make_fourier_context(const M& model, const MarketSpec& market, const HistoryPath& history,
                                    ThetaConvention conv = ThetaConvention::derived) {
    market.validate();
    require_history(model, history);
    const double t = history.t;
    const double tol = 1e-12 * std::max(1.0, market.maturity);
    if (t < market.maturity - model.delay - tol || t > market.maturity + tol) {
        throw PreconditionError("valuation time outside last delay period [T - b, T]");
    }
    FourierContext ctx;
    ctx.t = t;
    ctx.tau = std::max(0.0, market.maturity - t);
    ctx.spot = history.current();
    ctx.r = market.r;
    ctx.levy = &model.levy;
    if (jump_coefficient_vanishes(model) || ctx.tau == 0.0) {
        ctx.deterministic = true;
        return ctx;
    }
    const double dt = history.dt;
    const auto steps = static_cast<std::size_t>(std::ceil(ctx.tau / dt - 1e-9));
    // (g, lambda_Q) -> accumulated duration; ordered keys keep the sums deterministic
    std::map<std::pair<double, double>, double> pieces;
    for (std::size_t k = 0; k < steps; ++k) {
        const double u = t + static_cast<double>(k) * dt;
        const double h = (k + 1 == steps ? market.maturity : u + dt) - u;
        const double x = history.values[k];
        const double g = model.g(x);
        if (g == 0.0) continue;
        const double th = theta(model, market.r, x, conv);
        if (!(th < 1.0)) throw ValidationError("theta >= 1 on [t, T]: Q intensity not positive");
        pieces[{g, (1.0 - th) * model.levy.intensity}] += h;
    }
    const double mark_mean = model.mean_mark();
    for (const auto& [key, duration] : pieces) {
        const auto [g, lambda_q] = key;
        const double w = lambda_q * duration;
        const double lm = log_moment(model.levy.dist, g);
        ctx.buckets.push_back({g, w, lm});
        ctx.total_weight += w;
        ctx.y0 -= w * lm;
        ctx.ln_a += w * (lm - g * mark_mean);
        ctx.variance_proxy +=
            w * expectation(model.levy.dist, [g](double z) { const double l = std::log1p(z * g); return l * l; },
                            jump_integral_options());
    }
    ctx.deterministic = ctx.variance_proxy < 1e-14;
    return ctx;
}

/// log E_Q[e^{cY} | F_t].
inline std::complex<double> char_exponent(const FourierContext& ctx, std::complex<double> c) {
    std::complex<double> s{};
    for (const auto& b : ctx.buckets) s += b.weight * complex_jump_integral(*ctx.levy, b.g, c);
    return s;
}

template <ModelType M>
double a_factor(const M& model, const MarketSpec& market, const HistoryPath& history,
                ThetaConvention conv = ThetaConvention::derived) {
    return make_fourier_context(model, market, history, conv).a();
}

namespace detail {

/// sum_b w_b E[(1 + g_b Y)^c]
inline std::complex<double> weighted_power_moment(const FourierContext& ctx, std::complex<double> c) {
    std::complex<double> s{};
    for (const auto& b : ctx.buckets) s += b.weight * power_moment(ctx.levy->dist, b.g, c);
    return s;
}

/// Discontinuities of the density of Y's continuous part, weighted by e^{c0 y}.
/// Only the single-jump term is discontinuous: at y0 (from the jump of f_Y at
/// 0) and at y0 + ln(1 - g R_j) for each truncated negative component.
inline std::vector<DensityJump> density_jumps(const FourierContext& ctx, double c0) {
    const auto& dist = ctx.levy->dist;
    const double scale = std::exp(-ctx.total_weight);
    std::vector<DensityJump> out;
    const double at_zero = dist.density_right_of_zero() - dist.density_left_of_zero();
    double zero_jump = 0.0;
    for (const auto& b : ctx.buckets) zero_jump += b.weight * at_zero / b.g;
    if (zero_jump != 0.0) out.push_back({ctx.y0, scale * std::exp(c0 * ctx.y0) * zero_jump});
    for (const auto& b : ctx.buckets) {
        for (const auto& t : dist.negative()) {
            if (t.weight == 0.0 || !std::isfinite(t.truncation)) continue;
            const double edge = 1.0 - b.g * t.truncation;
            const double jump = t.weight * JumpDistribution::normaliser(t) * std::exp(-t.rate * t.truncation) *
                                edge / b.g;
            const double a = ctx.y0 + std::log(edge);
            out.push_back({a, scale * std::exp(c0 * a) * b.weight * jump});
        }
    }
    return out;
}

struct TailResult {
    double value;
    double xi_max;
    std::size_t evaluations;
};

/// E[e^{c0 Y} 1{Y >= w}] by Gil-Pelaez inversion. The atom at y0 and the
/// density discontinuities are removed analytically so the remaining
/// integrand decays like xi^-3.
inline TailResult weighted_tail(const FourierContext& ctx, double c0, double w) {
    const double lambda = ctx.total_weight;
    const double atom = std::exp(-lambda + c0 * ctx.y0);
    const double cont_mass = atom * detail::expm1(weighted_power_moment(ctx, c0)).real();
    const auto jumps = density_jumps(ctx, c0);

    double value = (ctx.y0 >= w ? atom : 0.0) + 0.5 * cont_mass;
    for (const auto& j : jumps) value += 0.5 * j.size * std::exp(-std::abs(w - j.location));

    const auto integrand = [&](double xi) -> double {
        const std::complex<double> c{c0, xi};
        const std::complex<double> i_xi{0.0, xi};
        std::complex<double> z = atom * std::exp(-i_xi * (w - ctx.y0)) * detail::expm1(weighted_power_moment(ctx, c));
        for (const auto& j : jumps) {
            z -= i_xi * j.size * std::exp(-i_xi * (w - j.location)) / (1.0 + xi * xi);
        }
        return z.imag() / xi;
    };

    constexpr double kXiCap = 1e4;
    quad::Options opt;
    opt.abs_tol = 1e-11;
    opt.rel_tol = 1e-9;
    opt.max_panels = 400;
    double integral = 0.0;
    double lo = 0.0;
    double hi = 1.0;
    std::size_t evals = 0;
    int quiet_panels = 0;
    for (;;) {
        const auto r = quad::integrate(integrand, lo, hi, opt);
        if (!r.converged && std::abs(r.error) > 1e-8) {
            throw QuadratureError("Fourier integral failed on [" + std::to_string(lo) + ", " +
                                  std::to_string(hi) + "], error " + std::to_string(r.error));
        }
        integral += r.value;
        evals += r.evaluations;
        quiet_panels = std::abs(r.value) < 1e-13 ? quiet_panels + 1 : 0;
        if (hi >= kXiCap || (hi >= 64.0 && quiet_panels >= 2)) break;
        lo = hi;
        hi = std::min(2.0 * hi, kXiCap);
    }
    value += integral / std::numbers::pi;
    return {value, hi, evals};
}

} // namespace detail

struct FourierOptions {
    ThetaConvention convention = ThetaConvention::derived;
    bool legacy_w = false; // w = ln(K/A) - rT, without the S_t and tau normalisation
};

template <ModelType M>
PricingResult price_fourier(const M& model, const MarketSpec& market, const HistoryPath& history,
                            const FourierOptions& opt = {}) {
    const auto ctx = make_fourier_context(model, market, history, opt.convention);
    PricingResult res;
    res.method = "fourier";
    const double disc_k = market.strike * std::exp(-market.r * ctx.tau);
    if (ctx.deterministic) {
        res.method = "fourier-deterministic";
        res.price = std::max(ctx.spot - disc_k, 0.0);
        return res;
    }
    if (market.strike == 0.0) {
        res.price = ctx.spot;
        return res;
    }
    const double w = opt.legacy_w ? std::log(market.strike / ctx.a()) - market.r * market.maturity
                                 : std::log(market.strike / ctx.spot) - market.r * ctx.tau - ctx.ln_a;
    const auto t1 = detail::weighted_tail(ctx, 1.0, w);
    const auto t0 = detail::weighted_tail(ctx, 0.0, w);
    const double v1 = ctx.spot * ctx.a() * t1.value;
    const double v2 = disc_k * t0.value;
    res.price = std::clamp(v1 - v2, 0.0, ctx.spot);
    res.diagnostics = {{"a", ctx.a()},
                       {"w", w},
                       {"exercise_probability", t0.value},
                       {"v1", v1},
                       {"v2", v2},
                       {"xi_max", std::max(t0.xi_max, t1.xi_max)},
                       {"evaluations", static_cast<double>(t0.evaluations + t1.evaluations)}};
    return res;
}

// ---------------------------------------------------------------------------
// Black-Scholes baselines

inline double normal_cdf(double x) noexcept { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

inline double price_black_scholes(double s0, double strike, double r, double sigma, double tau) {
    if (!(sigma > 0.0) || !(tau > 0.0)) throw DomainError("sigma and tau must be > 0");
    if (strike == 0.0) return s0;
    const double vol = sigma * std::sqrt(tau);
    const double d1 = (std::log(s0 / strike) + (r + 0.5 * sigma * sigma) * tau) / vol;
    const double d2 = d1 - vol;
    return s0 * normal_cdf(d1) - strike * std::exp(-r * tau) * normal_cdf(d2);
}

/// Log-Euler GBM with drift alpha, payoff discounted at r; one stream per path.
inline std::vector<double> bs_drift_terminals(double s0, double alpha, double sigma, double maturity,
                                              std::size_t steps, std::size_t n_paths, std::uint64_t seed,
                                              unsigned threads = 1) {
    if (steps < 1 || n_paths < 1) throw DomainError("steps and n_paths must be >= 1");
    const double dt = maturity / static_cast<double>(steps);
    const double drift = (alpha - 0.5 * sigma * sigma) * dt;
    const double vol = sigma * std::sqrt(dt);
    std::vector<double> out(n_paths);
    parallel_for(n_paths, threads, [&](std::size_t i) {
        auto rng = stream_for(seed, i);
        double ls = std::log(s0);
        for (std::size_t k = 0; k < steps; ++k) ls += drift + (vol == 0.0 ? 0.0 : vol * rng.normal());
        out[i] = std::exp(ls);
    });
    return out;
}

inline PricingResult price_bs_mc_drift(double s0, double alpha, double sigma, double r, double strike,
                                             double maturity, std::size_t steps, std::size_t n_paths,
                                             std::uint64_t seed, unsigned threads = 1) {
    const auto terminals = bs_drift_terminals(s0, alpha, sigma, maturity, steps, n_paths, seed, threads);
    return strip_from_terminals(terminals, {strike}, std::exp(-r * maturity), OptionKind::call, "bs_drift", seed)
        .front();
}

} // namespace sdde
