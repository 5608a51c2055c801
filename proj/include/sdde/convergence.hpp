#pragma once

// Empirical strong-order studies: coarse log-EM runs coupled to a fine
// reference through a shared jump stream, plus the grid-holding probe.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "sdde/engine.hpp"
#include "sdde/errors.hpp"
#include "sdde/model.hpp"
#include "sdde/parallel.hpp"
#include "sdde/rng.hpp"

namespace sdde {

struct ConvergenceStudy {
    double horizon = 1.0;
    std::vector<std::size_t> steps;   // coarse levels, as numbers of steps on [0, T]
    std::size_t reference_steps = 0;  // fine grid for the reference
    std::size_t n_paths = 1000;
    double p = 2.0;
    double moment_q = 4.0;            // exponent of the sup-moment probe
    std::uint64_t seed = 0;
    unsigned threads = 1;
};

struct ErrorEstimate {
    double delta;
    double e_hat;      // (mean sup |S - S^pi|^p)^{1/p}
    double std_error;  // of e_hat, by the delta method
    double sup_moment; // mean sup |S^pi|^q
};

struct RateFit {
    double slope;
    double intercept;
    double r2;
    std::vector<double> residuals;
};

namespace detail {

inline std::pair<double, double> root_mean(const std::vector<double>& xs, double p) {
    const auto n = static_cast<double>(xs.size());
    const double m = pairwise_sum(xs) / n;
    double se_m = 0.0;
    if (xs.size() > 1) {
        const double ss = pairwise_sum(xs.begin(), xs.end(), [m](double x) { return (x - m) * (x - m); });
        se_m = std::sqrt(ss / (n - 1.0) / n);
    }
    const double e = std::pow(m, 1.0 / p);
    const double se = m > 0.0 ? se_m * e / (p * m) : 0.0;
    return {e, se};
}

} // namespace detail

template <ModelType M>
std::vector<ErrorEstimate> coupled_errors(const M& model, const ConvergenceStudy& study) {
    if (study.steps.empty()) throw DomainError("study needs at least one level");
    if (!(study.p >= 1.0)) throw DomainError("p must be >= 1");
    if (study.n_paths < 1) throw DomainError("n_paths must be >= 1");
    const auto report = validate_model(model);
    if (!report.passed()) throw ValidationError("model failed validation: " + report.failures());

    const SimGrid fine = make_grid(study.horizon, study.reference_steps, model.delay);
    std::vector<SimGrid> grids;
    for (std::size_t n : study.steps) {
        if (n == 0 || study.reference_steps % n != 0) {
            throw DomainError("reference step must divide every coarse step");
        }
        grids.push_back(make_grid(study.horizon, n, model.delay));
    }
    const std::size_t levels = grids.size();
    std::vector<double> sup_p(study.n_paths * levels);
    std::vector<double> sup_q(study.n_paths * levels);

    parallel_for(study.n_paths, study.threads, [&](std::size_t i) {
        try {
            auto rng = stream_for(study.seed, i);
            const auto js = draw_jump_stream(model.levy, study.horizon, rng);
            const ReferencePath ref(model, fine, js);
            for (std::size_t l = 0; l < levels; ++l) {
                const auto path = log_em_path(model, grids[l], js);
                double err = 0.0;
                double peak = 0.0;
                for (std::size_t k = 0; k <= grids[l].steps; ++k) {
                    err = std::max(err, std::abs(path.values[k] - ref.value_at(grids[l].time(k))));
                    peak = std::max(peak, path.values[k]);
                }
                for (const auto& j : path.jumps) {
                    err = std::max(err, std::abs(j.value - ref.value_at(j.time)));
                    peak = std::max(peak, j.value);
                }
                sup_p[i * levels + l] = std::pow(err, study.p);
                sup_q[i * levels + l] = std::pow(peak, study.moment_q);
            }
        } catch (const Error& e) {
            throw PathError(i, e.what());
        }
    });

    std::vector<ErrorEstimate> out;
    std::vector<double> col(study.n_paths);
    std::vector<double> colq(study.n_paths);
    for (std::size_t l = 0; l < levels; ++l) {
        for (std::size_t i = 0; i < study.n_paths; ++i) {
            col[i] = sup_p[i * levels + l];
            colq[i] = sup_q[i * levels + l];
        }
        const auto [e, se] = detail::root_mean(col, study.p);
        out.push_back({grids[l].dt, e, se, pairwise_sum(colq) / static_cast<double>(study.n_paths)});
    }
    return out;
}

/// OLS of log e_hat on log delta.
inline RateFit fit_rate(const std::vector<double>& deltas, const std::vector<double>& errors) {
    if (deltas.size() != errors.size()) throw FitError("deltas and errors differ in length");
    if (deltas.size() < 4) throw FitError("need >= 4 levels for a rate fit");
    const std::size_t n = deltas.size();
    std::vector<double> x(n);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(deltas[i] > 0.0) || !(errors[i] > 0.0) || !std::isfinite(errors[i])) {
            throw FitError("rate fit needs positive finite steps and errors");
        }
        x[i] = std::log(deltas[i]);
        y[i] = std::log(errors[i]);
    }
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0;
    double sxy = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0) throw FitError("all step sizes are equal");
    RateFit fit{sxy / sxx, 0.0, 1.0, {}};
    fit.intercept = my - fit.slope * mx;
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double res = y[i] - (fit.intercept + fit.slope * x[i]);
        fit.residuals.push_back(res);
        sse += res * res;
    }
    fit.r2 = syy > 0.0 ? 1.0 - sse / syy : 1.0;
    return fit;
}

inline RateFit fit_rate(const std::vector<ErrorEstimate>& est) {
    std::vector<double> d;
    std::vector<double> e;
    for (const auto& x : est) {
        d.push_back(x.delta);
        e.push_back(x.e_hat);
    }
    return fit_rate(d, e);
}

struct HoldingEstimate {
    double delta;
    double value;     // mean over paths and midpoints of |S^pi(t_k + dt/2) - S^pi(t_k)|^p
    double std_error;
};

/// Deviation of the interpolated scheme from its step (grid-holding) version at
/// interval midpoints.
template <ModelType M>
std::vector<HoldingEstimate> grid_holding_error(const M& model, double horizon,
                                                const std::vector<std::size_t>& steps, std::size_t n_paths,
                                                std::uint64_t seed, double p = 2.0, unsigned threads = 1) {
    if (n_paths < 1) throw DomainError("n_paths must be >= 1");
    std::vector<HoldingEstimate> out;
    for (std::size_t n : steps) {
        const SimGrid grid = make_grid(horizon, n, model.delay);
        std::vector<double> per_path(n_paths);
        parallel_for(n_paths, threads, [&](std::size_t i) {
            try {
                auto rng = stream_for(seed, i);
                const auto js = draw_jump_stream(model.levy, horizon, rng);
                const auto path = log_em_path(model, grid, js);
                double acc = 0.0;
                for (std::size_t k = 0; k < grid.steps; ++k) {
                    const double mid = grid.time(k) + 0.5 * grid.dt;
                    acc += std::pow(std::abs(interpolate(path, model, mid) - path.values[k]), p);
                }
                per_path[i] = acc / static_cast<double>(grid.steps);
            } catch (const Error& e) {
                throw PathError(i, e.what());
            }
        });
        const auto nn = static_cast<double>(n_paths);
        const double m = pairwise_sum(per_path) / nn;
        double se = 0.0;
        if (n_paths > 1) {
            const double ss =
                pairwise_sum(per_path.begin(), per_path.end(), [m](double x) { return (x - m) * (x - m); });
            se = std::sqrt(ss / (nn - 1.0) / nn);
        }
        out.push_back({grid.dt, m, se});
    }
    return out;
}

} // namespace sdde
