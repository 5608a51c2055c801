#pragma once

// Path generation for the delayed jump model: the logarithmic Euler-Maruyama
// scheme, its continuous interpolation, and a fine-grid reference built from
// the exact exponential representation.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "sdde/errors.hpp"
#include "sdde/jump_measure.hpp"
#include "sdde/model.hpp"
#include "sdde/parallel.hpp"
#include "sdde/rng.hpp"

namespace sdde {

/// Jump times in (0, T] and their marks; shared across grids to couple them.
struct JumpStream {
    std::vector<double> times;
    std::vector<double> marks;

    [[nodiscard]] std::size_t size() const noexcept { return times.size(); }
};

inline JumpStream draw_jump_stream(const LevySpec& levy, double horizon, RandomStream& rng) {
    JumpStream js;
    js.times = sample_jump_times(levy.intensity, 0.0, horizon, rng);
    js.marks.reserve(js.times.size());
    for (std::size_t i = 0; i < js.times.size(); ++i) js.marks.push_back(sample_jump(levy.dist, rng));
    return js;
}

/// Uniform grid on [0, T] whose step divides the delay.
struct SimGrid {
    double horizon;
    std::size_t steps;
    double dt;
    std::size_t delay_steps; // m with b = m * dt

    [[nodiscard]] double time(std::size_t k) const noexcept {
        return k == steps ? horizon : static_cast<double>(k) * dt;
    }
};

inline bool is_integer_ratio(double num, double den, std::size_t& out) {
    const double ratio = num / den;
    const double r = std::round(ratio);
    if (r < 1.0 || std::abs(ratio - r) > 1e-12 * std::max(1.0, ratio)) return false;
    out = static_cast<std::size_t>(r);
    return true;
}

inline SimGrid make_grid(double horizon, std::size_t steps, double delay) {
    if (!(horizon > 0.0)) throw DomainError("horizon must be > 0");
    if (steps < 1) throw DomainError("grid needs at least one step");
    const double dt = horizon / static_cast<double>(steps);
    std::size_t m = 0;
    if (!is_integer_ratio(delay, dt, m)) {
        throw DomainError("delay " + std::to_string(delay) + " is not an integer multiple of dt " +
                          std::to_string(dt));
    }
    return {horizon, steps, dt, m};
}

struct JumpPoint {
    double time;
    double mark;
    double factor;     // 1 + g(delayed) * mark
    double value;      // state right after the jump
    std::size_t step;  // interval (t_k, t_{k+1}] holding the jump
};

struct SimPath {
    SimGrid grid;
    std::vector<double> values; // S at t_0..t_n
    std::vector<JumpPoint> jumps;

    [[nodiscard]] double terminal() const noexcept { return values.back(); }

    [[nodiscard]] double min_value() const noexcept {
        double m = *std::min_element(values.begin(), values.end());
        for (const auto& j : jumps) m = std::min(m, j.value);
        return m;
    }
};

enum class JumpAggregation {
    per_jump,   // product of (1 + g Y) over the jumps in the step
    aggregated, // single factor 1 + g * (sum of marks in the step)
};

/// Index k of the step (t_k, t_{k+1}] containing time t > 0.
inline std::size_t step_of(double t, const SimGrid& grid) noexcept {
    const double pos = std::ceil(t / grid.dt) - 1.0;
    if (!(pos > 0.0)) return 0;
    return std::min(static_cast<std::size_t>(pos), grid.steps - 1);
}

/// S^pi(t_k - b): a grid value, or the initial segment for t_k <= b.
template <ModelType M>
double delayed_value(const SimPath& path, const M& model, std::size_t k) {
    const std::size_t m = path.grid.delay_steps;
    if (k >= m) return path.values[k - m];
    return model.phi((static_cast<double>(k) - static_cast<double>(m)) * path.grid.dt);
}

/// Logarithmic Euler-Maruyama:
///   S(t_{k+1}) = S(t_k) exp(f(x_k) dt) prod_{jumps in (t_k, t_{k+1}]} (1 + g(x_k) Y),
/// with x_k = S(t_k - b). Every value stays positive when phi(0) > 0.
template <ModelType M>
SimPath log_em_path(const M& model, const SimGrid& grid, const JumpStream& jumps,
                    JumpAggregation mode = JumpAggregation::per_jump) {
    SimPath path{grid, {}, {}};
    path.values.resize(grid.steps + 1);
    path.values[0] = model.phi(0.0);
    if (!(path.values[0] > 0.0)) throw DomainError("phi(0) must be > 0");
    path.jumps.reserve(jumps.size());

    std::size_t next = 0;
    for (std::size_t k = 0; k < grid.steps; ++k) {
        const double x = delayed_value(path, model, k);
        const double fx = model.f(x);
        double s = path.values[k];
        const double tk = grid.time(k);

        const std::size_t first = next;
        while (next < jumps.size() && step_of(jumps.times[next], grid) == k) ++next;
        if (next > first) {
            const double gx = model.g(x);
            if (mode == JumpAggregation::per_jump) {
                for (std::size_t i = first; i < next; ++i) {
                    const double factor = 1.0 + gx * jumps.marks[i];
                    if (!(factor > 0.0)) {
                        throw PositivityError("jump factor 1 + g*Y = " + std::to_string(factor) +
                                              " at t = " + std::to_string(jumps.times[i]));
                    }
                    s *= factor;
                    const double v = s * std::exp(fx * (jumps.times[i] - tk));
                    path.jumps.push_back({jumps.times[i], jumps.marks[i], factor, v, k});
                }
            } else {
                double dz = 0.0;
                for (std::size_t i = first; i < next; ++i) dz += jumps.marks[i];
                const double factor = 1.0 + gx * dz;
                if (!(factor > 0.0)) {
                    throw PositivityError("aggregated jump factor 1 + g*dZ = " + std::to_string(factor));
                }
                s *= factor;
                // The aggregated scheme has no intra-step interpolation; the
                // jump points report the step-end value.
                for (std::size_t i = first; i < next; ++i) {
                    path.jumps.push_back({jumps.times[i], jumps.marks[i], factor,
                                          s * std::exp(fx * grid.dt), k});
                }
            }
        }
        path.values[k + 1] = s * std::exp(fx * grid.dt);
    }
    return path;
}

/// Continuous interpolation of the scheme on [-b, T]:
/// phi(t) on [-b, 0], else S(t_k) exp(f(x_k)(t - t_k)) prod_{jumps in (t_k, t]} (1 + g(x_k) Y).
template <ModelType M>
double interpolate(const SimPath& path, const M& model, double t) {
    const auto& grid = path.grid;
    const double b = static_cast<double>(grid.delay_steps) * grid.dt;
    if (t < -b * (1.0 + 1e-12) || t > grid.horizon * (1.0 + 1e-12)) {
        throw RangeError("interpolate: t = " + std::to_string(t) + " outside [-b, T]");
    }
    if (t <= 0.0) return model.phi(std::max(t, -b));
    double kf = std::floor(t / grid.dt);
    auto k = static_cast<std::size_t>(kf);
    if (k >= grid.steps) return path.values[grid.steps];
    const double tk = grid.time(k);
    if (t == tk) return path.values[k];
    const double x = delayed_value(path, model, k);
    double v = path.values[k] * std::exp(model.f(x) * (t - tk));
    for (const auto& j : path.jumps) {
        if (j.step == k && j.time <= t) v *= j.factor;
    }
    return v;
}

/// Reference solution on a fine grid: drift integral by the trapezoidal rule,
/// jump factors evaluated with the delayed state at the exact jump time.
class ReferencePath {
public:
    template <ModelType M>
    ReferencePath(const M& model, const SimGrid& fine, const JumpStream& jumps)
        : grid_(fine), phi0_(model.phi(0.0)) {
        if (!(phi0_ > 0.0)) throw DomainError("phi(0) must be > 0");
        const std::size_t n = fine.steps;
        const double b = model.delay;
        values_.resize(n + 1);
        f_left_.resize(n);
        f_right_.resize(n);
        first_jump_.assign(n + 1, 0);
        values_[0] = phi0_;

        const auto state = [&](double s) -> double {
            // s <= current time is guaranteed since b >= dt
            if (s <= 0.0) return model.phi(std::max(s, -b));
            return value_at(s);
        };

        std::size_t next = 0;
        for (std::size_t k = 0; k < n; ++k) {
            const double tk = fine.time(k);
            const double tk1 = fine.time(k + 1);
            const std::size_t m = fine.delay_steps;
            const double x_left =
                k >= m ? values_[k - m] : model.phi((static_cast<double>(k) - static_cast<double>(m)) * fine.dt);
            const double x_right = k + 1 >= m
                                       ? values_[k + 1 - m]
                                       : model.phi((static_cast<double>(k + 1) - static_cast<double>(m)) * fine.dt);
            f_left_[k] = model.f(x_left);
            f_right_[k] = model.f(x_right);

            first_jump_[k] = jumps_.size();
            double s = values_[k];
            while (next < jumps.size() && step_of(jumps.times[next], fine) == k) {
                const double tau = jumps.times[next];
                const double x_tau = state(tau - b);
                const double factor = 1.0 + model.g(x_tau) * jumps.marks[next];
                if (!(factor > 0.0)) {
                    throw PositivityError("reference jump factor " + std::to_string(factor) +
                                          " at t = " + std::to_string(tau));
                }
                s *= factor;
                jumps_.push_back({tau, jumps.marks[next], factor, 0.0, k});
                jumps_.back().value = s * std::exp(partial_drift(k, tau - tk));
                ++next;
            }
            values_[k + 1] = s * std::exp(0.5 * (tk1 - tk) * (f_left_[k] + f_right_[k]));
        }
        first_jump_[n] = jumps_.size();
    }

    /// Reference state at time t in [0, T] (right-continuous at jumps).
    [[nodiscard]] double value_at(double t) const {
        if (t <= 0.0) return phi0_;
        const std::size_t k = step_index(t);
        const double tk = grid_.time(k);
        if (t == tk) return values_[k];
        double v = values_[k] * std::exp(partial_drift(k, t - tk));
        for (std::size_t i = first_jump_[k]; i < jumps_.size() && jumps_[i].step == k; ++i) {
            if (jumps_[i].time <= t) v *= jumps_[i].factor;
        }
        return v;
    }

    [[nodiscard]] const SimGrid& grid() const noexcept { return grid_; }
    [[nodiscard]] const std::vector<double>& values() const noexcept { return values_; }
    [[nodiscard]] const std::vector<JumpPoint>& jumps() const noexcept { return jumps_; }

    [[nodiscard]] SimPath as_path() const { return {grid_, values_, jumps_}; }

private:
    [[nodiscard]] std::size_t step_index(double t) const noexcept {
        const double kf = std::floor(t / grid_.dt);
        if (kf >= static_cast<double>(grid_.steps)) return grid_.steps;
        return static_cast<std::size_t>(kf);
    }

    // Integral of the linear interpolant of f over [t_k, t_k + h].
    [[nodiscard]] double partial_drift(std::size_t k, double h) const noexcept {
        if (k >= grid_.steps) return 0.0;
        return h * f_left_[k] + 0.5 * h * h / grid_.dt * (f_right_[k] - f_left_[k]);
    }

    SimGrid grid_;
    double phi0_;
    std::vector<double> values_;
    std::vector<double> f_left_;
    std::vector<double> f_right_;
    std::vector<std::size_t> first_jump_;
    std::vector<JumpPoint> jumps_;
};

template <ModelType M>
ReferencePath exact_path(const M& model, const SimGrid& fine, const JumpStream& jumps) {
    return ReferencePath(model, fine, jumps);
}

/// n_paths independent scheme paths; path i draws its jumps from stream (seed, i).
template <ModelType M>
std::vector<SimPath> simulate_ensemble(const M& model, const SimGrid& grid, std::size_t n_paths,
                                       std::uint64_t seed, unsigned threads = 1,
                                       JumpAggregation mode = JumpAggregation::per_jump) {
    if (n_paths < 1) throw DomainError("n_paths must be >= 1");
    std::vector<SimPath> out(n_paths);
    parallel_for(n_paths, threads, [&](std::size_t i) {
        try {
            auto rng = stream_for(seed, i);
            const auto js = draw_jump_stream(model.levy, grid.horizon, rng);
            out[i] = log_em_path(model, grid, js, mode);
        } catch (const Error& e) {
            throw PathError(i, e.what());
        }
    });
    return out;
}

} // namespace sdde
