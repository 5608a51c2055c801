#pragma once

// Globally adaptive Gauss-Kronrod (7/15) quadrature on finite intervals.
// The integrand may return double or std::complex<double>.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <queue>
#include <type_traits>
#include <vector>

#include "sdde/errors.hpp"

namespace sdde::quad {

namespace detail {

inline constexpr std::array<double, 8> kKronrodNodes{
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};

inline constexpr std::array<double, 8> kKronrodWeights{
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};

// Gauss weights for nodes kKronrodNodes[1], [3], [5], [7].
inline constexpr std::array<double, 4> kGaussWeights{
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class V>
struct Panel {
    double a;
    double b;
    V value;
    double error;
    bool operator<(const Panel& other) const { return error < other.error; }
};

template <class F, class V>
Panel<V> gauss_kronrod_15(F& f, double a, double b) {
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const V fc = f(center);
    V kronrod = fc * kKronrodWeights[7];
    V gauss = fc * kGaussWeights[3];
    for (std::size_t j = 0; j < 7; ++j) {
        const double dx = half * kKronrodNodes[j];
        const V sum = f(center - dx) + f(center + dx);
        kronrod += sum * kKronrodWeights[j];
        if (j % 2 == 1) gauss += sum * kGaussWeights[j / 2];
    }
    kronrod *= half;
    gauss *= half;
    return {a, b, kronrod, std::abs(kronrod - gauss)};
}

} // namespace detail

struct Options {
    double abs_tol = 1e-13;
    double rel_tol = 1e-12;
    std::size_t max_panels = 4000;
};

template <class V>
struct Result {
    V value{};
    double error = 0.0;
    std::size_t evaluations = 0;
    bool converged = false;
};

/// Integrate f over [a, b], bisecting the panel with the largest error
/// estimate until the summed estimate meets max(abs_tol, rel_tol*|I|).
/// `breakpoints` seed the initial partition (values outside (a, b) ignored).
template <class F>
auto integrate(F&& f, double a, double b, const Options& opt = {},
               const std::vector<double>& breakpoints = {})
    -> Result<std::decay_t<std::invoke_result_t<F&, double>>> {
    using V = std::decay_t<std::invoke_result_t<F&, double>>;
    Result<V> out;
    if (a == b) {
        out.converged = true;
        return out;
    }
    if (a > b) {
        auto r = integrate(f, b, a, opt, breakpoints);
        r.value = -r.value;
        return r;
    }

    std::vector<double> cuts{a};
    for (double x : breakpoints) {
        if (x > a && x < b) cuts.push_back(x);
    }
    cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    std::priority_queue<detail::Panel<V>> panels;
    V total{};
    double total_err = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        auto p = detail::gauss_kronrod_15<F, V>(f, cuts[i], cuts[i + 1]);
        out.evaluations += 15;
        total += p.value;
        total_err += p.error;
        panels.push(p);
    }

    while (total_err > std::max(opt.abs_tol, opt.rel_tol * std::abs(total))) {
        if (panels.size() >= opt.max_panels) break;
        const auto worst = panels.top();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b)) break; // interval exhausted
        panels.pop();
        auto left = detail::gauss_kronrod_15<F, V>(f, worst.a, mid);
        auto right = detail::gauss_kronrod_15<F, V>(f, mid, worst.b);
        out.evaluations += 30;
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        panels.push(left);
        panels.push(right);
    }

    // Re-sum from the panels to shed the drift of the running updates.
    V resum{};
    double err = 0.0;
    while (!panels.empty()) {
        resum += panels.top().value;
        err += panels.top().error;
        panels.pop();
    }
    out.value = resum;
    out.error = err;
    out.converged = err <= std::max(opt.abs_tol, opt.rel_tol * std::abs(resum)) * 1.0000001;
    return out;
}

/// As integrate(), but throws QuadratureError when the tolerance is missed
/// by more than `slack` times.
template <class F>
auto integrate_or_throw(F&& f, double a, double b, const Options& opt = {},
                        const std::vector<double>& breakpoints = {}, double slack = 100.0) {
    auto r = integrate(std::forward<F>(f), a, b, opt, breakpoints);
    const double target = std::max(opt.abs_tol, opt.rel_tol * std::abs(r.value));
    if (!r.converged && !(r.error <= slack * target)) {
        throw QuadratureError("adaptive quadrature did not converge on [" + std::to_string(a) +
                              ", " + std::to_string(b) + "], error estimate " +
                              std::to_string(r.error));
    }
    return r;
}

} // namespace sdde::quad
