#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace kelly {

namespace detail {

// Gauss-Kronrod 7/15 nodes on [0,1] half-interval: {node, gauss weight, kronrod weight}.
inline constexpr double kGK15[8][3] = {
    {0.000000000000000, 0.417959183673469, 0.209482141084728},
    {0.405845151377397, 0.381830050505119, 0.190350578064785},
    {0.741531185599394, 0.279705391489277, 0.140653259715525},
    {0.949107912342759, 0.129484966168870, 0.063092092629979},
    {0.207784955007898, 0.0, 0.204432940075298},
    {0.586087235467691, 0.0, 0.169004726639267},
    {0.864864423359769, 0.0, 0.104790010322250},
    {0.991455371120813, 0.0, 0.022935322010529},
};

struct PanelEstimate {
    double value;
    double error;
};

template <typename F>
PanelEstimate gk15(const F& f, double a, double b) {
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double y0 = f(mid);
    double g7 = kGK15[0][1] * y0;
    double k15 = kGK15[0][2] * y0;
    for (int i = 1; i < 8; ++i) {
        const double dx = half * kGK15[i][0];
        const double yi = f(mid + dx) + f(mid - dx);
        g7 += kGK15[i][1] * yi;
        k15 += kGK15[i][2] * yi;
    }
    g7 *= half;
    k15 *= half;
    const double diff = std::abs(k15 - g7);
    const double err = std::min(diff, std::pow(200.0 * diff, 1.5));
    return {k15, err};
}

}  // namespace detail

class QuadratureError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Adaptive Gauss-Kronrod 7/15 on [a,b] to absolute tolerance. Globally
/// adaptive: the panel with the largest error estimate is bisected until the
/// summed error falls below `abs_tol`, which also converges across integrand
/// discontinuities. Ordering and final summation are fixed, so the result is
/// a deterministic function of (f, a, b, abs_tol, split_scale) regardless of
/// threading. `split_scale` multiplies the initial panel count (used by
/// node-doubling stability checks).
inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double abs_tol = 1e-12, int split_scale = 1) {
    if (a == b) return 0.0;
    struct Panel {
        double a, b, value, error;
        int depth;
    };
    auto worse = [](const Panel& p, const Panel& q) {
        if (p.error != q.error) return p.error < q.error;
        return p.a > q.a;  // deterministic tie-break
    };
    std::vector<Panel> heap;
    long evals = 0;
    auto push = [&](double lo, double hi, int depth) {
        const auto est = detail::gk15(f, lo, hi);
        heap.push_back({lo, hi, est.value, est.error, depth});
        std::push_heap(heap.begin(), heap.end(), worse);
        ++evals;
        return est.error;
    };
    // start from a modest grid so features narrower than the node spacing of
    // a single panel are not invisible to the error estimate
    int initial = 8;
    for (int s = 1; s < split_scale; s *= 2) initial *= 2;
    for (int i = 0; i < initial; ++i)
        push(a + (b - a) * i / initial, a + (b - a) * (i + 1) / initial, 0);

    auto exact_error = [&] {
        double e = 0.0;
        for (const auto& p : heap) e += p.error;
        return e;
    };
    double err_sum = exact_error();
    long refinements = 0;
    while (err_sum > abs_tol) {
        std::pop_heap(heap.begin(), heap.end(), worse);
        const Panel worst = heap.back();
        heap.pop_back();
        if (worst.depth >= 52 || evals > 200'000)
            throw QuadratureError("quadrature did not converge to tolerance");
        const double m = 0.5 * (worst.a + worst.b);
        err_sum -= worst.error;
        err_sum += push(worst.a, m, worst.depth + 1);
        err_sum += push(m, worst.b, worst.depth + 1);
        if (++refinements % 256 == 0) err_sum = exact_error();  // undo FP drift
    }
    // fixed summation order: ascending by panel start
    std::sort(heap.begin(), heap.end(), [](const Panel& p, const Panel& q) { return p.a < q.a; });
    double total = 0.0;
    for (const auto& p : heap) total += p.value;
    return total;
}

/// Integrate over [a,b] with interior breakpoints made panel boundaries.
inline double integrate_with_breakpoints(const std::function<double(double)>& f, double a, double b,
                                         std::vector<double> breakpoints, double abs_tol = 1e-12,
                                         int split_scale = 1) {
    breakpoints.push_back(a);
    breakpoints.push_back(b);
    std::sort(breakpoints.begin(), breakpoints.end());
    double total = 0.0;
    double prev = a;
    for (double x : breakpoints) {
        if (x <= prev || x > b) continue;
        total += integrate(f, prev, x, abs_tol / 2, split_scale);
        prev = x;
    }
    return total;
}

/// \int_a^\infty h(x) dx for integrands with (at least) exponential decay.
/// Rational substitution x = a + scale*t/(1-t); the Jacobian blow-up at t=1 is
/// damped by the decay of h, and nodes never touch t=1.
inline double integrate_right_tail(const std::function<double(double)>& h, double a, double scale,
                                   double abs_tol = 1e-12, int split_scale = 1) {
    auto mapped = [&](double t) {
        const double one_mt = 1.0 - t;
        const double x = a + scale * t / one_mt;
        if (!std::isfinite(x)) return 0.0;
        const double hx = h(x);
        if (hx == 0.0) return 0.0;
        return hx * scale / (one_mt * one_mt);
    };
    return integrate(mapped, 0.0, 1.0, abs_tol, split_scale);
}

/// \int_{-\infty}^b h(x) dx, mirrored right-tail rule.
inline double integrate_left_tail(const std::function<double(double)>& h, double b, double scale,
                                  double abs_tol = 1e-12, int split_scale = 1) {
    return integrate_right_tail([&](double x) { return h(2.0 * b - x); }, b, scale, abs_tol,
                                split_scale);
}

}  // namespace kelly
