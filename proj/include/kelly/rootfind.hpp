#pragma once

#include <cassert>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace kelly {

struct RootResult {
    double x;
    double residual;
    int iterations;
};

/// Bisection for a strictly decreasing function with f(lo) > 0 >= f(hi).
/// Stops when |f| <= res_tol or the bracket width falls below width_tol.
inline RootResult bisect_decreasing(const std::function<double(double)>& f, double lo, double hi,
                                    double res_tol = 1e-13, double width_tol = 1e-15,
                                    int max_iter = 2000) {
    double flo = f(lo);
    double fhi = f(hi);
    assert(flo > 0.0 && "bisect_decreasing: lower bracket must be positive");
    assert(fhi <= 0.0 && "bisect_decreasing: upper bracket must be non-positive");
    if (!(flo > 0.0) || !(fhi <= 0.0))
        throw std::invalid_argument("bisect_decreasing: bracket signs violated");

    double x = hi, fx = fhi;
    int it = 0;
    for (; it < max_iter; ++it) {
        x = 0.5 * (lo + hi);
        fx = f(x);
        if (std::abs(fx) <= res_tol || (hi - lo) <= width_tol) break;
        if (fx > 0.0) {
            lo = x;
        } else {
            hi = x;
        }
    }
    return {x, fx, it};
}

}  // namespace kelly
