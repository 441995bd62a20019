#include "kelly/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

namespace kelly {

namespace {

std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", x);
    return buf;
}

bool is_distribution(std::span<const double> v, std::string_view what, std::size_t row,
                     std::vector<std::string>& out) {
    bool ok = true;
    double sum = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) {
        if (!(v[k] >= 0.0)) {
            out.push_back(std::string(what) + (row != SIZE_MAX ? " row " + std::to_string(row) : "") +
                          " entry " + std::to_string(k) + " is negative (" + fmt(v[k]) + ")");
            ok = false;
        }
        sum += v[k];
    }
    if (std::abs(sum - 1.0) > kProbTol) {
        std::string loc = row != SIZE_MAX ? " row " + std::to_string(row) : "";
        out.push_back(std::string(what) + loc + " sums to " + fmt(sum) + " (deficit " +
                      fmt(1.0 - sum) + ")");
        ok = false;
    }
    return ok;
}

}  // namespace

bool detect_iid(const Matrix& transition) {
    for (std::size_t i = 1; i < transition.rows(); ++i)
        for (std::size_t k = 0; k < transition.cols(); ++k)
            if (std::abs(transition(i, k) - transition(0, k)) > kProbTol) return false;
    return true;
}

MarketModel MarketModel::make(std::vector<std::string> states, Matrix transition,
                              std::vector<double> initial) {
    MarketModel m{std::move(states), std::move(transition), std::move(initial), false};
    m.iid_flag = detect_iid(m.transition);
    return m;
}

ValidationReport validate_scenario(const MarketModel& model, const AssetSet& assets,
                                   const WeightFunction& weights, const RuinThreshold& b) {
    ValidationReport rep;
    auto& out = rep.violations;
    const std::size_t m = model.num_states();

    if (m < 2) out.push_back("state space must have at least 2 outcomes");
    if (model.transition.rows() != m || model.transition.cols() != m)
        out.push_back("transition matrix is not " + std::to_string(m) + "x" + std::to_string(m));
    else
        for (std::size_t i = 0; i < m; ++i)
            is_distribution(model.transition.row(i), "transition", i, out);
    if (model.initial.size() != m)
        out.push_back("initial distribution length != number of states");
    else
        is_distribution(model.initial, "initial", SIZE_MAX, out);
    if (model.iid_flag && model.transition.rows() == m && !detect_iid(model.transition))
        out.push_back("iid_flag set but transition rows differ by more than 1e-12");

    if (assets.num_assets() < 1) out.push_back("at least one risky asset is required");
    bool any_nonzero_return = false;
    for (std::size_t s = 0; s < assets.num_assets(); ++s) {
        const Matrix& g = assets.returns[s];
        if (g.rows() != model.transition.rows() || g.cols() != model.transition.cols()) {
            out.push_back("returns for asset " + std::to_string(s) +
                          " do not match the transition dimensions");
            continue;
        }
        for (std::size_t i = 0; i < g.rows(); ++i)
            for (std::size_t k = 0; k < g.cols(); ++k) {
                if (!std::isfinite(g(i, k)))
                    out.push_back("returns for asset " + std::to_string(s) + " entry (" +
                                  std::to_string(i) + "," + std::to_string(k) + ") is not finite");
                if (g(i, k) != 0.0) any_nonzero_return = true;
            }
    }
    if (assets.num_assets() >= 1 && !any_nonzero_return)
        out.push_back("return function is identically 0");
    if (assets.riskless_rate && !(*assets.riskless_rate >= 0.0))
        out.push_back("riskless rate rho must be >= 0");

    const Matrix& phi = weights.weights;
    if (phi.rows() != model.transition.rows() || phi.cols() != model.transition.cols()) {
        out.push_back("weights do not match the transition dimensions");
    } else {
        bool any_positive = false;
        for (std::size_t i = 0; i < phi.rows(); ++i)
            for (std::size_t k = 0; k < phi.cols(); ++k) {
                if (!(phi(i, k) >= 0.0))
                    out.push_back("weight phi(" + std::to_string(i) + "," + std::to_string(k) +
                                  ") is negative");
                if (phi(i, k) > 0.0) any_positive = true;
            }
        if (!any_positive) out.push_back("weight function is identically 0");
    }

    if (!(b.b > 0.0)) {
        out.push_back("b must be positive");
    } else if (assets.riskless_rate) {
        if (!(b.b < 1.0 + *assets.riskless_rate))
            out.push_back("b must lie in (0,1+rho) when a riskless asset is present");
    } else if (!(b.b < 1.0)) {
        out.push_back("b must lie in (0,1)");
    }
    return rep;
}

MarketModel normalized(MarketModel model) {
    for (std::size_t i = 0; i < model.transition.rows(); ++i) {
        auto row = model.transition.row(i);
        const double sum = std::accumulate(row.begin(), row.end(), 0.0);
        if (sum > 0.0)
            for (auto& x : row) x /= sum;
    }
    const double sum = std::accumulate(model.initial.begin(), model.initial.end(), 0.0);
    if (sum > 0.0)
        for (auto& x : model.initial) x /= sum;
    return model;
}

std::vector<double> stationary_distribution(const MarketModel& model) {
    const std::size_t m = model.num_states();
    std::vector<double> pi = model.initial;
    std::vector<double> next(m);
    const int max_iter = 2'000'000;
    for (int it = 0; it < max_iter; ++it) {
        // one half-lazy step: next = (pi P + pi)/2
        std::fill(next.begin(), next.end(), 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            const double pi_i = pi[i];
            if (pi_i == 0.0) continue;
            auto row = model.transition.row(i);
            for (std::size_t k = 0; k < m; ++k) next[k] += pi_i * row[k];
        }
        double step = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
            next[k] = 0.5 * (next[k] + pi[k]);
            step = std::max(step, std::abs(next[k] - pi[k]));
        }
        pi.swap(next);
        if (step <= 1e-15) {
            // residual check against the original kernel
            double resid = 0.0, sum = 0.0;
            std::vector<double> piP(m, 0.0);
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t k = 0; k < m; ++k) piP[k] += pi[i] * model.transition(i, k);
            for (std::size_t k = 0; k < m; ++k) {
                resid = std::max(resid, std::abs(piP[k] - pi[k]));
                sum += pi[k];
            }
            if (resid <= 1e-11) {
                for (auto& x : pi) x /= sum;
                return pi;
            }
        }
    }
    throw std::runtime_error("stationary_distribution: power iteration did not converge");
}

}  // namespace kelly
