#pragma once

#include <optional>
#include <string>
#include <vector>

#include "kelly/matrix.hpp"

namespace kelly {

inline constexpr double kProbTol = 1e-12;

/// Finite-state Markov trial process. Immutable after construction; the
/// solvers and the simulator assume `normalized()` has been applied.
struct MarketModel {
    std::vector<std::string> states;  // outcome labels, size m >= 2
    Matrix transition;                // m x m row-stochastic
    std::vector<double> initial;      // distribution of the first trial result
    bool iid_flag = false;            // all transition rows identical

    std::size_t num_states() const { return states.size(); }

    static MarketModel make(std::vector<std::string> states, Matrix transition,
                            std::vector<double> initial);
};

/// Detects the IID special case: max row-to-row L-inf difference <= 1e-12.
bool detect_iid(const Matrix& transition);

/// Per-asset return matrices g^(s)(i,k); optional riskless rate rho.
struct AssetSet {
    std::vector<std::string> names;
    std::vector<Matrix> returns;          // K matrices, each m x m
    std::optional<double> riskless_rate;  // rho >= 0; present => scheme II

    std::size_t num_assets() const { return returns.size(); }
    double rho_eff() const { return riskless_rate.value_or(0.0); }

    // Effective return fed to every solver: g itself under scheme I,
    // g - (1+rho) under scheme II.
    double effective_return(std::size_t s, std::size_t i, std::size_t k) const {
        const double g = returns[s](i, k);
        return riskless_rate ? g - (1.0 + *riskless_rate) : g;
    }
};

struct WeightFunction {
    Matrix weights;  // m x m, phi(i,k) >= 0, not all zero
};

struct RuinThreshold {
    double b;  // > 0; < 1 without a riskless asset, < 1+rho with one
};

struct ValidationReport {
    std::vector<std::string> violations;
    bool ok() const { return violations.empty(); }
};

/// Collects every violated invariant; violations are data, not failures.
ValidationReport validate_scenario(const MarketModel& model, const AssetSet& assets,
                                   const WeightFunction& weights, const RuinThreshold& b);

/// Renormalizes rows of `transition` and `initial` to exact stochasticity.
/// Call after validation passed; downstream arithmetic assumes exact sums.
MarketModel normalized(MarketModel model);

/// Invariant distribution pi with pi P = pi, via power iteration started from
/// `initial`. Chains may be periodic or reducible; the iteration runs on the
/// half-lazy kernel (P+I)/2, which has the same fixed points.
std::vector<double> stationary_distribution(const MarketModel& model);

}  // namespace kelly
