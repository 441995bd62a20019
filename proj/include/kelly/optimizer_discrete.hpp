#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "kelly/model.hpp"

namespace kelly {

/// Open-bound guard: strict constraints D < 1 are optimized over the closed
/// set with upper bound 1 - kEpsOpen, and reports flag solutions near the cap.
inline constexpr double kEpsOpen = 1e-9;

/// Thrown when the feasible set of an optimization is empty.
class InfeasibilityError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class PolicyMode { scheme1, scheme2 };

enum class Branch { interior_root, zero, boundary };

std::string to_string(Branch b);
std::string to_string(PolicyMode m);

/// Per-state investment fractions D(i) = (D^(1)(i),...,D^(K)(i)).
/// scheme2 means a riskless asset absorbs the uninvested remainder.
struct PolicyFractions {
    std::vector<std::vector<double>> fractions;
    PolicyMode mode = PolicyMode::scheme1;

    static PolicyFractions scalar(std::vector<double> per_state,
                                  PolicyMode mode = PolicyMode::scheme1);
    std::size_t num_states() const { return fractions.size(); }
    std::size_t num_assets() const { return fractions.empty() ? 0 : fractions.front().size(); }
};

/// [0, upper] with every d in it satisfying the no-ruin inequality.
struct FeasibilityInterval {
    double upper = 0.0;
    bool empty = false;
};

struct ScalarSolveResult {
    double fraction = 0.0;
    Branch branch = Branch::zero;
    double residual = 0.0;  // balance value at the returned fraction
    int iterations = 0;
    bool near_open_bound = false;
};

struct MultiAssetResult {
    std::vector<double> fractions;
    Branch branch = Branch::zero;
    bool degenerate = false;
    double beta_value = 0.0;
    std::vector<double> balance_residuals;  // per asset
    double grad_norm = 0.0;
    int iterations = 0;
    bool near_open_bound = false;
    // true when the growth maximum over the polytope is pinned by a no-ruin or
    // simplex constraint, so no positive point satisfies the balance condition
    // and the zero portfolio is returned
    bool no_feasible_balance = false;
};

struct OptimizationReport {
    PolicyFractions fractions;
    std::vector<Branch> per_state_branch;
    std::vector<double> balance_residual;  // max-abs over assets, per state
    std::vector<bool> degenerate;
    std::vector<bool> near_open_bound;
    std::vector<bool> no_feasible_balance;
    std::vector<double> beta;          // per-state expected weighted growth
    double stationary_growth = 0.0;    // sum_i pi(i) beta(i)
    double initial_growth = 0.0;       // E_1 from the initial distribution
    int iterations = 0;
};

struct GrowthResult {
    std::vector<double> beta;  // per state
    double e_n = 0.0;
};

/// Largest d with 1 + rho_eff + d g*(k) >= b for every outcome, clamped to
/// [0, 1-kEpsOpen]. Empty only when 1 + rho_eff < b.
FeasibilityInterval feasibility_interval(std::span<const double> g_row, double b,
                                         double rho_eff = 0.0);

/// Single-asset balance solve on one conditioning state. Bisects the strictly
/// decreasing balance function sum_l p phi g*/(1+rho_eff+D g*) on (0, upper];
/// returns 0 immediately when the derivative at 0 is <= 0; returns the upper
/// bound with branch `boundary` when the root lies beyond it (an explicit
/// extension of the theory, flagged in reports). Throws if the feasibility
/// interval is empty.
ScalarSolveResult solve_balance_scalar(std::span<const double> p_row,
                                       std::span<const double> phi_row,
                                       std::span<const double> g_row, double b,
                                       double rho_eff = 0.0);

/// Binary closed form: D = p1/gamma2 - p0/gamma1 when it lies in [0,1) and
/// 1 - p1 + (gamma2/gamma1) p0 >= b; else 0. gamma1 is the win return,
/// gamma2 the loss magnitude. Reduces to (p1-p0)/gamma with its b/2 guard in
/// the symmetric case.
double closed_form_binary(double p1, double p0, double gamma1, double gamma2, double b);

/// Riskless+binary closed form
///   D0 = (1+rho) (gamma (p1-p0) - (1+rho)) / (gamma^2 - (1+rho)^2),
/// accepted when 0 <= D0 <= 1 ^ (1+rho-b)/(gamma+1+rho) and the growth at D0
/// beats staying riskless by more than 1e-12; else 0. Throws for
/// gamma == 1+rho (formula singular).
double closed_form_binary_riskless(double p1, double p0, double gamma, double rho, double b);

/// Multi-asset solve on one conditioning state. g holds K rows of per-outcome
/// effective returns. Maximizes the concave growth over the feasible polytope
/// intersected with the balance condition. A log-barrier Newton path followed
/// by an active-set polish locates the polytope maximum; that point satisfies
/// the balance condition iff it is pinned by nothing but nonnegativity walls
/// (there D.grad = 0: strong balance on invested assets, zero stake on the
/// rest -> branch `boundary` unless the full gradient vanishes). Exact flat
/// directions (outcome-return null space) are resolved to the minimum-norm
/// point and flagged degenerate. When the polytope maximum sits on a no-ruin
/// or simplex wall the balance condition admits only zero-growth points; the
/// zero vector is returned with `no_feasible_balance` set.
MultiAssetResult optimize_multiasset(std::span<const double> p_row,
                                     std::span<const double> phi_row,
                                     const std::vector<std::vector<double>>& g, double b,
                                     double rho_eff = 0.0);

/// beta(i) = sum_k phi p ln(1+rho_eff+D(i).g*(i,k)) and the n-step expectation
/// E_n accumulated while propagating the state distribution from start_dist.
/// Throws on an infeasible policy (non-positive gross return).
GrowthResult expected_growth(const PolicyFractions& policy, const MarketModel& model,
                             const AssetSet& assets, const WeightFunction& weights,
                             std::span<const double> start_dist, int n);

/// Solves every conditioning state of a discrete scenario and assembles the
/// report (K=1 uses the scalar solver, K>1 the multi-asset solver).
OptimizationReport solve_model(const MarketModel& model, const AssetSet& assets,
                               const WeightFunction& weights, const RuinThreshold& b);

}  // namespace kelly
