#pragma once

#include <span>
#include <vector>

#include "kelly/matrix.hpp"
#include "kelly/model.hpp"

namespace kelly {

struct PolicyFractions;  // optimizer_discrete.hpp

/// Floor for calibrating values on null transitions (p(i,l)=0). Keeps q
/// strictly positive without contributing to any entropy or balance sum.
inline constexpr double kNullTransitionFloor = 1e-300;

/// Positive calibrating values q(i,k), one row per conditioning state.
/// Rows need not sum to 1; normalization is a separate checkable condition.
struct CalibratingFunction {
    Matrix values;

    static CalibratingFunction from_iid_row(std::span<const double> q_row, std::size_t m);
};

/// Per-state weighted KL entropy alpha(i), in nats.
struct EntropyProfile {
    std::vector<double> alpha;
};

/// sum_l phi(l) p(l) ln(p(l)/q(l)) with the convention 0*ln(0/q) = 0.
/// Throws on q(l) <= 0.
double weighted_kl_row(std::span<const double> p_row, std::span<const double> phi_row,
                       std::span<const double> q_row);

EntropyProfile entropy_profile(const Matrix& p, const Matrix& phi, const CalibratingFunction& q);

/// Signed slack of the weighted dominance condition per state:
/// sum_l phi(i,l) [(1+rho) q(i,l) - p(i,l)].  The condition holds iff every
/// slack <= 0 (within 1e-12).
std::vector<double> check_dominance(const Matrix& phi, const CalibratingFunction& q,
                                    const Matrix& p, double rho = 0.0);

inline bool dominance_holds(std::span<const double> slacks) {
    for (double s : slacks)
        if (s > 1e-12) return false;
    return true;
}

/// q(i,k) = p(i,k) / (1 + rho_eff + D(i).g*(i,k)); entries with p(i,k)=0 are
/// floored at kNullTransitionFloor. Throws if any denominator <= 0.
CalibratingFunction calibrating_from_fractions(const Matrix& p, const PolicyFractions& policy,
                                               const AssetSet& assets);

/// True for state i iff sum_l q(i,l) lies in [1-1e-10, 1+1e-10].
std::vector<bool> check_q_normalization(const CalibratingFunction& q);

/// A_n = sum_{j=1..n} alpha(eps_{j-1}); returns the full prefix sequence with
/// A_0 = 0, length path.size().
std::vector<double> cumulative_entropy_path(std::span<const std::size_t> path,
                                            const EntropyProfile& profile);

/// Per-state conditional increment of S_n - A_n under a fraction c:
/// sum_l phi(l) p(l) ln[ q(l)(1+rho_eff+c g*(l)) / p(l) ] over p(l) > 0.
/// Non-positive whenever the dominance and balance conditions hold;
/// zero exactly at the q-representation with c at a balance root.
double gibbs_increment(std::span<const double> p_row, std::span<const double> phi_row,
                       std::span<const double> g_row, std::span<const double> q_row, double c,
                       double rho_eff = 0.0);

}  // namespace kelly
