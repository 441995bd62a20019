#include "kelly/entropy.hpp"

#include <cmath>
#include <stdexcept>

#include "kelly/optimizer_discrete.hpp"

namespace kelly {

CalibratingFunction CalibratingFunction::from_iid_row(std::span<const double> q_row,
                                                      std::size_t m) {
    Matrix v(m, q_row.size());
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t k = 0; k < q_row.size(); ++k) v(i, k) = q_row[k];
    return {std::move(v)};
}

double weighted_kl_row(std::span<const double> p_row, std::span<const double> phi_row,
                       std::span<const double> q_row) {
    double sum = 0.0;
    for (std::size_t l = 0; l < p_row.size(); ++l) {
        if (!(q_row[l] > 0.0)) throw std::invalid_argument("weighted_kl_row: q must be positive");
        if (p_row[l] == 0.0) continue;
        sum += phi_row[l] * p_row[l] * std::log(p_row[l] / q_row[l]);
    }
    return sum;
}

EntropyProfile entropy_profile(const Matrix& p, const Matrix& phi, const CalibratingFunction& q) {
    EntropyProfile prof;
    prof.alpha.resize(p.rows());
    for (std::size_t i = 0; i < p.rows(); ++i)
        prof.alpha[i] = weighted_kl_row(p.row(i), phi.row(i), q.values.row(i));
    return prof;
}

std::vector<double> check_dominance(const Matrix& phi, const CalibratingFunction& q,
                                    const Matrix& p, double rho) {
    std::vector<double> slack(p.rows(), 0.0);
    for (std::size_t i = 0; i < p.rows(); ++i) {
        double s = 0.0;
        for (std::size_t l = 0; l < p.cols(); ++l)
            s += phi(i, l) * ((1.0 + rho) * q.values(i, l) - p(i, l));
        slack[i] = s;
    }
    return slack;
}

CalibratingFunction calibrating_from_fractions(const Matrix& p, const PolicyFractions& policy,
                                               const AssetSet& assets) {
    const std::size_t m = p.rows();
    const double rho_eff = policy.mode == PolicyMode::scheme2 ? assets.rho_eff() : 0.0;
    Matrix q(m, p.cols());
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t k = 0; k < p.cols(); ++k) {
            double dg = 0.0;
            for (std::size_t s = 0; s < assets.num_assets(); ++s)
                dg += policy.fractions[i][s] * assets.effective_return(s, i, k);
            const double denom = 1.0 + rho_eff + dg;
            if (!(denom > 0.0))
                throw std::invalid_argument(
                    "calibrating_from_fractions: non-positive gross return at state " +
                    std::to_string(i));
            q(i, k) = p(i, k) > 0.0 ? p(i, k) / denom : kNullTransitionFloor;
        }
    }
    return {std::move(q)};
}

std::vector<bool> check_q_normalization(const CalibratingFunction& q) {
    std::vector<bool> ok(q.values.rows());
    for (std::size_t i = 0; i < q.values.rows(); ++i) {
        double sum = 0.0;
        for (double x : q.values.row(i)) sum += x;
        ok[i] = std::abs(sum - 1.0) <= 1e-10;
    }
    return ok;
}

std::vector<double> cumulative_entropy_path(std::span<const std::size_t> path,
                                            const EntropyProfile& profile) {
    std::vector<double> a;
    if (path.empty()) return a;
    a.resize(path.size());
    a[0] = 0.0;
    for (std::size_t j = 1; j < path.size(); ++j) a[j] = a[j - 1] + profile.alpha[path[j - 1]];
    return a;
}

double gibbs_increment(std::span<const double> p_row, std::span<const double> phi_row,
                       std::span<const double> g_row, std::span<const double> q_row, double c,
                       double rho_eff) {
    double sum = 0.0;
    for (std::size_t l = 0; l < p_row.size(); ++l) {
        if (p_row[l] == 0.0) continue;
        const double growth = 1.0 + rho_eff + c * g_row[l];
        if (!(growth > 0.0))
            throw std::invalid_argument("gibbs_increment: non-positive gross return");
        sum += phi_row[l] * p_row[l] * std::log(q_row[l] * growth / p_row[l]);
    }
    return sum;
}

}  // namespace kelly
