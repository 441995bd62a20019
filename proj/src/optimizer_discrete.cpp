#include "kelly/optimizer_discrete.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "kelly/rootfind.hpp"

namespace kelly {

std::string to_string(Branch b) {
    switch (b) {
        case Branch::interior_root: return "interior-root";
        case Branch::zero: return "zero";
        case Branch::boundary: return "boundary";
    }
    return "?";
}

std::string to_string(PolicyMode m) { return m == PolicyMode::scheme1 ? "scheme1" : "scheme2"; }

PolicyFractions PolicyFractions::scalar(std::vector<double> per_state, PolicyMode mode) {
    PolicyFractions p;
    p.mode = mode;
    p.fractions.reserve(per_state.size());
    for (double d : per_state) p.fractions.push_back({d});
    return p;
}

FeasibilityInterval feasibility_interval(std::span<const double> g_row, double b, double rho_eff) {
    const double headroom = 1.0 + rho_eff - b;
    if (headroom < 0.0) return {0.0, true};
    double upper = 1.0 - kEpsOpen;
    for (double g : g_row)
        if (g < 0.0) upper = std::min(upper, headroom / -g);
    return {std::max(upper, 0.0), false};
}

namespace {

double balance_value(std::span<const double> p, std::span<const double> phi,
                     std::span<const double> g, double rho_eff, double d) {
    double sum = 0.0;
    for (std::size_t l = 0; l < p.size(); ++l) {
        if (p[l] == 0.0) continue;
        sum += p[l] * phi[l] * g[l] / (1.0 + rho_eff + d * g[l]);
    }
    return sum;
}

}  // namespace

ScalarSolveResult solve_balance_scalar(std::span<const double> p_row,
                                       std::span<const double> phi_row,
                                       std::span<const double> g_row, double b, double rho_eff) {
    const auto interval = feasibility_interval(g_row, b, rho_eff);
    if (interval.empty)
        throw InfeasibilityError("solve_balance_scalar: empty feasibility interval (1+rho < b)");

    ScalarSolveResult res;
    const double grad0 = balance_value(p_row, phi_row, g_row, rho_eff, 0.0);
    if (grad0 <= 0.0) {
        res = {0.0, Branch::zero, grad0, 0, false};
        return res;
    }
    if (interval.upper <= 0.0) return {0.0, Branch::boundary, grad0, 0, false};

    const double at_upper = balance_value(p_row, phi_row, g_row, rho_eff, interval.upper);
    if (at_upper > 0.0) {
        // root beyond the no-ruin bound: growth is increasing on the whole
        // interval, return the feasible boundary and flag it
        return {interval.upper, Branch::boundary, at_upper, 0,
                interval.upper >= 1.0 - 2.0 * kEpsOpen};
    }
    auto f = [&](double d) { return balance_value(p_row, phi_row, g_row, rho_eff, d); };
    const auto root = bisect_decreasing(f, 0.0, interval.upper, 1e-13, 1e-15);
    res.fraction = root.x;
    res.branch = Branch::interior_root;
    res.residual = root.residual;
    res.iterations = root.iterations;
    res.near_open_bound = root.x >= 1.0 - 2.0 * kEpsOpen;
    return res;
}

double closed_form_binary(double p1, double p0, double gamma1, double gamma2, double b) {
    if (std::abs(p1 + p0 - 1.0) > 1e-12)
        throw std::invalid_argument("closed_form_binary: p1+p0 must be 1");
    if (!(gamma1 > 0.0) || !(gamma2 > 0.0))
        throw std::invalid_argument("closed_form_binary: gamma1, gamma2 must be positive");
    const double d = p1 / gamma2 - p0 / gamma1;
    if (d < 0.0 || d >= 1.0) return 0.0;
    if (1.0 - p1 + (gamma2 / gamma1) * p0 < b) return 0.0;
    return d;
}

double closed_form_binary_riskless(double p1, double p0, double gamma, double rho, double b) {
    if (std::abs(p1 + p0 - 1.0) > 1e-12)
        throw std::invalid_argument("closed_form_binary_riskless: p1+p0 must be 1");
    if (!(gamma > 0.0)) throw std::invalid_argument("closed_form_binary_riskless: gamma <= 0");
    const double r = 1.0 + rho;
    if (gamma == r) throw std::invalid_argument("closed_form_binary_riskless: gamma == 1+rho");
    if (!(b > 0.0) || !(b <= r))
        throw std::invalid_argument("closed_form_binary_riskless: b must lie in (0, 1+rho]");

    const double d0 = r * (gamma * (p1 - p0) - r) / (gamma * gamma - r * r);
    const double cap = std::min(1.0, (r - b) / (gamma + r));
    if (d0 < 0.0 || d0 > cap) return 0.0;
    const double beta_d0 =
        p1 * std::log(r + d0 * (gamma - r)) + p0 * std::log(r - d0 * (gamma + r));
    const double beta_0 = std::log(r);
    return beta_d0 - beta_0 > 1e-12 ? d0 : 0.0;
}

// ---------------------------------------------------------------------------
// multi-asset solver
// ---------------------------------------------------------------------------

namespace {

struct LinCon {
    std::vector<double> a;  // a . D <= c
    double c;
};

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

double inf_norm(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

/// Solve the symmetric positive definite system A x = rhs in place (A is
/// K x K row-major). Gaussian elimination with partial pivoting; K is tiny.
std::vector<double> solve_dense(std::vector<double> A, std::vector<double> rhs) {
    const std::size_t n = rhs.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(A[r * n + col]) > std::abs(A[piv * n + col])) piv = r;
        if (std::abs(A[piv * n + col]) < 1e-300) throw std::runtime_error("singular system");
        if (piv != col) {
            for (std::size_t j = 0; j < n; ++j) std::swap(A[col * n + j], A[piv * n + j]);
            std::swap(rhs[col], rhs[piv]);
        }
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = A[r * n + col] / A[col * n + col];
            if (f == 0.0) continue;
            for (std::size_t j = col; j < n; ++j) A[r * n + j] -= f * A[col * n + j];
            rhs[r] -= f * rhs[col];
        }
    }
    std::vector<double> x(n);
    for (std::size_t r = n; r-- > 0;) {
        double s = rhs[r];
        for (std::size_t j = r + 1; j < n; ++j) s -= A[r * n + j] * x[j];
        x[r] = s / A[r * n + r];
    }
    return x;
}

struct MultiProblem {
    std::size_t K, m;
    std::vector<double> w;                   // phi(l) p(l)
    const std::vector<std::vector<double>>* g;  // K rows of length m
    double rho_eff;
    std::vector<LinCon> cons;

    double denom(std::span<const double> D, std::size_t l) const {
        double u = 0.0;
        for (std::size_t s = 0; s < K; ++s) u += D[s] * (*g)[s][l];
        return 1.0 + rho_eff + u;
    }
    double beta(std::span<const double> D) const {
        double v = 0.0;
        for (std::size_t l = 0; l < m; ++l)
            if (w[l] != 0.0) v += w[l] * std::log(denom(D, l));
        return v;
    }
    std::vector<double> grad(std::span<const double> D) const {
        std::vector<double> gr(K, 0.0);
        for (std::size_t l = 0; l < m; ++l) {
            if (w[l] == 0.0) continue;
            const double f = w[l] / denom(D, l);
            for (std::size_t s = 0; s < K; ++s) gr[s] += f * (*g)[s][l];
        }
        return gr;
    }
    std::vector<double> hess(std::span<const double> D) const {  // row-major K x K
        std::vector<double> H(K * K, 0.0);
        for (std::size_t l = 0; l < m; ++l) {
            if (w[l] == 0.0) continue;
            const double d = denom(D, l);
            const double f = w[l] / (d * d);
            for (std::size_t s = 0; s < K; ++s)
                for (std::size_t t = 0; t < K; ++t) H[s * K + t] -= f * (*g)[s][l] * (*g)[t][l];
        }
        return H;
    }
    double min_slack(std::span<const double> D) const {
        double ms = std::numeric_limits<double>::infinity();
        for (const auto& con : cons) ms = std::min(ms, con.c - dot(con.a, D));
        return ms;
    }
    /// Largest step t >= 0 with D + t dir keeping every slack >= margin.
    double max_step(std::span<const double> D, std::span<const double> dir, double margin) const {
        double t = std::numeric_limits<double>::infinity();
        for (const auto& con : cons) {
            const double adir = dot(con.a, dir);
            if (adir <= 0.0) continue;
            t = std::min(t, (con.c - dot(con.a, D) - margin) / adir);
        }
        return std::max(t, 0.0);
    }
};

/// Orthonormal basis of span{vectors} (Gram-Schmidt). Residuals with norm at
/// or below `abs_floor` are treated as numerical noise and dropped, so callers
/// must pass a floor matched to the scale of their inputs.
std::vector<std::vector<double>> orthonormalize(const std::vector<std::vector<double>>& vecs,
                                                double abs_floor = 1e-10) {
    std::vector<std::vector<double>> basis;
    for (auto v : vecs) {
        if (norm(v) <= abs_floor) continue;
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& b : basis) {
                const double c = dot(v, b);
                for (std::size_t i = 0; i < v.size(); ++i) v[i] -= c * b[i];
            }
        const double n1 = norm(v);
        if (n1 > abs_floor) {
            for (auto& x : v) x /= n1;
            basis.push_back(std::move(v));
        }
    }
    return basis;
}

/// Newton ascent of beta + mu*sum(ln slack), keeping strictly feasible.
void barrier_stage(const MultiProblem& P, std::vector<double>& D, double mu, int max_iter) {
    const std::size_t K = P.K;
    for (int it = 0; it < max_iter; ++it) {
        std::vector<double> gr = P.grad(D);
        std::vector<double> H = P.hess(D);
        for (const auto& con : P.cons) {
            const double s = con.c - dot(con.a, D);
            for (std::size_t i = 0; i < K; ++i) {
                gr[i] -= mu * con.a[i] / s;
                for (std::size_t j = 0; j < K; ++j)
                    H[i * K + j] -= mu * con.a[i] * con.a[j] / (s * s);
            }
        }
        if (inf_norm(gr) <= std::max(1e-13, mu * 1e-3)) return;
        std::vector<double> negH(H.size());
        for (std::size_t i = 0; i < H.size(); ++i) negH[i] = -H[i];
        std::vector<double> step;
        try {
            step = solve_dense(std::move(negH), gr);
        } catch (const std::runtime_error&) {
            step = gr;  // gradient fallback
        }
        double t = std::min(1.0, 0.9 * P.max_step(D, step, 0.0));
        if (t <= 0.0) return;
        auto value = [&](std::span<const double> X) {
            double v = P.beta(X);
            for (const auto& con : P.cons) v += mu * std::log(con.c - dot(con.a, X));
            return v;
        };
        const double f0 = value(D);
        const double slope = dot(gr, step);
        std::vector<double> trial(K);
        for (int ls = 0; ls < 60; ++ls) {
            for (std::size_t s = 0; s < K; ++s) trial[s] = D[s] + t * step[s];
            if (P.min_slack(trial) > 0.0 && value(trial) >= f0 + 0.25 * t * slope) break;
            t *= 0.5;
            if (t < 1e-18) {
                t = 0.0;
                break;
            }
        }
        if (t == 0.0) return;
        for (std::size_t s = 0; s < K; ++s) D[s] += t * step[s];
    }
}

/// Restrict an orthonormal basis N to its intersection with the hyperplane
/// {x : x . wall = 0}, staying inside span(N).
std::vector<std::vector<double>> restrict_basis(const std::vector<std::vector<double>>& N,
                                                std::span<const double> wall) {
    const std::size_t r = N.size();
    if (r == 0) return {};
    const std::size_t K = N.front().size();
    std::vector<double> coef(r);
    double cnorm2 = 0.0;
    for (std::size_t j = 0; j < r; ++j) {
        coef[j] = dot(N[j], wall);
        cnorm2 += coef[j] * coef[j];
    }
    if (cnorm2 <= 1e-24) return N;  // wall already parallel to the span
    std::vector<std::vector<double>> reduced;
    for (std::size_t j = 0; j < r; ++j) {
        std::vector<double> v(K, 0.0);
        for (std::size_t i = 0; i < r; ++i) {
            const double w = (i == j ? 1.0 : 0.0) - coef[j] * coef[i] / cnorm2;
            for (std::size_t s = 0; s < K; ++s) v[s] += w * N[i][s];
        }
        reduced.push_back(std::move(v));
    }
    return orthonormalize(reduced);
}

struct PolishOutcome {
    bool certified = false;        // the point satisfies the balance condition
    std::vector<bool> at_zero;     // assets pinned at a zero stake
    int iterations = 0;
};

/// Active-set Newton ascent of beta over the polytope, restricted per round to
/// the span of the outcome-return vectors of the currently invested assets.
/// Certifies the endpoint iff the only binding constraints are nonnegativity
/// walls with nonpositive gradient components (then D . grad(beta) = 0, the
/// weak balance condition).
PolishOutcome active_set_polish(const MultiProblem& P, std::vector<double>& D, double tol) {
    const std::size_t K = P.K;
    PolishOutcome out;
    out.at_zero.assign(K, false);
    for (std::size_t s = 0; s < K; ++s)
        if (D[s] <= 1e-9) {
            D[s] = 0.0;
            out.at_zero[s] = true;
        }

    for (int round = 0; round < static_cast<int>(2 * K) + 4; ++round) {
        // span of outcome-return vectors projected onto the free coordinates
        std::vector<std::vector<double>> cols;
        for (std::size_t l = 0; l < P.m; ++l) {
            if (P.w[l] == 0.0) continue;
            std::vector<double> v(K, 0.0);
            bool nonzero = false;
            for (std::size_t s = 0; s < K; ++s)
                if (!out.at_zero[s] && (*P.g)[s][l] != 0.0) {
                    v[s] = (*P.g)[s][l];
                    nonzero = true;
                }
            if (nonzero) cols.push_back(std::move(v));
        }
        double gscale = 0.0;
        for (const auto& v : cols) gscale = std::max(gscale, norm(v));
        const auto V = orthonormalize(cols, 1e-11 * std::max(gscale, 1.0));
        const std::size_t r = V.size();

        bool hit_zero_wall = false;
        for (int it = 0; it < 60 && r > 0; ++it, ++out.iterations) {
            const auto gr = P.grad(D);
            std::vector<double> gV(r);
            for (std::size_t i = 0; i < r; ++i) gV[i] = dot(gr, V[i]);
            if (inf_norm(gV) <= tol) break;
            const auto H = P.hess(D);
            std::vector<double> HV(r * r, 0.0);
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < r; ++j) {
                    double s = 0.0;
                    for (std::size_t a = 0; a < K; ++a)
                        for (std::size_t b = 0; b < K; ++b)
                            s += V[i][a] * H[a * K + b] * V[j][b];
                    HV[i * r + j] = -s;
                }
            std::vector<double> delta;
            try {
                delta = solve_dense(std::move(HV), gV);
            } catch (const std::runtime_error&) {
                break;
            }
            std::vector<double> dir(K, 0.0);
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t a = 0; a < K; ++a) dir[a] += delta[i] * V[i][a];
            double t = std::min(1.0, P.max_step(D, dir, 0.0));
            if (t <= 1e-16) break;
            const double f0 = P.beta(D);
            std::vector<double> trial(K);
            bool ok = false;
            for (int ls = 0; ls < 60; ++ls) {
                for (std::size_t s = 0; s < K; ++s) trial[s] = D[s] + t * dir[s];
                if (P.min_slack(trial) >= -1e-15 && P.beta(trial) >= f0 - 1e-15) {
                    ok = true;
                    break;
                }
                t *= 0.5;
            }
            if (!ok) break;
            D = trial;
            for (std::size_t s = 0; s < K; ++s)
                if (!out.at_zero[s] && D[s] <= 1e-12) {
                    D[s] = 0.0;
                    out.at_zero[s] = true;
                    hit_zero_wall = true;
                }
            if (hit_zero_wall) break;
            if (t * inf_norm(dir) < 1e-16) break;
        }
        if (hit_zero_wall) continue;  // active set changed: rebuild the span

        // release the most promising pinned asset, if any wants back in
        const auto gr = P.grad(D);
        int release = -1;
        double best = tol;
        for (std::size_t s = 0; s < K; ++s)
            if (out.at_zero[s] && gr[s] > best) {
                best = gr[s];
                release = static_cast<int>(s);
            }
        if (release >= 0) {
            out.at_zero[static_cast<std::size_t>(release)] = false;
            continue;
        }

        // certification: free directions balanced, pinned gradients nonpositive
        bool cert = true;
        std::vector<double> gV(r);
        for (std::size_t i = 0; i < r; ++i) gV[i] = dot(gr, V[i]);
        if (inf_norm(gV) > tol) cert = false;
        for (std::size_t s = 0; s < K; ++s)
            if (out.at_zero[s] && gr[s] > tol) cert = false;
        out.certified = cert;
        return out;
    }
    return out;
}

/// Slide D toward the minimum-norm point of {D + span(N)} within the polytope.
/// Directions always stay inside span(N) (beta is exactly constant there);
/// hitting a wall restricts the basis to span(N) intersected with the wall.
bool min_norm_slide(const MultiProblem& P, std::vector<double>& D,
                    std::vector<std::vector<double>> N) {
    const std::size_t K = P.K;
    bool moved = false;
    for (int round = 0; round < static_cast<int>(K) + 2 && !N.empty(); ++round) {
        std::vector<double> dir(K, 0.0);
        for (const auto& n : N) {
            const double c = -dot(D, n);
            for (std::size_t s = 0; s < K; ++s) dir[s] += c * n[s];
        }
        const double dn = norm(dir);
        if (dn < 1e-14) break;
        const double t = std::min(1.0, P.max_step(D, dir, 0.0));
        if (t <= 0.0) break;
        for (std::size_t s = 0; s < K; ++s) D[s] += t * dir[s];
        moved = moved || t * dn > 1e-13;
        if (t >= 1.0) break;  // reached the unconstrained projection in this span
        // a wall became active: keep only span(N) directions parallel to it
        for (const auto& con : P.cons) {
            if (con.c - dot(con.a, D) > 1e-12 || N.empty()) continue;
            const std::size_t r = N.size();
            std::vector<double> coef(r);
            double cnorm2 = 0.0;
            for (std::size_t j = 0; j < r; ++j) {
                coef[j] = dot(N[j], con.a);
                cnorm2 += coef[j] * coef[j];
            }
            if (cnorm2 <= 1e-24) continue;  // wall already parallel to the span
            std::vector<std::vector<double>> reduced;
            for (std::size_t j = 0; j < r; ++j) {
                // N_j minus its coefficient-space projection onto coef
                std::vector<double> v(K, 0.0);
                for (std::size_t i = 0; i < r; ++i) {
                    const double w = (i == j ? 1.0 : 0.0) - coef[j] * coef[i] / cnorm2;
                    for (std::size_t s = 0; s < K; ++s) v[s] += w * N[i][s];
                }
                reduced.push_back(std::move(v));
            }
            N = orthonormalize(reduced);
        }
    }
    return moved;
}

}  // namespace

MultiAssetResult optimize_multiasset(std::span<const double> p_row,
                                     std::span<const double> phi_row,
                                     const std::vector<std::vector<double>>& g, double b,
                                     double rho_eff) {
    const std::size_t K = g.size();
    const std::size_t m = p_row.size();
    if (K == 0) throw std::invalid_argument("optimize_multiasset: no assets");

    MultiProblem P;
    P.K = K;
    P.m = m;
    P.g = &g;
    P.rho_eff = rho_eff;
    P.w.resize(m);
    for (std::size_t l = 0; l < m; ++l) P.w[l] = p_row[l] * phi_row[l];

    const double headroom = 1.0 + rho_eff - b;
    if (headroom < 0.0) throw InfeasibilityError("optimize_multiasset: empty polytope (1+rho < b)");

    for (std::size_t s = 0; s < K; ++s) {
        LinCon c{std::vector<double>(K, 0.0), 0.0};
        c.a[s] = -1.0;
        P.cons.push_back(std::move(c));
    }
    P.cons.push_back({std::vector<double>(K, 1.0), 1.0 - kEpsOpen});
    for (std::size_t l = 0; l < m; ++l) {
        LinCon c{std::vector<double>(K, 0.0), headroom};
        for (std::size_t s = 0; s < K; ++s) c.a[s] = -g[s][l];
        P.cons.push_back(std::move(c));
    }

    MultiAssetResult res;
    res.fractions.assign(K, 0.0);
    res.balance_residuals = P.grad(res.fractions);
    res.grad_norm = inf_norm(res.balance_residuals);
    res.beta_value = P.beta(res.fractions);

    if (headroom <= 1e-15) return res;  // zero is the only feasible point

    // strictly feasible start along the all-ones direction
    std::vector<double> ones(K, 1.0), D(K, 0.0);
    const double t0 = P.max_step(D, ones, 0.0);
    const double start = 0.5 * std::min(t0, 0.5);
    for (std::size_t s = 0; s < K; ++s) D[s] = start;
    if (!(start > 0.0)) return res;

    int iterations = 0;
    for (double mu = 1e-1; mu >= 1e-13; mu *= 0.1) {
        barrier_stage(P, D, mu, 80);
        ++iterations;
    }

    const double grad0_scale = std::max(1.0, inf_norm(P.grad(std::vector<double>(K, 0.0))));
    const double tol = 1e-10 * grad0_scale;

    auto polish = active_set_polish(P, D, tol);
    res.iterations = iterations + polish.iterations;
    if (!polish.certified) {
        // the polytope maximum is pinned by a no-ruin or simplex wall, where
        // the balance condition fails; only zero-growth points remain
        res.no_feasible_balance = true;
        return res;
    }

    const auto grad_at = P.grad(D);

    // exact flat directions: null space of the weighted outcome returns,
    // restricted away from pinned assets that genuinely want to leave
    std::vector<std::vector<double>> cols;
    for (std::size_t l = 0; l < m; ++l) {
        if (P.w[l] == 0.0) continue;
        std::vector<double> v(K);
        for (std::size_t s = 0; s < K; ++s) v[s] = g[s][l];
        cols.push_back(std::move(v));
    }
    double gscale = 0.0;
    for (const auto& v : cols) gscale = std::max(gscale, norm(v));
    const auto V = orthonormalize(cols, 1e-11 * std::max(gscale, 1.0));
    std::vector<std::vector<double>> candidates;
    for (std::size_t s = 0; s < K; ++s) {
        std::vector<double> e(K, 0.0);
        e[s] = 1.0;
        for (const auto& v : V) {
            const double c = dot(e, v);
            for (std::size_t i = 0; i < K; ++i) e[i] -= c * v[i];
        }
        candidates.push_back(std::move(e));
    }
    auto N = orthonormalize(candidates);
    for (std::size_t s = 0; s < K; ++s) {
        if (!polish.at_zero[s] || grad_at[s] >= -tol) continue;
        std::vector<double> wall(K, 0.0);
        wall[s] = 1.0;
        N = restrict_basis(N, wall);  // sliding must not re-enter this asset
    }
    bool moved = false;
    if (!N.empty()) moved = min_norm_slide(P, D, N);

    for (std::size_t s = 0; s < K; ++s)
        if (std::abs(D[s]) < 1e-13) D[s] = 0.0;

    bool degenerate = moved;
    for (const auto& n : N) {
        std::vector<double> neg(K);
        for (std::size_t s = 0; s < K; ++s) neg[s] = -n[s];
        if (P.max_step(D, n, 0.0) >= 1e-6 || P.max_step(D, neg, 0.0) >= 1e-6) degenerate = true;
    }

    res.fractions = D;
    res.balance_residuals = P.grad(D);
    res.grad_norm = inf_norm(res.balance_residuals);
    res.beta_value = P.beta(D);
    res.degenerate = degenerate;
    if (inf_norm(D) <= 1e-12) {
        res.branch = Branch::zero;
        std::fill(res.fractions.begin(), res.fractions.end(), 0.0);
    } else if (res.grad_norm <= tol) {
        res.branch = Branch::interior_root;
    } else {
        res.branch = Branch::boundary;  // invested assets balanced, others pinned
    }
    double simplex_slack = 1.0 - kEpsOpen;
    for (double d : D) simplex_slack -= d;
    res.near_open_bound = simplex_slack <= kEpsOpen;
    return res;
}

GrowthResult expected_growth(const PolicyFractions& policy, const MarketModel& model,
                             const AssetSet& assets, const WeightFunction& weights,
                             std::span<const double> start_dist, int n) {
    const std::size_t m = model.num_states();
    const std::size_t K = assets.num_assets();
    const double rho_eff = policy.mode == PolicyMode::scheme2 ? assets.rho_eff() : 0.0;
    if (policy.num_states() != m) throw std::invalid_argument("expected_growth: policy size");

    GrowthResult out;
    out.beta.assign(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        double bi = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
            const double w = weights.weights(i, k) * model.transition(i, k);
            double u = 0.0;
            for (std::size_t s = 0; s < K; ++s)
                u += policy.fractions[i][s] * assets.effective_return(s, i, k);
            const double growth = 1.0 + rho_eff + u;
            if (w == 0.0) continue;
            if (!(growth > 0.0))
                throw std::invalid_argument("expected_growth: infeasible policy (gross return <= 0)");
            bi += w * std::log(growth);
        }
        out.beta[i] = bi;
    }

    std::vector<double> dist(start_dist.begin(), start_dist.end());
    std::vector<double> next(m);
    double en = 0.0;
    for (int j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < m; ++i) en += dist[i] * out.beta[i];
        std::fill(next.begin(), next.end(), 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            if (dist[i] == 0.0) continue;
            for (std::size_t k = 0; k < m; ++k) next[k] += dist[i] * model.transition(i, k);
        }
        dist.swap(next);
    }
    out.e_n = en;
    return out;
}

OptimizationReport solve_model(const MarketModel& model, const AssetSet& assets,
                               const WeightFunction& weights, const RuinThreshold& b) {
    const std::size_t m = model.num_states();
    const std::size_t K = assets.num_assets();
    const PolicyMode mode = assets.riskless_rate ? PolicyMode::scheme2 : PolicyMode::scheme1;
    const double rho_eff = assets.riskless_rate.value_or(0.0);

    OptimizationReport rep;
    rep.fractions.mode = mode;
    rep.fractions.fractions.assign(m, std::vector<double>(K, 0.0));
    rep.per_state_branch.resize(m);
    rep.balance_residual.resize(m);
    rep.degenerate.assign(m, false);
    rep.near_open_bound.assign(m, false);
    rep.no_feasible_balance.assign(m, false);

    for (std::size_t i = 0; i < m; ++i) {
        std::vector<std::vector<double>> g_eff(K, std::vector<double>(m));
        for (std::size_t s = 0; s < K; ++s)
            for (std::size_t k = 0; k < m; ++k) g_eff[s][k] = assets.effective_return(s, i, k);
        if (K == 1) {
            const auto r = solve_balance_scalar(model.transition.row(i), weights.weights.row(i),
                                                g_eff[0], b.b, rho_eff);
            rep.fractions.fractions[i][0] = r.fraction;
            rep.per_state_branch[i] = r.branch;
            rep.balance_residual[i] = r.residual;
            rep.near_open_bound[i] = r.near_open_bound;
            rep.iterations += r.iterations;
        } else {
            const auto r = optimize_multiasset(model.transition.row(i), weights.weights.row(i),
                                               g_eff, b.b, rho_eff);
            rep.fractions.fractions[i] = r.fractions;
            rep.per_state_branch[i] = r.branch;
            rep.balance_residual[i] = inf_norm(r.balance_residuals);
            rep.degenerate[i] = r.degenerate;
            rep.near_open_bound[i] = r.near_open_bound;
            rep.no_feasible_balance[i] = r.no_feasible_balance;
            rep.iterations += r.iterations;
        }
    }

    const auto growth = expected_growth(rep.fractions, model, assets, weights, model.initial, 1);
    rep.beta = growth.beta;
    rep.initial_growth = growth.e_n;
    const auto pi = stationary_distribution(model);
    rep.stationary_growth = 0.0;
    for (std::size_t i = 0; i < m; ++i) rep.stationary_growth += pi[i] * rep.beta[i];
    return rep;
}

}  // namespace kelly
