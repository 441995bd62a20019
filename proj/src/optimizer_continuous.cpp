#include "kelly/optimizer_continuous.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "kelly/quadrature.hpp"
#include "kelly/rootfind.hpp"

namespace kelly {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

// ---------------------------------------------------------------------------
// DensityModel
// ---------------------------------------------------------------------------

DensityModel DensityModel::uniform(double a1, double a2) {
    if (!(a1 < a2)) throw std::invalid_argument("uniform density: a1 < a2 required");
    DensityModel m;
    m.kind = DensityKind::uniform;
    m.a1 = a1;
    m.a2 = a2;
    return m;
}

DensityModel DensityModel::gaussian(double sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("gaussian density: sigma > 0 required");
    DensityModel m;
    m.kind = DensityKind::gaussian;
    m.sigma = sigma;
    m.a1 = -kInf;
    m.a2 = kInf;
    return m;
}

DensityModel DensityModel::tabulated(std::vector<double> xs, std::vector<double> fs) {
    if (xs.size() != fs.size() || xs.size() < 2)
        throw std::invalid_argument("tabulated density: need matching xs/fs, size >= 2");
    for (std::size_t i = 1; i < xs.size(); ++i)
        if (!(xs[i] > xs[i - 1])) throw std::invalid_argument("tabulated density: xs not increasing");
    for (double f : fs)
        if (!(f >= 0.0)) throw std::invalid_argument("tabulated density: negative value");
    double mass = 0.0;
    for (std::size_t i = 1; i < xs.size(); ++i)
        mass += 0.5 * (fs[i] + fs[i - 1]) * (xs[i] - xs[i - 1]);
    if (!(mass > 0.0)) throw std::invalid_argument("tabulated density: zero mass");
    for (double& f : fs) f /= mass;
    DensityModel m;
    m.kind = DensityKind::custom;
    m.a1 = xs.front();
    m.a2 = xs.back();
    m.xs = std::move(xs);
    m.fs = std::move(fs);
    return m;
}

double DensityModel::pdf(double x) const {
    switch (kind) {
        case DensityKind::uniform:
            return (x >= a1 && x <= a2) ? 1.0 / (a2 - a1) : 0.0;
        case DensityKind::gaussian:
            return std::exp(-x * x / (2.0 * sigma * sigma)) /
                   (sigma * std::sqrt(2.0 * std::numbers::pi));
        case DensityKind::custom: {
            if (x < a1 || x > a2) return 0.0;
            const auto it = std::upper_bound(xs.begin(), xs.end(), x);
            if (it == xs.begin()) return fs.front();
            if (it == xs.end()) return fs.back();
            const std::size_t hi = static_cast<std::size_t>(it - xs.begin());
            const double t = (x - xs[hi - 1]) / (xs[hi] - xs[hi - 1]);
            return fs[hi - 1] + t * (fs[hi] - fs[hi - 1]);
        }
    }
    return 0.0;
}

double DensityModel::quadrature_mass(double abs_tol) const {
    if (kind == DensityKind::gaussian) {
        auto f = [this](double x) { return pdf(x); };
        return integrate_right_tail(f, 0.0, sigma, abs_tol / 2) +
               integrate_left_tail(f, 0.0, sigma, abs_tol / 2);
    }
    std::vector<double> bps;
    if (kind == DensityKind::custom) bps = xs;
    return integrate_with_breakpoints([this](double x) { return pdf(x); }, a1, a2, bps, abs_tol);
}

// ---------------------------------------------------------------------------
// return / weight forms
// ---------------------------------------------------------------------------

double ContinuousReturn::operator()(double x) const {
    switch (form) {
        case ReturnForm::piecewise_linear:
            return x >= 0.0 ? delta_plus * x + gamma_plus : delta_minus * x + gamma_minus;
        case ReturnForm::positive_part_linear:
            return x >= 0.0 ? a1 * x + a2 : -a3;
        case ReturnForm::linear:
            return -gamma * x;
        case ReturnForm::logarithmic:
            return -theta * std::log(1.0 - x);
    }
    return 0.0;
}

double ContinuousWeight::operator()(double x) const {
    switch (form) {
        case WeightForm::constant_one:
            return 1.0;
        case WeightForm::piecewise_quadratic:
            return x >= 0.0 ? theta_plus * x * x + gamma_plus * x + delta_plus
                            : theta_minus * x * x + gamma_minus * x + delta_minus;
        case WeightForm::custom:
            return fn(x);
    }
    return 0.0;
}

// ---------------------------------------------------------------------------
// solve_balance_continuous
// ---------------------------------------------------------------------------

namespace {

/// Infimum of the effective return over the support.
double infimum_effective_return(const DensityModel& model, const ContinuousReturn& g,
                                double shift) {
    auto eff = [&](double x) { return g(x) - shift; };
    switch (g.form) {
        case ReturnForm::piecewise_linear: {
            const double lo = std::min({g.gamma_minus, g.gamma_minus + g.delta_minus * model.a1,
                                        g.gamma_plus, g.gamma_plus + g.delta_plus * model.a2});
            return lo - shift;
        }
        case ReturnForm::positive_part_linear:
            // a1,a2 >= 0 so the positive side is bounded below by a2
            return std::min(-g.a3, g.a2) - shift;
        case ReturnForm::linear:
            if (model.unbounded()) return -kInf;
            return std::min(-g.gamma * model.a1, -g.gamma * model.a2) - shift;
        case ReturnForm::logarithmic:
            // -theta ln(1-x) is increasing; -inf guard when the support reaches 1
            if (model.unbounded() || model.a2 >= 1.0) return -kInf;
            return eff(model.a1);
    }
    return -kInf;
}

}  // namespace

ContinuousSolveResult solve_balance_continuous(const DensityModel& model,
                                               const ContinuousAsset& asset, double b,
                                               double rho_eff, int split_scale) {
    const double shift = rho_eff > 0.0 ? 1.0 + rho_eff : 0.0;
    auto g_eff = [&](double x) { return asset.g(x) - shift; };

    const double headroom = 1.0 + rho_eff - b;
    if (headroom < 0.0)
        throw InfeasibilityError("solve_balance_continuous: empty feasibility (1+rho < b)");

    const double inf_g = infimum_effective_return(model, asset.g, shift);
    double d_plus = 1.0 - kEpsOpen;
    if (inf_g < 0.0) d_plus = std::min(d_plus, inf_g == -kInf ? 0.0 : headroom / -inf_g);
    d_plus = std::max(d_plus, 0.0);

    const double tol = 1e-12;
    auto beta_prime = [&](double d) {
        auto integrand = [&](double x) {
            const double f = model.pdf(x);
            if (f == 0.0) return 0.0;
            const double ge = g_eff(x);
            return asset.phi(x) * f * ge / (1.0 + rho_eff + d * ge);
        };
        if (model.unbounded()) {
            return integrate_right_tail(integrand, 0.0, model.sigma, tol / 2, split_scale) +
                   integrate_left_tail(integrand, 0.0, model.sigma, tol / 2, split_scale);
        }
        std::vector<double> bps{0.0};
        if (model.kind == DensityKind::custom) bps.insert(bps.end(), model.xs.begin(), model.xs.end());
        return integrate_with_breakpoints(integrand, model.a1, model.a2, bps, tol, split_scale);
    };

    ContinuousSolveResult res;
    res.d_plus = d_plus;
    const double grad0 = beta_prime(0.0);
    if (grad0 <= 0.0) {
        res.residual = grad0;
        return res;
    }
    if (d_plus <= 0.0) {
        res.branch = Branch::boundary;
        res.residual = grad0;
        return res;
    }
    const double at_upper = beta_prime(d_plus);
    if (at_upper > 0.0) {
        res.fraction = d_plus;
        res.branch = Branch::boundary;
        res.residual = at_upper;
        return res;
    }
    const auto root = bisect_decreasing(beta_prime, 0.0, d_plus, 5e-12, 1e-14);
    res.fraction = root.x;
    res.branch = Branch::interior_root;
    res.residual = root.residual;
    return res;
}

// ---------------------------------------------------------------------------
// Example 4.1: uniform + piecewise-linear return
// ---------------------------------------------------------------------------

namespace {

/// L(D; g, d, e) = ln[(1+Dg)/(1+Dg+D e d)]/(D d), limit -e/(1+Dg) as d -> 0.
double log_term(double D, double gamma, double delta, double edge) {
    if (std::abs(delta) < 1e-12) return -edge / (1.0 + D * gamma);
    const double num = 1.0 + D * gamma;
    const double den = num + D * edge * delta;
    return std::log(num / den) / (D * delta);
}

}  // namespace

TranscendentalResult uniform_piecewise_linear_root(double a1, double a2, double delta_plus,
                                                   double delta_minus, double gamma_plus,
                                                   double gamma_minus, double b) {
    if (!(a1 < 0.0 && 0.0 < a2))
        throw std::invalid_argument("uniform_piecewise_linear_root: need a1 < 0 < a2");
    if (gamma_plus < 0.0 || gamma_plus + a2 * delta_plus < 0.0)
        throw std::invalid_argument("uniform_piecewise_linear_root: g must be >= 0 on [0,a2]");
    if (gamma_minus > 0.0 || gamma_minus + a1 * delta_minus > 0.0)
        throw std::invalid_argument("uniform_piecewise_linear_root: g must be <= 0 on [a1,0]");
    if (!(b > 0.0 && b < 1.0))
        throw std::invalid_argument("uniform_piecewise_linear_root: b must lie in (0,1)");

    const double a = a2 - a1;
    TranscendentalResult res;
    // int_{a1}^0 (d-.x+g-) dx + int_0^{a2} (d+.x+g+) dx, averaged over [a1,a2]
    res.expected_return =
        (a2 * gamma_plus - a1 * gamma_minus + a2 * a2 * delta_plus / 2.0 -
         a1 * a1 * delta_minus / 2.0) / a;

    const double min_g = std::min(gamma_minus, gamma_minus + a1 * delta_minus);
    double d_plus = 1.0 - kEpsOpen;
    if (min_g < 0.0) d_plus = std::min(d_plus, (1.0 - b) / -min_g);
    res.d_plus = d_plus;

    if (res.expected_return <= 0.0) return res;  // no investment

    auto residual = [&](double D) {
        return a + log_term(D, gamma_plus, delta_plus, a2) -
               log_term(D, gamma_minus, delta_minus, a1);
    };
    // same roots as the residual but nonvanishing at 0 (equals a*beta'(D))
    auto scaled = [&](double D) {
        return D > 0.0 ? residual(D) / D : a * res.expected_return;
    };
    if (scaled(d_plus) > 0.0) {
        res.fraction = d_plus;
        res.branch = Branch::boundary;
        res.residual = residual(d_plus);
        return res;
    }
    const auto root = bisect_decreasing(scaled, 0.0, d_plus, 1e-14, 1e-15);
    res.fraction = root.x;
    res.branch = Branch::interior_root;
    res.residual = residual(root.x);
    return res;
}

// ---------------------------------------------------------------------------
// Example 4.2: Gaussian trials
// ---------------------------------------------------------------------------

namespace {

void require_nonnegative_half(double theta, double gamma, double delta, const char* side) {
    const double tol = 1e-12;
    // quadratic theta t^2 + gamma t + delta on t >= 0 (the negative side is
    // mapped through t = -x, flipping gamma's sign at the call site)
    if (theta < -tol || delta < -tol)
        throw std::invalid_argument(std::string("gaussian_example_solver: phi negative on ") + side);
    if (theta <= tol && gamma < -tol)
        throw std::invalid_argument(std::string("gaussian_example_solver: phi negative on ") + side);
    if (theta > tol && gamma < 0.0) {
        const double minimum = delta - gamma * gamma / (4.0 * theta);
        if (minimum < -tol)
            throw std::invalid_argument(std::string("gaussian_example_solver: phi negative on ") +
                                        side);
    }
}

}  // namespace

TranscendentalResult gaussian_example_solver(double sigma, double a1, double a2, double a3,
                                             const GaussianWeight& phi, double b) {
    if (!(sigma > 0.0) || a1 < 0.0 || a2 < 0.0 || !(a3 > 0.0))
        throw std::invalid_argument("gaussian_example_solver: need sigma>0, a1,a2>=0, a3>0");
    if (!(b > 0.0 && b < 1.0))
        throw std::invalid_argument("gaussian_example_solver: b must lie in (0,1)");
    require_nonnegative_half(phi.theta_plus, phi.gamma_plus, phi.delta_plus, "x>0");
    require_nonnegative_half(phi.theta_minus, -phi.gamma_minus, phi.delta_minus, "x<0");

    // half-moments of N(0,sigma^2): E[X^k 1(X>0)]
    const double m1 = sigma / std::sqrt(2.0 * std::numbers::pi);
    const double M[4] = {0.5, m1, 0.5 * sigma * sigma, 2.0 * sigma * sigma * m1};

    const double pos = phi.theta_plus * a1 * M[3] + (phi.theta_plus * a2 + phi.gamma_plus * a1) * M[2] +
                       (phi.gamma_plus * a2 + phi.delta_plus * a1) * M[1] + phi.delta_plus * a2 * M[0];
    const double phi_mass_neg = phi.theta_minus * M[2] - phi.gamma_minus * M[1] + phi.delta_minus * M[0];
    const double mean_phi_g = pos - a3 * phi_mass_neg;

    TranscendentalResult res;
    res.expected_return = mean_phi_g;
    res.d_plus = std::min(1.0 - kEpsOpen, (1.0 - b) / a3);
    if (mean_phi_g <= 0.0) {
        res.residual = mean_phi_g;
        return res;
    }

    const double tol = 1e-10;
    auto fpdf = [&](double x) {
        return std::exp(-x * x / (2.0 * sigma * sigma)) / (sigma * std::sqrt(2.0 * std::numbers::pi));
    };
    auto dbeta = [&](double D) {
        auto integrand = [&](double x) {
            const double w = phi.theta_plus * x * x + phi.gamma_plus * x + phi.delta_plus;
            const double g = a1 * x + a2;
            return fpdf(x) * w * g / (1.0 + D * g);
        };
        const double ipos = integrate_right_tail(integrand, 0.0, sigma, tol / 2);
        return -a3 / (1.0 - D * a3) * phi_mass_neg + ipos;
    };

    if (dbeta(res.d_plus) > 0.0) {
        res.fraction = res.d_plus;
        res.branch = Branch::boundary;
        res.residual = dbeta(res.d_plus);
        return res;
    }
    const auto root = bisect_decreasing(dbeta, 0.0, res.d_plus, 1e-11, 1e-14);
    res.fraction = root.x;
    res.branch = Branch::interior_root;
    res.residual = root.residual;
    return res;
}

// ---------------------------------------------------------------------------
// Example 4.3: riskless + two risky assets (linear / logarithmic)
// ---------------------------------------------------------------------------

namespace {

struct TwoAssetProblem {
    double gamma, theta, rho, b;
    const std::function<double(double)>* phi;
    std::vector<double> t_breaks;  // mapped u-substitution breakpoints of phi

    double gs1(double x) const { return -gamma * x - (1.0 + rho); }
    // in terms of u = -ln(1-x): gs2 = theta*u - (1+rho)
    double gs2_u(double u) const { return theta * u - (1.0 + rho); }

    double denom(const std::array<double, 2>& D, double x, double u) const {
        return 1.0 + rho + D[0] * gs1(x) + D[1] * gs2_u(u);
    }

    /// \int_{-1}^{1} (1/2) F(x, u=-ln(1-x)) dx via the u-substitution
    /// x = 1-exp(-u), dx = exp(-u) du, u in [-ln 2, inf). Known non-smooth
    /// points of phi become panel boundaries in the mapped variable.
    double integrate_u(const std::function<double(double, double)>& F, double tol) const {
        const double a = -std::numbers::ln2;
        auto mapped = [&](double t) {
            const double one_mt = 1.0 - t;
            const double u = a + t / one_mt;
            if (!std::isfinite(u)) return 0.0;
            const double emu = std::exp(-u);
            const double x = 1.0 - emu;
            const double val = 0.5 * F(x, u) * emu;
            if (val == 0.0) return 0.0;
            return val / (one_mt * one_mt);
        };
        if (t_breaks.empty()) return integrate(mapped, 0.0, 1.0, tol);
        return integrate_with_breakpoints(mapped, 0.0, 1.0, t_breaks, tol);
    }

    double beta(const std::array<double, 2>& D) const {
        return integrate_u(
            [&](double x, double u) { return (*phi)(x) * std::log(denom(D, x, u)); }, 1e-12);
    }
    std::array<double, 2> grad(const std::array<double, 2>& D) const {
        const double r1 = integrate_u(
            [&](double x, double u) { return (*phi)(x)*gs1(x) / denom(D, x, u); }, 1e-12);
        const double r2 = integrate_u(
            [&](double x, double u) { return (*phi)(x)*gs2_u(u) / denom(D, x, u); }, 1e-12);
        return {r1, r2};
    }
    std::array<double, 4> hess(const std::array<double, 2>& D) const {  // row-major 2x2
        auto entry = [&](int s, int t) {
            return -integrate_u(
                [&](double x, double u) {
                    const double d = denom(D, x, u);
                    const double gs = s == 0 ? gs1(x) : gs2_u(u);
                    const double gt = t == 0 ? gs1(x) : gs2_u(u);
                    return (*phi)(x)*gs * gt / (d * d);
                },
                1e-12);
        };
        const double h00 = entry(0, 0), h01 = entry(0, 1), h11 = entry(1, 1);
        return {h00, h01, h01, h11};
    }
};

struct Halfplane {
    double a1, a2, c;  // a1 D1 + a2 D2 <= c
    double slack(const std::array<double, 2>& D) const { return c - a1 * D[0] - a2 * D[1]; }
};

std::vector<std::array<double, 2>> polygon_vertices(const std::vector<Halfplane>& cons) {
    std::vector<std::array<double, 2>> verts;
    const double tol = 1e-9;
    for (std::size_t i = 0; i < cons.size(); ++i)
        for (std::size_t j = i + 1; j < cons.size(); ++j) {
            const double det = cons[i].a1 * cons[j].a2 - cons[j].a1 * cons[i].a2;
            if (std::abs(det) < 1e-14) continue;
            const double x = (cons[i].c * cons[j].a2 - cons[j].c * cons[i].a2) / det;
            const double y = (cons[i].a1 * cons[j].c - cons[j].a1 * cons[i].c) / det;
            bool feasible = true;
            for (const auto& con : cons)
                if (con.slack({x, y}) < -tol) feasible = false;
            if (!feasible) continue;
            bool dup = false;
            for (const auto& v : verts)
                if (std::abs(v[0] - x) < 1e-10 && std::abs(v[1] - y) < 1e-10) dup = true;
            if (!dup) verts.push_back({x, y});
        }
    if (verts.size() > 2) {
        double cx = 0.0, cy = 0.0;
        for (const auto& v : verts) {
            cx += v[0];
            cy += v[1];
        }
        cx /= static_cast<double>(verts.size());
        cy /= static_cast<double>(verts.size());
        std::sort(verts.begin(), verts.end(), [&](const auto& p, const auto& q) {
            return std::atan2(p[1] - cy, p[0] - cx) < std::atan2(q[1] - cy, q[0] - cx);
        });
    }
    return verts;
}

}  // namespace

TwoAssetResult two_asset_riskless_solver(double gamma, double theta, double rho, double b,
                                         const std::function<double(double)>& phi,
                                         const std::vector<double>& phi_breakpoints) {
    if (!(gamma > 0.0) || !(theta > 0.0) || rho < 0.0)
        throw std::invalid_argument("two_asset_riskless_solver: need gamma,theta>0 and rho>=0");
    const double r = 1.0 + rho;
    const double lower = std::max(0.0, r - std::numbers::ln2 - r / theta);
    if (!(b > lower && b < r))
        throw InfeasibilityError(
            "two_asset_riskless_solver: region empty unless 0 v [1+rho-ln2-(1+rho)/theta] < b < "
            "1+rho");

    TwoAssetProblem P{gamma, theta, rho, b, &phi, {}};
    for (double x : phi_breakpoints) {
        if (!(x > -1.0 && x < 1.0)) continue;
        const double u = -std::log(1.0 - x);
        const double shifted = u + std::numbers::ln2;
        P.t_breaks.push_back(shifted / (1.0 + shifted));
    }

    // bottom case of the no-ruin split: D2 theta >= 2 D1 gamma, where the
    // worst outcome is x = -1 and the no-ruin bound becomes the linear b-line
    std::vector<Halfplane> lines{
        {-1.0, 0.0, 0.0},                                  // D1 >= 0
        {2.0 * gamma, -theta, 0.0},                        // 2 gamma D1 <= theta D2
        {r - gamma, r + theta * std::numbers::ln2, r - b},  // b-line
        {1.0, 1.0, 1.0},                                    // simplex
    };
    TwoAssetResult res;
    res.region.vertices = polygon_vertices(lines);

    // optimization constraints use the open-bound guard on the simplex
    std::vector<Halfplane> cons = lines;
    cons[3].c = 1.0 - kEpsOpen;

    auto min_slack = [&](const std::array<double, 2>& D) {
        double ms = kInf;
        for (const auto& con : cons) ms = std::min(ms, con.slack(D));
        return ms;
    };
    auto max_step = [&](const std::array<double, 2>& D, const std::array<double, 2>& dir) {
        double t = kInf;
        for (const auto& con : cons) {
            const double adir = con.a1 * dir[0] + con.a2 * dir[1];
            if (adir <= 0.0) continue;
            t = std::min(t, con.slack(D) / adir);
        }
        return std::max(t, 0.0);
    };

    const auto grad0 = P.grad({0.0, 0.0});
    res.residuals = grad0;
    res.beta_value = P.beta({0.0, 0.0});

    // strictly inside the wedge 2*gamma*D1 < theta*D2 from the origin
    const std::array<double, 2> inward{theta, 2.0 * gamma + 1.0};

    // damped Newton on the strong balance system from an interior point
    std::array<double, 2> D{0.0, 0.0};
    {
        const double t = 0.4 * max_step({0.0, 0.0}, inward);
        D = {t * inward[0], t * inward[1]};
    }
    bool newton_ok = false;
    int iters = 0;
    if (min_slack(D) > 0.0) {
        for (; iters < 60; ++iters) {
            const auto R = P.grad(D);
            if (std::max(std::abs(R[0]), std::abs(R[1])) <= 1e-10) {
                newton_ok = true;
                break;
            }
            const auto H = P.hess(D);
            const double det = H[0] * H[3] - H[1] * H[2];
            if (std::abs(det) < 1e-300) break;
            // solve H step = -R
            std::array<double, 2> step{(-R[0] * H[3] + R[1] * H[1]) / det,
                                       (-H[0] * R[1] + H[2] * R[0]) / det};
            double t = std::min(1.0, 0.9 * max_step(D, step));
            if (t <= 0.0) break;
            const double n0 = std::hypot(R[0], R[1]);
            std::array<double, 2> trial;
            bool improved = false;
            for (int ls = 0; ls < 50; ++ls) {
                trial = {D[0] + t * step[0], D[1] + t * step[1]};
                if (min_slack(trial) > 0.0) {
                    const auto Rt = P.grad(trial);
                    if (std::hypot(Rt[0], Rt[1]) < n0 * (1.0 - 0.25 * t)) {
                        improved = true;
                        break;
                    }
                }
                t *= 0.5;
            }
            if (!improved) break;
            D = trial;
        }
    }

    if (!newton_ok) {
        // concave-maximization fallback: log-barrier Newton on beta over the polygon
        std::array<double, 2> X{0.0, 0.0};
        {
            const double t = 0.4 * max_step(X, inward);
            X = {t * inward[0], t * inward[1]};
        }
        if (min_slack(X) > 0.0) {
            for (double mu = 1e-1; mu >= 1e-12; mu *= 0.1) {
                for (int it = 0; it < 50; ++it) {
                    auto gr = P.grad(X);
                    auto H = P.hess(X);
                    for (const auto& con : cons) {
                        const double s = con.slack(X);
                        gr[0] -= mu * con.a1 / s;
                        gr[1] -= mu * con.a2 / s;
                        H[0] -= mu * con.a1 * con.a1 / (s * s);
                        H[1] -= mu * con.a1 * con.a2 / (s * s);
                        H[2] -= mu * con.a2 * con.a1 / (s * s);
                        H[3] -= mu * con.a2 * con.a2 / (s * s);
                    }
                    if (std::max(std::abs(gr[0]), std::abs(gr[1])) <= std::max(1e-12, mu * 1e-3))
                        break;
                    const double det = H[0] * H[3] - H[1] * H[2];
                    if (std::abs(det) < 1e-300) break;
                    std::array<double, 2> step{(-gr[0] * H[3] + gr[1] * H[1]) / det,
                                               (-H[0] * gr[1] + H[2] * gr[0]) / det};
                    double t = std::min(1.0, 0.9 * max_step(X, step));
                    if (t <= 0.0) break;
                    std::array<double, 2> trial{X[0] + t * step[0], X[1] + t * step[1]};
                    for (int ls = 0; ls < 50 && min_slack(trial) <= 0.0; ++ls) {
                        t *= 0.5;
                        trial = {X[0] + t * step[0], X[1] + t * step[1]};
                    }
                    if (min_slack(trial) <= 0.0) break;
                    X = trial;
                    ++iters;
                }
            }
            const auto gX = P.grad(X);
            const double scale = std::max(1.0, std::max(std::abs(grad0[0]), std::abs(grad0[1])));
            if (std::max(std::abs(gX[0]), std::abs(gX[1])) <= 1e-7 * scale) {
                D = X;
                newton_ok = true;
            }
        }
    }

    res.iterations = iters;
    if (newton_ok) {
        if (std::max(std::abs(D[0]), std::abs(D[1])) <= 1e-8) D = {0.0, 0.0};
        res.solution = D;
        res.residuals = P.grad(D);
        res.beta_value = P.beta(D);
        res.branch =
            std::max(std::abs(D[0]), std::abs(D[1])) == 0.0 ? Branch::zero : Branch::interior_root;
        return res;
    }
    // no feasible stationary point: balance admits only the zero portfolio
    res.solution = {0.0, 0.0};
    res.branch = Branch::zero;
    return res;
}

}  // namespace kelly
