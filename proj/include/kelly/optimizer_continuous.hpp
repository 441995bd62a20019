#pragma once

#include <array>
#include <functional>
#include <vector>

#include "kelly/optimizer_discrete.hpp"

namespace kelly {

enum class DensityKind { uniform, gaussian, custom };

/// IID trial law with a one-dimensional density.
struct DensityModel {
    DensityKind kind = DensityKind::uniform;
    double a1 = -1.0, a2 = 1.0;  // support (finite kinds)
    double sigma = 1.0;          // gaussian
    std::vector<double> xs, fs;  // custom tabulated, linearly interpolated

    static DensityModel uniform(double a1, double a2);
    static DensityModel gaussian(double sigma);
    /// Tabulated density; renormalized so the trapezoid mass is exactly 1.
    static DensityModel tabulated(std::vector<double> xs, std::vector<double> fs);

    double pdf(double x) const;
    bool unbounded() const { return kind == DensityKind::gaussian; }
    /// Mass under the module's own quadrature (invariant check).
    double quadrature_mass(double abs_tol = 1e-10) const;
};

enum class ReturnForm { piecewise_linear, positive_part_linear, linear, logarithmic };

/// Tagged return function forms used by the continuous solvers.
struct ContinuousReturn {
    ReturnForm form = ReturnForm::piecewise_linear;
    // piecewise_linear: delta_plus*x+gamma_plus (x>0), delta_minus*x+gamma_minus (x<0)
    double delta_plus = 0.0, delta_minus = 0.0, gamma_plus = 0.0, gamma_minus = 0.0;
    // positive_part_linear: a1*x+a2 (x>0), -a3 (x<0)
    double a1 = 0.0, a2 = 0.0, a3 = 0.0;
    // linear: -gamma*x ; logarithmic: -theta*ln(1-x)
    double gamma = 0.0, theta = 0.0;

    double operator()(double x) const;
};

enum class WeightForm { constant_one, piecewise_quadratic, custom };

struct ContinuousWeight {
    WeightForm form = WeightForm::constant_one;
    // piecewise_quadratic: theta*x^2 + gamma*x + delta per side
    double theta_plus = 0.0, gamma_plus = 0.0, delta_plus = 1.0;
    double theta_minus = 0.0, gamma_minus = 0.0, delta_minus = 1.0;
    std::function<double(double)> fn;  // custom

    double operator()(double x) const;
};

struct ContinuousAsset {
    ContinuousReturn g;
    ContinuousWeight phi;
};

struct ContinuousSolveResult {
    double fraction = 0.0;
    Branch branch = Branch::zero;
    double residual = 0.0;  // d beta / d D at the returned fraction
    double d_plus = 0.0;
};

/// Scalar balance solve under a density law. The effective return is
/// g(x) - (1+rho_eff) when rho_eff > 0 (scheme II), g(x) itself otherwise.
/// Bisects beta'(D) = int phi f g*/(1+rho_eff+D g*) dx (quadrature tol 1e-12)
/// on (0, D_+]; beta'(0) <= 0 returns 0; beta'(D_+) > 0 returns D_+ with
/// branch `boundary`. `split_scale` doubles quadrature panels (stability
/// checks). Throws QuadratureError if quadrature cannot reach tolerance.
ContinuousSolveResult solve_balance_continuous(const DensityModel& model,
                                               const ContinuousAsset& asset, double b,
                                               double rho_eff = 0.0, int split_scale = 1);

struct TranscendentalResult {
    double fraction = 0.0;
    double residual = 0.0;        // transcendental residual at the fraction
    Branch branch = Branch::zero;
    double d_plus = 0.0;
    double expected_return = 0.0;  // E g(eps) resp. E phi(eps) g(eps)
};

/// Uniform density on [a1,a2] (a1<0<a2) with a piecewise-linear return,
/// phi == 1. Solves the closed-form transcendental stationarity equation
///   (a2-a1) + L(D;gamma+,delta+,a2) - L(D;gamma-,delta-,a1) = 0,
///   L(D;g,d,e) = ln[(1+Dg)/(1+Dg+D e d)]/(D d),
/// which equals (a2-a1) D beta'(D); |delta| < 1e-12 uses the removable limit
/// -e/(1+Dg). Requires the example's sign conditions (g >= 0 on [0,a2],
/// g <= 0 on [a1,0]).
TranscendentalResult uniform_piecewise_linear_root(double a1, double a2, double delta_plus,
                                                   double delta_minus, double gamma_plus,
                                                   double gamma_minus, double b);

struct GaussianWeight {
    double theta_plus = 0.0, gamma_plus = 0.0, delta_plus = 1.0;
    double theta_minus = 0.0, gamma_minus = 0.0, delta_minus = 1.0;
};

/// N(0,sigma^2) trials, g(x) = a1 x + a2 (x>0), -a3 (x<0), piecewise-quadratic
/// weight. The derivative at zero E[phi g] is evaluated from closed-form
/// Gaussian half-moments; the balance root is bisected with substitution-
/// mapped tail quadrature (tol 1e-10) on (0, D_+], D_+ = 1 ^ (1-b)/a3.
/// Throws if phi is negative on a set of positive measure.
TranscendentalResult gaussian_example_solver(double sigma, double a1, double a2, double a3,
                                             const GaussianWeight& phi, double b);

struct FeasibleRegion2D {
    std::vector<std::array<double, 2>> vertices;  // counter-clockwise
};

struct TwoAssetResult {
    FeasibleRegion2D region;
    std::array<double, 2> solution{0.0, 0.0};
    Branch branch = Branch::zero;
    double beta_value = 0.0;
    std::array<double, 2> residuals{0.0, 0.0};
    int iterations = 0;
    // Only the bottom case of the no-ruin split (D2 theta >= 2 D1 gamma) is
    // represented; the top case is reported as unimplemented.
    bool top_case_unimplemented = true;
};

/// Uniform trials on [-1,1], riskless rate rho plus two risky assets with
/// returns -gamma x and -theta ln(1-x). Builds the bottom-case feasible
/// polygon, solves the two-equation strong balance system by damped Newton
/// (quadrature under the u = -ln(1-x) substitution), and falls back to the
/// concave maximizer when the system has no interior solution; if no feasible
/// stationary point exists the zero portfolio is returned. Throws when the
/// non-emptiness bound 0 v [1+rho-ln2-(1+rho)/theta] < b < 1+rho fails.
/// Known non-smooth points of phi can be passed as breakpoints so the
/// quadrature places panel boundaries on them.
TwoAssetResult two_asset_riskless_solver(double gamma, double theta, double rho, double b,
                                         const std::function<double(double)>& phi,
                                         const std::vector<double>& phi_breakpoints = {});

}  // namespace kelly
