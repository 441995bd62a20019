// Acceptance suite: runs every acceptance criterion at its stated tolerance
// and prints one PASS/FAIL line per criterion. Exit status is the number of
// failed criteria.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "kelly/entropy.hpp"
#include "kelly/model.hpp"
#include "kelly/optimizer_continuous.hpp"
#include "kelly/optimizer_discrete.hpp"
#include "kelly/quadrature.hpp"
#include "kelly/simulator.hpp"

using namespace kelly;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(int idx, const std::string& name, bool pass, const std::string& detail) {
    std::printf("%s  criterion %2d  %-34s %s\n", pass ? "PASS" : "FAIL", idx, name.c_str(),
                detail.c_str());
    if (!pass) ++failures;
}

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list args;
    va_start(args, f);
    std::vsnprintf(buf, sizeof(buf), f, args);
    va_end(args);
    return buf;
}

struct BinaryWorld {
    MarketModel model = MarketModel::make({"w", "l"}, {{0.6, 0.4}, {0.6, 0.4}}, {0.6, 0.4});
    AssetSet assets;
    WeightFunction phi{Matrix(2, 2, 1.0)};
    RuinThreshold b{0.5};
    BinaryWorld() {
        assets.names = {"stock"};
        assets.returns = {Matrix{{1.0, -1.0}, {1.0, -1.0}}};
    }
};

// --------------------------------------------------------------------------
// 1. binary Kelly closed form
// --------------------------------------------------------------------------
void criterion1() {
    const auto t0 = Clock::now();
    const std::vector<double> p{0.6, 0.4}, phi{1.0, 1.0}, g{1.0, -1.0};
    const auto solved = solve_balance_scalar(p, phi, g, 0.5);
    const double closed = closed_form_binary(0.6, 0.4, 1.0, 1.0, 0.5);

    double best = -1e300, best_d = 0.0;
    for (double d = 0.0; d <= 0.5 + 1e-12; d += 1e-5) {
        const double v = 0.6 * std::log(1.0 + d) + 0.4 * std::log(1.0 - d);
        if (v > best) {
            best = v;
            best_d = d;
        }
    }
    const double dt = seconds_since(t0);
    const bool pass = std::abs(solved.fraction - 0.2) <= 1e-10 &&
                      std::abs(closed - 0.2) <= 1e-10 &&
                      std::abs(solved.fraction - closed) <= 1e-10 &&
                      std::abs(solved.fraction - best_d) <= 1e-6 && dt < 1.0;
    report(1, "binary Kelly closed form", pass,
           fmt("D=%.12f closed=%.12f grid=%.6f (%.2fs)", solved.fraction, closed, best_d, dt));
}

// --------------------------------------------------------------------------
// 2. riskless binary closed form
// --------------------------------------------------------------------------
void criterion2() {
    const auto t0 = Clock::now();
    const double d0 = closed_form_binary_riskless(0.8, 0.2, 2.0, 0.0, 0.1);
    bool pass = std::abs(d0 - 1.0 / 15.0) <= 1e-10;
    // case (B): any gamma < 1+rho returns 0
    for (double gamma : {0.5, 0.8, 0.95, 0.99})
        if (closed_form_binary_riskless(0.8, 0.2, gamma, 0.0, 0.1) != 0.0) pass = false;
    for (double gamma : {0.6, 1.0, 1.04})
        if (closed_form_binary_riskless(0.9, 0.1, gamma, 0.05, 0.2) != 0.0) pass = false;
    const auto solver = solve_balance_scalar({{0.8, 0.2}}, {{1.0, 1.0}}, {{1.0, -3.0}}, 0.1, 0.0);
    pass = pass && std::abs(solver.fraction - d0) <= 1e-10;
    const double dt = seconds_since(t0);
    pass = pass && dt < 1.0;
    report(2, "riskless binary closed form", pass,
           fmt("D0=%.12f (1/15=%.12f) solver=%.12f (%.2fs)", d0, 1.0 / 15.0, solver.fraction, dt));
}

// --------------------------------------------------------------------------
// 3. martingale reproduction
// --------------------------------------------------------------------------
void criterion3() {
    const auto t0 = Clock::now();
    BinaryWorld w;
    const auto policy = PolicyFractions::scalar({0.2, 0.2});
    const auto q = calibrating_from_fractions(w.model.transition, policy, w.assets);
    SimulationConfig cfg;
    cfg.horizon = 50;
    cfg.replicates = 100000;
    cfg.seed = 42;
    cfg.policy = policy;
    const auto paths = simulate(cfg, w.model, w.assets, w.phi, q, w.b);
    const double en = 50.0 * (0.6 * std::log(1.2) + 0.4 * std::log(0.8));
    const auto res = martingale_test(paths, en, MartingaleMode::martingale);
    const double dt = seconds_since(t0);
    const bool pass = std::abs(res.mean_S - en) <= 3.0 * res.se_S &&
                      res.verdict == Verdict::consistent_martingale && dt < 30.0;
    report(3, "martingale reproduction", pass,
           fmt("mean S=%.6f E_n=%.6f |diff|=%.4f se=%.4f (%.1fs)", res.mean_S, en,
               std::abs(res.mean_S - en), res.se_S, dt));
}

// --------------------------------------------------------------------------
// 4. supermartingale for suboptimal policies
// --------------------------------------------------------------------------
struct RandomMarkov {
    MarketModel model;
    AssetSet assets;
    WeightFunction phi;
    OptimizationReport opt;
};

bool random_interior_scenario(std::mt19937_64& eng, double b, bool unit_phi, RandomMarkov& out) {
    std::uniform_real_distribution<double> up(0.1, 1.0);
    std::uniform_real_distribution<double> uphi(0.4, 1.6);
    std::uniform_real_distribution<double> ug(0.3, 1.2);
    std::uniform_int_distribution<int> um(2, 4);
    const std::size_t m = static_cast<std::size_t>(um(eng));

    Matrix P(m, m), G(m, m), W(m, m, 1.0);
    std::vector<double> init(m);
    for (std::size_t i = 0; i < m; ++i) {
        double sum = 0.0;
        for (std::size_t k = 0; k < m; ++k) sum += (P(i, k) = up(eng));
        for (std::size_t k = 0; k < m; ++k) P(i, k) /= sum;
        init[i] = 1.0 / static_cast<double>(m);
        for (std::size_t k = 0; k < m; ++k) {
            G(i, k) = (k % 2 ? -1.0 : 1.0) * ug(eng);
            if (!unit_phi) W(i, k) = uphi(eng);
        }
    }
    std::vector<std::string> labels(m);
    for (std::size_t i = 0; i < m; ++i) labels[i] = "s" + std::to_string(i);
    out.model = MarketModel::make(std::move(labels), std::move(P), std::move(init));
    out.assets = AssetSet{{"x"}, {std::move(G)}, std::nullopt};
    out.phi = WeightFunction{std::move(W)};
    out.opt = solve_model(out.model, out.assets, out.phi, {b});
    for (auto br : out.opt.per_state_branch)
        if (br != Branch::interior_root) return false;
    return true;
}

void criterion4() {
    const auto t0 = Clock::now();
    std::mt19937_64 eng(20250810);
    std::uniform_real_distribution<double> ut(0.2, 0.8);
    const double b = 0.05;
    int cases = 0;
    bool all_bounded = true, any_strict = false;
    while (cases < 20) {
        RandomMarkov sc;
        if (!random_interior_scenario(eng, b, false, sc)) continue;
        const std::size_t m = sc.model.num_states();

        // feasible suboptimal policy: scale the optimum per state
        std::vector<double> d(m);
        for (std::size_t i = 0; i < m; ++i) {
            const double t = cases == 0 ? 0.0 : ut(eng);
            d[i] = t * sc.opt.fractions.fractions[i][0];
        }
        const auto q =
            calibrating_from_fractions(sc.model.transition, sc.opt.fractions, sc.assets);
        SimulationConfig cfg;
        cfg.horizon = 40;
        cfg.replicates = 6000;
        cfg.seed = 1000 + static_cast<std::uint64_t>(cases);
        cfg.policy = PolicyFractions::scalar(d);
        const auto paths = simulate(cfg, sc.model, sc.assets, sc.phi, q, {b});
        const auto res = martingale_test(paths, 0.0, MartingaleMode::supermartingale);
        if (res.mean_gap > 3.0 * res.se_gap) all_bounded = false;
        if (res.mean_gap < -3.0 * res.se_gap) any_strict = true;
        ++cases;
    }
    const double dt = seconds_since(t0);
    const bool pass = all_bounded && any_strict && dt < 120.0;
    report(4, "supermartingale bound", pass,
           fmt("20 cases, bounded=%d strict-negative-seen=%d (%.1fs)", all_bounded, any_strict,
               dt));
}

// --------------------------------------------------------------------------
// 5. Gibbs per-step inequality
// --------------------------------------------------------------------------
void criterion5() {
    const auto t0 = Clock::now();
    std::mt19937_64 eng(5150);
    std::uniform_real_distribution<double> up(0.1, 1.0);
    std::uniform_real_distribution<double> uphi(0.3, 1.8);
    std::uniform_real_distribution<double> ug(0.3, 1.2);
    std::uniform_real_distribution<double> u01(0.0, 1.0);

    const double b = 0.05;
    int tuples = 0;
    bool all_nonpositive = true, equality_ok = true, strict_ok = true;
    while (tuples < 10000) {
        const std::size_t m = 2 + static_cast<std::size_t>(tuples % 3);
        std::vector<double> p(m), phi(m), g(m);
        double sum = 0.0;
        for (auto& x : p) sum += (x = up(eng));
        for (auto& x : p) x /= sum;
        for (auto& x : phi) x = uphi(eng);
        for (std::size_t k = 0; k < m; ++k) g[k] = (k % 2 ? -1.0 : 1.0) * ug(eng);

        const int kind = tuples % 4;
        if (kind == 3) {
            // fair-game row: shift g so the weighted edge is exactly zero; q = p
            double edge = 0.0, mass = 0.0;
            for (std::size_t k = 0; k < m; ++k) {
                edge += p[k] * phi[k] * g[k];
                mass += p[k] * phi[k];
            }
            for (auto& x : g) x -= edge / mass;
            const auto I = feasibility_interval(g, b);
            const double c = u01(eng) * I.upper;
            const double inc = gibbs_increment(p, phi, g, p, c);
            if (inc > 1e-12) all_nonpositive = false;
            ++tuples;
            continue;
        }

        const auto sol = solve_balance_scalar(p, phi, g, b);
        if (sol.branch != Branch::interior_root) continue;
        std::vector<double> q(m);
        for (std::size_t k = 0; k < m; ++k) q[k] = p[k] / (1.0 + sol.fraction * g[k]);

        double inc = 0.0;
        if (kind == 0) {
            // equality case: the q-representation evaluated at its balance root
            inc = gibbs_increment(p, phi, g, q, sol.fraction);
            if (std::abs(inc) > 1e-10) equality_ok = false;
        } else if (kind == 1) {
            // strictly away from the root, same q: the balance sum still vanishes
            const auto I = feasibility_interval(g, b);
            double c = u01(eng) * I.upper;
            if (std::abs(c - sol.fraction) < 0.02)
                c = sol.fraction + (c >= sol.fraction ? 0.02 : -0.02);
            c = std::min(std::max(c, 0.0), I.upper);
            inc = gibbs_increment(p, phi, g, q, c);
            if (inc > -1e-10) strict_ok = false;
        } else {
            // scaled-down q keeps dominance; a zero stake is always admissible
            const double s = 0.2 + 0.75 * u01(eng);
            std::vector<double> qs(m);
            for (std::size_t k = 0; k < m; ++k) qs[k] = s * q[k];
            inc = gibbs_increment(p, phi, g, qs, 0.0);
            if (inc > -1e-10) strict_ok = false;
        }
        if (inc > 1e-12) all_nonpositive = false;
        ++tuples;
    }
    const double dt = seconds_since(t0);
    const bool pass = all_nonpositive && equality_ok && strict_ok;
    report(5, "Gibbs per-step inequality", pass,
           fmt("10000 tuples, nonpositive=%d equality<=1e-10=%d strict<-1e-10=%d (%.1fs)",
               all_nonpositive, equality_ok, strict_ok, dt));
}

// --------------------------------------------------------------------------
// 6. multi-asset degeneracy
// --------------------------------------------------------------------------
void criterion6() {
    const double g1 = 1.0, g2 = 0.7;
    bool pass = true;
    std::string detail;
    {
        const double p1 = 0.65, p0 = 0.35, b = 0.5;  // b <= 2 p0 = 0.7
        const auto r = optimize_multiasset({{p1, p0}}, {{1.0, 1.0}},
                                           {{g1, -g1}, {-g2, g2}}, b);
        const double seg = r.fractions[0] * g1 - r.fractions[1] * g2;
        pass = pass && std::abs(seg - (p1 - p0)) <= 1e-8 && r.degenerate;
        detail += fmt("segA diff=%.2e flag=%d; ", std::abs(seg - (p1 - p0)), r.degenerate);
    }
    {
        const double p1 = 0.65, p0 = 0.35, b = 0.8;  // 2 p0 = 0.7 < b < 1
        const auto r = optimize_multiasset({{p1, p0}}, {{1.0, 1.0}},
                                           {{g1, -g1}, {-g2, g2}}, b);
        pass = pass && r.fractions[0] == 0.0 && r.fractions[1] == 0.0 &&
               std::abs(r.beta_value) <= 1e-14;
        detail += fmt("segB D=(%.1e,%.1e) beta=%.1e", r.fractions[0], r.fractions[1],
                      r.beta_value);
    }
    report(6, "multi-asset degeneracy", pass, detail);
}

// --------------------------------------------------------------------------
// 7. Markov growth formula on a stationary chain
// --------------------------------------------------------------------------
void criterion7() {
    const auto t0 = Clock::now();
    auto model = MarketModel::make({"bull", "bear"}, {{0.75, 0.25}, {0.4, 0.6}}, {0.5, 0.5});
    const auto pi = stationary_distribution(model);
    model.initial = pi;  // start in the stationary regime
    AssetSet assets{{"x"}, {Matrix{{1.0, -1.0}, {1.0, -1.0}}}, std::nullopt};
    const WeightFunction phi{Matrix(2, 2, 1.0)};
    const RuinThreshold b{0.4};
    const auto rep = solve_model(model, assets, phi, b);
    const double rate = rep.stationary_growth;

    const auto q = calibrating_from_fractions(model.transition, rep.fractions, assets);
    SimulationConfig cfg;
    cfg.horizon = 100;
    cfg.replicates = 100000;
    cfg.seed = 7;
    cfg.policy = rep.fractions;
    const auto paths = simulate(cfg, model, assets, phi, q, b);
    double mean = 0.0;
    for (const auto& p : paths) mean += p.s_values.back();
    mean /= static_cast<double>(paths.size());
    double var = 0.0;
    for (const auto& p : paths) {
        const double d = p.s_values.back() - mean;
        var += d * d;
    }
    var /= static_cast<double>(paths.size() - 1);
    const double se = std::sqrt(var / static_cast<double>(paths.size()));
    const double dt = seconds_since(t0);
    const bool pass = std::abs(mean / 100.0 - rate) <= 3.0 * se / 100.0;
    report(7, "Markov stationary growth", pass,
           fmt("mean S_n/n=%.6f rate=%.6f se/n=%.6f (%.1fs)", mean / 100.0, rate, se / 100.0,
               dt));
}

// --------------------------------------------------------------------------
// 8. continuous solvers
// --------------------------------------------------------------------------
void criterion8() {
    const auto t0 = Clock::now();
    bool pass = true;
    std::string detail;

    // Example 4.1: transcendental root and agreement with the general solver
    {
        const auto r = uniform_piecewise_linear_root(-1.0, 1.0, 0.5, 0.5, 0.3, -0.1, 0.2);
        ContinuousAsset a;
        a.g.form = ReturnForm::piecewise_linear;
        a.g.delta_plus = 0.5;
        a.g.delta_minus = 0.5;
        a.g.gamma_plus = 0.3;
        a.g.gamma_minus = -0.1;
        const auto gen = solve_balance_continuous(DensityModel::uniform(-1.0, 1.0), a, 0.2);
        pass = pass && std::abs(r.residual) <= 1e-10 &&
               std::abs(r.fraction - gen.fraction) <= 1e-8;
        detail += fmt("4.1 res=%.1e |diff|=%.1e; ", std::abs(r.residual),
                      std::abs(r.fraction - gen.fraction));
    }
    // Example 4.2: derivative-at-zero identity against closed-form moments
    {
        const GaussianWeight sets[2] = {{}, {0.5, 0.2, 1.0, 0.3, -0.1, 0.8}};
        const double sigmas[2] = {1.0, 1.3};
        double worst = 0.0;
        for (int i = 0; i < 2; ++i) {
            const double sigma = sigmas[i];
            const auto& w = sets[i];
            const auto r = gaussian_example_solver(sigma, 1.0, 0.5, 1.0, w, 0.5);
            auto f = [&](double x) {
                return std::exp(-x * x / (2 * sigma * sigma)) /
                       (sigma * std::sqrt(2 * std::numbers::pi));
            };
            const double pos = integrate_right_tail(
                [&](double x) {
                    return f(x) * (w.theta_plus * x * x + w.gamma_plus * x + w.delta_plus) *
                           (x + 0.5);
                },
                0.0, sigma, 1e-12);
            const double neg = integrate_right_tail(
                [&](double x) {
                    return f(x) * (w.theta_minus * x * x - w.gamma_minus * x + w.delta_minus) *
                           (-1.0);
                },
                0.0, sigma, 1e-12);
            worst = std::max(worst, std::abs(r.expected_return - (pos + neg)));
        }
        pass = pass && worst <= 1e-9;
        detail += fmt("4.2 |identity err|=%.1e; ", worst);
    }
    // Example 4.3: region vertices and the grid oracle optimum
    {
        auto ones = [](double) { return 1.0; };
        const auto r = two_asset_riskless_solver(1.0, 1.0, 0.0, 0.2, ones);
        const double d2_axis = 0.8 / (1.0 + std::numbers::ln2);
        double vert_err = 1e300;
        const std::array<std::array<double, 2>, 3> expect{
            {{0.0, 0.0}, {0.0, d2_axis}, {d2_axis / 2.0, d2_axis}}};
        if (r.region.vertices.size() == 3) {
            vert_err = 0.0;
            for (const auto& e : expect) {
                double best = 1e300;
                for (const auto& v : r.region.vertices)
                    best = std::min(best,
                                    std::max(std::abs(v[0] - e[0]), std::abs(v[1] - e[1])));
                vert_err = std::max(vert_err, best);
            }
        }
        // grid oracle over the triangle, step 1e-3
        auto beta = [&](double d1, double d2) {
            auto h = [&](double u) {
                const double emu = std::exp(-u);
                const double x = 1.0 - emu;
                const double den = 1.0 - d1 * (x + 1.0) - d2 * (1.0 - u);
                return 0.5 * std::log(den) * emu;
            };
            return integrate_right_tail(h, -std::numbers::ln2, 1.0, 1e-9);
        };
        double best = -1e300;
        for (double d1 = 0.0; d1 <= d2_axis / 2.0 + 1e-12; d1 += 1e-3) {
            const double hi = std::min(d2_axis, 1.0 - d1);
            for (double d2 = 2.0 * d1; d2 <= hi + 1e-12; d2 += 1e-3)
                best = std::max(best, beta(d1, d2));
        }
        pass = pass && vert_err <= 1e-12 && std::abs(best - r.beta_value) <= 1e-4;
        detail += fmt("4.3 vert err=%.1e grid-beta diff=%.1e", vert_err,
                      std::abs(best - r.beta_value));
    }
    const double dt = seconds_since(t0);
    report(8, "continuous solvers", pass, detail + fmt(" (%.1fs)", dt));
}

// --------------------------------------------------------------------------
// 9. q-normalization at phi == 1 balance roots
// --------------------------------------------------------------------------
void criterion9() {
    std::mt19937_64 eng(909);
    int scenarios = 0;
    double worst = 0.0;
    while (scenarios < 30) {
        RandomMarkov sc;
        if (!random_interior_scenario(eng, 0.05, true, sc)) continue;
        const auto q =
            calibrating_from_fractions(sc.model.transition, sc.opt.fractions, sc.assets);
        for (std::size_t i = 0; i < q.values.rows(); ++i) {
            double sum = 0.0;
            for (double x : q.values.row(i)) sum += x;
            worst = std::max(worst, std::abs(sum - 1.0));
        }
        ++scenarios;
    }
    report(9, "q-representation normalization", worst <= 1e-10,
           fmt("30 scenarios, worst |row sum - 1| = %.2e", worst));
}

// --------------------------------------------------------------------------
// 10. replay determinism across thread counts
// --------------------------------------------------------------------------
void criterion10() {
    BinaryWorld w;
    const auto policy = PolicyFractions::scalar({0.2, 0.2});
    const auto q = calibrating_from_fractions(w.model.transition, policy, w.assets);
    SimulationConfig cfg;
    cfg.horizon = 30;
    cfg.replicates = 256;
    cfg.seed = 1234;
    cfg.policy = policy;

    std::string csv1, csv4, csv16;
    for (int threads : {1, 4, 16}) {
        cfg.threads = threads;
        const auto paths = replay(cfg, w.model, w.assets, w.phi, q, w.b);
        const std::string csv = paths_to_csv(paths, w.model);
        if (threads == 1) csv1 = csv;
        if (threads == 4) csv4 = csv;
        if (threads == 16) csv16 = csv;
    }
    const bool pass = csv1 == csv4 && csv1 == csv16 && !csv1.empty();
    report(10, "replay determinism", pass,
           fmt("%zu CSV bytes, identical across 1/4/16 threads: %d", csv1.size(), pass));
}

}  // namespace

int main() {
    criterion1();
    criterion2();
    criterion3();
    criterion4();
    criterion5();
    criterion6();
    criterion7();
    criterion8();
    criterion9();
    criterion10();
    if (failures == 0) std::printf("all acceptance criteria passed\n");
    return failures;
}
