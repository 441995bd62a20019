#include "kelly/simulator.hpp"

#include <cmath>
#include <set>

#include "doctest.h"

using namespace kelly;

namespace {

struct BinaryWorld {
    MarketModel model = MarketModel::make({"w", "l"}, {{0.6, 0.4}, {0.6, 0.4}}, {0.6, 0.4});
    AssetSet assets;
    WeightFunction phi{Matrix(2, 2, 1.0)};
    RuinThreshold b{0.5};

    BinaryWorld() {
        assets.names = {"stock"};
        assets.returns = {Matrix{{1.0, -1.0}, {1.0, -1.0}}};
    }
    CalibratingFunction q_at(double d) const {
        return calibrating_from_fractions(model.transition, PolicyFractions::scalar({d, d}),
                                          assets);
    }
};

}  // namespace

TEST_CASE("zero policy leaves the capital untouched") {
    BinaryWorld w;
    SimulationConfig cfg;
    cfg.horizon = 20;
    cfg.replicates = 5;
    cfg.seed = 11;
    cfg.z0 = 3.0;
    cfg.policy = PolicyFractions::scalar({0.0, 0.0});
    const auto paths = simulate(cfg, w.model, w.assets, w.phi, w.q_at(0.0), w.b);
    for (const auto& p : paths) {
        for (double z : p.capital) CHECK(z == 3.0);
        for (double s : p.s_values) CHECK(s == 0.0);
        for (double a : p.a_values) CHECK(a == 0.0);
    }
}

TEST_CASE("riskless compounding is exact") {
    BinaryWorld w;
    w.assets.riskless_rate = 0.05;
    w.b = {0.9};
    SimulationConfig cfg;
    cfg.horizon = 12;
    cfg.replicates = 3;
    cfg.seed = 5;
    cfg.policy = PolicyFractions::scalar({0.0, 0.0}, PolicyMode::scheme2);
    const auto paths = simulate(cfg, w.model, w.assets, w.phi, w.q_at(0.0), w.b);
    for (const auto& p : paths) {
        for (int j = 0; j <= 12; ++j) {
            CHECK(p.capital[j] == doctest::Approx(std::pow(1.05, j)).epsilon(1e-12));
            CHECK(p.s_values[j] == doctest::Approx(j * std::log(1.05)).epsilon(1e-12));
        }
    }
}

TEST_CASE("capital follows the hand recursion along the drawn path") {
    BinaryWorld w;
    SimulationConfig cfg;
    cfg.horizon = 30;
    cfg.replicates = 10;
    cfg.seed = 20240811;
    cfg.policy = PolicyFractions::scalar({0.2, 0.2});
    const auto paths = simulate(cfg, w.model, w.assets, w.phi, w.q_at(0.2), w.b);
    for (const auto& p : paths) {
        double z = 1.0;
        for (std::size_t j = 1; j < p.states.size(); ++j) {
            z *= 1.0 + 0.2 * (p.states[j] == 0 ? 1.0 : -1.0);
            CHECK(p.capital[j] == doctest::Approx(z).epsilon(1e-12));
        }
        // a win-win-lose prefix multiplies to 1.2 * 1.2 * 0.8 exactly
        if (p.states.size() > 3 && p.states[1] == 0 && p.states[2] == 0 && p.states[3] == 1)
            CHECK(p.capital[3] == doctest::Approx(1.2 * 1.2 * 0.8).epsilon(1e-14));
    }
}

TEST_CASE("no-ruin floor holds on every path") {
    BinaryWorld w;
    SimulationConfig cfg;
    cfg.horizon = 40;
    cfg.replicates = 50;
    cfg.seed = 77;
    cfg.policy = PolicyFractions::scalar({0.45, 0.45});  // 1 - 0.45 >= b = 0.5
    const auto paths = simulate(cfg, w.model, w.assets, w.phi, w.q_at(0.45), w.b);
    for (const auto& p : paths) {
        for (std::size_t j = 1; j < p.capital.size(); ++j)
            CHECK(p.capital[j] >= w.b.b * p.capital[j - 1] * (1.0 - 1e-12));
        CHECK(p.capital.back() >= std::pow(w.b.b, cfg.horizon) * cfg.z0 * (1.0 - 1e-12));
    }
}

TEST_CASE("telescoping identity when phi is constant one") {
    BinaryWorld w;
    SimulationConfig cfg;
    cfg.horizon = 25;
    cfg.replicates = 20;
    cfg.seed = 4242;
    cfg.z0 = 2.5;
    cfg.policy = PolicyFractions::scalar({0.2, 0.2});
    const auto paths = simulate(cfg, w.model, w.assets, w.phi, w.q_at(0.2), w.b);
    for (const auto& p : paths)
        CHECK(std::abs(p.s_values.back() - std::log(p.capital.back() / cfg.z0)) <= 1e-10);
}

TEST_CASE("replay determinism and per-replicate seeding") {
    BinaryWorld w;
    SimulationConfig cfg;
    cfg.horizon = 15;
    cfg.replicates = 32;
    cfg.seed = 999;
    cfg.policy = PolicyFractions::scalar({0.2, 0.2});
    const auto q = w.q_at(0.2);

    const auto run1 = simulate(cfg, w.model, w.assets, w.phi, q, w.b);
    const auto run2 = replay(cfg, w.model, w.assets, w.phi, q, w.b);
    REQUIRE(run1.size() == run2.size());
    for (std::size_t r = 0; r < run1.size(); ++r) {
        CHECK(run1[r].states == run2[r].states);
        CHECK(run1[r].capital == run2[r].capital);
        CHECK(run1[r].s_values == run2[r].s_values);
        CHECK(run1[r].a_values == run2[r].a_values);
    }

    SUBCASE("thread count does not change results") {
        auto cfg4 = cfg;
        cfg4.threads = 4;
        auto cfg16 = cfg;
        cfg16.threads = 16;
        const auto run4 = simulate(cfg4, w.model, w.assets, w.phi, q, w.b);
        const auto run16 = simulate(cfg16, w.model, w.assets, w.phi, q, w.b);
        const auto csv1 = paths_to_csv(run1, w.model);
        CHECK(csv1 == paths_to_csv(run4, w.model));
        CHECK(csv1 == paths_to_csv(run16, w.model));
    }
    SUBCASE("a single replicate reproduces its slot in the full run") {
        const auto solo = simulate_replicate(cfg, w.model, w.assets, w.phi, q, w.b, 7);
        CHECK(solo.states == run1[7].states);
        CHECK(solo.capital == run1[7].capital);
    }
    SUBCASE("different master seeds differ") {
        auto other = cfg;
        other.seed = 1000;
        const auto run_other = simulate(other, w.model, w.assets, w.phi, q, w.b);
        bool any_diff = false;
        for (std::size_t r = 0; r < run1.size() && !any_diff; ++r)
            any_diff = run1[r].states != run_other[r].states;
        CHECK(any_diff);
    }
}

TEST_CASE("subseed derivation is injective over a replicate range") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t r = 0; r < 100000; ++r) seen.insert(derive_subseed(123, r));
    CHECK(seen.size() == 100000);
}

TEST_CASE("martingale test verdicts") {
    BinaryWorld w;
    SimulationConfig cfg;
    cfg.horizon = 30;
    cfg.replicates = 4000;
    cfg.seed = 31;

    SUBCASE("optimal policy with the matched calibrating function is a martingale") {
        cfg.policy = PolicyFractions::scalar({0.2, 0.2});
        const auto paths = simulate(cfg, w.model, w.assets, w.phi, w.q_at(0.2), w.b);
        const double en = 30.0 * 0.020135513550688873;
        const auto res = martingale_test(paths, en, MartingaleMode::martingale);
        CHECK(res.verdict == Verdict::consistent_martingale);
        CHECK(std::abs(res.mean_gap) <= 3.0 * res.se_gap + 1e-12);
    }
    SUBCASE("suboptimal policy under the optimal q drifts down") {
        cfg.policy = PolicyFractions::scalar({0.05, 0.05});
        cfg.replicates = 20000;
        const auto paths = simulate(cfg, w.model, w.assets, w.phi, w.q_at(0.2), w.b);
        const auto res = martingale_test(paths, 0.0, MartingaleMode::supermartingale);
        CHECK(res.verdict == Verdict::consistent_supermartingale);
        CHECK(res.mean_gap < -3.0 * res.se_gap);  // strictly suboptimal
    }
    SUBCASE("zero policy gives a deterministic nonpositive gap") {
        cfg.policy = PolicyFractions::scalar({0.0, 0.0});
        cfg.replicates = 64;
        const auto paths = simulate(cfg, w.model, w.assets, w.phi, w.q_at(0.2), w.b);
        const auto res = martingale_test(paths, 0.0, MartingaleMode::supermartingale);
        CHECK(res.verdict == Verdict::consistent_supermartingale);
        CHECK(res.se_gap == doctest::Approx(0.0).epsilon(1e-15));
        CHECK(res.mean_gap < 0.0);  // gap = -A_n with positive alpha at the optimal q
    }
    SUBCASE("fewer than 30 replicates is rejected") {
        cfg.policy = PolicyFractions::scalar({0.0, 0.0});
        cfg.replicates = 10;
        const auto paths = simulate(cfg, w.model, w.assets, w.phi, w.q_at(0.0), w.b);
        CHECK_THROWS_AS(martingale_test(paths, 0.0, MartingaleMode::martingale),
                        std::invalid_argument);
    }
}

TEST_CASE("custom predictable rules") {
    BinaryWorld w;
    SimulationConfig cfg;
    cfg.horizon = 10;
    cfg.replicates = 40;
    cfg.seed = 8;

    SUBCASE("a rule equal to the optimal proportion matches the proportional run") {
        cfg.policy = CustomRule([](std::size_t, std::span<const std::size_t>) { return 0.2; });
        const auto custom = simulate(cfg, w.model, w.assets, w.phi, w.q_at(0.2), w.b);
        cfg.policy = PolicyFractions::scalar({0.2, 0.2});
        const auto prop = simulate(cfg, w.model, w.assets, w.phi, w.q_at(0.2), w.b);
        for (std::size_t r = 0; r < custom.size(); ++r) {
            CHECK(custom[r].states == prop[r].states);
            CHECK(custom[r].capital == prop[r].capital);
            CHECK_FALSE(custom[r].balance_violated);
        }
    }
    SUBCASE("a rule that breaks no-ruin aborts the replicate") {
        cfg.policy = CustomRule([](std::size_t, std::span<const std::size_t>) { return 0.8; });
        // b = 0.5: a 0.8 stake can lose to 0.2 < b
        const auto paths = simulate(cfg, w.model, w.assets, w.phi, w.q_at(0.2), w.b);
        for (const auto& p : paths) {
            REQUIRE(p.aborted_at.has_value());
            CHECK(*p.aborted_at == 0);
        }
        CHECK_THROWS_AS(martingale_test(paths, 0.0, MartingaleMode::supermartingale),
                        std::invalid_argument);
    }
    SUBCASE("staking against a nonzero balance sum is flagged") {
        // q = p: sum phi q g = 0.6 - 0.4 = 0.2 != 0, so any nonzero stake is flagged
        cfg.policy = CustomRule([](std::size_t, std::span<const std::size_t>) { return 0.1; });
        const auto paths = simulate(cfg, w.model, w.assets, w.phi, w.q_at(0.0), w.b);
        for (const auto& p : paths) CHECK(p.balance_violated);
        // the zero rule is always admissible
        cfg.policy = CustomRule([](std::size_t, std::span<const std::size_t>) { return 0.0; });
        const auto zero = simulate(cfg, w.model, w.assets, w.phi, w.q_at(0.0), w.b);
        for (const auto& p : zero) CHECK_FALSE(p.balance_violated);
    }
    SUBCASE("history-dependent rules see exactly the observed prefix") {
        cfg.policy = CustomRule([](std::size_t step, std::span<const std::size_t> hist) {
            REQUIRE(hist.size() == step + 1);
            return hist.back() == 0 ? 0.2 : 0.0;  // bet only after a win
        });
        const auto paths = simulate(cfg, w.model, w.assets, w.phi, w.q_at(0.2), w.b);
        for (const auto& p : paths) {
            for (std::size_t j = 1; j < p.states.size(); ++j) {
                const double growth = p.capital[j] / p.capital[j - 1];
                if (p.states[j - 1] == 1) CHECK(growth == doctest::Approx(1.0).epsilon(1e-15));
            }
        }
    }
}

TEST_CASE("two-asset recursion multiplies the stake-weighted growth factors") {
    const auto model = MarketModel::make({"one", "zero"}, {{0.6, 0.4}, {0.6, 0.4}}, {0.6, 0.4});
    AssetSet assets;
    assets.names = {"long", "short"};
    assets.returns = {Matrix{{1.0, -1.0}, {1.0, -1.0}}, Matrix{{-0.7, 0.7}, {-0.7, 0.7}}};
    const WeightFunction phi{Matrix(2, 2, 1.0)};
    SimulationConfig cfg;
    cfg.horizon = 12;
    cfg.replicates = 16;
    cfg.seed = 99;
    cfg.policy = PolicyFractions{{{0.1, 0.2}, {0.1, 0.2}}, PolicyMode::scheme1};
    const auto q = calibrating_from_fractions(
        model.transition, std::get<PolicyFractions>(cfg.policy), assets);
    const auto paths = simulate(cfg, model, assets, phi, q, {0.5});
    for (const auto& p : paths) {
        for (std::size_t j = 1; j < p.states.size(); ++j) {
            const double growth = p.states[j] == 0 ? 1.0 + 0.1 * 1.0 + 0.2 * (-0.7)
                                                   : 1.0 - 0.1 + 0.2 * 0.7;
            CHECK(p.capital[j] == doctest::Approx(p.capital[j - 1] * growth).epsilon(1e-14));
        }
    }
}

TEST_CASE("markov chain paths follow the transition law") {
    const auto model =
        MarketModel::make({"a", "b"}, {{0.9, 0.1}, {0.2, 0.8}}, {1.0, 0.0});
    AssetSet assets;
    assets.names = {"x"};
    assets.returns = {Matrix{{0.1, -0.1}, {0.1, -0.1}}};
    const WeightFunction phi{Matrix(2, 2, 1.0)};
    SimulationConfig cfg;
    cfg.horizon = 2000;
    cfg.replicates = 50;
    cfg.seed = 555;
    cfg.policy = PolicyFractions::scalar({0.0, 0.0});
    const auto q = calibrating_from_fractions(model.transition, PolicyFractions::scalar({0.0, 0.0}),
                                              assets);
    const auto paths = simulate(cfg, model, assets, phi, q, {0.5});
    // empirical transition frequency from state a
    long from_a = 0, a_to_a = 0;
    for (const auto& p : paths)
        for (std::size_t j = 1; j < p.states.size(); ++j)
            if (p.states[j - 1] == 0) {
                ++from_a;
                if (p.states[j] == 0) ++a_to_a;
            }
    const double freq = static_cast<double>(a_to_a) / static_cast<double>(from_a);
    CHECK(freq == doctest::Approx(0.9).epsilon(0.02));
}
