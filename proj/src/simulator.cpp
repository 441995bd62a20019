#include "kelly/simulator.hpp"

#include <cmath>
#include <cstdio>
#include <random>
#include <stdexcept>
#include <thread>

namespace kelly {

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::consistent_supermartingale: return "consistent-supermartingale";
        case Verdict::consistent_martingale: return "consistent-martingale";
        case Verdict::violation: return "violation";
    }
    return "?";
}

std::uint64_t derive_subseed(std::uint64_t master, std::uint64_t replicate) {
    std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (replicate + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

namespace {

double next_uniform(std::mt19937_64& eng) {
    return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

std::size_t draw_categorical(std::mt19937_64& eng, std::span<const double> probs) {
    const double u = next_uniform(eng);
    double acc = 0.0;
    for (std::size_t k = 0; k < probs.size(); ++k) {
        acc += probs[k];
        if (u < acc) return k;
    }
    return probs.size() - 1;
}

void validate_config(const SimulationConfig& config, const MarketModel& model,
                     const AssetSet& assets, const CalibratingFunction& q, double b_floor) {
    if (config.horizon < 1) throw std::invalid_argument("simulate: horizon must be >= 1");
    if (config.replicates < 1) throw std::invalid_argument("simulate: replicates must be >= 1");
    if (!(config.z0 > 0.0)) throw std::invalid_argument("simulate: z0 must be positive");
    for (std::size_t i = 0; i < q.values.rows(); ++i)
        for (std::size_t k = 0; k < q.values.cols(); ++k)
            if (!(q.values(i, k) > 0.0))
                throw std::invalid_argument("simulate: calibrating function must be positive");
    if (std::holds_alternative<CustomRule>(config.policy) && assets.num_assets() != 1)
        throw std::invalid_argument("simulate: custom rules require a single risky asset");
    if (const auto* prop = std::get_if<PolicyFractions>(&config.policy)) {
        if (prop->num_states() != model.num_states())
            throw std::invalid_argument("simulate: policy has wrong number of states");
        const double rho_eff = prop->mode == PolicyMode::scheme2 ? assets.rho_eff() : 0.0;
        for (std::size_t i = 0; i < model.num_states(); ++i) {
            double total = 0.0;
            for (double d : prop->fractions[i]) {
                if (d < 0.0) throw std::invalid_argument("simulate: negative fraction");
                total += d;
            }
            if (!(total < 1.0)) throw std::invalid_argument("simulate: fractions sum to >= 1");
            for (std::size_t k = 0; k < model.num_states(); ++k) {
                if (model.transition(i, k) == 0.0) continue;  // pathwise condition is a.s.
                double u = 0.0;
                for (std::size_t s = 0; s < assets.num_assets(); ++s)
                    u += prop->fractions[i][s] * assets.effective_return(s, i, k);
                if (1.0 + rho_eff + u < b_floor - 1e-12)
                    throw std::invalid_argument("simulate: policy violates no-ruin at state " +
                                                std::to_string(i));
            }
        }
    }
}

}  // namespace

PathRecord simulate_replicate(const SimulationConfig& config, const MarketModel& model,
                              const AssetSet& assets, const WeightFunction& weights,
                              const CalibratingFunction& q, const RuinThreshold& b,
                              std::uint64_t replicate) {
    const std::size_t m = model.num_states();
    const auto* prop = std::get_if<PolicyFractions>(&config.policy);
    const auto* rule = std::get_if<CustomRule>(&config.policy);
    const PolicyMode mode = prop ? prop->mode
                             : (assets.riskless_rate ? PolicyMode::scheme2 : PolicyMode::scheme1);
    const double rho_eff = mode == PolicyMode::scheme2 ? assets.rho_eff() : 0.0;

    const EntropyProfile profile = entropy_profile(model.transition, weights.weights, q);

    std::mt19937_64 eng(derive_subseed(config.seed, replicate));
    const int n = config.horizon;

    PathRecord rec;
    rec.states.reserve(n + 1);
    rec.capital.reserve(n + 1);
    rec.s_values.reserve(n + 1);
    rec.a_values.reserve(n + 1);

    rec.states.push_back(draw_categorical(eng, model.initial));
    rec.capital.push_back(config.z0);
    rec.s_values.push_back(0.0);
    rec.a_values.push_back(0.0);

    for (int j = 1; j <= n; ++j) {
        const std::size_t prev = rec.states.back();
        // stake fraction decided on the information available before trial j
        std::vector<double> frac;
        if (prop) {
            frac = prop->fractions[prev];
        } else {
            const double c = (*rule)(static_cast<std::size_t>(j - 1), rec.states);
            // sustainability and no-ruin over every possible outcome
            bool feasible = c >= 0.0 && c < 1.0;
            for (std::size_t k = 0; feasible && k < m; ++k) {
                if (model.transition(prev, k) == 0.0) continue;
                const double u = c * assets.effective_return(0, prev, k);
                if (1.0 + rho_eff + u < b.b - 1e-12) feasible = false;
            }
            if (!feasible) {
                rec.aborted_at = j - 1;
                return rec;
            }
            double balance_sum = 0.0;
            for (std::size_t l = 0; l < m; ++l)
                balance_sum += weights.weights(prev, l) * q.values(prev, l) *
                               assets.effective_return(0, prev, l);
            if (std::abs(balance_sum) > 1e-10 && c != 0.0) rec.balance_violated = true;
            frac.assign(assets.num_assets(), 0.0);
            frac[0] = c;
        }

        const std::size_t next = draw_categorical(eng, model.transition.row(prev));
        double u = 0.0;
        for (std::size_t s = 0; s < assets.num_assets(); ++s)
            u += frac[s] * assets.effective_return(s, prev, next);
        const double growth = 1.0 + rho_eff + u;
        if (!(growth > 0.0)) {
            rec.aborted_at = j - 1;
            return rec;
        }
        rec.states.push_back(next);
        rec.capital.push_back(rec.capital.back() * growth);
        rec.s_values.push_back(rec.s_values.back() +
                               weights.weights(prev, next) * std::log(growth));
        rec.a_values.push_back(rec.a_values.back() + profile.alpha[prev]);
    }
    return rec;
}

std::vector<PathRecord> simulate(const SimulationConfig& config, const MarketModel& model,
                                 const AssetSet& assets, const WeightFunction& weights,
                                 const CalibratingFunction& q, const RuinThreshold& b) {
    validate_config(config, model, assets, q, b.b);
    const int R = config.replicates;
    std::vector<PathRecord> paths(R);

    unsigned threads = config.threads > 0 ? static_cast<unsigned>(config.threads)
                                          : std::thread::hardware_concurrency();
    if (threads == 0) threads = 1;
    threads = std::min<unsigned>(threads, static_cast<unsigned>(R));

    if (threads <= 1) {
        for (int r = 0; r < R; ++r)
            paths[r] = simulate_replicate(config, model, assets, weights, q, b,
                                          static_cast<std::uint64_t>(r));
        return paths;
    }
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&, t]() {
            for (int r = static_cast<int>(t); r < R; r += static_cast<int>(threads))
                paths[r] = simulate_replicate(config, model, assets, weights, q, b,
                                              static_cast<std::uint64_t>(r));
        });
    }
    for (auto& th : pool) th.join();
    return paths;
}

std::vector<PathRecord> replay(const SimulationConfig& config, const MarketModel& model,
                               const AssetSet& assets, const WeightFunction& weights,
                               const CalibratingFunction& q, const RuinThreshold& b) {
    return simulate(config, model, assets, weights, q, b);
}

MartingaleTestResult martingale_test(std::span<const PathRecord> paths, double predicted_E,
                                     MartingaleMode mode) {
    if (paths.size() < 30)
        throw std::invalid_argument("martingale_test: need at least 30 replicates");
    for (const auto& p : paths)
        if (p.aborted_at)
            throw std::invalid_argument("martingale_test: aborted path in sample");

    const double R = static_cast<double>(paths.size());
    double sum_gap = 0.0, sum_S = 0.0;
    for (const auto& p : paths) {
        sum_gap += p.s_values.back() - p.a_values.back();
        sum_S += p.s_values.back();
    }
    MartingaleTestResult res;
    res.predicted_E = predicted_E;
    res.mean_gap = sum_gap / R;
    res.mean_S = sum_S / R;
    double var_gap = 0.0, var_S = 0.0;
    for (const auto& p : paths) {
        const double dg = (p.s_values.back() - p.a_values.back()) - res.mean_gap;
        const double ds = p.s_values.back() - res.mean_S;
        var_gap += dg * dg;
        var_S += ds * ds;
    }
    var_gap /= (R - 1.0);
    var_S /= (R - 1.0);
    res.se_gap = std::sqrt(var_gap / R);
    res.se_S = std::sqrt(var_S / R);

    if (mode == MartingaleMode::supermartingale) {
        // one-sided: the gap mean must not exceed 0 by more than 3 SE
        const bool viol = res.mean_gap > 3.0 * res.se_gap + 1e-12;
        res.verdict = viol ? Verdict::violation : Verdict::consistent_supermartingale;
    } else {
        const bool viol_E = std::abs(res.mean_S - predicted_E) > 3.0 * res.se_S + 1e-12;
        const bool viol_gap = std::abs(res.mean_gap) > 3.0 * res.se_gap + 1e-12;
        res.verdict =
            (viol_E || viol_gap) ? Verdict::violation : Verdict::consistent_martingale;
    }
    return res;
}

std::string paths_to_csv(std::span<const PathRecord> paths, const MarketModel& model) {
    std::string out = "replicate,step,state,Z,S,A\n";
    char buf[160];
    for (std::size_t r = 0; r < paths.size(); ++r) {
        const auto& p = paths[r];
        for (std::size_t j = 0; j < p.states.size(); ++j) {
            std::snprintf(buf, sizeof(buf), "%zu,%zu,%s,%.17g,%.17g,%.17g\n", r, j,
                          model.states[p.states[j]].c_str(), p.capital[j], p.s_values[j],
                          p.a_values[j]);
            out += buf;
        }
    }
    return out;
}

}  // namespace kelly
