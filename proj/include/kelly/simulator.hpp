#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "kelly/entropy.hpp"
#include "kelly/model.hpp"
#include "kelly/optimizer_discrete.hpp"

namespace kelly {

/// Predictable rule: fraction of current capital to stake at step j, given
/// the observed outcome prefix eps_0..eps_j. It cannot see the next outcome.
using CustomRule = std::function<double(std::size_t step, std::span<const std::size_t> history)>;

struct SimulationConfig {
    int horizon = 1;          // n >= 1
    int replicates = 1;       // R >= 1
    std::uint64_t seed = 0;   // master seed
    double z0 = 1.0;          // initial capital > 0
    std::variant<PolicyFractions, CustomRule> policy;
    int threads = 0;          // 0 = hardware concurrency
};

struct PathRecord {
    std::vector<std::size_t> states;  // eps_0..eps_n
    std::vector<double> capital;      // Z_0..Z_n
    std::vector<double> s_values;     // S_0..S_n, S_0 = 0
    std::vector<double> a_values;     // A_0..A_n
    bool balance_violated = false;    // custom rule staked against a nonzero balance sum
    std::optional<int> aborted_at;    // step where a custom rule broke no-ruin
};

enum class MartingaleMode { supermartingale, martingale };

enum class Verdict { consistent_supermartingale, consistent_martingale, violation };

std::string to_string(Verdict v);

struct MartingaleTestResult {
    double mean_gap = 0.0;  // mean of S_n - A_n
    double se_gap = 0.0;
    double mean_S = 0.0;
    double se_S = 0.0;
    double predicted_E = 0.0;
    Verdict verdict = Verdict::consistent_supermartingale;
};

/// Derives the per-replicate stream seed from (master, replicate). Splitmix64
/// finalizer over an odd-stride index: injective in the replicate index for a
/// fixed master seed, so streams never collide over the index range.
std::uint64_t derive_subseed(std::uint64_t master, std::uint64_t replicate);

/// Runs `config.replicates` independent paths of the capital recursion,
/// accumulating the weighted log-growth S and the cumulative entropy A
/// computed against `q`. Replicate r depends only on (seed, r), so results
/// are independent of execution order and thread count.
std::vector<PathRecord> simulate(const SimulationConfig& config, const MarketModel& model,
                                 const AssetSet& assets, const WeightFunction& weights,
                                 const CalibratingFunction& q, const RuinThreshold& b);

/// Single replicate, identical to entry r of the full run.
PathRecord simulate_replicate(const SimulationConfig& config, const MarketModel& model,
                              const AssetSet& assets, const WeightFunction& weights,
                              const CalibratingFunction& q, const RuinThreshold& b,
                              std::uint64_t replicate);

/// Deterministic re-run: bit-identical PathRecords for identical inputs.
std::vector<PathRecord> replay(const SimulationConfig& config, const MarketModel& model,
                               const AssetSet& assets, const WeightFunction& weights,
                               const CalibratingFunction& q, const RuinThreshold& b);

/// Statistical verdict at 3 standard errors. Requires >= 30 replicates.
MartingaleTestResult martingale_test(std::span<const PathRecord> paths, double predicted_E,
                                     MartingaleMode mode);

/// CSV with header replicate,step,state,Z,S,A; round-trip double formatting;
/// byte-identical across worker-thread counts.
std::string paths_to_csv(std::span<const PathRecord> paths, const MarketModel& model);

}  // namespace kelly
