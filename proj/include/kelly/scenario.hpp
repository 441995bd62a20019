#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>

#include "kelly/model.hpp"
#include "kelly/optimizer_continuous.hpp"
#include "kelly/optimizer_discrete.hpp"
#include "kelly/simulator.hpp"

#include "json.hpp"

namespace kelly {

/// CLI exit codes, stable and documented in the README.
enum ExitCode : int {
    kExitOk = 0,
    kExitInternal = 1,
    kExitParse = 2,
    kExitValidation = 3,
    kExitInfeasible = 4,
    kExitNoConvergence = 5,
    kExitViolation = 6,
};

class ScenarioParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct DiscreteScenario {
    MarketModel model;
    AssetSet assets;
    WeightFunction weights;
};

struct ContinuousScenario {
    DensityModel density;
    std::vector<ContinuousAsset> assets;  // 1 risky, or 2 for the riskless pair
    bool two_asset_riskless = false;      // linear + logarithmic pair with rho
    double gamma = 0.0, theta = 0.0;      // parameters of the pair
};

struct RunSettings {
    int horizon = 50;
    int replicates = 1000;
    std::uint64_t seed = 0;
    double z0 = 1.0;
    int threads = 0;
};

struct ScenarioConfig {
    std::variant<DiscreteScenario, ContinuousScenario> market;
    double b = 0.5;
    std::optional<double> rho;
    std::optional<RunSettings> run;
    std::optional<Matrix> q_check;  // user-supplied calibrating values for `check`

    bool is_discrete() const { return std::holds_alternative<DiscreteScenario>(market); }
    const DiscreteScenario& discrete() const { return std::get<DiscreteScenario>(market); }
    const ContinuousScenario& continuous() const { return std::get<ContinuousScenario>(market); }
};

/// Parses the scenario document. Field-precise messages; throws
/// ScenarioParseError on malformed input (validation problems are reported by
/// run_scenario, not here).
ScenarioConfig parse_scenario(const std::string& text);

/// Canonical serialization; parse(serialize(c)) reproduces c.
std::string serialize_scenario(const ScenarioConfig& config);

enum class Command { solve, simulate, check };

struct RunOptions {
    std::optional<int> replicates;
    std::optional<int> horizon;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::string paths_csv;  // when nonempty, `simulate` dumps paths here
    bool quiet = false;
};

struct RunOutcome {
    int exit_code = kExitOk;
    nlohmann::ordered_json report;
    std::string table;  // human-readable rendering
};

/// Dispatches the three workflows. Never throws for the documented failure
/// modes; failures are encoded in exit_code and the report.
RunOutcome run_scenario(const ScenarioConfig& config, Command command,
                        const RunOptions& options = {});

}  // namespace kelly
