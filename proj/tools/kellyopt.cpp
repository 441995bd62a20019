#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "kelly/scenario.hpp"

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open scenario file `" + path + "`");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string default_out_path(const std::string& scenario_path, const std::string& command) {
    std::string stem = scenario_path;
    if (const auto slash = stem.find_last_of('/'); slash != std::string::npos)
        stem = stem.substr(slash + 1);
    if (const auto dot = stem.find_last_of('.'); dot != std::string::npos) stem = stem.substr(0, dot);
    std::string dir = ".";
    if (const char* env = std::getenv("KELLY_OUT_DIR"); env && *env) dir = env;
    return dir + "/" + stem + "_" + command + ".json";
}

int dispatch(const std::string& file, kelly::Command command, const std::string& name,
             const kelly::RunOptions& options, const std::string& out_path) {
    kelly::ScenarioConfig config;
    try {
        config = kelly::parse_scenario(read_file(file));
    } catch (const kelly::ScenarioParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kelly::kExitParse;
    } catch (const std::runtime_error& e) {
        std::cerr << e.what() << "\n";
        return kelly::kExitParse;
    }

    kelly::RunOutcome outcome;
    try {
        outcome = kelly::run_scenario(config, command, options);
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kelly::kExitInternal;
    }

    if (!options.quiet && !outcome.table.empty()) std::cout << outcome.table;

    const std::string path = out_path.empty() ? default_out_path(file, name) : out_path;
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        std::cerr << "cannot write report to `" << path << "`\n";
        return kelly::kExitInternal;
    }
    out << outcome.report.dump(2) << "\n";
    if (!options.quiet) std::cout << "report written to " << path << "\n";
    return outcome.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"risk-averse log-optimal investment fractions: solve, simulate, check"};
    app.require_subcommand(1);

    std::string file, out_path;
    kelly::RunOptions options;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("file", file, "scenario file (JSON)")->required();
        cmd->add_option("--out", out_path, "report output path (default: $KELLY_OUT_DIR or .)");
        cmd->add_flag("--quiet", options.quiet, "suppress tables on stdout");
    };

    auto* solve = app.add_subcommand("solve", "compute optimal investment fractions");
    add_common(solve);

    auto* simulate = app.add_subcommand("simulate", "Monte Carlo martingale verification");
    add_common(simulate);
    int replicates = -1, horizon = -1, threads = -1;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string paths_csv;
    simulate->add_option("--replicates", replicates, "number of independent paths");
    simulate->add_option("--horizon", horizon, "steps per path");
    auto* seed_opt = simulate->add_option("--seed", seed, "master seed");
    simulate->add_option("--threads", threads, "worker threads (0 = hardware)");
    simulate->add_option("--paths", paths_csv, "write per-path CSV here");
    simulate->callback([&] { seed_set = seed_opt->count() > 0; });

    auto* check = app.add_subcommand("check", "verify dominance/normalization/feasibility");
    add_common(check);

    CLI11_PARSE(app, argc, argv);

    kelly::Command command = kelly::Command::solve;
    std::string name = "solve";
    if (simulate->parsed()) {
        command = kelly::Command::simulate;
        name = "simulate";
        if (replicates >= 0) options.replicates = replicates;
        if (horizon >= 0) options.horizon = horizon;
        if (seed_set) options.seed = seed;
        if (threads >= 0) options.threads = threads;
        options.paths_csv = paths_csv;
    } else if (check->parsed()) {
        command = kelly::Command::check;
        name = "check";
    }
    return dispatch(file, command, name, options, out_path);
}
