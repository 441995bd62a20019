#include "kelly/scenario.hpp"

#include <cmath>
#include <cstdio>

#include "kelly/quadrature.hpp"

namespace kelly {

using nlohmann::ordered_json;

namespace {

const ordered_json& require(const ordered_json& j, const char* key) {
    if (!j.contains(key))
        throw ScenarioParseError(std::string("missing required field `") + key + "`");
    return j.at(key);
}

double require_number(const ordered_json& j, const char* key) {
    const auto& v = require(j, key);
    if (!v.is_number())
        throw ScenarioParseError(std::string("field `") + key + "` must be a number");
    return v.get<double>();
}

Matrix matrix_from_json(const ordered_json& v, const char* key) {
    if (!v.is_array() || v.empty() || !v.front().is_array())
        throw ScenarioParseError(std::string("field `") + key + "` must be a list of rows");
    std::vector<std::vector<double>> rows;
    for (const auto& r : v) {
        if (!r.is_array())
            throw ScenarioParseError(std::string("field `") + key + "` must be a list of rows");
        std::vector<double> row;
        for (const auto& x : r) {
            if (!x.is_number())
                throw ScenarioParseError(std::string("field `") + key + "` has a non-numeric entry");
            row.push_back(x.get<double>());
        }
        rows.push_back(std::move(row));
    }
    try {
        return Matrix::from_rows(rows);
    } catch (const std::invalid_argument&) {
        throw ScenarioParseError(std::string("field `") + key + "` has ragged rows");
    }
}

ordered_json matrix_to_json(const Matrix& m) {
    ordered_json rows = ordered_json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        ordered_json row = ordered_json::array();
        for (double x : m.row(i)) row.push_back(x);
        rows.push_back(std::move(row));
    }
    return rows;
}

ContinuousReturn parse_return_form(const ordered_json& j) {
    const std::string form = require(j, "form").get<std::string>();
    const ordered_json params = j.value("params", ordered_json::object());
    ContinuousReturn g;
    auto p = [&](const char* key) { return require_number(params, key); };
    if (form == "piecewise_linear") {
        g.form = ReturnForm::piecewise_linear;
        g.delta_plus = p("delta_plus");
        g.delta_minus = p("delta_minus");
        g.gamma_plus = p("gamma_plus");
        g.gamma_minus = p("gamma_minus");
    } else if (form == "positive_part_linear") {
        g.form = ReturnForm::positive_part_linear;
        g.a1 = p("a1");
        g.a2 = p("a2");
        g.a3 = p("a3");
    } else if (form == "linear") {
        g.form = ReturnForm::linear;
        g.gamma = p("gamma");
    } else if (form == "logarithmic") {
        g.form = ReturnForm::logarithmic;
        g.theta = p("theta");
    } else {
        throw ScenarioParseError("unknown asset form `" + form + "`");
    }
    return g;
}

ordered_json return_form_to_json(const ContinuousReturn& g) {
    ordered_json j;
    switch (g.form) {
        case ReturnForm::piecewise_linear:
            j["form"] = "piecewise_linear";
            j["params"] = {{"delta_plus", g.delta_plus},
                           {"delta_minus", g.delta_minus},
                           {"gamma_plus", g.gamma_plus},
                           {"gamma_minus", g.gamma_minus}};
            break;
        case ReturnForm::positive_part_linear:
            j["form"] = "positive_part_linear";
            j["params"] = {{"a1", g.a1}, {"a2", g.a2}, {"a3", g.a3}};
            break;
        case ReturnForm::linear:
            j["form"] = "linear";
            j["params"] = {{"gamma", g.gamma}};
            break;
        case ReturnForm::logarithmic:
            j["form"] = "logarithmic";
            j["params"] = {{"theta", g.theta}};
            break;
    }
    return j;
}

ContinuousWeight parse_weight_form(const ordered_json& j) {
    ContinuousWeight w;
    const std::string form = require(j, "form").get<std::string>();
    if (form == "constant") {
        w.form = WeightForm::constant_one;
    } else if (form == "piecewise_quadratic") {
        w.form = WeightForm::piecewise_quadratic;
        const ordered_json params = j.value("params", ordered_json::object());
        auto p = [&](const char* key) { return require_number(params, key); };
        w.theta_plus = p("theta_plus");
        w.gamma_plus = p("gamma_plus");
        w.delta_plus = p("delta_plus");
        w.theta_minus = p("theta_minus");
        w.gamma_minus = p("gamma_minus");
        w.delta_minus = p("delta_minus");
    } else {
        throw ScenarioParseError("unknown phi form `" + form + "`");
    }
    return w;
}

ordered_json weight_form_to_json(const ContinuousWeight& w) {
    ordered_json j;
    if (w.form == WeightForm::constant_one) {
        j["form"] = "constant";
    } else {
        j["form"] = "piecewise_quadratic";
        j["params"] = {{"theta_plus", w.theta_plus},   {"gamma_plus", w.gamma_plus},
                       {"delta_plus", w.delta_plus},   {"theta_minus", w.theta_minus},
                       {"gamma_minus", w.gamma_minus}, {"delta_minus", w.delta_minus}};
    }
    return j;
}

DensityModel parse_density(const ordered_json& j) {
    const std::string kind = require(j, "kind").get<std::string>();
    const ordered_json params = j.value("params", ordered_json::object());
    if (kind == "uniform")
        return DensityModel::uniform(require_number(params, "a1"), require_number(params, "a2"));
    if (kind == "gaussian") return DensityModel::gaussian(require_number(params, "sigma"));
    if (kind == "tabulated") {
        std::vector<double> xs = require(params, "xs").get<std::vector<double>>();
        std::vector<double> fs = require(params, "fs").get<std::vector<double>>();
        return DensityModel::tabulated(std::move(xs), std::move(fs));
    }
    throw ScenarioParseError("unknown density kind `" + kind + "`");
}

ordered_json density_to_json(const DensityModel& d) {
    ordered_json j;
    switch (d.kind) {
        case DensityKind::uniform:
            j["kind"] = "uniform";
            j["params"] = {{"a1", d.a1}, {"a2", d.a2}};
            break;
        case DensityKind::gaussian:
            j["kind"] = "gaussian";
            j["params"] = {{"sigma", d.sigma}};
            break;
        case DensityKind::custom:
            j["kind"] = "tabulated";
            j["params"] = {{"xs", d.xs}, {"fs", d.fs}};
            break;
    }
    return j;
}

RunSettings parse_run(const ordered_json& j) {
    RunSettings r;
    r.horizon = static_cast<int>(require_number(j, "horizon"));
    r.replicates = static_cast<int>(require_number(j, "replicates"));
    const auto& seed = require(j, "seed");
    if (!seed.is_number_unsigned())
        throw ScenarioParseError("field `seed` must be a nonnegative integer");
    r.seed = seed.get<std::uint64_t>();
    if (j.contains("z0")) r.z0 = require_number(j, "z0");
    if (j.contains("threads")) r.threads = static_cast<int>(require_number(j, "threads"));
    return r;
}

}  // namespace

namespace {

ScenarioConfig parse_scenario_impl(const ordered_json& j);

}  // namespace

ScenarioConfig parse_scenario(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ScenarioParseError(std::string("scenario is not well-formed JSON: ") + e.what());
    }
    try {
        return parse_scenario_impl(j);
    } catch (const nlohmann::json::exception& e) {
        throw ScenarioParseError(std::string("scenario field has the wrong type: ") + e.what());
    }
}

namespace {

ScenarioConfig parse_scenario_impl(const ordered_json& j) {
    if (!j.is_object()) throw ScenarioParseError("scenario must be a JSON object");

    const bool has_discrete = j.contains("transition");
    const bool has_continuous = j.contains("density");
    if (has_discrete == has_continuous)
        throw ScenarioParseError(
            "exactly one of `transition` (discrete) or `density` (continuous) must be present");

    ScenarioConfig cfg;
    cfg.b = require_number(j, "b");
    if (j.contains("rho")) cfg.rho = require_number(j, "rho");
    if (j.contains("run")) cfg.run = parse_run(j.at("run"));
    if (j.contains("q")) cfg.q_check = matrix_from_json(j.at("q"), "q");

    if (has_discrete) {
        DiscreteScenario d;
        const auto& states = require(j, "states");
        if (!states.is_array() || states.size() < 2)
            throw ScenarioParseError("field `states` must list at least 2 outcome labels");
        std::vector<std::string> labels;
        for (const auto& s : states) labels.push_back(s.get<std::string>());
        Matrix transition = matrix_from_json(require(j, "transition"), "transition");
        std::vector<double> initial = require(j, "initial").get<std::vector<double>>();
        d.model = MarketModel::make(std::move(labels), std::move(transition), std::move(initial));

        const auto& assets = require(j, "assets");
        if (!assets.is_array() || assets.empty())
            throw ScenarioParseError("field `assets` must be a non-empty list");
        bool any_riskless = false;
        for (const auto& a : assets) {
            const bool riskless = a.value("riskless", false);
            if (riskless) {
                any_riskless = true;
                continue;
            }
            d.assets.names.push_back(a.value("name", "asset"));
            d.assets.returns.push_back(matrix_from_json(require(a, "returns"), "returns"));
        }
        if (any_riskless) {
            if (!cfg.rho)
                throw ScenarioParseError("a riskless asset requires the top-level field `rho`");
            d.assets.riskless_rate = *cfg.rho;
        }
        if (d.assets.returns.empty())
            throw ScenarioParseError("field `assets` must contain at least one risky asset");
        d.weights.weights = matrix_from_json(require(j, "weights"), "weights");
        cfg.market = std::move(d);
    } else {
        ContinuousScenario c;
        c.density = parse_density(require(j, "density"));
        ContinuousWeight phi;
        if (j.contains("phi")) phi = parse_weight_form(j.at("phi"));
        if (j.contains("asset")) {
            c.assets.push_back({parse_return_form(j.at("asset")), phi});
        } else if (j.contains("assets")) {
            for (const auto& a : j.at("assets")) c.assets.push_back({parse_return_form(a), phi});
        } else {
            throw ScenarioParseError("continuous scenario needs `asset` or `assets`");
        }
        if (c.assets.size() == 2) {
            const auto& g1 = c.assets[0].g;
            const auto& g2 = c.assets[1].g;
            if (g1.form != ReturnForm::linear || g2.form != ReturnForm::logarithmic)
                throw ScenarioParseError(
                    "two-asset continuous scenarios must pair a `linear` and a `logarithmic` "
                    "return");
            if (!cfg.rho)
                throw ScenarioParseError("the two-asset continuous scenario requires `rho`");
            c.two_asset_riskless = true;
            c.gamma = g1.gamma;
            c.theta = g2.theta;
        } else if (c.assets.size() != 1) {
            throw ScenarioParseError("continuous scenarios support 1 or 2 risky assets");
        }
        cfg.market = std::move(c);
    }
    return cfg;
}

}  // namespace

std::string serialize_scenario(const ScenarioConfig& cfg) {
    ordered_json j;
    if (cfg.is_discrete()) {
        const auto& d = cfg.discrete();
        j["states"] = d.model.states;
        j["transition"] = matrix_to_json(d.model.transition);
        j["initial"] = d.model.initial;
        ordered_json assets = ordered_json::array();
        for (std::size_t s = 0; s < d.assets.num_assets(); ++s) {
            ordered_json a;
            a["name"] = d.assets.names.size() > s ? d.assets.names[s] : "asset";
            a["returns"] = matrix_to_json(d.assets.returns[s]);
            a["riskless"] = false;
            assets.push_back(std::move(a));
        }
        if (d.assets.riskless_rate) {
            ordered_json a;
            a["name"] = "riskless";
            a["riskless"] = true;
            assets.push_back(std::move(a));
        }
        j["assets"] = std::move(assets);
        j["weights"] = matrix_to_json(d.weights.weights);
    } else {
        const auto& c = cfg.continuous();
        j["density"] = density_to_json(c.density);
        if (c.assets.size() == 1) {
            j["asset"] = return_form_to_json(c.assets[0].g);
        } else {
            ordered_json assets = ordered_json::array();
            for (const auto& a : c.assets) assets.push_back(return_form_to_json(a.g));
            j["assets"] = std::move(assets);
        }
        j["phi"] = weight_form_to_json(c.assets.front().phi);
    }
    j["b"] = cfg.b;
    if (cfg.rho) j["rho"] = *cfg.rho;
    if (cfg.run) {
        j["run"] = {{"horizon", cfg.run->horizon},
                    {"replicates", cfg.run->replicates},
                    {"seed", cfg.run->seed},
                    {"z0", cfg.run->z0},
                    {"threads", cfg.run->threads}};
    }
    if (cfg.q_check) j["q"] = matrix_to_json(*cfg.q_check);
    return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// workflows
// ---------------------------------------------------------------------------

namespace {

std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", x);
    return buf;
}

RunOutcome validation_failure(const ValidationReport& rep) {
    RunOutcome out;
    out.exit_code = kExitValidation;
    out.report["command"] = "validate";
    out.report["violations"] = rep.violations;
    out.table = "validation failed:\n";
    for (const auto& v : rep.violations) out.table += "  - " + v + "\n";
    return out;
}

ordered_json report_for(const OptimizationReport& rep, const MarketModel& model) {
    ordered_json j;
    j["mode"] = to_string(rep.fractions.mode);
    j["fractions"] = rep.fractions.fractions;
    ordered_json branches = ordered_json::array();
    for (auto b : rep.per_state_branch) branches.push_back(to_string(b));
    j["per_state_branch"] = std::move(branches);
    j["balance_residual"] = rep.balance_residual;
    j["degenerate"] = rep.degenerate;
    j["near_open_bound"] = rep.near_open_bound;
    j["no_feasible_balance"] = rep.no_feasible_balance;
    j["beta"] = rep.beta;
    j["growth_rate"] = {{"initial", rep.initial_growth}, {"stationary", rep.stationary_growth}};
    j["diagnostics"] = {{"iterations", rep.iterations}};
    j["states"] = model.states;
    return j;
}

std::string table_for(const OptimizationReport& rep, const MarketModel& model) {
    std::string t = "state      D^O                  branch         beta\n";
    for (std::size_t i = 0; i < model.num_states(); ++i) {
        char line[256];
        std::string ds;
        for (double d : rep.fractions.fractions[i]) ds += fmt(d) + " ";
        std::snprintf(line, sizeof(line), "%-10s %-20s %-14s %s\n", model.states[i].c_str(),
                      ds.c_str(), to_string(rep.per_state_branch[i]).c_str(), fmt(rep.beta[i]).c_str());
        t += line;
    }
    t += "stationary growth rate: " + fmt(rep.stationary_growth) + " nats/step\n";
    return t;
}

RunOutcome run_discrete(const ScenarioConfig& cfg, Command command, const RunOptions& opt) {
    const auto& sc = cfg.discrete();
    const RuinThreshold b{cfg.b};
    const auto validation = validate_scenario(sc.model, sc.assets, sc.weights, b);
    if (!validation.ok()) return validation_failure(validation);
    const MarketModel model = normalized(sc.model);

    RunOutcome out;
    OptimizationReport rep;
    try {
        rep = solve_model(model, sc.assets, sc.weights, b);
    } catch (const InfeasibilityError& e) {
        out.exit_code = kExitInfeasible;
        out.report["error"] = e.what();
        out.table = std::string("infeasible: ") + e.what() + "\n";
        return out;
    } catch (const std::runtime_error& e) {
        out.exit_code = kExitNoConvergence;
        out.report["error"] = e.what();
        out.table = std::string("solver did not converge: ") + e.what() + "\n";
        return out;
    }

    if (command == Command::solve) {
        out.report = report_for(rep, model);
        out.report["command"] = "solve";
        out.table = table_for(rep, model);
        return out;
    }

    const auto q = calibrating_from_fractions(model.transition, rep.fractions, sc.assets);

    if (command == Command::check) {
        const double rho = sc.assets.riskless_rate.value_or(0.0);
        const Matrix q_values = cfg.q_check ? *cfg.q_check : q.values;
        if (cfg.q_check && (q_values.rows() != model.num_states() ||
                            q_values.cols() != model.num_states())) {
            out.exit_code = kExitValidation;
            out.report["error"] = "supplied q has wrong dimensions";
            return out;
        }
        const CalibratingFunction qc{q_values};
        const auto slacks = check_dominance(sc.weights.weights, qc, model.transition, rho);
        const auto normalized_rows = check_q_normalization(qc);
        const auto profile = entropy_profile(model.transition, sc.weights.weights, qc);
        ordered_json feas = ordered_json::array();
        for (std::size_t i = 0; i < model.num_states(); ++i) {
            std::vector<double> g_eff(model.num_states());
            for (std::size_t k = 0; k < model.num_states(); ++k)
                g_eff[k] = sc.assets.effective_return(0, i, k);
            const auto I = feasibility_interval(g_eff, cfg.b, rho);
            feas.push_back({{"state", model.states[i]}, {"upper", I.upper}, {"empty", I.empty}});
        }
        out.report["command"] = "check";
        out.report["q_source"] = cfg.q_check ? "scenario" : "q-representation at D^O";
        out.report["dominance_slack"] = slacks;
        out.report["dominance_holds"] = dominance_holds(slacks);
        std::vector<int> norm_flags(normalized_rows.begin(), normalized_rows.end());
        out.report["q_row_normalized"] = norm_flags;
        out.report["alpha"] = profile.alpha;
        out.report["feasibility"] = std::move(feas);
        out.report["notes"] = {"q entries on null transitions are floored at 1e-300"};
        out.table = "dominance slack per state:\n";
        for (std::size_t i = 0; i < slacks.size(); ++i)
            out.table += "  " + model.states[i] + ": " + fmt(slacks[i]) +
                         (slacks[i] > 1e-12 ? "  VIOLATED" : "") + "\n";
        if (!dominance_holds(slacks)) {
            out.exit_code = kExitViolation;
            out.table += "dominance condition violated\n";
        }
        return out;
    }

    // simulate
    SimulationConfig sim;
    RunSettings run = cfg.run.value_or(RunSettings{});
    sim.horizon = opt.horizon.value_or(run.horizon);
    sim.replicates = opt.replicates.value_or(run.replicates);
    sim.seed = opt.seed.value_or(run.seed);
    sim.z0 = run.z0;
    sim.threads = opt.threads.value_or(run.threads);
    sim.policy = rep.fractions;
    if (sim.replicates < 30) {
        out.exit_code = kExitValidation;
        out.report["error"] = "simulate needs at least 30 replicates for the verdict";
        out.table = out.report["error"].get<std::string>() + "\n";
        return out;
    }

    std::vector<PathRecord> paths;
    try {
        paths = simulate(sim, model, sc.assets, sc.weights, q, b);
    } catch (const std::invalid_argument& e) {
        out.exit_code = kExitValidation;
        out.report["error"] = e.what();
        return out;
    }
    const auto growth =
        expected_growth(rep.fractions, model, sc.assets, sc.weights, model.initial, sim.horizon);
    const auto test = martingale_test(paths, growth.e_n, MartingaleMode::martingale);

    out.report["command"] = "simulate";
    out.report["replicates"] = sim.replicates;
    out.report["horizon"] = sim.horizon;
    out.report["seed"] = sim.seed;
    out.report["mean_S"] = test.mean_S;
    out.report["se_S"] = test.se_S;
    out.report["mean_gap"] = test.mean_gap;
    out.report["se_gap"] = test.se_gap;
    out.report["predicted_E"] = test.predicted_E;
    out.report["verdict"] = to_string(test.verdict);
    out.table = "mean S_n = " + fmt(test.mean_S) + " (se " + fmt(test.se_S) + ")\n" +
                "predicted E_n = " + fmt(test.predicted_E) + "\n" +
                "mean S_n - A_n = " + fmt(test.mean_gap) + " (se " + fmt(test.se_gap) + ")\n" +
                "verdict: " + to_string(test.verdict) + "\n";
    if (!opt.paths_csv.empty()) {
        FILE* f = std::fopen(opt.paths_csv.c_str(), "wb");
        if (!f) {
            out.exit_code = kExitInternal;
            out.report["error"] = "cannot write paths csv";
            return out;
        }
        const std::string csv = paths_to_csv(paths, model);
        std::fwrite(csv.data(), 1, csv.size(), f);
        std::fclose(f);
        out.report["paths_csv"] = opt.paths_csv;
    }
    if (test.verdict == Verdict::violation) out.exit_code = kExitViolation;
    return out;
}

RunOutcome run_continuous(const ScenarioConfig& cfg, Command command, const RunOptions&) {
    const auto& sc = cfg.continuous();
    RunOutcome out;

    std::vector<std::string> violations;
    if (!(cfg.b > 0.0)) violations.push_back("b must be positive");
    double mass = 0.0;
    try {
        mass = sc.density.quadrature_mass();
        if (std::abs(mass - 1.0) > 1e-8)
            violations.push_back("density mass is " + fmt(mass) + ", not 1 within 1e-8");
    } catch (const QuadratureError& e) {
        violations.push_back(std::string("density mass quadrature failed: ") + e.what());
    }
    if (!sc.two_asset_riskless) {
        const double cap = 1.0 + cfg.rho.value_or(0.0);
        if (!(cfg.b < cap))
            violations.push_back(cfg.rho ? "b must lie in (0,1+rho)" : "b must lie in (0,1)");
    }
    if (!violations.empty()) return validation_failure(ValidationReport{violations});

    if (command == Command::simulate) {
        out.exit_code = kExitValidation;
        out.report["error"] =
            "simulation requires a finite-state scenario; continuous laws support solve/check";
        out.table = out.report["error"].get<std::string>() + "\n";
        return out;
    }

    const double rho_eff = cfg.rho.value_or(0.0);
    try {
        if (sc.two_asset_riskless) {
            const auto& w = sc.assets.front().phi;
            auto phi_fn = [w](double x) { return w(x); };
            const auto res =
                two_asset_riskless_solver(sc.gamma, sc.theta, rho_eff, cfg.b, phi_fn);
            out.report["command"] = command == Command::solve ? "solve" : "check";
            out.report["form"] = "two_asset_riskless";
            out.report["fractions"] = res.solution;
            out.report["branch"] = to_string(res.branch);
            out.report["beta"] = res.beta_value;
            out.report["balance_residuals"] = res.residuals;
            ordered_json verts = ordered_json::array();
            for (const auto& v : res.region.vertices) verts.push_back({v[0], v[1]});
            out.report["region_vertices"] = std::move(verts);
            out.report["notes"] = {"top case of the no-ruin split is not implemented"};
            out.table = "D^O = (" + fmt(res.solution[0]) + ", " + fmt(res.solution[1]) +
                        "), branch " + to_string(res.branch) + ", beta " + fmt(res.beta_value) +
                        "\n";
        } else {
            const auto& asset = sc.assets.front();
            const auto res = solve_balance_continuous(sc.density, asset, cfg.b, rho_eff);
            out.report["command"] = command == Command::solve ? "solve" : "check";
            out.report["fraction"] = res.fraction;
            out.report["branch"] = to_string(res.branch);
            out.report["residual"] = res.residual;
            out.report["d_plus"] = res.d_plus;
            out.report["density_mass"] = mass;
            out.table = "D^O = " + fmt(res.fraction) + ", branch " + to_string(res.branch) +
                        ", d+ = " + fmt(res.d_plus) + "\n";
        }
    } catch (const InfeasibilityError& e) {
        out.exit_code = kExitInfeasible;
        out.report["error"] = e.what();
        out.table = std::string("infeasible: ") + e.what() + "\n";
        return out;
    } catch (const QuadratureError& e) {
        out.exit_code = kExitNoConvergence;
        out.report["error"] = e.what();
        return out;
    } catch (const std::invalid_argument& e) {
        out.exit_code = kExitValidation;
        out.report["error"] = e.what();
        out.table = std::string("invalid scenario: ") + e.what() + "\n";
        return out;
    }
    return out;
}

}  // namespace

RunOutcome run_scenario(const ScenarioConfig& config, Command command, const RunOptions& options) {
    if (config.is_discrete()) return run_discrete(config, command, options);
    return run_continuous(config, command, options);
}

}  // namespace kelly
