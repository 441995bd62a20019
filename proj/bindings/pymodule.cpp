#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "kelly/entropy.hpp"
#include "kelly/model.hpp"
#include "kelly/optimizer_continuous.hpp"
#include "kelly/optimizer_discrete.hpp"
#include "kelly/scenario.hpp"
#include "kelly/simulator.hpp"

namespace py = pybind11;
using namespace kelly;

namespace {

Matrix matrix_from_lists(const std::vector<std::vector<double>>& rows) {
    return Matrix::from_rows(rows);
}

}  // namespace

PYBIND11_MODULE(_kellyopt, m) {
    m.doc() = "risk-averse log-optimal investment fractions under weighted growth objectives";

    py::class_<Matrix>(m, "Matrix")
        .def(py::init(&matrix_from_lists), py::arg("rows"))
        .def_property_readonly("rows", &Matrix::rows)
        .def_property_readonly("cols", &Matrix::cols)
        .def("tolist", &Matrix::to_rows)
        .def("__getitem__", [](const Matrix& mat, std::pair<std::size_t, std::size_t> ij) {
            return mat(ij.first, ij.second);
        });

    py::class_<MarketModel>(m, "MarketModel")
        .def(py::init([](std::vector<std::string> states, std::vector<std::vector<double>> P,
                         std::vector<double> initial) {
                 return MarketModel::make(std::move(states), Matrix::from_rows(P),
                                          std::move(initial));
             }),
             py::arg("states"), py::arg("transition"), py::arg("initial"))
        .def_readonly("states", &MarketModel::states)
        .def_readonly("initial", &MarketModel::initial)
        .def_readonly("iid_flag", &MarketModel::iid_flag)
        .def_property_readonly("transition",
                               [](const MarketModel& mm) { return mm.transition.to_rows(); });

    py::class_<AssetSet>(m, "AssetSet")
        .def(py::init([](std::vector<std::vector<std::vector<double>>> returns,
                         std::optional<double> riskless_rate, std::vector<std::string> names) {
                 AssetSet a;
                 for (const auto& r : returns) a.returns.push_back(Matrix::from_rows(r));
                 a.riskless_rate = riskless_rate;
                 a.names = names.empty() ? std::vector<std::string>(a.returns.size(), "asset")
                                         : std::move(names);
                 return a;
             }),
             py::arg("returns"), py::arg("riskless_rate") = std::nullopt,
             py::arg("names") = std::vector<std::string>{})
        .def_property_readonly("num_assets", &AssetSet::num_assets)
        .def_readonly("riskless_rate", &AssetSet::riskless_rate);

    py::class_<WeightFunction>(m, "WeightFunction")
        .def(py::init([](std::vector<std::vector<double>> w) {
                 return WeightFunction{Matrix::from_rows(w)};
             }),
             py::arg("weights"));

    py::class_<RuinThreshold>(m, "RuinThreshold")
        .def(py::init([](double b) { return RuinThreshold{b}; }), py::arg("b"))
        .def_readonly("b", &RuinThreshold::b);

    py::class_<ValidationReport>(m, "ValidationReport")
        .def_readonly("violations", &ValidationReport::violations)
        .def("ok", &ValidationReport::ok);

    m.def("validate_scenario", &validate_scenario, py::arg("model"), py::arg("assets"),
          py::arg("weights"), py::arg("b"));
    m.def("normalized", &normalized, py::arg("model"));
    m.def("stationary_distribution", &stationary_distribution, py::arg("model"));
    m.def("detect_iid",
          [](std::vector<std::vector<double>> P) { return detect_iid(Matrix::from_rows(P)); });

    // entropy
    py::class_<CalibratingFunction>(m, "CalibratingFunction")
        .def(py::init([](std::vector<std::vector<double>> values) {
                 return CalibratingFunction{Matrix::from_rows(values)};
             }),
             py::arg("values"))
        .def_property_readonly("values",
                               [](const CalibratingFunction& q) { return q.values.to_rows(); });

    py::class_<EntropyProfile>(m, "EntropyProfile")
        .def(py::init([](std::vector<double> alpha) { return EntropyProfile{std::move(alpha)}; }),
             py::arg("alpha"))
        .def_readonly("alpha", &EntropyProfile::alpha);

    m.def("weighted_kl_row",
          [](std::vector<double> p, std::vector<double> phi, std::vector<double> q) {
              return weighted_kl_row(p, phi, q);
          },
          py::arg("p_row"), py::arg("phi_row"), py::arg("q_row"));
    m.def("entropy_profile",
          [](std::vector<std::vector<double>> p, std::vector<std::vector<double>> phi,
             const CalibratingFunction& q) {
              return entropy_profile(Matrix::from_rows(p), Matrix::from_rows(phi), q);
          });
    m.def("check_dominance",
          [](std::vector<std::vector<double>> phi, const CalibratingFunction& q,
             std::vector<std::vector<double>> p, double rho) {
              return check_dominance(Matrix::from_rows(phi), q, Matrix::from_rows(p), rho);
          },
          py::arg("phi"), py::arg("q"), py::arg("p"), py::arg("rho") = 0.0);
    m.def("calibrating_from_fractions",
          [](std::vector<std::vector<double>> p, const PolicyFractions& policy,
             const AssetSet& assets) {
              return calibrating_from_fractions(Matrix::from_rows(p), policy, assets);
          },
          py::arg("p"), py::arg("policy"), py::arg("assets"));
    m.def("check_q_normalization", &check_q_normalization, py::arg("q"));
    m.def("cumulative_entropy_path",
          [](std::vector<std::size_t> path, const EntropyProfile& prof) {
              return cumulative_entropy_path(path, prof);
          },
          py::arg("path"), py::arg("profile"));
    m.def("gibbs_increment",
          [](std::vector<double> p, std::vector<double> phi, std::vector<double> g,
             std::vector<double> q, double c, double rho_eff) {
              return gibbs_increment(p, phi, g, q, c, rho_eff);
          },
          py::arg("p_row"), py::arg("phi_row"), py::arg("g_row"), py::arg("q_row"), py::arg("c"),
          py::arg("rho_eff") = 0.0);

    // discrete optimizer
    py::enum_<PolicyMode>(m, "PolicyMode")
        .value("scheme1", PolicyMode::scheme1)
        .value("scheme2", PolicyMode::scheme2);
    py::enum_<Branch>(m, "Branch")
        .value("interior_root", Branch::interior_root)
        .value("zero", Branch::zero)
        .value("boundary", Branch::boundary);

    py::class_<PolicyFractions>(m, "PolicyFractions")
        .def(py::init([](std::vector<std::vector<double>> fractions, PolicyMode mode) {
                 return PolicyFractions{std::move(fractions), mode};
             }),
             py::arg("fractions"), py::arg("mode") = PolicyMode::scheme1)
        .def_static("scalar", &PolicyFractions::scalar, py::arg("per_state"),
                    py::arg("mode") = PolicyMode::scheme1)
        .def_readonly("fractions", &PolicyFractions::fractions)
        .def_readonly("mode", &PolicyFractions::mode);

    py::class_<FeasibilityInterval>(m, "FeasibilityInterval")
        .def_readonly("upper", &FeasibilityInterval::upper)
        .def_readonly("empty", &FeasibilityInterval::empty);

    py::class_<ScalarSolveResult>(m, "ScalarSolveResult")
        .def_readonly("fraction", &ScalarSolveResult::fraction)
        .def_readonly("branch", &ScalarSolveResult::branch)
        .def_readonly("residual", &ScalarSolveResult::residual)
        .def_readonly("iterations", &ScalarSolveResult::iterations)
        .def_readonly("near_open_bound", &ScalarSolveResult::near_open_bound);

    py::class_<MultiAssetResult>(m, "MultiAssetResult")
        .def_readonly("fractions", &MultiAssetResult::fractions)
        .def_readonly("branch", &MultiAssetResult::branch)
        .def_readonly("degenerate", &MultiAssetResult::degenerate)
        .def_readonly("beta_value", &MultiAssetResult::beta_value)
        .def_readonly("balance_residuals", &MultiAssetResult::balance_residuals)
        .def_readonly("grad_norm", &MultiAssetResult::grad_norm)
        .def_readonly("iterations", &MultiAssetResult::iterations)
        .def_readonly("near_open_bound", &MultiAssetResult::near_open_bound)
        .def_readonly("no_feasible_balance", &MultiAssetResult::no_feasible_balance);

    py::class_<OptimizationReport>(m, "OptimizationReport")
        .def_readonly("fractions", &OptimizationReport::fractions)
        .def_property_readonly("per_state_branch",
                               [](const OptimizationReport& r) {
                                   std::vector<std::string> out;
                                   for (auto b : r.per_state_branch) out.push_back(to_string(b));
                                   return out;
                               })
        .def_readonly("balance_residual", &OptimizationReport::balance_residual)
        .def_readonly("degenerate", &OptimizationReport::degenerate)
        .def_readonly("no_feasible_balance", &OptimizationReport::no_feasible_balance)
        .def_readonly("beta", &OptimizationReport::beta)
        .def_readonly("stationary_growth", &OptimizationReport::stationary_growth)
        .def_readonly("initial_growth", &OptimizationReport::initial_growth);

    m.def("feasibility_interval",
          [](std::vector<double> g, double b, double rho_eff) {
              return feasibility_interval(g, b, rho_eff);
          },
          py::arg("g_row"), py::arg("b"), py::arg("rho_eff") = 0.0);
    m.def("solve_balance_scalar",
          [](std::vector<double> p, std::vector<double> phi, std::vector<double> g, double b,
             double rho_eff) { return solve_balance_scalar(p, phi, g, b, rho_eff); },
          py::arg("p_row"), py::arg("phi_row"), py::arg("g_row"), py::arg("b"),
          py::arg("rho_eff") = 0.0);
    m.def("closed_form_binary", &closed_form_binary, py::arg("p1"), py::arg("p0"),
          py::arg("gamma1"), py::arg("gamma2"), py::arg("b"));
    m.def("closed_form_binary_riskless", &closed_form_binary_riskless, py::arg("p1"),
          py::arg("p0"), py::arg("gamma"), py::arg("rho"), py::arg("b"));
    m.def("optimize_multiasset",
          [](std::vector<double> p, std::vector<double> phi,
             std::vector<std::vector<double>> g, double b, double rho_eff) {
              return optimize_multiasset(p, phi, g, b, rho_eff);
          },
          py::arg("p_row"), py::arg("phi_row"), py::arg("g"), py::arg("b"),
          py::arg("rho_eff") = 0.0);
    m.def("expected_growth",
          [](const PolicyFractions& policy, const MarketModel& model, const AssetSet& assets,
             const WeightFunction& weights, std::vector<double> start, int n) {
              return expected_growth(policy, model, assets, weights, start, n);
          },
          py::arg("policy"), py::arg("model"), py::arg("assets"), py::arg("weights"),
          py::arg("start_dist"), py::arg("n"));
    py::class_<GrowthResult>(m, "GrowthResult")
        .def_readonly("beta", &GrowthResult::beta)
        .def_readonly("e_n", &GrowthResult::e_n);
    m.def("solve_model", &solve_model, py::arg("model"), py::arg("assets"), py::arg("weights"),
          py::arg("b"));

    // continuous optimizer
    py::class_<DensityModel>(m, "DensityModel")
        .def_static("uniform", &DensityModel::uniform, py::arg("a1"), py::arg("a2"))
        .def_static("gaussian", &DensityModel::gaussian, py::arg("sigma"))
        .def_static("tabulated", &DensityModel::tabulated, py::arg("xs"), py::arg("fs"))
        .def("pdf", &DensityModel::pdf)
        .def("quadrature_mass", &DensityModel::quadrature_mass, py::arg("abs_tol") = 1e-10);

    py::class_<ContinuousReturn>(m, "ContinuousReturn")
        .def_static("piecewise_linear",
                    [](double dp, double dm, double gp, double gm) {
                        ContinuousReturn g;
                        g.form = ReturnForm::piecewise_linear;
                        g.delta_plus = dp;
                        g.delta_minus = dm;
                        g.gamma_plus = gp;
                        g.gamma_minus = gm;
                        return g;
                    },
                    py::arg("delta_plus"), py::arg("delta_minus"), py::arg("gamma_plus"),
                    py::arg("gamma_minus"))
        .def_static("positive_part_linear",
                    [](double a1, double a2, double a3) {
                        ContinuousReturn g;
                        g.form = ReturnForm::positive_part_linear;
                        g.a1 = a1;
                        g.a2 = a2;
                        g.a3 = a3;
                        return g;
                    },
                    py::arg("a1"), py::arg("a2"), py::arg("a3"))
        .def_static("linear",
                    [](double gamma) {
                        ContinuousReturn g;
                        g.form = ReturnForm::linear;
                        g.gamma = gamma;
                        return g;
                    },
                    py::arg("gamma"))
        .def_static("logarithmic",
                    [](double theta) {
                        ContinuousReturn g;
                        g.form = ReturnForm::logarithmic;
                        g.theta = theta;
                        return g;
                    },
                    py::arg("theta"))
        .def("__call__", &ContinuousReturn::operator());

    py::class_<ContinuousWeight>(m, "ContinuousWeight")
        .def_static("constant", [] { return ContinuousWeight{}; })
        .def_static("piecewise_quadratic",
                    [](double tp, double gp, double dp, double tm, double gm, double dm) {
                        ContinuousWeight w;
                        w.form = WeightForm::piecewise_quadratic;
                        w.theta_plus = tp;
                        w.gamma_plus = gp;
                        w.delta_plus = dp;
                        w.theta_minus = tm;
                        w.gamma_minus = gm;
                        w.delta_minus = dm;
                        return w;
                    })
        .def("__call__", &ContinuousWeight::operator());

    py::class_<ContinuousAsset>(m, "ContinuousAsset")
        .def(py::init([](ContinuousReturn g, ContinuousWeight phi) {
                 return ContinuousAsset{std::move(g), std::move(phi)};
             }),
             py::arg("g"), py::arg("phi") = ContinuousWeight{});

    py::class_<ContinuousSolveResult>(m, "ContinuousSolveResult")
        .def_readonly("fraction", &ContinuousSolveResult::fraction)
        .def_readonly("branch", &ContinuousSolveResult::branch)
        .def_readonly("residual", &ContinuousSolveResult::residual)
        .def_readonly("d_plus", &ContinuousSolveResult::d_plus);

    py::class_<TranscendentalResult>(m, "TranscendentalResult")
        .def_readonly("fraction", &TranscendentalResult::fraction)
        .def_readonly("residual", &TranscendentalResult::residual)
        .def_readonly("branch", &TranscendentalResult::branch)
        .def_readonly("d_plus", &TranscendentalResult::d_plus)
        .def_readonly("expected_return", &TranscendentalResult::expected_return);

    py::class_<GaussianWeight>(m, "GaussianWeight")
        .def(py::init([](double tp, double gp, double dp, double tm, double gm, double dm) {
                 return GaussianWeight{tp, gp, dp, tm, gm, dm};
             }),
             py::arg("theta_plus") = 0.0, py::arg("gamma_plus") = 0.0, py::arg("delta_plus") = 1.0,
             py::arg("theta_minus") = 0.0, py::arg("gamma_minus") = 0.0,
             py::arg("delta_minus") = 1.0);

    py::class_<FeasibleRegion2D>(m, "FeasibleRegion2D")
        .def_readonly("vertices", &FeasibleRegion2D::vertices);

    py::class_<TwoAssetResult>(m, "TwoAssetResult")
        .def_readonly("region", &TwoAssetResult::region)
        .def_readonly("solution", &TwoAssetResult::solution)
        .def_readonly("branch", &TwoAssetResult::branch)
        .def_readonly("beta_value", &TwoAssetResult::beta_value)
        .def_readonly("residuals", &TwoAssetResult::residuals)
        .def_readonly("top_case_unimplemented", &TwoAssetResult::top_case_unimplemented);

    m.def("solve_balance_continuous", &solve_balance_continuous, py::arg("model"),
          py::arg("asset"), py::arg("b"), py::arg("rho_eff") = 0.0, py::arg("split_scale") = 1);
    m.def("uniform_piecewise_linear_root", &uniform_piecewise_linear_root, py::arg("a1"),
          py::arg("a2"), py::arg("delta_plus"), py::arg("delta_minus"), py::arg("gamma_plus"),
          py::arg("gamma_minus"), py::arg("b"));
    m.def("gaussian_example_solver", &gaussian_example_solver, py::arg("sigma"), py::arg("a1"),
          py::arg("a2"), py::arg("a3"), py::arg("phi") = GaussianWeight{}, py::arg("b"));
    m.def("two_asset_riskless_solver",
          [](double gamma, double theta, double rho, double b,
             const std::function<double(double)>& phi, const std::vector<double>& breaks) {
              return two_asset_riskless_solver(gamma, theta, rho, b, phi, breaks);
          },
          py::arg("gamma"), py::arg("theta"), py::arg("rho"), py::arg("b"), py::arg("phi"),
          py::arg("phi_breakpoints") = std::vector<double>{});

    // simulator (proportional policies only; python callbacks do not cross threads)
    py::enum_<MartingaleMode>(m, "MartingaleMode")
        .value("supermartingale", MartingaleMode::supermartingale)
        .value("martingale", MartingaleMode::martingale);
    py::enum_<Verdict>(m, "Verdict")
        .value("consistent_supermartingale", Verdict::consistent_supermartingale)
        .value("consistent_martingale", Verdict::consistent_martingale)
        .value("violation", Verdict::violation);

    py::class_<SimulationConfig>(m, "SimulationConfig")
        .def(py::init([](int horizon, int replicates, std::uint64_t seed, double z0,
                         PolicyFractions policy, int threads) {
                 SimulationConfig c;
                 c.horizon = horizon;
                 c.replicates = replicates;
                 c.seed = seed;
                 c.z0 = z0;
                 c.policy = std::move(policy);
                 c.threads = threads;
                 return c;
             }),
             py::arg("horizon"), py::arg("replicates"), py::arg("seed"), py::arg("z0"),
             py::arg("policy"), py::arg("threads") = 0);

    py::class_<PathRecord>(m, "PathRecord")
        .def_readonly("states", &PathRecord::states)
        .def_readonly("capital", &PathRecord::capital)
        .def_readonly("s_values", &PathRecord::s_values)
        .def_readonly("a_values", &PathRecord::a_values)
        .def_readonly("balance_violated", &PathRecord::balance_violated);

    py::class_<MartingaleTestResult>(m, "MartingaleTestResult")
        .def_readonly("mean_gap", &MartingaleTestResult::mean_gap)
        .def_readonly("se_gap", &MartingaleTestResult::se_gap)
        .def_readonly("mean_S", &MartingaleTestResult::mean_S)
        .def_readonly("se_S", &MartingaleTestResult::se_S)
        .def_readonly("predicted_E", &MartingaleTestResult::predicted_E)
        .def_readonly("verdict", &MartingaleTestResult::verdict);

    m.def("derive_subseed", &derive_subseed, py::arg("master"), py::arg("replicate"));
    m.def("simulate",
          [](const SimulationConfig& cfg, const MarketModel& model, const AssetSet& assets,
             const WeightFunction& weights, const CalibratingFunction& q, const RuinThreshold& b) {
              py::gil_scoped_release release;
              return simulate(cfg, model, assets, weights, q, b);
          },
          py::arg("config"), py::arg("model"), py::arg("assets"), py::arg("weights"),
          py::arg("q"), py::arg("b"));
    m.def("replay",
          [](const SimulationConfig& cfg, const MarketModel& model, const AssetSet& assets,
             const WeightFunction& weights, const CalibratingFunction& q, const RuinThreshold& b) {
              py::gil_scoped_release release;
              return replay(cfg, model, assets, weights, q, b);
          },
          py::arg("config"), py::arg("model"), py::arg("assets"), py::arg("weights"),
          py::arg("q"), py::arg("b"));
    m.def("martingale_test",
          [](const std::vector<PathRecord>& paths, double predicted_E, MartingaleMode mode) {
              return martingale_test(paths, predicted_E, mode);
          },
          py::arg("paths"), py::arg("predicted_E"), py::arg("mode"));
    m.def("paths_to_csv",
          [](const std::vector<PathRecord>& paths, const MarketModel& model) {
              return paths_to_csv(paths, model);
          });

    // scenario front end
    m.def("parse_and_run",
          [](const std::string& text, const std::string& command) {
              const auto cfg = parse_scenario(text);
              Command cmd = Command::solve;
              if (command == "simulate") cmd = Command::simulate;
              else if (command == "check") cmd = Command::check;
              else if (command != "solve") throw std::invalid_argument("unknown command");
              const auto outcome = run_scenario(cfg, cmd);
              return py::make_tuple(outcome.exit_code, outcome.report.dump(), outcome.table);
          },
          py::arg("scenario_text"), py::arg("command"));
    m.def("serialize_scenario", [](const std::string& text) {
        return serialize_scenario(parse_scenario(text));
    });

    py::register_exception<InfeasibilityError>(m, "InfeasibilityError");
    py::register_exception<ScenarioParseError>(m, "ScenarioParseError");
}
