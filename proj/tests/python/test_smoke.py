"""Smoke tests for the python bindings."""

import json
import math
import os

import pytest

try:
    import kellyopt as ko
except ImportError:
    import _kellyopt as ko

SCENARIO_DIR = os.environ.get("KELLY_SCENARIO_DIR", os.path.join(os.path.dirname(__file__), "..", "..", "scenarios"))


def binary_world():
    model = ko.MarketModel(["w", "l"], [[0.6, 0.4], [0.6, 0.4]], [0.6, 0.4])
    assets = ko.AssetSet([[[1.0, -1.0], [1.0, -1.0]]])
    weights = ko.WeightFunction([[1.0, 1.0], [1.0, 1.0]])
    return model, assets, weights


def test_binary_kelly_fraction():
    res = ko.solve_balance_scalar([0.6, 0.4], [1.0, 1.0], [1.0, -1.0], 0.5)
    assert res.branch == ko.Branch.interior_root
    assert abs(res.fraction - 0.2) < 1e-10
    assert abs(ko.closed_form_binary(0.6, 0.4, 1.0, 1.0, 0.5) - 0.2) < 1e-12


def test_riskless_closed_form():
    assert abs(ko.closed_form_binary_riskless(0.8, 0.2, 2.0, 0.0, 0.1) - 1.0 / 15.0) < 1e-12
    assert ko.closed_form_binary_riskless(0.9, 0.1, 0.8, 0.0, 0.1) == 0.0


def test_weighted_kl_and_dominance():
    assert abs(ko.weighted_kl_row([0.5, 0.5], [1.0, 1.0], [0.25, 0.25]) - math.log(2)) < 1e-12
    model, assets, weights = binary_world()
    policy = ko.PolicyFractions.scalar([0.2, 0.2])
    q = ko.calibrating_from_fractions(model.transition, policy, assets)
    slack = ko.check_dominance([[1.0, 1.0], [1.0, 1.0]], q, model.transition)
    assert all(s <= 1e-12 for s in slack)
    assert all(ko.check_q_normalization(q))


def test_stationary_distribution():
    model = ko.MarketModel(["a", "b"], [[0.7, 0.3], [0.6, 0.4]], [0.5, 0.5])
    pi = ko.stationary_distribution(model)
    assert abs(pi[0] - 2.0 / 3.0) < 1e-10


def test_simulation_is_deterministic():
    model, assets, weights = binary_world()
    policy = ko.PolicyFractions.scalar([0.2, 0.2])
    q = ko.calibrating_from_fractions(model.transition, policy, assets)
    cfg = ko.SimulationConfig(horizon=10, replicates=64, seed=3, z0=1.0, policy=policy)
    b = ko.RuinThreshold(0.5)
    run1 = ko.simulate(cfg, model, assets, weights, q, b)
    run2 = ko.replay(cfg, model, assets, weights, q, b)
    assert [p.capital for p in run1] == [p.capital for p in run2]
    res = ko.martingale_test(run1, 10 * (0.6 * math.log(1.2) + 0.4 * math.log(0.8)),
                             ko.MartingaleMode.martingale)
    assert res.verdict != ko.Verdict.violation


def test_continuous_solvers():
    r = ko.uniform_piecewise_linear_root(-1.0, 1.0, 0.5, 0.5, 0.3, -0.1, 0.2)
    assert abs(r.fraction - 0.46110883942053147) < 1e-9
    g = ko.gaussian_example_solver(1.0, 1.0, 0.5, 1.0, ko.GaussianWeight(), 0.5)
    assert abs(g.fraction - 0.10502432964644617) < 1e-7
    density = ko.DensityModel.uniform(-1.0, 1.0)
    asset = ko.ContinuousAsset(ko.ContinuousReturn.piecewise_linear(1.0, 1.0, 0.2, 0.2))
    res = ko.solve_balance_continuous(density, asset, 0.1)
    assert abs(res.fraction - 0.61496660019097876) < 1e-8


def test_two_asset_solver_region():
    r = ko.two_asset_riskless_solver(1.0, 1.0, 0.0, 0.2, lambda x: 1.0)
    assert len(r.region.vertices) == 3
    assert r.solution == [0.0, 0.0] or tuple(r.solution) == (0.0, 0.0)


def test_scenario_round_trip_and_run():
    path = os.path.join(SCENARIO_DIR, "binary_kelly.json")
    with open(path) as f:
        text = f.read()
    code, report, table = ko.parse_and_run(text, "solve")
    assert code == 0
    rep = json.loads(report)
    assert abs(rep["fractions"][0][0] - 0.2) < 1e-10
    s1 = ko.serialize_scenario(text)
    s2 = ko.serialize_scenario(s1)
    assert s1 == s2


def test_infeasible_raises():
    with pytest.raises(Exception):
        ko.solve_balance_scalar([0.6, 0.4], [1.0, 1.0], [1.0, -1.0], 1.4)
