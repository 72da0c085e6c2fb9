import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tsa_storage.analysis import (AnalysisError, ComparisonReport, CostBreakdown, cost_share_error,
                                  export_soc_heatmap, parse_kind, read_soc_heatmap, run_formulation,
                                  run_sweep)
from tsa_storage.cases import toy_seasonal_system
from tsa_storage.timeseries import Profile, ProfileSet

from conftest import source_demand_system


def test_cost_share_error_hand_cases():
    ref = {"a": 100.0, "b": 100.0}
    assert cost_share_error(ref, {"a": 130.0, "b": 100.0}) == pytest.approx(0.15)
    assert cost_share_error(ref, {"a": 100.0, "c": 80.0}) == pytest.approx(0.9)
    assert cost_share_error(CostBreakdown.from_totals(ref), ref) == 0.0
    with pytest.raises(AnalysisError):
        cost_share_error({"a": 0.0}, {"a": 1.0})
    with pytest.raises(AnalysisError):
        CostBreakdown({"a": -1.0}, {})


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0, 1e4), min_size=1, max_size=6),
       st.lists(st.floats(0, 1e4), min_size=1, max_size=6), st.randoms(use_true_random=False))
def test_cost_share_error_properties(ref_vals, test_vals, rnd):
    ref = {f"d{i}": v for i, v in enumerate(ref_vals)}
    tst = {f"d{i}": v for i, v in enumerate(test_vals)}
    if sum(ref.values()) == 0:
        return
    e = cost_share_error(ref, tst)
    assert e >= 0
    assert cost_share_error(ref, ref) == 0
    keys = list(ref)
    rnd.shuffle(keys)
    assert cost_share_error({k: ref[k] for k in keys}, tst) == pytest.approx(e, rel=1e-12)


def test_parse_kind():
    assert parse_kind("linked+simplified") == ("linked", True)
    assert parse_kind("independent") == ("independent", False)
    with pytest.raises(Exception):
        parse_kind("weekly")


@pytest.fixture(scope="module")
def toy():
    return toy_seasonal_system(0, 6, 6)


@pytest.fixture(scope="module")
def sweep(toy):
    return run_sweep(*toy, [2, 6], steps_per_period=6)


def test_sweep_rows(sweep):
    assert len(sweep.rows) == 5
    assert sweep.rows[0].kind == "full"
    assert all(r.ok for r in sweep.rows)
    assert sweep.row("linked", 6).cost_share_error <= 1e-6
    assert sweep.row("independent", 2).objective >= sweep.row("linked", 2).objective - 1e-6


def test_sweep_resume_and_determinism(toy, sweep, tmp_path):
    again = run_sweep(*toy, [2, 6], steps_per_period=6)
    assert again.without_timing() == sweep.without_timing()
    path = sweep.write_json(tmp_path / "report.json")
    resumed = run_sweep(*toy, [2, 6], steps_per_period=6, resume=ComparisonReport.read_json(path))
    assert resumed.without_timing() == sweep.without_timing()
    # timings carried over means nothing was re-solved
    assert [r.solve_seconds for r in resumed.rows] == [r.solve_seconds for r in sweep.rows]
    csv_text = sweep.write_csv(tmp_path / "report.csv").read_text().splitlines()
    assert csv_text[0].startswith("kind,n_typical_days,objective,cost_share_error,solve_seconds")
    assert len(csv_text) == 6


def test_sweep_range_check(toy):
    with pytest.raises(AnalysisError):
        run_sweep(*toy, [0])
    with pytest.raises(AnalysisError):
        run_sweep(*toy, [7], steps_per_period=6)


def test_flat_system_has_zero_error():
    day_avail = np.array([1.0, 0.5, 0.0, 0.2])
    day_load = np.array([2.0, 1.0, 3.0, 1.0])
    prof = ProfileSet.from_profiles([Profile("avail", np.tile(day_avail, 5), "-"),
                                     Profile("load", np.tile(day_load, 5))])
    report = run_sweep(source_demand_system(storage=True), prof, [1, 3], steps_per_period=4)
    for r in report.rows:
        assert r.ok
        assert r.cost_share_error == pytest.approx(0.0, abs=1e-9)


def test_run_formulation_attribution(toy):
    res = run_formulation(*toy, "linked", 3, steps_per_period=6)
    b = res.breakdown
    assert b.total == pytest.approx(res.solution.objective, rel=1e-9)
    assert sum(b.variable.values()) == pytest.approx(
        res.solution.objective - sum(b.fixed.values()), abs=1e-6)
    assert res.solve_seconds >= 0


def test_heatmap_orientation(tmp_path):
    soc = np.array([[1.0, 2.0], [3.0, 4.0]])
    csv_path, side = export_soc_heatmap(soc, tmp_path / "soc.csv")
    lines = csv_path.read_text().splitlines()
    assert lines[0] == "step,period_0,period_1"
    assert lines[1] == "0,1.0,3.0"
    assert lines[2] == "1,2.0,4.0"
    assert json.loads(side.read_text())["n_periods"] == 2
    np.testing.assert_array_equal(read_soc_heatmap(csv_path), soc)


def test_heatmap_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    for shape in [(1, 1), (3, 5), (7, 2)]:
        soc = rng.uniform(0, 1e4, shape)
        path, _ = export_soc_heatmap(soc, tmp_path / "x.csv")
        np.testing.assert_allclose(read_soc_heatmap(path), soc, atol=1e-12)
    path, _ = export_soc_heatmap(np.zeros((4, 3)), tmp_path / "z.csv")
    assert not read_soc_heatmap(path).any()
