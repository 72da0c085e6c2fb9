import numpy as np
import pytest

from conftest import enumerate_binaries, random_lp, random_milp, vertex_enumeration
from tsa_storage.milp import (ExternalSolver, MilpModel, ModelError, MpsFormatError, Status,
                              TooManyBinariesError, VarKind, parse_solution_file, read_mps,
                              sanitize_name, solve, solve_lp, solve_milp, write_mps)


def lower_bound_from_multipliers(model, y):
    """Lagrangian bound for any sign-correct row multipliers ``y``."""
    A, senses, rhs, c, lb, ub = model.arrays()
    red = c - A.T @ y
    box = np.where(red >= 0, lb, ub)
    return float(y @ rhs + red @ box + model.objective_constant)


def test_single_bound_lp():
    m = MilpModel()
    x = m.add_var("x")
    m.add_constraint({x: 1}, ">=", 3)
    m.add_objective({x: 1})
    sol = solve_lp(m)
    assert sol.status is Status.OPTIMAL
    assert sol.objective == pytest.approx(3.0)


def test_two_variable_lp():
    m = MilpModel()
    x, y = m.add_var("x"), m.add_var("y")
    m.add_constraint({x: 1, y: 1}, "<=", 4)
    m.add_objective({x: -1, y: -1})
    assert solve_lp(m).objective == pytest.approx(-4.0)


def test_infeasible_and_unbounded():
    m = MilpModel()
    x = m.add_var("x")
    m.add_constraint({x: 1}, "<=", -1)
    assert solve_lp(m).status is Status.INFEASIBLE
    m = MilpModel()
    x = m.add_var("x")
    m.add_objective({x: -1})
    assert solve_lp(m).status is Status.UNBOUNDED


def test_lp_matches_vertex_enumeration():
    rng = np.random.default_rng(2024)
    for _ in range(200):
        model, data = random_lp(rng)
        ref = vertex_enumeration(*data)
        sol = solve_lp(model)
        if ref is None:
            assert sol.status is Status.INFEASIBLE
        else:
            assert sol.status is Status.OPTIMAL
            assert sol.objective == pytest.approx(ref, abs=1e-7, rel=1e-9)


def test_weak_duality_spot_check():
    rng = np.random.default_rng(7)
    checked = 0
    for _ in range(40):
        model, (A, senses, rhs, c, lb, ub) = random_lp(rng)
        sol = solve_lp(model)
        if not sol.is_optimal:
            continue
        for _ in range(20):
            y = rng.normal(0, 1, len(rhs))
            y = np.where(senses == ">=", np.abs(y), np.where(senses == "<=", -np.abs(y), y))
            assert sol.objective >= lower_bound_from_multipliers(model, y) - 1e-7
        checked += 1
    assert checked > 20


def test_spec_milp_example():
    m = MilpModel()
    d = m.add_var("delta", kind=VarKind.BINARY)
    x = m.add_var("x")
    m.add_constraint({x: 1, d: -5}, "<=", 0)
    m.add_constraint({x: 1}, ">=", 3)
    m.add_objective({d: 10, x: 2})
    sol = solve_milp(m)
    assert sol.objective == pytest.approx(16.0)
    assert sol[d] == 1 and sol[x] == pytest.approx(3.0)


def test_all_fixed_binaries_equal_lp():
    rng = np.random.default_rng(3)
    m = random_milp(rng, 3)
    for j, v in zip(m.binary_indices(), (1, 1, 0)):
        m.set_bounds(j, v, v)
    assert solve_lp(m).is_optimal
    assert solve_milp(m).objective == pytest.approx(solve_lp(m).objective)


@pytest.mark.parametrize("n_bin", [1, 2, 3, 5, 8, 10])
def test_branch_and_bound_matches_enumeration(n_bin):
    rng = np.random.default_rng(100 + n_bin)
    for _ in range(4 if n_bin < 10 else 2):
        m = random_milp(rng, n_bin)
        ref = enumerate_binaries(m)
        sol = solve_milp(m)
        if ref is None:
            assert sol.status is Status.INFEASIBLE
        else:
            assert sol.objective == pytest.approx(ref, abs=1e-6)
            assert np.all(np.isin(sol.x[m.binary_indices()], [0.0, 1.0]))


def test_binary_cap():
    m = MilpModel()
    for j in range(4):
        m.add_var(f"b{j}", kind=VarKind.BINARY)
    with pytest.raises(TooManyBinariesError, match="write_mps"):
        solve_milp(m, max_binaries=3)


def test_model_validation():
    m = MilpModel()
    m.add_var("x")
    with pytest.raises(ModelError):
        m.add_var("x")
    with pytest.raises(ModelError):
        m.add_constraint({5: 1.0}, "<=", 1)
    with pytest.raises(ModelError):
        m.add_constraint({0: 1.0}, "~", 1)


def _same_model(a, b):
    Aa, sa, ra, ca, la, ua = a.arrays()
    Ab, sb, rb, cb, lb, ub = b.arrays()
    assert [v.name for v in a.variables] == [v.name for v in b.variables]
    assert [v.kind for v in a.variables] == [v.kind for v in b.variables]
    assert [c.name for c in a.constraints] == [c.name for c in b.constraints]
    assert (Aa != Ab).nnz == 0
    assert list(sa) == list(sb)
    np.testing.assert_array_equal(ra, rb)
    np.testing.assert_array_equal(ca, cb)
    np.testing.assert_array_equal(la, lb)
    np.testing.assert_array_equal(ua, ub)
    assert a.objective_constant == b.objective_constant


def test_mps_round_trip_toy(tmp_path):
    m = MilpModel("toy")
    d = m.add_var("delta", kind=VarKind.BINARY)
    x = m.add_var("x", -2, 7.5)
    f = m.add_var("free", -np.inf, np.inf)
    neg = m.add_var("neg", -np.inf, 3)
    m.add_var("fixed", 2, 2)
    m.add_constraint({x: 1, d: -5}, "<=", 0, "cap")
    m.add_constraint({x: 1, f: 1}, ">=", 1.25, "low")
    m.add_constraint({f: 1, neg: -1}, "=", 0.1, "eq")
    m.add_objective({d: 10, x: 2}, constant=1.5)
    back = read_mps(write_mps(m, tmp_path / "toy.mps"))
    _same_model(m, back)
    assert solve_milp(back).objective == pytest.approx(solve_milp(m).objective)


def test_mps_empty_model(tmp_path):
    path = write_mps(MilpModel("empty"), tmp_path / "e.mps")
    text = path.read_text()
    assert text.rstrip().endswith("ENDATA")
    assert read_mps(path).n_vars == 0


def test_mps_rejects_unsupported(tmp_path):
    path = write_mps(MilpModel("r"), tmp_path / "r.mps")
    text = path.read_text().replace("RANGES\n", "RANGES\n    RNG  c0  1.0\n")
    path.write_text(text)
    with pytest.raises(MpsFormatError, match="RANGES"):
        read_mps(path)
    bad = tmp_path / "bad.mps"
    bad.write_text("NAME x\nROWS\n N OBJ\nCOLUMNS\n    x  nowhere  1\nENDATA\n")
    with pytest.raises(MpsFormatError):
        read_mps(bad)


def test_sanitize_name():
    assert sanitize_name("a b/c") == "a_b_c"
    assert len(sanitize_name("x" * 400)) == 255


def test_solution_file_parsing():
    names = {"x": 0, "y": 1}
    status, x = parse_solution_file("Optimal - objective value 3\n0 x 1.5 0\n1 y 2 0\n", names, 2)
    assert status is Status.OPTIMAL and list(x) == [1.5, 2.0]
    status, _ = parse_solution_file("Infeasible - objective value 0\n", names, 2)
    assert status is Status.INFEASIBLE
    status, x = parse_solution_file("x 4\n", names, 2)
    assert status is Status.OPTIMAL and list(x) == [4.0, 0.0]


def test_external_solver_failure_surfaces_output():
    m = MilpModel()
    m.add_var("x")
    sol = ExternalSolver("sh -c 'echo boom >&2; exit 7' {mps} {sol}").solve(m)
    assert sol.status is Status.ERROR
    assert "boom" in sol.message and "7" in sol.message


def test_external_cbc_matches_embedded(cbc_template):
    rng = np.random.default_rng(11)
    for n_bin in (2, 4, 6, 8):
        m = random_milp(rng, n_bin)
        ext = solve(m, cbc_template)
        emb = solve(m, "embedded")
        assert ext.status is emb.status
        if emb.is_optimal:
            assert ext.objective == pytest.approx(emb.objective, abs=1e-6)


def test_highs_backend_agrees():
    rng = np.random.default_rng(5)
    m = random_milp(rng, 5)
    assert solve(m, "highs").objective == pytest.approx(solve(m).objective, abs=1e-6)
    with pytest.raises(ValueError):
        solve(m, "nope")
