import itertools
import os
import shutil

import numpy as np
import pytest
from scipy.optimize import linprog

from tsa_storage.energy_system import (COLLECTOR, SOURCE_SINK, STORAGE, Connection, DeviceSpec,
                                       EconomicParams, SystemSpec)
from tsa_storage.milp import MilpModel, VarKind


def find_cbc():
    """CBC binary from PATH or from the pulp wheel, if either is present."""
    path = shutil.which("cbc")
    if path:
        return path
    try:
        import pulp
    except ImportError:
        return None
    cand = os.path.join(os.path.dirname(pulp.__file__), "solverdir", "cbc", "linux", "i64", "cbc")
    return cand if os.access(cand, os.X_OK) else None


@pytest.fixture(scope="session")
def cbc_template():
    path = find_cbc()
    if path is None:
        pytest.skip("no CBC binary available")
    return f"cmd:{path} {{mps}} solve solu {{sol}}"


def random_lp(rng, n_vars=None, n_rows=None, with_eq=True):
    """Bounded random LP as a MilpModel plus its raw data."""
    n = n_vars or int(rng.integers(2, 7))
    m = n_rows or int(rng.integers(1, 9))
    m_ = MilpModel("rand")
    lb = rng.integers(-3, 1, n).astype(float)
    ub = lb + rng.integers(1, 6, n)
    for j in range(n):
        m_.add_var(f"x{j}", lb[j], ub[j])
    A = np.round(rng.normal(0, 2, (m, n)), 1)
    x0 = rng.uniform(lb, ub)
    senses = rng.choice(["<=", ">=", "="] if with_eq else ["<=", ">="], m,
                        p=[0.45, 0.45, 0.1] if with_eq else None)
    rhs = np.empty(m)
    for i in range(m):
        act = A[i] @ x0
        # mostly feasible instances, some infeasible by construction
        shift = rng.uniform(0, 2) if rng.random() < 0.9 else -rng.uniform(3, 10)
        rhs[i] = act + shift if senses[i] == "<=" else (act - shift if senses[i] == ">=" else act)
        rhs[i] = round(rhs[i], 2)
        m_.add_constraint({j: A[i, j] for j in range(n)}, senses[i], rhs[i])
    c = np.round(rng.normal(0, 1, n), 2)
    m_.add_objective({j: c[j] for j in range(n)})
    return m_, (A, senses, rhs, c, lb, ub)


def vertex_enumeration(A, senses, rhs, c, lb, ub, tol=1e-9):
    """Optimum over all basic feasible points of a bounded polytope (None if empty)."""
    n = len(c)
    G = np.vstack([A, np.eye(n), np.eye(n)])
    h = np.concatenate([rhs, lb, ub])
    eq = [i for i, s in enumerate(senses) if s == "="]
    if len(eq) > n:
        return None
    free = [k for k in range(len(h)) if k not in eq]
    combos = np.array([eq + list(cmb) for cmb in itertools.combinations(free, n - len(eq))])
    M, b = G[combos], h[combos]
    ok = np.abs(np.linalg.det(M)) > 1e-10
    x = np.linalg.solve(M[ok], b[ok][..., None])[..., 0]
    r = x @ A.T
    feas = np.all(x >= lb - tol, axis=1) & np.all(x <= ub + tol, axis=1)
    for i, s in enumerate(senses):
        if s == "<=":
            feas &= r[:, i] <= rhs[i] + tol
        elif s == ">=":
            feas &= r[:, i] >= rhs[i] - tol
        else:
            feas &= np.abs(r[:, i] - rhs[i]) <= tol
    if not feas.any():
        return None
    return float((x[feas] @ c).min())


def random_milp(rng, n_bin, n_cont=None):
    """Facility-style toy MILP: binaries open capacity for continuous flows."""
    n_cont = n_cont or n_bin
    m = MilpModel("toy")
    xs = [m.add_var(f"x{j}", 0, 10) for j in range(n_cont)]
    ds = [m.add_var(f"d{j}", kind=VarKind.BINARY) for j in range(n_bin)]
    for j, x in enumerate(xs):
        m.add_constraint({x: 1.0, ds[j % n_bin]: -float(rng.integers(2, 9))}, "<=", 0.0)
    demand = float(rng.integers(3, 4 * n_cont + 3))
    m.add_constraint({x: 1.0 for x in xs}, ">=", demand)
    if n_bin > 1:
        m.add_constraint({d: 1.0 for d in ds}, "<=", float(max(1, n_bin - 1)))
    m.add_objective({x: float(rng.uniform(0.5, 3)) for x in xs})
    m.add_objective({d: float(rng.uniform(1, 10)) for d in ds})
    return m


def enumerate_binaries(model):
    """Optimum by fixing every binary assignment and solving the LP with HiGHS."""
    A, senses, rhs, c, lb, ub = model.arrays()
    lo, hi = model.row_bounds(senses, rhs)
    A = A.toarray()
    bins = model.binary_indices()
    ub_rows = np.vstack([A[np.isfinite(hi)], -A[np.isfinite(lo)]])
    ub_rhs = np.concatenate([hi[np.isfinite(hi)], -lo[np.isfinite(lo)]])
    best = None
    for assign in itertools.product([0.0, 1.0], repeat=len(bins)):
        l, u = lb.copy(), ub.copy()
        l[bins] = u[bins] = assign
        res = linprog(c, A_ub=ub_rows, b_ub=ub_rhs, bounds=list(zip(l, u)), method="highs")
        if res.status == 0:
            v = res.fun + model.objective_constant
            best = v if best is None else min(best, v)
    return best


def source_demand_system(source_cost=1.0, big_m=100.0, storage=False, eta_self=0.0):
    devices = [
        DeviceSpec("source", SOURCE_SINK, EconomicParams(opex_var=source_cost), ub="avail",
                   big_m=big_m),
        DeviceSpec("bus", COLLECTOR),
        DeviceSpec("demand", SOURCE_SINK, lb="load", ub="load", fixed_capacity=1.0),
    ]
    conns = [Connection("source", "bus", "e"), Connection("bus", "demand", "e")]
    if storage:
        devices.append(DeviceSpec("store", STORAGE, EconomicParams(capex_spec=10.0),
                                  eta_self=eta_self, big_m=1000.0))
        conns += [Connection("bus", "store", "e"), Connection("store", "bus", "e")]
    return SystemSpec("hand", devices, conns)
