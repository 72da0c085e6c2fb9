"""Sparse MILP modeling, embedded simplex/branch-and-bound, MPS I/O."""

from __future__ import annotations

import numpy as np

from .branch_bound import DEFAULT_MAX_BINARIES, TooManyBinariesError, solve_milp
from .external import ExternalSolver, ExternalSolverError, parse_solution_file
from .model import (FEAS_TOL, INT_TOL, MIP_GAP, MilpModel, ModelError, Sense, Solution,
                    Status, VarKind)
from .mps import MpsFormatError, read_mps, sanitize_name, write_mps
from .simplex import LinearProgram, solve_lp

__all__ = [
    "FEAS_TOL", "INT_TOL", "MIP_GAP", "DEFAULT_MAX_BINARIES",
    "MilpModel", "ModelError", "Sense", "Solution", "Status", "VarKind",
    "LinearProgram", "solve_lp", "solve_milp", "solve_highs", "solve",
    "TooManyBinariesError", "ExternalSolver", "ExternalSolverError",
    "parse_solution_file", "MpsFormatError", "read_mps", "write_mps", "sanitize_name",
]


def solve_highs(model: MilpModel, time_limit: float | None = None) -> Solution:
    """Solve with the HiGHS library bundled in scipy."""
    from scipy.optimize import Bounds, LinearConstraint, milp

    A, senses, rhs, c, lb, ub = model.arrays()
    lo, hi = model.row_bounds(senses, rhs)
    integrality = np.array([v.kind is VarKind.BINARY for v in model.variables], dtype=int)
    options = {"mip_rel_gap": 1e-9}
    if time_limit is not None:
        options["time_limit"] = time_limit
    cons = [LinearConstraint(A, lo, hi)] if model.n_constraints else []
    res = milp(c, constraints=cons, integrality=integrality, bounds=Bounds(lb, ub),
               options=options)
    status = {0: Status.OPTIMAL, 1: Status.ITERATION_LIMIT, 2: Status.INFEASIBLE,
              3: Status.UNBOUNDED}.get(res.status, Status.ERROR)
    if status is not Status.OPTIMAL:
        return Solution(status, message=res.message)
    x = np.asarray(res.x, dtype=float)
    bins = model.binary_indices()
    x[bins] = np.round(x[bins])
    return Solution(status, model.evaluate(x), x, A @ x, message=res.message)


def solve(model: MilpModel, solver: str = "embedded", time_limit: float | None = None,
          max_binaries: int = DEFAULT_MAX_BINARIES) -> Solution:
    """Dispatch to ``embedded``, ``highs`` or ``cmd:<template>``."""
    if solver == "embedded":
        return solve_milp(model, max_binaries=max_binaries, time_limit=time_limit)
    if solver == "highs":
        return solve_highs(model, time_limit=time_limit)
    if solver.startswith("cmd:"):
        return ExternalSolver(solver[4:], timeout=time_limit).solve(model)
    raise ValueError(f"unknown solver {solver!r}; expected embedded, highs or cmd:<template>")
