"""Sparse mixed-integer linear program container and solution record."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping

import numpy as np
import scipy.sparse as sp

# Centralized tolerances shared by every solver backend.
FEAS_TOL = 1e-7
INT_TOL = 1e-6
MIP_GAP = 1e-6


class Sense(str, Enum):
    LE = "L"
    GE = "G"
    EQ = "E"


class VarKind(str, Enum):
    CONTINUOUS = "C"
    BINARY = "B"


class Status(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITERATION_LIMIT = "iteration_limit"
    ERROR = "error"


_SENSE_ALIASES = {
    "<=": Sense.LE, "=<": Sense.LE, "L": Sense.LE,
    ">=": Sense.GE, "=>": Sense.GE, "G": Sense.GE,
    "=": Sense.EQ, "==": Sense.EQ, "E": Sense.EQ,
    **{s: s for s in Sense},
}


class ModelError(ValueError):
    pass


def _parse_sense(sense) -> Sense:
    try:
        return _SENSE_ALIASES[sense]
    except KeyError:
        raise ModelError(f"unknown constraint sense {sense!r}") from None


@dataclass
class Variable:
    name: str
    lb: float = 0.0
    ub: float = np.inf
    kind: VarKind = VarKind.CONTINUOUS


@dataclass
class Constraint:
    name: str
    indices: list
    values: list
    sense: Sense
    rhs: float


class MilpModel:
    """Minimization problem ``min c.x + c0`` over rows ``a.x (<=|=|>=) b``.

    Variables and constraints keep insertion order, which is also the order
    used by the MPS writer and by every solver backend.
    """

    def __init__(self, name: str = "model"):
        self.name = name
        self.variables: list[Variable] = []
        self.constraints: list[Constraint] = []
        self.objective: dict[int, float] = {}
        self.objective_constant = 0.0
        self._var_names: dict[str, int] = {}
        self._con_names: set[str] = set()

    # -- construction -------------------------------------------------------
    def add_var(self, name: str, lb: float = 0.0, ub: float = np.inf,
                kind: VarKind | str = VarKind.CONTINUOUS) -> int:
        kind = VarKind(kind)
        if name in self._var_names:
            raise ModelError(f"duplicate variable name {name!r}")
        lb, ub = float(lb), float(ub)
        if kind is VarKind.BINARY:
            lb, ub = max(lb, 0.0), min(ub, 1.0)
        if lb > ub:
            raise ModelError(f"variable {name!r} has lb {lb} > ub {ub}")
        idx = len(self.variables)
        self.variables.append(Variable(name, lb, ub, kind))
        self._var_names[name] = idx
        return idx

    def add_constraint(self, coefs: Mapping[int, float] | Iterable[tuple[int, float]],
                       sense: Sense | str, rhs: float, name: str | None = None) -> int:
        items = coefs.items() if isinstance(coefs, Mapping) else coefs
        merged: dict[int, float] = {}
        n = len(self.variables)
        for j, a in items:
            j = int(j)
            if not 0 <= j < n:
                raise ModelError(f"column index {j} out of range")
            merged[j] = merged.get(j, 0.0) + float(a)
        merged = {j: a for j, a in merged.items() if a != 0.0}
        if name is None:
            name = f"c{len(self.constraints)}"
        if name in self._con_names:
            raise ModelError(f"duplicate constraint name {name!r}")
        self._con_names.add(name)
        idx = len(self.constraints)
        self.constraints.append(Constraint(
            name, list(merged.keys()), list(merged.values()),
            _parse_sense(sense), float(rhs)))
        return idx

    def add_objective(self, coefs: Mapping[int, float] | Iterable[tuple[int, float]],
                      constant: float = 0.0) -> None:
        """Accumulate terms into the (minimized) objective."""
        items = coefs.items() if isinstance(coefs, Mapping) else coefs
        for j, a in items:
            self.objective[int(j)] = self.objective.get(int(j), 0.0) + float(a)
        self.objective_constant += float(constant)

    def set_bounds(self, j: int, lb: float, ub: float) -> None:
        self.variables[j].lb = float(lb)
        self.variables[j].ub = float(ub)

    # -- queries -----------------------------------------------------------
    @property
    def n_vars(self) -> int:
        return len(self.variables)

    @property
    def n_constraints(self) -> int:
        return len(self.constraints)

    def var_index(self, name: str) -> int:
        return self._var_names[name]

    def binary_indices(self) -> np.ndarray:
        return np.array([j for j, v in enumerate(self.variables)
                         if v.kind is VarKind.BINARY], dtype=int)

    def arrays(self):
        """Return ``(A, senses, rhs, c, lb, ub)`` with ``A`` in CSR format."""
        m, n = self.n_constraints, self.n_vars
        nnz = sum(len(c.indices) for c in self.constraints)
        rows = np.empty(nnz, dtype=np.int64)
        cols = np.empty(nnz, dtype=np.int64)
        vals = np.empty(nnz)
        pos = 0
        for i, con in enumerate(self.constraints):
            k = len(con.indices)
            rows[pos:pos + k] = i
            cols[pos:pos + k] = con.indices
            vals[pos:pos + k] = con.values
            pos += k
        A = sp.csr_matrix((vals, (rows, cols)), shape=(m, n))
        senses = np.array([c.sense.value for c in self.constraints], dtype="<U1")
        rhs = np.array([c.rhs for c in self.constraints], dtype=float)
        c = np.zeros(n)
        for j, a in self.objective.items():
            c[j] = a
        lb = np.array([v.lb for v in self.variables], dtype=float)
        ub = np.array([v.ub for v in self.variables], dtype=float)
        return A, senses, rhs, c, lb, ub

    def row_bounds(self, senses: np.ndarray, rhs: np.ndarray):
        lo = np.where(senses == Sense.LE.value, -np.inf, rhs)
        hi = np.where(senses == Sense.GE.value, np.inf, rhs)
        return lo, hi

    def evaluate(self, x: np.ndarray) -> float:
        return float(sum(a * x[j] for j, a in self.objective.items()) + self.objective_constant)

    def max_violation(self, x: np.ndarray) -> float:
        """Largest absolute violation of rows or bounds at point ``x``."""
        A, senses, rhs, _, lb, ub = self.arrays()
        act = A @ x if self.n_constraints else np.zeros(0)
        lo, hi = self.row_bounds(senses, rhs)
        viol = 0.0
        if act.size:
            viol = max(viol, float(np.max(np.maximum(lo - act, 0.0))),
                       float(np.max(np.maximum(act - hi, 0.0))))
        if x.size:
            viol = max(viol, float(np.max(np.maximum(lb - x, 0.0))),
                       float(np.max(np.maximum(x - ub, 0.0))))
        return viol

    def copy(self) -> "MilpModel":
        other = MilpModel(self.name)
        other.variables = [Variable(v.name, v.lb, v.ub, v.kind) for v in self.variables]
        other.constraints = [Constraint(c.name, list(c.indices), list(c.values), c.sense, c.rhs)
                             for c in self.constraints]
        other.objective = dict(self.objective)
        other.objective_constant = self.objective_constant
        other._var_names = dict(self._var_names)
        other._con_names = set(self._con_names)
        return other

    def __repr__(self):
        return (f"MilpModel({self.name!r}, vars={self.n_vars}, "
                f"binaries={len(self.binary_indices())}, rows={self.n_constraints})")


@dataclass
class Solution:
    status: Status
    objective: float = np.nan
    x: np.ndarray = field(default_factory=lambda: np.zeros(0))
    activities: np.ndarray = field(default_factory=lambda: np.zeros(0))
    iterations: int = 0
    nodes: int = 0
    message: str = ""

    @property
    def is_optimal(self) -> bool:
        return self.status is Status.OPTIMAL

    def __getitem__(self, j):
        return self.x[j]
