"""Cost breakdowns, formulation comparisons and state-of-charge export."""

from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .aggregation import TypicalPeriodSet, aggregate, identity_periods
from .energy_system import SystemSpec
from .formulations import (FULL, INDEPENDENT, LINKED, FormulationKind, ModelArtifacts,
                           SocTrajectory, build_model, design_values)
from .milp import Solution, Status, solve
from .timeseries import ProfileSet

REPORT_COLUMNS = ("kind", "n_typical_days", "objective", "cost_share_error", "solve_seconds")


class AnalysisError(ValueError):
    pass


@dataclass(frozen=True)
class CostBreakdown:
    """Annualized cost per device: fixed part plus attributed variable part."""

    fixed: dict
    variable: dict

    def __post_init__(self):
        for part in (self.fixed, self.variable):
            for name, v in part.items():
                if v < -1e-9:
                    raise AnalysisError(f"negative cost {v} for device {name!r}")

    @classmethod
    def from_totals(cls, costs: dict) -> "CostBreakdown":
        return cls(dict(costs), {name: 0.0 for name in costs})

    @property
    def per_device(self) -> dict:
        names = list(dict.fromkeys([*self.fixed, *self.variable]))
        return {n: self.fixed.get(n, 0.0) + self.variable.get(n, 0.0) for n in names}

    @property
    def total(self) -> float:
        return float(sum(self.per_device.values()))

    def to_dict(self) -> dict:
        return {"fixed": self.fixed, "variable": self.variable,
                "per_device": self.per_device, "total": self.total}


def cost_breakdown(art: ModelArtifacts, sol: Solution) -> CostBreakdown:
    """Split the objective by device; variable costs go to the priced flow's source."""
    x = sol.x
    fixed, variable = {}, {}
    for name, terms in art.fixed_cost_terms.items():
        fixed[name] = float(sum(coef * (1.0 if j is None else x[j]) for j, coef in terms))
    for name, terms in art.var_cost_terms.items():
        variable[name] = float(sum(coef * x[j] for j, coef in terms))
    # clip solver noise on values that are zero in exact arithmetic
    clip = lambda d: {k: (0.0 if abs(v) < 1e-9 else v) for k, v in d.items()}
    return CostBreakdown(clip(fixed), clip(variable))


def cost_share_error(reference: CostBreakdown | dict, test: CostBreakdown | dict) -> float:
    """``sum_d |c_test - c_ref| / sum_d c_ref``; absent devices count as zero cost."""
    ref = reference.per_device if isinstance(reference, CostBreakdown) else dict(reference)
    tst = test.per_device if isinstance(test, CostBreakdown) else dict(test)
    total = sum(ref.values())
    if total == 0:
        raise AnalysisError("reference cost total is zero; the error is undefined")
    names = sorted(set(ref) | set(tst))
    return float(sum(abs(tst.get(n, 0.0) - ref.get(n, 0.0)) for n in names) / total)


@dataclass
class RunResult:
    kind: FormulationKind
    n_typical_days: int
    art: ModelArtifacts
    solution: Solution
    typ: TypicalPeriodSet | None
    solve_seconds: float

    @property
    def breakdown(self) -> CostBreakdown:
        return cost_breakdown(self.art, self.solution)


def run_formulation(spec: SystemSpec, profiles: ProfileSet, kind: str, n_days: int | None = None,
                    steps_per_period: int = 24, simplified_bounds: bool = False,
                    mode: str = "pam", solver: str = "embedded", time_limit=None) -> RunResult:
    """Aggregate (unless ``full``), build and solve one formulation.

    ``solve_seconds`` covers the solver call only.
    """
    fk = FormulationKind(kind, simplified_bounds)
    n_periods = profiles.aligned_length // steps_per_period
    typ = None
    if kind != FULL:
        if n_days is None:
            raise AnalysisError(f"{kind} formulation needs a number of typical days")
        if n_days == n_periods:
            # every period is its own medoid whatever the clustering mode
            typ = identity_periods(n_periods)
        else:
            typ = aggregate(profiles, steps_per_period, n_days, mode)[0]
    art = build_model(spec, profiles, kind, typ, steps_per_period, simplified_bounds)
    start = time.perf_counter()
    sol = solve(art.model, solver, time_limit=time_limit)
    elapsed = time.perf_counter() - start
    return RunResult(fk, n_periods if kind == FULL else n_days, art, sol, typ, elapsed)


@dataclass
class ReportRow:
    kind: str
    n_typical_days: int
    objective: float | None = None
    cost_share_error: float | None = None
    solve_seconds: float | None = None
    status: str = "pending"
    message: str = ""
    capacities: dict = field(default_factory=dict)
    costs: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status == Status.OPTIMAL.value

    @property
    def key(self) -> tuple:
        return (self.kind, self.n_typical_days)


@dataclass
class ComparisonReport:
    rows: list
    reference_kind: str = FULL

    @property
    def reference(self) -> ReportRow | None:
        for r in self.rows:
            if r.kind == self.reference_kind:
                return r
        return None

    def row(self, kind: str, n_days: int) -> ReportRow:
        for r in self.rows:
            if r.key == (kind, n_days):
                return r
        raise KeyError((kind, n_days))

    def device_names(self) -> list:
        return list(dict.fromkeys(n for r in self.rows for n in r.capacities))

    def to_dict(self) -> dict:
        return {"reference_kind": self.reference_kind, "rows": [asdict(r) for r in self.rows]}

    @classmethod
    def from_dict(cls, doc: dict) -> "ComparisonReport":
        return cls([ReportRow(**r) for r in doc["rows"]], doc.get("reference_kind", FULL))

    def write_json(self, path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.to_dict(), indent=1))
        return path

    @classmethod
    def read_json(cls, path) -> "ComparisonReport":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def write_csv(self, path) -> Path:
        path = Path(path)
        devices = self.device_names()
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow([*REPORT_COLUMNS, "status", *devices])
            for r in self.rows:
                w.writerow([r.kind, r.n_typical_days, _cell(r.objective), _cell(r.cost_share_error),
                            _cell(r.solve_seconds), r.status,
                            *[_cell(r.capacities.get(d)) for d in devices]])
        return path

    def without_timing(self) -> dict:
        doc = self.to_dict()
        for r in doc["rows"]:
            r["solve_seconds"] = None
        return doc


def _cell(v):
    return "" if v is None else repr(float(v))


def _kind_label(kind: str, simplified: bool) -> str:
    return str(FormulationKind(kind, simplified))


def parse_kind(label: str) -> tuple[str, bool]:
    """``linked+simplified`` -> (``linked``, True)."""
    base, _, opt = label.partition("+")
    if opt not in ("", "simplified"):
        raise AnalysisError(f"unknown formulation option {opt!r}")
    fk = FormulationKind(base, opt == "simplified")
    return fk.kind, fk.simplified_bounds


def _run_row(args) -> ReportRow:
    spec, profiles, label, n_days, steps, mode, solver, time_limit = args
    kind, simplified = parse_kind(label)
    row = ReportRow(label, n_days)
    try:
        res = run_formulation(spec, profiles, kind, n_days, steps, simplified, mode, solver, time_limit)
    except Exception as exc:  # recorded in-row so the sweep continues
        row.status, row.message = "error", f"{type(exc).__name__}: {exc}"
        return row
    row.status = res.solution.status.value
    row.message = res.solution.message
    row.solve_seconds = res.solve_seconds
    if res.solution.is_optimal:
        row.objective = float(res.solution.objective)
        row.capacities = {k: v["capacity"] for k, v in design_values(res.art, res.solution).items()}
        row.costs = res.breakdown.per_device
    return row


def run_sweep(spec: SystemSpec, profiles: ProfileSet, n_days_list, kinds=(INDEPENDENT, LINKED),
              solver: str = "embedded", steps_per_period: int = 24, mode: str = "pam",
              jobs: int = 1, resume: ComparisonReport | None = None,
              time_limit=None) -> ComparisonReport:
    """Reference (full) row plus one row per (kind, number of typical days).

    Rows already solved in ``resume`` are kept; failed ones are retried.
    Rows are ordered reference first, then by (kind, N_k).
    """
    n_periods = profiles.aligned_length // steps_per_period
    for n in n_days_list:
        if not 1 <= n <= n_periods:
            raise AnalysisError(f"number of typical days must lie in [1, {n_periods}], got {n}")
    wanted = [(FULL, n_periods)] + sorted({(_kind_label(*parse_kind(k)), int(n))
                                           for k in kinds for n in n_days_list})
    done = {r.key: r for r in (resume.rows if resume else []) if r.ok}
    todo = [key for key in wanted if key not in done]
    args = [(spec, profiles, k, n, steps_per_period, mode, solver, time_limit) for k, n in todo]
    if jobs > 1 and len(args) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            fresh = list(pool.map(_run_row, args))
    else:
        fresh = [_run_row(a) for a in args]
    by_key = {**done, **{r.key: r for r in fresh}}
    rows = [by_key[key] for key in wanted]
    ref = rows[0]
    for r in rows:
        if r.ok and ref.ok:
            r.cost_share_error = 0.0 if r is ref else cost_share_error(ref.costs, r.costs)
        else:
            r.cost_share_error = None
    return ComparisonReport(rows)


# -- state-of-charge heatmap -------------------------------------------------

def export_soc_heatmap(traj: SocTrajectory | np.ndarray, path) -> tuple[Path, Path]:
    """CSV with one row per step within a period and one column per period.

    A JSON sidecar next to the CSV holds the capacity and the inter/intra
    decomposition when ``traj`` is a decoded trajectory.
    """
    path = Path(path)
    soc = traj.soc if isinstance(traj, SocTrajectory) else np.atleast_2d(np.asarray(traj, float))
    n_i, n_g = soc.shape
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["step"] + [f"period_{i}" for i in range(n_i)])
        for g in range(n_g):
            w.writerow([g] + [repr(float(v)) for v in soc[:, g]])
    side = {"orientation": "rows are steps within a period, columns are periods",
            "n_periods": n_i, "steps_per_period": n_g}
    if isinstance(traj, SocTrajectory):
        side.update(storage=traj.storage, kind=traj.kind, capacity=traj.capacity,
                    decay_per_step=traj.decay, inter=traj.inter.tolist(),
                    intra=traj.intra.tolist(), assignment=[int(k) for k in traj.assignment])
    sidecar = path.with_suffix(".json")
    sidecar.write_text(json.dumps(side, indent=1))
    return path, sidecar


def read_soc_heatmap(path) -> np.ndarray:
    """Parse an exported heatmap back into an ``N_i x N_g`` array."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))[1:]
    return np.array([[float(v) for v in r[1:]] for r in rows], dtype=float).T.reshape(
        len(rows[0]) - 1 if rows else 0, len(rows))
