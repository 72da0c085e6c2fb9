"""Process-invocation adapter for MPS-capable external solvers.

The command template names two placeholders, ``{mps}`` (input model) and
``{sol}`` (solution file the solver must write). The solution file is read
as ``<variable name> <value>`` lines; index columns before the name (as in
CBC's ``solu`` output) are tolerated. Variables missing from the file are
taken as zero.
"""

from __future__ import annotations

import shlex
import subprocess
import tempfile
from pathlib import Path

import numpy as np

from .model import MilpModel, Solution, Status
from .mps import sanitize_name, write_mps


class ExternalSolverError(RuntimeError):
    pass


def parse_solution_file(text: str, names: dict[str, int], n: int):
    """Return ``(status, x)`` parsed from a solver solution file."""
    x = np.zeros(n)
    status = None
    found = 0
    for lineno, line in enumerate(text.splitlines()):
        tok = line.split()
        if not tok:
            continue
        if not any(t in names for t in tok):
            # header lines carry the solver verdict
            low = line.lower()
            if "infeasible" in low:
                status = Status.INFEASIBLE
            elif "unbounded" in low:
                status = Status.UNBOUNDED
            elif "stopped" in low or "limit" in low:
                status = Status.ITERATION_LIMIT
            elif "optimal" in low and status is None:
                status = Status.OPTIMAL
            continue
        for k, t in enumerate(tok[:-1]):
            if t in names:
                try:
                    x[names[t]] = float(tok[k + 1])
                except ValueError:
                    raise ExternalSolverError(
                        f"cannot parse value on solution line {lineno + 1}: {line!r}") from None
                found += 1
                break
    if status is None:
        status = Status.OPTIMAL if found else Status.ERROR
    return status, x


class ExternalSolver:
    def __init__(self, template: str, timeout: float | None = None,
                 workdir: str | Path | None = None):
        if "{mps}" not in template or "{sol}" not in template:
            raise ValueError("solver command template needs {mps} and {sol} placeholders")
        self.template = template
        self.timeout = timeout
        self.workdir = workdir

    def solve(self, model: MilpModel) -> Solution:
        with tempfile.TemporaryDirectory(dir=self.workdir) as tmp:
            mps = Path(tmp) / "model.mps"
            sol = Path(tmp) / "model.sol"
            write_mps(model, mps)
            cmd = shlex.split(self.template.format(mps=str(mps), sol=str(sol)))
            try:
                proc = subprocess.run(cmd, capture_output=True, text=True,
                                      timeout=self.timeout)
            except FileNotFoundError as exc:
                return Solution(Status.ERROR, message=f"solver not found: {exc}")
            except subprocess.TimeoutExpired:
                return Solution(Status.ITERATION_LIMIT, message="external solver timed out")
            if proc.returncode != 0:
                return Solution(Status.ERROR, message=(
                    f"exit code {proc.returncode}\n{proc.stdout}\n{proc.stderr}"))
            if not sol.exists():
                return Solution(Status.ERROR, message=(
                    f"solver wrote no solution file\n{proc.stdout}\n{proc.stderr}"))
            names = {sanitize_name(v.name): j for j, v in enumerate(model.variables)}
            try:
                status, x = parse_solution_file(sol.read_text(), names, model.n_vars)
            except ExternalSolverError as exc:
                return Solution(Status.ERROR, message=str(exc))
        if status is not Status.OPTIMAL:
            return Solution(status, message=proc.stdout[-2000:])
        A = model.arrays()[0]
        return Solution(status, model.evaluate(x), x, A @ x)
