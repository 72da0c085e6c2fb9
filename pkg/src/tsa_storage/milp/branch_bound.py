"""Best-first branch-and-bound over binary variables."""

from __future__ import annotations

import heapq
import itertools
import time

import numpy as np

from .model import INT_TOL, MIP_GAP, MilpModel, Solution, Status
from .simplex import LinearProgram

DEFAULT_MAX_BINARIES = 32


class TooManyBinariesError(ValueError):
    pass


def solve_milp(model: MilpModel, max_binaries: int = DEFAULT_MAX_BINARIES,
               max_iter: int | None = None, time_limit: float | None = None,
               node_limit: int | None = None) -> Solution:
    """Solve ``model`` to optimality within an absolute gap of ``MIP_GAP``.

    Nodes are explored best-bound first; the branching variable is the most
    fractional binary, lowest index on ties.
    """
    bins = model.binary_indices()
    if len(bins) > max_binaries:
        raise TooManyBinariesError(
            f"{len(bins)} binaries exceed the embedded branch-and-bound cap of "
            f"{max_binaries}; export the model with write_mps and use an external solver")
    lp = LinearProgram(model)
    deadline = None if time_limit is None else time.perf_counter() + time_limit

    counter = itertools.count()
    heap = [(-np.inf, next(counter), lp.lb.copy(), lp.ub.copy())]
    best = np.inf
    incumbent: Solution | None = None
    nodes = iterations = 0
    limit_hit = None

    def remaining():
        return None if deadline is None else max(deadline - time.perf_counter(), 0.0)

    while heap:
        bound, _, lb, ub = heapq.heappop(heap)
        if bound >= best - MIP_GAP:
            continue
        if node_limit is not None and nodes >= node_limit:
            limit_hit = "node limit"
            break
        if deadline is not None and time.perf_counter() > deadline:
            limit_hit = "time limit"
            break
        nodes += 1
        sol = lp.solve(lb, ub, max_iter=max_iter, time_limit=remaining())
        iterations += sol.iterations
        if sol.status is Status.INFEASIBLE:
            continue
        if sol.status is Status.UNBOUNDED:
            return Solution(Status.UNBOUNDED, iterations=iterations, nodes=nodes,
                            message="LP relaxation unbounded")
        if sol.status is not Status.OPTIMAL:
            limit_hit = sol.message or sol.status.value
            continue
        if sol.objective >= best - MIP_GAP:
            continue
        vals = sol.x[bins]
        frac = np.abs(vals - np.round(vals))
        if np.all(frac <= INT_TOL):
            if np.any(frac > 0):
                flb, fub = lb.copy(), ub.copy()
                flb[bins] = fub[bins] = np.round(vals)
                sol = lp.solve(flb, fub, max_iter=max_iter, time_limit=remaining())
                iterations += sol.iterations
                if sol.status is not Status.OPTIMAL:
                    continue
            if sol.objective < best:
                best = sol.objective
                incumbent = sol
            continue
        k = int(np.argmax(np.minimum(vals - np.floor(vals), np.ceil(vals) - vals)))
        j = bins[k]
        down_ub = ub.copy()
        down_ub[j] = 0.0
        heapq.heappush(heap, (sol.objective, next(counter), lb, down_ub))
        up_lb = lb.copy()
        up_lb[j] = 1.0
        heapq.heappush(heap, (sol.objective, next(counter), up_lb, ub))

    if incumbent is None:
        if limit_hit:
            return Solution(Status.ITERATION_LIMIT, iterations=iterations, nodes=nodes,
                            message=limit_hit)
        return Solution(Status.INFEASIBLE, iterations=iterations, nodes=nodes)
    incumbent.x[bins] = np.round(incumbent.x[bins])
    status = Status.OPTIMAL if limit_hit is None else Status.ITERATION_LIMIT
    return Solution(status, incumbent.objective, incumbent.x, incumbent.activities,
                    iterations=iterations, nodes=nodes, message=limit_hit or "")
