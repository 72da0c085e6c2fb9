"""Bounded-variable revised primal simplex.

Every row ``i`` gets a logical variable ``r_i = a_i.x`` carrying the row
bounds, so the working system is ``[A  -I  Art] z = 0`` with all variables
boxed (possibly by infinite bounds). The basis is kept as a sparse LU
factorization plus a product-form eta file, refactorized periodically.
Phase 1 minimizes the sum of artificials added for rows whose starting
activity violates the row bounds.
"""

from __future__ import annotations

import time

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .model import FEAS_TOL, MilpModel, Sense, Solution, Status

BASIC, AT_LB, AT_UB, AT_ZERO, FIXED = 0, 1, 2, 3, 4

PIVOT_TOL = 1e-7
# stricter pivot threshold for the retry after a singular refactorization
RETRY_PIVOT_TOL = 1e-5
DUAL_TOL = 1e-9
HARRIS_TOL = 1e-9
REFACTOR_EVERY = 64
STALL_LIMIT = 100


class SimplexError(RuntimeError):
    pass


def _pow2(v):
    return np.exp2(np.round(np.log2(v)))


def geometric_scaling(A: sp.csr_matrix, passes: int = 4):
    """Row and column factors (powers of two) that equilibrate ``|A|``."""
    m, n = A.shape
    r = np.ones(m)
    s = np.ones(n)
    if A.nnz == 0:
        return r, s
    absA = abs(A).tocoo()
    nz = absA.data > 0
    rows, cols, vals = absA.row[nz], absA.col[nz], absA.data[nz]
    for _ in range(passes):
        v = vals * r[rows] * s[cols]
        rmax = np.zeros(m)
        rmin = np.full(m, np.inf)
        np.maximum.at(rmax, rows, v)
        np.minimum.at(rmin, rows, v)
        ok = rmax > 0
        r[ok] /= np.sqrt(rmax[ok] * rmin[ok])
        v = vals * r[rows] * s[cols]
        cmax = np.zeros(n)
        cmin = np.full(n, np.inf)
        np.maximum.at(cmax, cols, v)
        np.minimum.at(cmin, cols, v)
        ok = cmax > 0
        s[ok] /= np.sqrt(cmax[ok] * cmin[ok])
    return _pow2(r), _pow2(s)


class _Basis:
    """LU factorization of the basis matrix with an eta file on top."""

    def __init__(self, M: sp.csc_matrix, head: np.ndarray):
        self.M = M
        self.refactor(head)

    def refactor(self, head):
        B = self.M[:, head].tocsc()
        try:
            self.lu = spla.splu(B, permc_spec="COLAMD")
        except RuntimeError as exc:
            raise SimplexError(f"singular basis: {exc}") from None
        self.etas = []

    def ftran(self, a):
        v = self.lu.solve(a)
        for p, ap, idx, vals in self.etas:
            t = v[p] / ap
            if t != 0.0:
                v[idx] -= vals * t
            v[p] = t
        return v

    def btran(self, c):
        z = np.array(c, dtype=float)
        for p, ap, idx, vals in reversed(self.etas):
            z[p] = (z[p] - z[idx] @ vals) / ap
        return self.lu.solve(z, trans="T")

    def push(self, p, alpha):
        idx = np.flatnonzero(alpha)
        idx = idx[idx != p]
        self.etas.append((p, alpha[p], idx, alpha[idx].copy()))


class _Simplex:
    def __init__(self, A: sp.csr_matrix, c, lb, ub, rlo, rhi,
                 max_iter: int, deadline: float | None, pivot_tol: float = PIVOT_TOL):
        m, n = A.shape
        self.pivot_tol = pivot_tol
        self.m, self.n = m, n
        self.max_iter = max_iter
        self.deadline = deadline
        self.iterations = 0

        x = np.zeros(n)
        state = np.empty(n, dtype=np.int8)
        fin_lb, fin_ub = np.isfinite(lb), np.isfinite(ub)
        x[fin_lb] = lb[fin_lb]
        only_ub = ~fin_lb & fin_ub
        x[only_ub] = ub[only_ub]
        state[:] = AT_ZERO
        state[fin_lb] = AT_LB
        state[only_ub] = AT_UB
        state[fin_lb & fin_ub & (lb == ub)] = FIXED

        r0 = A @ x if m else np.zeros(0)
        inside = (r0 >= rlo - FEAS_TOL) & (r0 <= rhi + FEAS_TOL)
        viol_rows = np.flatnonzero(~inside)
        beta = np.where(r0[viol_rows] < rlo[viol_rows], rlo[viol_rows], rhi[viol_rows])
        sigma = np.sign(beta - r0[viol_rows])
        na = len(viol_rows)

        art = sp.csc_matrix((sigma, (viol_rows, np.arange(na))), shape=(m, na))
        self.M = sp.hstack([A.tocsc(), -sp.identity(m, format="csc"), art], format="csc")
        self.MT = self.M.T.tocsr()
        N = n + m + na
        self.N = N
        self.lo = np.concatenate([lb, rlo, np.zeros(na)])
        self.up = np.concatenate([ub, rhi, np.full(na, np.inf)])
        self.cost2 = np.concatenate([c, np.zeros(m + na)])
        self.art = np.arange(n + m, N)

        self.x = np.concatenate([x, r0, np.abs(beta - r0[viol_rows])])
        self.state = np.concatenate([state, np.full(m + na, BASIC, dtype=np.int8)])
        head = np.arange(n, n + m)
        head[viol_rows] = self.art
        log = n + viol_rows
        self.x[log] = beta
        lstate = np.where(rlo[viol_rows] == rhi[viol_rows], FIXED,
                          np.where(beta == rlo[viol_rows], AT_LB, AT_UB))
        self.state[log] = lstate
        self.head = head
        self.basis = _Basis(self.M, head)

    # -- helpers -----------------------------------------------------------
    def _column(self, j):
        M = self.M
        a = np.zeros(self.m)
        sl = slice(M.indptr[j], M.indptr[j + 1])
        a[M.indices[sl]] = M.data[sl]
        return a

    def _recompute_basics(self):
        xn = self.x.copy()
        xn[self.head] = 0.0
        rhs = -(self.M @ xn)
        self.x[self.head] = self.basis.ftran(rhs)

    def _refactor(self):
        self.basis.refactor(self.head)
        self._recompute_basics()

    # -- main loop ---------------------------------------------------------
    def run_phase(self, cost, phase1: bool) -> Status:
        bland = False
        stall = 0
        obj = float(cost @ self.x)
        while True:
            if self.iterations >= self.max_iter:
                return Status.ITERATION_LIMIT
            if self.deadline is not None and time.perf_counter() > self.deadline:
                return Status.ITERATION_LIMIT
            if len(self.basis.etas) >= REFACTOR_EVERY:
                self._refactor()
                obj = float(cost @ self.x)

            y = self.basis.btran(cost[self.head])
            d = cost - self.MT @ y
            st = self.state
            inc = ((st == AT_LB) | (st == AT_ZERO)) & (d < -DUAL_TOL)
            dec = ((st == AT_UB) | (st == AT_ZERO)) & (d > DUAL_TOL)
            score = np.where(inc, -d, 0.0) + np.where(dec, d, 0.0)
            if bland:
                cand = np.flatnonzero(score > 0)
                if cand.size == 0:
                    return Status.OPTIMAL
                q = int(cand[0])
            else:
                q = int(np.argmax(score))
                if score[q] <= 0:
                    return Status.OPTIMAL
            direction = 1.0 if d[q] < 0 else -1.0

            alpha = self.basis.ftran(self._column(q))
            delta = -direction * alpha
            head = self.head
            xB = self.x[head]
            loB = self.lo[head]
            upB = self.up[head]

            down = (delta < -self.pivot_tol) & np.isfinite(loB)
            upm = (delta > self.pivot_tol) & np.isfinite(upB)
            ratio_h = np.full(self.m, np.inf)
            ratio_h[down] = (xB[down] - loB[down] + HARRIS_TOL) / -delta[down]
            ratio_h[upm] = (upB[upm] + HARRIS_TOL - xB[upm]) / delta[upm]
            theta_h = ratio_h.min() if self.m else np.inf
            own = self.up[q] - self.lo[q]

            if not np.isfinite(theta_h) and not np.isfinite(own):
                if phase1:
                    raise SimplexError("unbounded direction in phase 1")
                return Status.UNBOUNDED

            if own <= theta_h:
                # bound flip, basis unchanged
                theta = own
                self.x[q] += direction * theta
                self.x[head] += theta * delta
                self.state[q] = AT_UB if direction > 0 else AT_LB
                p = -1
            else:
                ratio = np.full(self.m, np.inf)
                ratio[down] = (xB[down] - loB[down]) / -delta[down]
                ratio[upm] = (upB[upm] - xB[upm]) / delta[upm]
                cand = np.flatnonzero(ratio <= theta_h)
                if bland:
                    p = int(cand[np.argmin(head[cand])])
                else:
                    p = int(cand[np.argmax(np.abs(delta[cand]))])
                theta = max(ratio[p], 0.0)
                leave = head[p]
                self.x[q] += direction * theta
                self.x[head] += theta * delta
                if delta[p] < 0:
                    self.x[leave] = self.lo[leave]
                    self.state[leave] = AT_LB
                else:
                    self.x[leave] = self.up[leave]
                    self.state[leave] = AT_UB
                if self.lo[leave] == self.up[leave]:
                    self.state[leave] = FIXED
                if phase1 and leave >= self.n + self.m:
                    # artificials never re-enter
                    self.up[leave] = 0.0
                    self.x[leave] = 0.0
                    self.state[leave] = FIXED
                self.state[q] = BASIC
                head[p] = q
                self.basis.push(p, alpha)

            self.iterations += 1
            new_obj = obj + theta * direction * d[q]
            if new_obj < obj - 1e-12 * max(1.0, abs(obj)):
                stall = 0
                bland = False
            else:
                stall += 1
                if stall > STALL_LIMIT:
                    bland = True
            obj = new_obj

    def drive_out_artificials(self):
        """Pivot zero-level artificials out of the basis where possible."""
        first_art = self.n + self.m
        for p in range(self.m):
            if self.head[p] < first_art:
                continue
            e = np.zeros(self.m)
            e[p] = 1.0
            row = self.MT @ self.basis.btran(e)
            elig = np.abs(row) > 1e-7
            elig[first_art:] = False
            elig[self.head] = False
            if not elig.any():
                continue
            q = int(np.argmax(np.where(elig, np.abs(row), 0.0)))
            alpha = self.basis.ftran(self._column(q))
            leave = self.head[p]
            self.state[leave] = FIXED
            self.x[leave] = 0.0
            self.state[q] = BASIC
            self.head[p] = q
            self.basis.push(p, alpha)
            if len(self.basis.etas) >= REFACTOR_EVERY:
                self._refactor()
        self._refactor()

    def solve(self) -> Status:
        if self.art.size:
            cost1 = np.zeros(self.N)
            cost1[self.art] = 1.0
            status = self.run_phase(cost1, phase1=True)
            if status is not Status.OPTIMAL:
                return status
            self._refactor()
            infeas = float(self.x[self.art].sum())
            if infeas > FEAS_TOL:
                return Status.INFEASIBLE
            self.lo[self.art] = 0.0
            self.up[self.art] = 0.0
            nb = self.state[self.art] != BASIC
            self.state[self.art[nb]] = FIXED
            self.x[self.art[nb]] = 0.0
            self.drive_out_artificials()
        status = self.run_phase(self.cost2, phase1=False)
        if status is Status.OPTIMAL:
            self._refactor()
        return status


class LinearProgram:
    """Scaled LP data prepared once and re-solved under varying column bounds."""

    def __init__(self, model: MilpModel, scale: bool = False):
        A, senses, rhs, c, lb, ub = model.arrays()
        A.eliminate_zeros()
        self.model = model
        self.A = A
        self.c = c
        self.lb = lb
        self.ub = ub
        self.rlo, self.rhi = model.row_bounds(senses, rhs)
        keep = np.diff(A.indptr) > 0
        # presolve: empty rows only need 0 within their bounds
        empty = ~keep
        self.empty_row_infeasible = bool(np.any(
            (self.rlo[empty] > FEAS_TOL) | (self.rhi[empty] < -FEAS_TOL)))
        self.keep = keep
        Ak = A[keep]
        # equilibration drifts on long chains of storage rows and leaves
        # reduced costs below the dual tolerance, so it is opt-in
        if scale:
            self.r, self.s = geometric_scaling(Ak)
        else:
            self.r, self.s = np.ones(Ak.shape[0]), np.ones(Ak.shape[1])
        self.As = sp.diags(self.r) @ Ak @ sp.diags(self.s)
        self.As = self.As.tocsr()
        cs = c * self.s
        cmax = np.max(np.abs(cs)) if cs.size else 0.0
        self.cscale = float(_pow2(1.0 / cmax)) if cmax > 0 else 1.0
        self.cs = cs * self.cscale

    def solve(self, lb=None, ub=None, max_iter: int | None = None,
              time_limit: float | None = None) -> Solution:
        lb = self.lb if lb is None else lb
        ub = self.ub if ub is None else ub
        n = self.A.shape[1]
        if np.any(lb > ub) or self.empty_row_infeasible:
            return Solution(Status.INFEASIBLE, message="contradictory bounds or empty row")
        m = self.As.shape[0]
        if max_iter is None:
            max_iter = 50 * (m + n) + 1000
        deadline = None if time_limit is None else time.perf_counter() + time_limit
        rlo = self.rlo[self.keep] * self.r
        rhi = self.rhi[self.keep] * self.r
        for pivot_tol in (PIVOT_TOL, RETRY_PIVOT_TOL):
            core = _Simplex(self.As, self.cs, lb / self.s, ub / self.s, rlo, rhi,
                            max_iter, deadline, pivot_tol)
            try:
                status = core.solve()
                break
            except SimplexError as exc:
                error = str(exc)
        else:
            return Solution(Status.ERROR, iterations=core.iterations, message=error)
        x = core.x[:n] * self.s
        if status is Status.OPTIMAL:
            x = np.clip(x, lb, ub)
        act = self.A @ x
        obj = float(self.c @ x + self.model.objective_constant)
        return Solution(status, obj if status is Status.OPTIMAL else np.nan, x, act,
                        iterations=core.iterations)


def solve_lp(model: MilpModel, max_iter: int | None = None,
             time_limit: float | None = None) -> Solution:
    """Solve the LP relaxation of ``model`` (binaries relaxed to ``[0, 1]``)."""
    return LinearProgram(model).solve(max_iter=max_iter, time_limit=time_limit)
