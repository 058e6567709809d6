"""Bounded-variable revised primal simplex.

The problem handled is::

    minimize    c @ x
    subject to  A[i] @ x  (<=, =, >=)  b[i]
                lower <= x <= upper

Row duals follow the convention ``d = c - A.T @ y``: at an optimum
``y[i] <= 0`` on ``<=`` rows, ``y[i] >= 0`` on ``>=`` rows, and the reduced
cost ``d[j]`` is non-negative at a lower bound, non-positive at an upper one.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .milp import EQ, GE, LE, MilpModel

log = logging.getLogger(__name__)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


class NumericalFailure(RuntimeError):
    pass


@dataclass(frozen=True)
class Tolerances:
    feasibility: float = 1e-9  # relative to 1 + max|b|
    optimality: float = 1e-9
    pivot: float = 1e-9
    integrality: float = 1e-6
    gap: float = 1e-6
    node_limit: int = 10 ** 6
    stall_iterations: int = 50
    refactor_every: int = 40
    max_iterations: int = 50_000


@dataclass
class LpSolution:
    status: str
    primal: Optional[np.ndarray] = None
    dual: Optional[np.ndarray] = None
    objective: float = float("nan")
    # Farkas ray (row multipliers) when infeasible, primal ray when unbounded
    certificate: Optional[np.ndarray] = None
    iterations: int = 0
    basis: Optional[np.ndarray] = field(default=None, repr=False)


def _slack_bounds(senses: Sequence[str]):
    m = len(senses)
    lo = np.zeros(m)
    hi = np.zeros(m)
    for i, s in enumerate(senses):
        if s == LE:
            hi[i] = np.inf
        elif s == GE:
            lo[i] = -np.inf
        elif s != EQ:
            raise ValueError(f"unknown row sense {s!r}")
    return lo, hi


def _nonbasic_start(lo: float, hi: float) -> float:
    if np.isfinite(lo):
        return lo
    if np.isfinite(hi):
        return hi
    return 0.0


class _Simplex:
    """Dense revised simplex state over ``[A | I | D] w = b``."""

    def __init__(self, A, senses, b, c, lower, upper, tol: Tolerances):
        self.tol = tol
        m, n = A.shape
        self.m, self.n = m, n
        slo, shi = _slack_bounds(senses)
        lo = np.concatenate([lower, slo])
        hi = np.concatenate([upper, shi])
        w = np.array([_nonbasic_start(l, h) for l, h in zip(lo, hi)])
        resid = b - A @ w[:n] if m else np.zeros(0)
        self.scale = 1.0 + (np.max(np.abs(b)) if m else 0.0)
        feas = tol.feasibility * self.scale

        full_basis = np.empty(m, dtype=int)
        art_cols = []
        art_rows = []
        for i in range(m):
            r = resid[i]
            if slo[i] - feas <= r <= shi[i] + feas:
                w[n + i] = r
                full_basis[i] = n + i
            else:
                art_rows.append(i)
                art_cols.append(1.0 if r > 0 else -1.0)
        k = len(art_rows)
        M = np.zeros((m, n + m + k))
        M[:, :n] = A
        M[:, n:n + m] = np.eye(m)
        for j, (i, sgn) in enumerate(zip(art_rows, art_cols)):
            M[i, n + m + j] = sgn
        self.M = M
        self.b = b
        self.lo = np.concatenate([lo, np.zeros(k)])
        self.hi = np.concatenate([hi, np.full(k, np.inf)])
        w = np.concatenate([w, np.abs(resid[art_rows]) if k else np.zeros(0)])
        # artificial j is basic in row art_rows[j]
        for j, i in enumerate(art_rows):
            full_basis[i] = n + m + j
        self.basis = full_basis
        self.w = w
        self.n_art = k
        self.art_rows = art_rows
        self.c_real = np.concatenate([c, np.zeros(m + k)])
        self.iterations = 0
        self.refactor()

    # -- linear algebra -----------------------------------------------------
    def refactor(self):
        self.since_refactor = 0
        if self.m == 0:
            self.Binv = np.zeros((0, 0))
            return
        B = self.M[:, self.basis]
        try:
            self.Binv = np.linalg.inv(B)
        except np.linalg.LinAlgError as exc:
            raise NumericalFailure("singular basis") from exc
        self.recompute_basics()

    def recompute_basics(self):
        nonbasic = np.ones(self.M.shape[1], dtype=bool)
        nonbasic[self.basis] = False
        rhs = self.b - self.M[:, nonbasic] @ self.w[nonbasic]
        self.w[self.basis] = self.Binv @ rhs

    # -- one phase -------------------------------------------------------------
    def run(self, cost: np.ndarray) -> str:
        tol = self.tol
        best_obj = np.inf
        stall = 0
        bland = False
        is_basic = np.zeros(self.M.shape[1], dtype=bool)
        while True:
            if self.iterations >= tol.max_iterations:
                raise NumericalFailure("iteration limit reached")
            is_basic[:] = False
            is_basic[self.basis] = True
            y = cost[self.basis] @ self.Binv if self.m else np.zeros(0)
            d = cost - y @ self.M if self.m else cost.copy()
            free = ~is_basic & (self.hi > self.lo)
            at_lo = free & np.isfinite(self.lo) & (self.w <= self.lo)
            at_hi = free & np.isfinite(self.hi) & (self.w >= self.hi) & ~at_lo
            between = free & ~at_lo & ~at_hi
            score = np.zeros_like(d)
            score[at_lo] = np.maximum(-d[at_lo], 0.0)
            score[at_hi] = np.maximum(d[at_hi], 0.0)
            score[between] = np.abs(d[between])
            eligible = np.nonzero(score > tol.optimality)[0]
            if eligible.size == 0:
                return OPTIMAL
            if bland:
                q = int(eligible[0])
            else:
                q = int(eligible[np.argmax(score[eligible])])
            direction = 1.0 if d[q] < 0 else -1.0
            alpha = self.Binv @ self.M[:, q] if self.m else np.zeros(0)
            step, leave, leave_to_hi = self._ratio(q, direction, alpha, bland)
            if leave == -2:
                self.ray = (q, direction, alpha)
                return UNBOUNDED
            self._move(q, direction, alpha, step, leave, leave_to_hi)
            self.iterations += 1
            obj = cost @ self.w
            if obj < best_obj - 1e-12 * (1 + abs(best_obj if np.isfinite(best_obj) else 0)):
                best_obj = obj
                stall = 0
                bland = False
            else:
                stall += 1
                if stall >= tol.stall_iterations:
                    bland = True
            if self.since_refactor >= tol.refactor_every:
                self.refactor()

    def _ratio(self, q, direction, alpha, bland):
        tol = self.tol
        best = np.inf
        if np.isfinite(self.hi[q]) and np.isfinite(self.lo[q]):
            best = self.hi[q] - self.lo[q]
        leave = -1  # -1: bound flip of the entering column
        leave_to_hi = False
        if self.m:
            rate = direction * alpha  # basic values move by -rate * step
            xb = self.w[self.basis]
            lb = self.lo[self.basis]
            ub = self.hi[self.basis]
            ratios = np.full(self.m, np.inf)
            dec = (rate > tol.pivot) & np.isfinite(lb)
            inc = (rate < -tol.pivot) & np.isfinite(ub)
            ratios[dec] = np.maximum(xb[dec] - lb[dec], 0.0) / rate[dec]
            ratios[inc] = np.maximum(ub[inc] - xb[inc], 0.0) / -rate[inc]
            rmin = ratios.min()
            # ties with the entering column's own bound favour the cheaper flip
            if rmin < best:
                cand = np.nonzero(ratios <= rmin + 1e-12)[0]
                if bland:
                    r = int(cand[np.argmin(self.basis[cand])])
                else:
                    r = int(cand[np.argmax(np.abs(alpha[cand]))])
                best = ratios[r]
                leave = r
                leave_to_hi = bool(rate[r] < 0)
        if not np.isfinite(best):
            return best, -2, False
        return best, leave, leave_to_hi

    def _move(self, q, direction, alpha, step, leave, leave_to_hi):
        if step:
            self.w[q] += direction * step
            if self.m:
                self.w[self.basis] -= direction * step * alpha
        if leave == -1:
            # snap the entering column onto the bound it reached
            self.w[q] = self.hi[q] if direction > 0 else self.lo[q]
            return
        out = self.basis[leave]
        self.w[out] = self.hi[out] if leave_to_hi else self.lo[out]
        piv = alpha[leave]
        row = self.Binv[leave] / piv
        self.Binv -= np.outer(alpha, row)
        self.Binv[leave] = row
        self.basis[leave] = q
        self.since_refactor += 1

    def portable_basis(self) -> np.ndarray:
        """Basis over ``[A | I]`` columns; a degenerate artificial maps to its row's slack."""
        out = self.basis.copy()
        for pos, col in enumerate(out):
            if col >= self.n + self.m:
                out[pos] = self.n + self.art_rows[col - self.n - self.m]
        return out

    @classmethod
    def from_basis(cls, A, senses, b, c, lower, upper, tol: Tolerances, basis) -> "_Simplex":
        self = cls.__new__(cls)
        self.tol = tol
        m, n = A.shape
        self.m, self.n = m, n
        slo, shi = _slack_bounds(senses)
        self.lo = np.concatenate([lower, slo])
        self.hi = np.concatenate([upper, shi])
        self.M = np.hstack([A, np.eye(m)])
        self.b = b
        self.scale = 1.0 + (np.max(np.abs(b)) if m else 0.0)
        self.n_art = 0
        self.art_rows = []
        self.c_real = np.concatenate([c, np.zeros(m)])
        self.iterations = 0
        self.basis = np.array(basis, dtype=int)
        self.w = np.zeros(n + m)
        B = self.M[:, self.basis]
        try:
            self.Binv = np.linalg.inv(B)
        except np.linalg.LinAlgError as exc:
            raise NumericalFailure("singular warm-start basis") from exc
        # park nonbasic columns on the bound their reduced cost prefers
        d = self.c_real - (self.c_real[self.basis] @ self.Binv) @ self.M
        nonbasic = np.ones(n + m, dtype=bool)
        nonbasic[self.basis] = False
        for j in np.nonzero(nonbasic)[0]:
            lo, hi = self.lo[j], self.hi[j]
            if d[j] > tol.optimality:
                if not np.isfinite(lo):
                    raise NumericalFailure("warm start is not dual feasible")
                self.w[j] = lo
            elif d[j] < -tol.optimality:
                if not np.isfinite(hi):
                    raise NumericalFailure("warm start is not dual feasible")
                self.w[j] = hi
            else:
                self.w[j] = _nonbasic_start(lo, hi)
        self.since_refactor = 0
        self.recompute_basics()
        return self

    def run_dual(self, cost: np.ndarray, max_iter: int) -> str:
        """Dual simplex from a dual-feasible basis until primal feasible."""
        tol = self.tol
        feas = tol.feasibility * self.scale
        n_all = self.M.shape[1]
        for _ in range(max_iter):
            xb = self.w[self.basis]
            lb = self.lo[self.basis]
            ub = self.hi[self.basis]
            below = lb - xb
            above = xb - ub
            infeas = np.maximum(below, above)
            r = int(np.argmax(infeas))
            if infeas[r] <= feas:
                return OPTIMAL
            to_lower = below[r] > above[r]
            y = cost[self.basis] @ self.Binv
            d = cost - y @ self.M
            row = self.Binv[r] @ self.M
            is_basic = np.zeros(n_all, dtype=bool)
            is_basic[self.basis] = True
            movable = ~is_basic & (self.hi > self.lo)
            at_lo = movable & np.isfinite(self.lo) & (self.w <= self.lo)
            at_hi = movable & ~at_lo & np.isfinite(self.hi) & (self.w >= self.hi)
            free = movable & ~at_lo & ~at_hi
            # x_r rises when the entering column moves against the sign of its row entry
            sgn = 1.0 if to_lower else -1.0
            ok = (at_lo & (sgn * row < -tol.pivot)) | (at_hi & (sgn * row > tol.pivot)) | \
                 (free & (np.abs(row) > tol.pivot))
            cand = np.nonzero(ok)[0]
            if cand.size == 0:
                self.dual_ray_row = r
                return INFEASIBLE
            ratios = np.abs(d[cand]) / np.abs(row[cand])
            rmin = ratios.min()
            near = cand[ratios <= rmin + 1e-12]
            q = int(near[np.argmax(np.abs(row[near]))])
            alpha = self.Binv @ self.M[:, q]
            target = lb[r] if to_lower else ub[r]
            step = (xb[r] - target) / alpha[r]
            self.w[q] += step
            self.w[self.basis] -= step * alpha
            out = self.basis[r]
            self.w[out] = target
            piv = alpha[r]
            prow = self.Binv[r] / piv
            self.Binv -= np.outer(alpha, prow)
            self.Binv[r] = prow
            self.basis[r] = q
            self.iterations += 1
            self.since_refactor += 1
            if self.since_refactor >= tol.refactor_every:
                self.refactor()
        raise NumericalFailure("dual simplex iteration cap")

    def duals(self, cost):
        if self.m == 0:
            return np.zeros(0)
        return cost[self.basis] @ self.Binv


def _solve_arrays(A, senses, b, c, lower, upper, tol: Tolerances) -> LpSolution:
    A = np.asarray(A, dtype=float).reshape(len(senses), len(c))
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if np.any(lower > upper + tol.feasibility):
        return LpSolution(INFEASIBLE, objective=np.inf)
    lp = _Simplex(A, list(senses), b, c, lower, upper, tol)
    n, m, k = lp.n, lp.m, lp.n_art
    if k:
        cost1 = np.zeros(n + m + k)
        cost1[n + m:] = 1.0
        status = lp.run(cost1)
        lp.refactor()
        infeas = float(np.sum(lp.w[n + m:]))
        if infeas > tol.feasibility * lp.scale:
            y = lp.duals(cost1)
            return LpSolution(INFEASIBLE, certificate=y, objective=np.inf, iterations=lp.iterations)
        lp.hi[n + m:] = 0.0
        lp.w[n + m:] = np.clip(lp.w[n + m:], 0.0, 0.0)
        lp.refactor()
    status = lp.run(lp.c_real)
    if status == UNBOUNDED:
        q, direction, alpha = lp.ray
        ray = np.zeros(n + m + k)
        ray[q] = direction
        ray[lp.basis] -= direction * alpha
        return LpSolution(UNBOUNDED, certificate=ray[:n], objective=-np.inf, iterations=lp.iterations)
    lp.refactor()
    # a fresh factorization can expose tiny reduced-cost errors; polish once
    if lp.run(lp.c_real) != OPTIMAL:
        raise NumericalFailure("lost optimality after refactorization")
    lp.refactor()
    x = lp.w[:n].copy()
    # basic columns sitting a hair outside their bounds are rounding noise
    x = np.minimum(np.maximum(x, lower), upper)
    y = lp.duals(lp.c_real)
    return LpSolution(OPTIMAL, primal=x, dual=y, objective=float(c @ x),
                      iterations=lp.iterations, basis=lp.portable_basis())


def _solve_warm(A, senses, b, c, lower, upper, tol: Tolerances, basis) -> Optional[LpSolution]:
    """Re-solve from a previous optimal basis; None means fall back to a cold start."""
    try:
        lp = _Simplex.from_basis(A, senses, b, c, lower, upper, tol, basis)
        status = lp.run_dual(lp.c_real, max_iter=10 * (lp.m + lp.n) + 100)
        if status == INFEASIBLE:
            return LpSolution(INFEASIBLE, objective=np.inf, iterations=lp.iterations)
        if lp.since_refactor:
            lp.refactor()
        if lp.run(lp.c_real) != OPTIMAL:
            return None
        if lp.since_refactor:
            lp.refactor()
        xb = lp.w[lp.basis]
        feas = tol.feasibility * lp.scale
        if np.any(xb < lp.lo[lp.basis] - feas) or np.any(xb > lp.hi[lp.basis] + feas):
            return None
    except NumericalFailure:
        return None
    x = np.minimum(np.maximum(lp.w[:lp.n], lower), upper)
    return LpSolution(OPTIMAL, primal=x, dual=lp.duals(lp.c_real), objective=float(c @ x),
                      iterations=lp.iterations, basis=lp.basis.copy())


def solve_lp(model: MilpModel, tol: Tolerances = Tolerances()) -> LpSolution:
    """Solve the continuous relaxation of ``model`` (integrality ignored)."""
    return _solve_arrays(model.matrix(), model.senses, model.rhs, model.objective,
                         model.lower, model.upper, tol)


# ---------------------------------------------------------------------------
# certificates

@dataclass
class DualityReport:
    primal_residual: float
    dual_residual: float
    complementarity: float
    primal_objective: float
    dual_objective: float
    gap: float
    passed: bool
    violations: List[str]


def _dual_objective(b, lower, upper, y, d):
    # reduced costs pushing against an infinite bound are dual infeasibility,
    # measured separately; they contribute nothing here
    total = float(b @ y)
    for j, dj in enumerate(d):
        if dj > 0 and np.isfinite(lower[j]):
            total += dj * lower[j]
        elif dj < 0 and np.isfinite(upper[j]):
            total += dj * upper[j]
    return total


def check_duality(model: MilpModel, sol: LpSolution, tol: Tolerances = Tolerances(),
                  gap_tol: float = 1e-8) -> DualityReport:
    """Verify primal/dual feasibility, complementary slackness and the gap."""
    A = model.matrix()
    b = model.rhs
    c = model.objective
    x = np.asarray(sol.primal, dtype=float)
    y = np.asarray(sol.dual, dtype=float)
    scale = 1.0 + (np.max(np.abs(b)) if len(b) else 0.0)
    feas = tol.feasibility * scale
    violations = []

    act = A @ x if len(b) else np.zeros(0)
    primal_res = 0.0
    worst_row = None
    for i, (s, a_i, b_i) in enumerate(zip(model.senses, act, b)):
        v = max(0.0, a_i - b_i) if s == LE else max(0.0, b_i - a_i) if s == GE else abs(a_i - b_i)
        if v > primal_res:
            primal_res, worst_row = v, i
    bound_res = float(np.max(np.concatenate([[0.0], model.lower - x, x - model.upper])))
    if primal_res > feas and worst_row is not None:
        violations.append(f"row {worst_row} ({model.rows[worst_row].tag}) violated by {primal_res:.3g}")
    if bound_res > feas:
        violations.append(f"bounds violated by {bound_res:.3g}")
    primal_res = max(primal_res, bound_res)

    d = c - A.T @ y if len(b) else c.copy()
    dual_res = 0.0
    for i, s in enumerate(model.senses):
        if s == LE:
            dual_res = max(dual_res, y[i])
        elif s == GE:
            dual_res = max(dual_res, -y[i])
    for j in range(model.n_columns):
        if not np.isfinite(model.lower[j]):
            dual_res = max(dual_res, d[j])
        if not np.isfinite(model.upper[j]):
            dual_res = max(dual_res, -d[j])
    dual_tol = 10 * tol.optimality * (1.0 + (float(np.max(np.abs(c))) if len(c) else 0.0))
    if dual_res > dual_tol:
        violations.append(f"dual infeasibility {dual_res:.3g}")

    comp = 0.0
    for i, s in enumerate(model.senses):
        slack = act[i] - b[i]
        comp = max(comp, abs(y[i] * slack))
    for j in range(model.n_columns):
        if d[j] > 0 and np.isfinite(model.lower[j]):
            comp = max(comp, d[j] * (x[j] - model.lower[j]))
        elif d[j] < 0 and np.isfinite(model.upper[j]):
            comp = max(comp, -d[j] * (model.upper[j] - x[j]))

    pobj = float(c @ x)
    dobj = _dual_objective(b, model.lower, model.upper, y, d)
    gap = abs(pobj - dobj)
    limit = gap_tol * (1.0 + abs(pobj))
    if comp > limit:
        violations.append(f"complementary slackness violated by {comp:.3g}")
    if not gap <= limit:
        violations.append(f"duality gap {gap:.3g} exceeds {limit:.3g}")
    return DualityReport(primal_res, dual_res, comp, pobj, dobj, gap, not violations, violations)


def farkas_margin(model: MilpModel, y) -> float:
    """``y @ b - max{y @ [A I] w : w in box}``; positive proves infeasibility."""
    y = np.asarray(y, dtype=float)
    A = model.matrix()
    slo, shi = _slack_bounds(model.senses)
    lo = np.concatenate([model.lower, slo])
    hi = np.concatenate([model.upper, shi])
    g = np.concatenate([A.T @ y, y]) if len(y) else np.zeros(len(lo))
    sup = 0.0
    for gj, l, h in zip(g, lo, hi):
        if abs(gj) < 1e-12:
            continue
        bound = h if gj > 0 else l
        if not np.isfinite(bound):
            return -np.inf
        sup += gj * bound
    return float(y @ model.rhs - sup)
