"""Best-bound branch-and-bound over the model's integrality mask."""
from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .milp import EQ, GE, LE, MilpModel
from .simplex import (INFEASIBLE, OPTIMAL, UNBOUNDED, LpSolution, Tolerances,
                      _solve_arrays, _solve_warm, solve_lp)


class NodeLimitExceeded(RuntimeError):
    pass


@dataclass
class SolverStats:
    nodes: int = 0
    pivots: int = 0
    wall_time: float = 0.0

    def as_dict(self) -> dict:
        return {"nodes": self.nodes, "pivots": self.pivots, "wall_time": self.wall_time}


@dataclass
class MipSolution:
    status: str
    incumbent: Optional[np.ndarray] = None
    objective: float = math.inf
    nodes: int = 0
    # (nodes processed, best open bound, incumbent objective)
    bound_history: List[Tuple[int, float, float]] = field(default_factory=list)
    stats: SolverStats = field(default_factory=SolverStats)
    root_bound: float = -math.inf


class _Presolved:
    """Singleton rows folded into bounds, fixed columns substituted out."""

    def __init__(self, model: MilpModel, tol: Tolerances):
        A = model.matrix()
        b = model.rhs.copy()
        senses = list(model.senses)
        lo = model.lower.copy()
        hi = model.upper.copy()
        integer = model.integrality
        self.infeasible = False
        keep_rows = np.ones(len(b), dtype=bool)
        keep_cols = np.ones(model.n_columns, dtype=bool)
        fixed_val = np.zeros(model.n_columns)
        eps = tol.feasibility * (1.0 + (np.max(np.abs(b)) if len(b) else 0.0))

        changed = True
        while changed and not self.infeasible:
            changed = False
            for i in np.nonzero(keep_rows)[0]:
                nz = np.nonzero(A[i] * keep_cols)[0]
                if len(nz) == 0:
                    r = b[i]
                    if (senses[i] == LE and r < -eps) or (senses[i] == GE and r > eps) or \
                            (senses[i] == EQ and abs(r) > eps):
                        self.infeasible = True
                    keep_rows[i] = False
                    changed = True
                elif len(nz) == 1:
                    j = nz[0]
                    a = A[i, j]
                    v = b[i] / a
                    s = senses[i]
                    if s == EQ or (s == LE and a > 0) or (s == GE and a < 0):
                        hi[j] = min(hi[j], v)
                    if s == EQ or (s == LE and a < 0) or (s == GE and a > 0):
                        lo[j] = max(lo[j], v)
                    keep_rows[i] = False
                    changed = True
            for j in np.nonzero(keep_cols)[0]:
                if integer[j]:
                    hi[j] = math.floor(hi[j] + tol.integrality) if np.isfinite(hi[j]) else hi[j]
                    lo[j] = math.ceil(lo[j] - tol.integrality) if np.isfinite(lo[j]) else lo[j]
                if lo[j] > hi[j] + eps:
                    self.infeasible = True
                    break
                if hi[j] - lo[j] <= eps:
                    val = lo[j] if np.isfinite(lo[j]) else hi[j]
                    fixed_val[j] = val
                    b -= A[:, j] * val
                    keep_cols[j] = False
                    changed = True

        self.model = model
        self.rows = np.nonzero(keep_rows)[0]
        self.cols = np.nonzero(keep_cols)[0]
        self.A = A[np.ix_(self.rows, self.cols)]
        self.b = b[self.rows]
        self.senses = [senses[i] for i in self.rows]
        self.c = model.objective[self.cols]
        self.lower = lo[self.cols]
        self.upper = hi[self.cols]
        self.integer = integer[self.cols]
        self.binary = np.array([model.kinds[j] == "B" for j in self.cols], dtype=bool)
        self.fixed_val = fixed_val
        self.offset = float(model.objective[~keep_cols] @ fixed_val[~keep_cols])

    def expand(self, x_reduced) -> np.ndarray:
        x = self.fixed_val.copy()
        x[self.cols] = x_reduced
        return x


def _pick_branch(x, integer, binary, tol: Tolerances) -> int:
    frac = np.abs(x - np.round(x))
    cand = np.nonzero(integer & (frac > tol.integrality))[0]
    if cand.size == 0:
        return -1
    # most fractional, then binary before general integer, then lowest index
    key = [(-round(float(frac[j]), 9), 0 if binary[j] else 1, int(j)) for j in cand]
    return int(cand[min(range(len(cand)), key=key.__getitem__)])


def branch_and_bound(model: MilpModel, tol: Tolerances = Tolerances(),
                     node_limit: Optional[int] = None, warm_start: bool = True) -> MipSolution:
    """Solve ``model`` to proven optimality (within ``tol.gap``)."""
    start = time.perf_counter()
    limit = tol.node_limit if node_limit is None else node_limit
    stats = SolverStats()
    if not model.integrality.any():
        lp = solve_lp(model, tol)
        stats.nodes, stats.pivots = 1, lp.iterations
        stats.wall_time = time.perf_counter() - start
        if lp.status != OPTIMAL:
            return MipSolution(lp.status, nodes=1, stats=stats)
        return MipSolution(OPTIMAL, lp.primal, lp.objective, 1,
                           [(1, lp.objective, lp.objective)], stats, lp.objective)

    pre = _Presolved(model, tol)
    if pre.infeasible:
        stats.wall_time = time.perf_counter() - start
        return MipSolution(INFEASIBLE, stats=stats)

    def solve(lo, hi, basis) -> LpSolution:
        sol = None
        if warm_start and basis is not None:
            sol = _solve_warm(pre.A, pre.senses, pre.b, pre.c, lo, hi, tol, basis)
        if sol is None:
            sol = _solve_arrays(pre.A, pre.senses, pre.b, pre.c, lo, hi, tol)
        stats.pivots += sol.iterations
        return sol

    best_x = None
    best_obj = math.inf
    history = []
    heap = [(-math.inf, 0, pre.lower.copy(), pre.upper.copy(), None)]
    created = 1
    root_bound = -math.inf

    def gap_ok(bound):
        return bound >= best_obj - tol.gap * (1.0 + abs(best_obj))

    while heap:
        bound, _, lo, hi, basis = heapq.heappop(heap)
        if best_x is not None and gap_ok(bound):
            # everything left is at least this bound
            heap.clear()
            break
        if stats.nodes >= limit:
            raise NodeLimitExceeded(f"node limit {limit} reached")
        stats.nodes += 1
        sol = solve(lo, hi, basis)
        if sol.status == UNBOUNDED:
            if stats.nodes == 1:
                stats.wall_time = time.perf_counter() - start
                return MipSolution(UNBOUNDED, nodes=1, stats=stats)
            continue
        if sol.status != OPTIMAL:
            continue
        obj = sol.objective + pre.offset
        if stats.nodes == 1:
            root_bound = obj
        if best_x is not None and gap_ok(obj):
            continue
        j = _pick_branch(sol.primal, pre.integer, pre.binary, tol)
        if j < 0:
            x = sol.primal.copy()
            x[pre.integer] = np.round(x[pre.integer])
            best_x, best_obj = x, obj
            history.append((stats.nodes, obj, best_obj))
            continue
        v = sol.primal[j]
        down_hi = hi.copy()
        down_hi[j] = math.floor(v)
        up_lo = lo.copy()
        up_lo[j] = math.ceil(v)
        heapq.heappush(heap, (obj, created, lo, down_hi, sol.basis))
        heapq.heappush(heap, (obj, created + 1, up_lo, hi, sol.basis))
        created += 2
        if stats.nodes % 50 == 0:
            open_bound = min((n[0] for n in heap), default=obj)
            history.append((stats.nodes, open_bound, best_obj))

    stats.wall_time = time.perf_counter() - start
    if best_x is None:
        return MipSolution(INFEASIBLE, nodes=stats.nodes, bound_history=history, stats=stats,
                           root_bound=root_bound)
    x = pre.expand(best_x)
    obj = float(model.objective @ x)
    history.append((stats.nodes, obj, obj))
    return MipSolution(OPTIMAL, x, obj, stats.nodes, history, stats, root_bound)
