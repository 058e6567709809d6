"""Mixed-integer linear program for the quadcopter delivery problem.

Columns are grouped in N x N blocks, one block per (family, owner).  Inside
a block the source node varies fastest, i.e. column ``offset + a + N*b``
holds the variable for edge (a, b).  Block order: x per quadcopter, q per
item, z per quadcopter, t per quadcopter, and finally the makespan T.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .pdp import PdpInstance

FAMILIES = ("x", "q", "z", "t")

LE, EQ, GE = "<=", "=", ">="

# every tag a built model can carry, in emission order
ROW_TAGS = (
    "selfloop",
    "no_arrival_start",
    "first_leg_battery",
    "station_battery",
    "foreign_departure",
    "type0",
    "type1",
    "type2",
    "type3",
    "type4",
    "type5",
    "type6",
    "type7",
    "type8",
    "type9",
    "type10",
    "type11",
    "type12",
    "type13",
    "cut_charge",
    "cut_cargo",
)


class UnknownVariable(KeyError):
    pass


@dataclass(frozen=True)
class VariableLayout:
    n_nodes: int
    quads: Tuple[str, ...]
    items: Tuple[str, ...]

    @cached_property
    def blocks(self) -> Tuple[Tuple[str, str], ...]:
        return (
            tuple(("x", h) for h in self.quads)
            + tuple(("q", s) for s in self.items)
            + tuple(("z", h) for h in self.quads)
            + tuple(("t", h) for h in self.quads)
        )

    @cached_property
    def _offsets(self) -> Dict[Tuple[str, str], int]:
        size = self.n_nodes ** 2
        return {key: i * size for i, key in enumerate(self.blocks)}

    @property
    def n_columns(self) -> int:
        return len(self.blocks) * self.n_nodes ** 2 + 1

    @property
    def t_column(self) -> int:
        return self.n_columns - 1

    def index(self, family: str, owner: Optional[str] = None,
              src: Optional[int] = None, dst: Optional[int] = None) -> int:
        if family == "T":
            return self.t_column
        n = self.n_nodes
        off = self._offsets.get((family, owner))
        if off is None or src is None or dst is None or not (0 <= src < n and 0 <= dst < n):
            raise UnknownVariable((family, owner, src, dst))
        return off + src + n * dst

    def key(self, col: int) -> tuple:
        if col == self.t_column:
            return ("T",)
        size = self.n_nodes ** 2
        if not 0 <= col < self.t_column:
            raise UnknownVariable(col)
        family, owner = self.blocks[col // size]
        rem = col % size
        return (family, owner, rem % self.n_nodes, rem // self.n_nodes)

    def name(self, col: int) -> str:
        k = self.key(col)
        if k[0] == "T":
            return "T"
        family, owner, a, b = k
        return f"{family}[{owner}]({a + 1},{b + 1})"

    def names(self) -> List[str]:
        return [self.name(c) for c in range(self.n_columns)]

    def block_slice(self, family: str, owner: str) -> slice:
        off = self.index(family, owner, 0, 0)
        return slice(off, off + self.n_nodes ** 2)


def build_layout(inst: PdpInstance) -> VariableLayout:
    return VariableLayout(
        inst.n_nodes,
        tuple(h.id for h in inst.quadcopters),
        tuple(s.id for s in inst.items),
    )


def var_index(layout: VariableLayout, family: str, owner: Optional[str] = None,
              src: Optional[int] = None, dst: Optional[int] = None) -> int:
    return layout.index(family, owner, src, dst)


@dataclass(frozen=True)
class Row:
    tag: str
    cols: Tuple[int, ...]
    coefs: Tuple[float, ...]
    sense: str
    rhs: float


@dataclass
class MilpModel:
    n_columns: int
    rows: List[Row]
    objective: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    # "B" binary, "I" integer, "C" continuous
    kinds: Tuple[str, ...]
    layout: Optional[VariableLayout] = None
    names: Optional[List[str]] = None

    @property
    def integrality(self) -> np.ndarray:
        return np.array([k != "C" for k in self.kinds], dtype=bool)

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    def matrix(self) -> np.ndarray:
        A = np.zeros((len(self.rows), self.n_columns))
        for i, row in enumerate(self.rows):
            for c, v in zip(row.cols, row.coefs):
                A[i, c] += v
        return A

    @property
    def senses(self) -> List[str]:
        return [r.sense for r in self.rows]

    @property
    def rhs(self) -> np.ndarray:
        return np.array([r.rhs for r in self.rows], dtype=float)

    def col_name(self, c: int) -> str:
        if self.names is not None:
            return self.names[c]
        return f"c{c}"

    def with_rows(self, extra: Sequence[Row]) -> "MilpModel":
        return MilpModel(self.n_columns, list(self.rows) + list(extra), self.objective.copy(),
                         self.lower.copy(), self.upper.copy(), self.kinds, self.layout, self.names)

    def with_bounds(self, lower=None, upper=None) -> "MilpModel":
        lower = self.lower if lower is None else lower
        upper = self.upper if upper is None else upper
        return MilpModel(self.n_columns, self.rows, self.objective,
                         np.array(lower, dtype=float), np.array(upper, dtype=float),
                         self.kinds, self.layout, self.names)

    def row_activity(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.array([sum(v * x[c] for c, v in zip(r.cols, r.coefs)) for r in self.rows])

    def violations(self, x, tol: float = 1e-9) -> List[Tuple[int, str, float]]:
        """Rows (and bounds) violated by ``x`` beyond ``tol``; index -1 marks a bound."""
        x = np.asarray(x, dtype=float)
        out = []
        for i, (r, act) in enumerate(zip(self.rows, self.row_activity(x))):
            viol = _row_violation(r.sense, act, r.rhs)
            if viol > tol:
                out.append((i, r.tag, viol))
        low = self.lower - x
        high = x - self.upper
        for c in np.nonzero((low > tol) | (high > tol))[0]:
            out.append((-1, f"bound:{self.col_name(c)}", float(max(low[c], high[c]))))
        return out


def _row_violation(sense: str, act: float, rhs: float) -> float:
    if sense == LE:
        return max(0.0, act - rhs)
    if sense == GE:
        return max(0.0, rhs - act)
    return abs(act - rhs)


def make_model(A, senses: Sequence[str], b, c, lower=None, upper=None,
               kinds: Optional[Sequence[str]] = None, tag: str = "row") -> MilpModel:
    """Build a model from dense data; handy for generic LP/MIP fixtures."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    m, n = A.shape
    rows = []
    for i in range(m):
        nz = np.nonzero(A[i])[0]
        rows.append(Row(f"{tag}{i}", tuple(int(j) for j in nz), tuple(float(A[i, j]) for j in nz),
                        senses[i], float(b[i])))
    lower = np.zeros(n) if lower is None else np.asarray(lower, dtype=float)
    upper = np.full(n, np.inf) if upper is None else np.asarray(upper, dtype=float)
    kinds = tuple(kinds) if kinds is not None else ("C",) * n
    return MilpModel(n, rows, np.asarray(c, dtype=float), lower.copy(), upper.copy(), kinds)


class _RowSink:
    def __init__(self):
        self.rows: List[Row] = []

    def add(self, tag: str, terms: Dict[int, float], sense: str, rhs: float):
        items = sorted((c, v) for c, v in terms.items() if v != 0.0)
        self.rows.append(Row(tag, tuple(c for c, _ in items), tuple(float(v) for _, v in items),
                             sense, float(rhs)))


def _acc(terms: Dict[int, float], col: int, val: float):
    terms[col] = terms.get(col, 0.0) + val


def build_model(inst: PdpInstance, with_cuts: bool = True) -> MilpModel:
    lay = build_layout(inst)
    n = inst.n_nodes
    nodes = range(n)
    quads = inst.quadcopters
    items = inst.items
    R = len(inst.requests)
    V = len(inst.vehicles)
    starts = [inst.quad_node(j) for j in range(len(quads))]
    vehicles = [inst.vehicle_node(k) for k in range(V)]
    dist = inst.distances
    X = lambda h, a, b: lay.index("x", h.id, a, b)
    Q = lambda s, a, b: lay.index("q", s.id, a, b)
    Z = lambda h, a, b: lay.index("z", h.id, a, b)
    Tl = lambda h, a, b: lay.index("t", h.id, a, b)
    T = lay.t_column
    big_m = 2 * R + V

    ncol = lay.n_columns
    lower = np.zeros(ncol)
    upper = np.full(ncol, np.inf)
    kinds = ["C"] * ncol
    max_cap = max((h.capacity for h in quads), default=0.0)
    for h in quads:
        upper[lay.block_slice("x", h.id)] = 1.0
        for c in range(lay.block_slice("x", h.id).start, lay.block_slice("x", h.id).stop):
            kinds[c] = "B"
    for s in items:
        sl = lay.block_slice("q", s.id)
        # Type 5 plus Type 2 cap any single edge's load at the largest capacity
        upper[sl] = math.floor(max_cap / s.weight + 1e-9)
        for c in range(sl.start, sl.stop):
            kinds[c] = "I"

    out = _RowSink()

    for h in quads:
        for v in nodes:
            out.add("selfloop", {X(h, v, v): 1.0}, LE, 0.0)
    for h in quads:
        for s_node in starts:
            for v in nodes:
                out.add("no_arrival_start", {X(h, v, s_node): 1.0}, LE, 0.0)
    for j, h in enumerate(quads):
        a = starts[j]
        for b in nodes:
            out.add("first_leg_battery", {Z(h, a, b): 1.0, X(h, a, b): dist[a][b] / h.max_range},
                    LE, h.initial_charge)
    for k in vehicles:
        for b in nodes:
            for h in quads:
                out.add("station_battery", {Z(h, k, b): 1.0, X(h, k, b): dist[k][b] / h.max_range},
                        LE, 1.0)
    for j, h in enumerate(quads):
        for other in quads:
            if other is h:
                continue
            for b in nodes:
                out.add("foreign_departure", {X(other, starts[j], b): 1.0}, LE, 0.0)

    for j, h in enumerate(quads):
        out.add("type0", {X(h, starts[j], b): 1.0 for b in nodes}, LE, 1.0)
    for j, h in enumerate(quads):
        a = starts[j]
        for s in items:
            carried = h.initial_cargo.get(s.id, 0)
            for b in nodes:
                out.add("type1", {Q(s, a, b): 1.0, X(h, a, b): -float(carried)}, EQ, 0.0)
    for b in nodes:
        for a in nodes:
            out.add("type2", {X(h, a, b): 1.0 for h in quads}, LE, 1.0)

    def inflow(terms, fam, v, coef=1.0):
        for a in nodes:
            _acc(terms, fam(a, v), coef)

    def outflow(terms, fam, v, coef=1.0):
        for b in nodes:
            _acc(terms, fam(v, b), coef)

    for i, r in enumerate(inst.requests):
        v = inst.request_node(i)
        for s in items:
            terms: Dict[int, float] = {}
            inflow(terms, lambda a, b: Q(s, a, b), v, 1.0)
            outflow(terms, lambda a, b: Q(s, a, b), v, -1.0)
            out.add("type3", terms, EQ, r.demand.get(s.id, 0))
    for i in range(R):
        v = inst.request_node(i)
        terms = {}
        for h in quads:
            inflow(terms, lambda a, b: X(h, a, b), v, 1.0)
        out.add("type4", terms, EQ, 1.0)
    for b in nodes:
        for a in nodes:
            terms = {Q(s, a, b): s.weight for s in items}
            for h in quads:
                _acc(terms, X(h, a, b), -h.capacity)
            out.add("type5", terms, LE, 0.0)
    for i in range(R):
        v = inst.request_node(i)
        for h in quads:
            terms = {}
            inflow(terms, lambda a, b: X(h, a, b), v, 1.0)
            outflow(terms, lambda a, b: X(h, a, b), v, -1.0)
            out.add("type6", terms, GE, 0.0)
    for h in quads:
        for v in vehicles:
            terms = {}
            outflow(terms, lambda a, b: X(h, a, b), v, 1.0)
            inflow(terms, lambda a, b: X(h, a, b), v, -1.0)
            out.add("type7", terms, LE, 0.0)
    for h in quads:
        for b in nodes:
            for a in nodes:
                out.add("type8", {Z(h, a, b): 1.0, X(h, a, b): -1.0}, LE, 0.0)
    for h in quads:
        for i in range(R):
            v = inst.request_node(i)
            terms = {}
            inflow(terms, lambda a, b: Z(h, a, b), v, 1.0)
            outflow(terms, lambda a, b: Z(h, a, b), v, -1.0)
            for b in nodes:
                _acc(terms, X(h, v, b), -dist[v][b] / h.max_range)
            out.add("type9", terms, EQ, 0.0)
    for h in quads:
        for b in nodes:
            for a in nodes:
                out.add("type10", {Tl(h, a, b): 1.0, X(h, a, b): -float(big_m)}, LE, 0.0)
    for v in list(range(R)) + vehicles:
        for h in quads:
            terms = {}
            inflow(terms, lambda a, b: Tl(h, a, b), v, 1.0)
            outflow(terms, lambda a, b: Tl(h, a, b), v, -1.0)
            outflow(terms, lambda a, b: X(h, a, b), v, -1.0)
            out.add("type11", terms, EQ, 0.0)
    for h in quads:
        terms = {X(h, a, b): dist[a][b] for b in nodes for a in nodes}
        terms[T] = -1.0
        out.add("type12", terms, LE, 0.0)
    for j, h in enumerate(quads):
        out.add("type13", {X(h, starts[j], b): 1.0 for b in nodes}, GE, 1.0)

    if with_cuts:
        for j, h in enumerate(quads):
            a = starts[j]
            for b in nodes:
                if a == b:
                    continue
                if dist[a][b] / h.max_range > h.initial_charge + 1e-12:
                    out.add("cut_charge", {X(h, a, b): 1.0}, LE, 0.0)
                elif inst.is_request(b) and not _launch_cargo_ok(inst, h, b):
                    out.add("cut_cargo", {X(h, a, b): 1.0}, LE, 0.0)

    objective = np.zeros(ncol)
    objective[T] = 1.0
    return MilpModel(ncol, out.rows, objective, lower, upper, tuple(kinds), lay, lay.names())


def _launch_cargo_ok(inst: PdpInstance, h, request_node: int) -> bool:
    """Can ``h`` serve the request straight from launch with its initial cargo?"""
    demand = inst.requests[request_node].demand
    after = dict(h.initial_cargo)
    for s, d in demand.items():
        after[s] = after.get(s, 0) - d
    if any(n < 0 for n in after.values()):
        return False
    return inst.cargo_weight(after) <= h.capacity + 1e-12


def row_report(model: MilpModel) -> Dict[str, int]:
    counts = Counter(r.tag for r in model.rows)
    return {tag: counts.get(tag, 0) for tag in ROW_TAGS} | {
        t: c for t, c in counts.items() if t not in ROW_TAGS
    }


def dump_model(model: MilpModel) -> str:
    """Plain-text listing: objective, bounds, then one line per row."""
    lines = ["# objective: minimize " + " + ".join(
        f"{v:g}*{model.col_name(c)}" for c, v in enumerate(model.objective) if v != 0)]
    for c in range(model.n_columns):
        lines.append(f"bound {model.col_name(c)} {model.kinds[c]} [{model.lower[c]:g}, {model.upper[c]:g}]")
    for r in model.rows:
        terms = " ".join(f"{v:+g}*{model.col_name(c)}" for c, v in zip(r.cols, r.coefs))
        lines.append(f"{r.tag} {r.sense} {r.rhs:.17g} : {terms}")
    return "\n".join(lines) + "\n"
