"""Route plans: extraction from MILP solutions, validation, brute-force oracle.

Route semantics shared by the model and the oracle:

* every quadcopter flies at least one leg from its start; nobody lands on a
  quadcopter start;
* each request site is entered exactly once over the whole fleet;
* no directed edge is flown twice, by anyone;
* ground vehicles are depots: cargo may be loaded or dropped there freely
  and the battery is recharged to full;
* between vehicle visits cargo evolves by the request demands (delivery
  positive) and must stay non-negative and within capacity; a route that
  ends at a request must arrive with exactly what that request consumes;
* battery use is length / max_range, starting from the initial charge.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from itertools import product
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .milp import VariableLayout
from .pdp import PdpInstance, Quadcopter

EPS = 1e-9


class DisconnectedRoute(RuntimeError):
    pass


class Infeasible(RuntimeError):
    pass


class OracleLimitExceeded(ValueError):
    pass


@dataclass(frozen=True)
class Leg:
    quad: str
    src: int
    dst: int
    length: float
    cargo: Mapping[str, int]  # on board while flying the leg
    charge: float  # remaining after the leg
    t: float  # legs remaining after this one
    z: Optional[float] = None  # model's battery variable, when extracted from a MILP


@dataclass
class RoutePlan:
    routes: Dict[str, List[Leg]] = field(default_factory=dict)

    @property
    def makespan(self) -> float:
        return makespan(self)

    def node_sequence(self, quad: str) -> List[int]:
        legs = self.routes.get(quad, [])
        if not legs:
            return []
        return [legs[0].src] + [leg.dst for leg in legs]


def route_length(legs: Sequence[Leg]) -> float:
    return float(sum(leg.length for leg in legs))


def makespan(plan: RoutePlan) -> float:
    return max((route_length(legs) for legs in plan.routes.values()), default=0.0)


def max_route_legs(inst: PdpInstance) -> int:
    # the leg counter on the first leg equals the legs that follow it
    return 2 * len(inst.requests) + len(inst.vehicles) + 1


# ---------------------------------------------------------------------------
# route bookkeeping shared by the oracle and the validator

def _demand_vec(inst: PdpInstance, node: int) -> np.ndarray:
    d = np.zeros(len(inst.items), dtype=int)
    for s, n in inst.requests[node].demand.items():
        d[inst.item_index(s)] = n
    return d


def _cargo_vec(inst: PdpInstance, cargo: Mapping[str, int]) -> np.ndarray:
    v = np.zeros(len(inst.items), dtype=int)
    for s, n in cargo.items():
        v[inst.item_index(s)] = n
    return v


def _as_cargo(inst: PdpInstance, vec) -> Dict[str, int]:
    return {it.id: int(n) for it, n in zip(inst.items, vec) if int(n) != 0}


def plan_cargo(inst: PdpInstance, quad: Quadcopter, walk: Sequence[int]) -> Optional[List[np.ndarray]]:
    """Cheapest feasible cargo per leg of ``walk``, or None if there is none."""
    weights = np.array([it.weight for it in inst.items], dtype=float)
    legs = len(walk) - 1
    cargo: List[Optional[np.ndarray]] = [None] * legs
    i = 0
    while i < legs:
        # a segment runs from walk[i] (start or vehicle) up to the next vehicle or the end
        j = i
        requests = []
        while j + 1 < legs and inst.is_request(walk[j + 1]):
            requests.append(walk[j + 1])
            j += 1
        # legs i..j form the segment; walk[j + 1] is a vehicle or the route end
        ends_route = j + 1 == legs and inst.is_request(walk[legs])
        if ends_route and (not requests or requests[-1] != walk[legs]):
            requests.append(walk[legs])
        prefix = [np.zeros(len(inst.items), dtype=int)]
        for r in requests:
            prefix.append(prefix[-1] + _demand_vec(inst, r))
        if i == 0:
            load = _cargo_vec(inst, quad.initial_cargo)
        else:
            load = np.max(np.stack(prefix), axis=0)
        if ends_route and not np.array_equal(load, prefix[-1]):
            return None
        for k in range(j - i + 1):
            c = load - prefix[k]
            if np.any(c < 0) or c @ weights > quad.capacity + EPS:
                return None
            cargo[i + k] = c
        if ends_route:
            last = load - prefix[-1]
            if np.any(last < 0):
                return None
        i = j + 1
    return cargo  # type: ignore[return-value]


def plan_charge(inst: PdpInstance, quad: Quadcopter, walk: Sequence[int]) -> List[float]:
    """Charge after each leg, recharging to 1 on arrival at a vehicle."""
    charge = quad.initial_charge
    out = []
    for a, b in zip(walk, walk[1:]):
        charge -= inst.edge_length(a, b) / quad.max_range
        out.append(charge)
        if inst.is_vehicle(b):
            charge = 1.0
    return out


def _legs_for_walk(inst, quad, walk, cargo, charges) -> List[Leg]:
    n = len(walk) - 1
    return [
        Leg(quad.id, a, b, inst.edge_length(a, b), _as_cargo(inst, cargo[k]), charges[k], float(n - 1 - k))
        for k, (a, b) in enumerate(zip(walk, walk[1:]))
    ]


# ---------------------------------------------------------------------------
# extraction

def extract_routes(inst: PdpInstance, mip, layout: VariableLayout) -> RoutePlan:
    """Turn a MILP incumbent into ordered per-quadcopter legs."""
    x = np.asarray(mip.incumbent if hasattr(mip, "incumbent") else mip, dtype=float)
    n = inst.n_nodes
    plan = RoutePlan()
    for j, quad in enumerate(inst.quadcopters):
        start = inst.quad_node(j)
        out_edges: Dict[int, List[Tuple[float, int]]] = {}
        count = 0
        for a in range(n):
            for b in range(n):
                if x[layout.index("x", quad.id, a, b)] > 0.5:
                    t = x[layout.index("t", quad.id, a, b)]
                    out_edges.setdefault(a, []).append((t, b))
                    count += 1
        if count == 0:
            plan.routes[quad.id] = []
            continue
        for a in out_edges:
            # highest leg counter first; pop() takes from the end
            out_edges[a].sort(key=lambda e: (e[0], -e[1]))
        walk = _euler_trail(start, out_edges)
        if len(walk) - 1 != count:
            raise DisconnectedRoute(
                f"quadcopter {quad.id!r}: {count} edges selected but only {len(walk) - 1} reachable from start"
            )
        charges = plan_charge(inst, quad, walk)
        legs = []
        for k, (a, b) in enumerate(zip(walk, walk[1:])):
            cargo = {s.id: int(round(x[layout.index("q", s.id, a, b)])) for s in inst.items}
            legs.append(Leg(quad.id, a, b, inst.edge_length(a, b),
                            {s: c for s, c in cargo.items() if c},
                            charges[k], float(x[layout.index("t", quad.id, a, b)]),
                            float(x[layout.index("z", quad.id, a, b)])))
        plan.routes[quad.id] = legs
    return plan


def plan_to_vector(inst: PdpInstance, plan: RoutePlan, layout: VariableLayout) -> np.ndarray:
    """Model column values realizing ``plan`` (inverse of extract_routes)."""
    x = np.zeros(layout.n_columns)
    for qid, legs in plan.routes.items():
        n = len(legs)
        # battery rows balance exactly through requests, so a route that ends
        # at a request must show zero charge there: shift its last segment
        shift = np.zeros(n)
        if n and inst.is_request(legs[-1].dst):
            k = n - 1
            while k >= 0 and not (k < n - 1 and inst.is_vehicle(legs[k].dst)):
                shift[k] = legs[-1].charge
                k -= 1
        for k, leg in enumerate(legs):
            x[layout.index("x", qid, leg.src, leg.dst)] = 1.0
            x[layout.index("z", qid, leg.src, leg.dst)] = leg.charge - shift[k]
            x[layout.index("t", qid, leg.src, leg.dst)] = n - 1 - k
            for s, c in leg.cargo.items():
                x[layout.index("q", s, leg.src, leg.dst)] = c
    x[layout.t_column] = plan.makespan
    return x


def _euler_trail(start: int, out_edges: Dict[int, List[Tuple[float, int]]]) -> List[int]:
    remaining = {a: list(v) for a, v in out_edges.items()}
    stack = [start]
    trail = []
    while stack:
        v = stack[-1]
        if remaining.get(v):
            _, b = remaining[v].pop()
            stack.append(b)
        else:
            trail.append(stack.pop())
    return trail[::-1]


# ---------------------------------------------------------------------------
# validation

@dataclass(frozen=True)
class Violation:
    kind: str
    quad: Optional[str]
    leg: Optional[int]
    message: str


@dataclass
class ValidationReport:
    violations: List[Violation]

    @property
    def ok(self) -> bool:
        return not self.violations

    def kinds(self) -> set:
        return {v.kind for v in self.violations}


def validate_plan(inst: PdpInstance, plan: RoutePlan, check_leg_cap: bool = True) -> ValidationReport:
    out: List[Violation] = []
    add = lambda kind, quad, leg, msg: out.append(Violation(kind, quad, leg, msg))
    visits: Dict[int, int] = {}
    used_edges: Dict[Tuple[int, int], str] = {}
    weights = np.array([it.weight for it in inst.items], dtype=float)
    quads = {q.id: (j, q) for j, q in enumerate(inst.quadcopters)}

    for qid in plan.routes:
        if qid not in quads:
            add("unknown_quad", qid, None, f"plan names unknown quadcopter {qid!r}")

    for qid, (j, quad) in quads.items():
        legs = plan.routes.get(qid, [])
        if not legs:
            add("idle", qid, None, f"quadcopter {qid!r} never moves")
            continue
        start = inst.quad_node(j)
        if legs[0].src != start:
            add("start", qid, 0, f"route starts at node {legs[0].src}, not at its start {start}")
        if check_leg_cap and len(legs) > max_route_legs(inst):
            add("leg_count", qid, None, f"{len(legs)} legs exceed the bound {max_route_legs(inst)}")
        for k, leg in enumerate(legs):
            if k and legs[k - 1].dst != leg.src:
                add("chain", qid, k, f"leg {k} departs {leg.src} but previous leg ended at {legs[k - 1].dst}")
            if leg.src == leg.dst:
                add("self_loop", qid, k, f"self loop at node {leg.src}")
            if inst.is_start(leg.dst):
                add("start_arrival", qid, k, f"leg {k} lands on a quadcopter start {leg.dst}")
            if abs(leg.length - inst.edge_length(leg.src, leg.dst)) > 1e-6:
                add("length", qid, k, f"leg {k} length {leg.length} differs from the site distance")
            e = (leg.src, leg.dst)
            if e in used_edges:
                add("edge_reuse", qid, k, f"edge {e} already flown by {used_edges[e]!r}")
            used_edges[e] = qid
            if inst.is_request(leg.dst):
                visits[leg.dst] = visits.get(leg.dst, 0) + 1
            if not 0.0 - EPS <= leg.charge <= 1.0 + EPS:
                add("charge_range", qid, k, f"leg {k} reports charge {leg.charge}")

        walk = [legs[0].src] + [leg.dst for leg in legs]
        for k, c in enumerate(plan_charge(inst, quad, walk)):
            if c < -EPS:
                add("battery", qid, k, f"battery exhausted on leg {k} (charge {c:.4g})")
                break

        cargo = [_cargo_vec(inst, leg.cargo) for leg in legs]
        if not np.array_equal(cargo[0], _cargo_vec(inst, quad.initial_cargo)):
            add("initial_cargo", qid, 0, "first leg does not carry the initial cargo")
        for k, c in enumerate(cargo):
            if np.any(c < 0):
                add("cargo_negative", qid, k, f"negative cargo on leg {k}")
            if c @ weights > quad.capacity + EPS:
                add("capacity", qid, k, f"cargo weight {c @ weights:g} exceeds capacity {quad.capacity:g}")
        for k, leg in enumerate(legs):
            if inst.is_request(leg.dst):
                after = cargo[k + 1] if k + 1 < len(legs) else np.zeros(len(inst.items), dtype=int)
                if not np.array_equal(cargo[k] - after, _demand_vec(inst, leg.dst)):
                    add("demand", qid, k, f"request node {leg.dst} not served exactly")

    for r in range(len(inst.requests)):
        n = visits.get(r, 0)
        if n == 0:
            add("unserved", None, None, f"request {inst.requests[r].id!r} is never visited")
        elif n > 1:
            add("revisited", None, None, f"request {inst.requests[r].id!r} visited {n} times")
    return ValidationReport(out)


# ---------------------------------------------------------------------------
# brute-force oracle

ORACLE_LIMITS = {"requests": 4, "quadcopters": 2, "vehicles": 3}


@dataclass(frozen=True)
class _Walk:
    length: float
    nodes: Tuple[int, ...]
    requests: frozenset
    vv_edges: frozenset  # vehicle-to-vehicle edges, the only ones two quads can share


def _enumerate_walks(inst: PdpInstance, j: int, max_legs: int) -> List[_Walk]:
    quad = inst.quadcopters[j]
    start = inst.quad_node(j)
    targets = [v for v in range(inst.n_nodes) if not inst.is_start(v)]
    dist = inst.distances
    found: List[_Walk] = []

    def extend(walk: List[int], used: set, charge: float, length: float):
        if len(walk) > 1:
            if plan_cargo(inst, quad, walk) is not None:
                reqs = frozenset(v for v in walk if inst.is_request(v))
                vv = frozenset((a, b) for a, b in zip(walk, walk[1:])
                               if inst.is_vehicle(a) and inst.is_vehicle(b))
                found.append(_Walk(length, tuple(walk), reqs, vv))
        if len(walk) - 1 >= max_legs:
            return
        a = walk[-1]
        for b in targets:
            if b == a or (a, b) in used or (inst.is_request(b) and b in walk):
                continue
            left = charge - dist[a][b] / quad.max_range
            if left < -EPS:
                continue
            walk.append(b)
            used.add((a, b))
            extend(walk, used, 1.0 if inst.is_vehicle(b) else left, length + dist[a][b])
            used.discard((a, b))
            walk.pop()

    extend([start], set(), quad.initial_charge, 0.0)
    return found


def brute_force_solve(inst: PdpInstance, max_legs: Optional[int] = None) -> RoutePlan:
    """Exhaustive minimum-makespan plan; raises Infeasible when none exists."""
    if (len(inst.requests) > ORACLE_LIMITS["requests"]
            or len(inst.quadcopters) > ORACLE_LIMITS["quadcopters"]
            or len(inst.vehicles) > ORACLE_LIMITS["vehicles"]):
        raise OracleLimitExceeded(
            f"oracle handles at most {ORACLE_LIMITS}; got {len(inst.requests)} requests, "
            f"{len(inst.quadcopters)} quadcopters, {len(inst.vehicles)} vehicles"
        )
    cap = max_route_legs(inst)
    max_legs = cap if max_legs is None else min(int(max_legs), cap)
    all_requests = frozenset(range(len(inst.requests)))
    if not inst.quadcopters:
        if all_requests:
            raise Infeasible("requests but no quadcopters")
        return RoutePlan()

    per_quad = []
    for j in range(len(inst.quadcopters)):
        walks = _enumerate_walks(inst, j, max_legs)
        walks.sort(key=lambda w: (w.length, w.nodes))
        per_quad.append(walks)

    best = None  # (makespan, node sequences, walks)

    def search(j: int, chosen: List[_Walk], covered: frozenset, vv: frozenset, span: float):
        nonlocal best
        if j == len(per_quad):
            if covered != all_requests:
                return
            key = (span, tuple(w.nodes for w in chosen))
            if best is None or key[0] < best[0] - EPS or (abs(key[0] - best[0]) <= EPS and key[1] < best[1]):
                best = (span, key[1], list(chosen))
            return
        for w in per_quad[j]:
            if best is not None and w.length > best[0] + EPS:
                break
            if w.requests & covered or w.vv_edges & vv:
                continue
            chosen.append(w)
            search(j + 1, chosen, covered | w.requests, vv | w.vv_edges, max(span, w.length))
            chosen.pop()

    search(0, [], frozenset(), frozenset(), 0.0)
    if best is None:
        raise Infeasible("no feasible plan within the leg bound")
    plan = RoutePlan()
    for quad, w in zip(inst.quadcopters, best[2]):
        cargo = plan_cargo(inst, quad, w.nodes)
        charges = plan_charge(inst, quad, w.nodes)
        plan.routes[quad.id] = _legs_for_walk(inst, quad, w.nodes, cargo, charges)
    return plan


# ---------------------------------------------------------------------------
# JSON plan files

def plan_to_dict(inst: PdpInstance, plan: RoutePlan, extra: Optional[dict] = None) -> dict:
    nodes = inst.nodes
    doc = {
        "makespan": plan.makespan,
        "routes": {
            qid: [
                {
                    "from": nodes[leg.src].owner,
                    "to": nodes[leg.dst].owner,
                    "from_node": leg.src,
                    "to_node": leg.dst,
                    "from_xy": list(nodes[leg.src].location),
                    "to_xy": list(nodes[leg.dst].location),
                    "length": leg.length,
                    "cargo": dict(leg.cargo),
                    "charge": leg.charge,
                    "t": leg.t,
                }
                for leg in legs
            ]
            for qid, legs in plan.routes.items()
        },
        "starts": {q.id: list(q.start_location) for q in inst.quadcopters},
    }
    if extra:
        doc.update(extra)
    return doc


def write_plan(path, inst: PdpInstance, plan: RoutePlan, extra: Optional[dict] = None) -> None:
    with open(path, "w") as fh:
        json.dump(plan_to_dict(inst, plan, extra), fh, indent=2)


def waypoints_from_doc(doc: Mapping, quad: Optional[str] = None) -> Tuple[Tuple[float, float], List[Tuple[float, float]]]:
    """Start point and ordered 2-D waypoints for one quadcopter of a plan document."""
    starts = doc.get("starts", {})
    routes = doc.get("routes", {})
    if quad is None:
        quad = next(iter(routes), None) or next(iter(starts), None)
    legs = routes.get(quad, []) if quad is not None else []
    if legs:
        start = tuple(legs[0]["from_xy"])
    elif quad in starts:
        start = tuple(starts[quad])
    else:
        start = (0.0, 0.0)
    return start, [tuple(leg["to_xy"]) for leg in legs]
