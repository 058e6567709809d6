"""Domain types for the quadcopter pickup-and-delivery problem.

Sites are indexed in a fixed order: request locations first, then
quadcopter start locations, then ground vehicles.  Everything downstream
(variable layout, route extraction, the oracle) relies on that ordering.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, List, Mapping, Sequence, Tuple

Point = Tuple[float, float]


class InstanceError(ValueError):
    """Raised when an instance violates a structural invariant."""


class DuplicateId(InstanceError):
    pass


class NonFiniteCoordinate(InstanceError):
    pass


class CargoExceedsCapacity(InstanceError):
    pass


class UnknownItem(InstanceError):
    pass


@dataclass(frozen=True)
class Item:
    id: str
    weight: float


@dataclass(frozen=True)
class Request:
    id: str
    location: Point
    # positive = delivery, negative = pickup
    demand: Mapping[str, int]


@dataclass(frozen=True)
class Quadcopter:
    id: str
    start_location: Point
    capacity: float
    max_range: float
    initial_charge: float = 1.0
    initial_cargo: Mapping[str, int] = field(default_factory=dict)


@dataclass(frozen=True)
class GroundVehicle:
    id: str
    location: Point


@dataclass(frozen=True)
class Node:
    index: int
    kind: str  # "request" | "quad" | "vehicle"
    owner: str
    location: Point


@dataclass(frozen=True)
class PdpInstance:
    items: Tuple[Item, ...] = ()
    requests: Tuple[Request, ...] = ()
    quadcopters: Tuple[Quadcopter, ...] = ()
    vehicles: Tuple[GroundVehicle, ...] = ()

    def __post_init__(self):
        for name in ("items", "requests", "quadcopters", "vehicles"):
            object.__setattr__(self, name, tuple(getattr(self, name)))

    @cached_property
    def nodes(self) -> Tuple[Node, ...]:
        out: List[Node] = []
        for r in self.requests:
            out.append(Node(len(out), "request", r.id, r.location))
        for h in self.quadcopters:
            out.append(Node(len(out), "quad", h.id, h.start_location))
        for v in self.vehicles:
            out.append(Node(len(out), "vehicle", v.id, v.location))
        return tuple(out)

    @property
    def n_nodes(self) -> int:
        return len(self.requests) + len(self.quadcopters) + len(self.vehicles)

    @property
    def edges(self) -> List[Tuple[int, int]]:
        n = self.n_nodes
        return [(a, b) for b in range(n) for a in range(n)]

    def request_node(self, i: int) -> int:
        return i

    def quad_node(self, j: int) -> int:
        return len(self.requests) + j

    def vehicle_node(self, k: int) -> int:
        return len(self.requests) + len(self.quadcopters) + k

    def is_request(self, node: int) -> bool:
        return 0 <= node < len(self.requests)

    def is_start(self, node: int) -> bool:
        return len(self.requests) <= node < len(self.requests) + len(self.quadcopters)

    def is_vehicle(self, node: int) -> bool:
        return len(self.requests) + len(self.quadcopters) <= node < self.n_nodes

    @cached_property
    def distances(self) -> List[List[float]]:
        pts = [n.location for n in self.nodes]
        return [[distance(a, b) for b in pts] for a in pts]

    def edge_length(self, a: int, b: int) -> float:
        return self.distances[a][b]

    def item_index(self, item_id: str) -> int:
        for i, it in enumerate(self.items):
            if it.id == item_id:
                return i
        raise UnknownItem(f"unknown item {item_id!r}")

    def cargo_weight(self, cargo: Mapping[str, int]) -> float:
        weights = {it.id: it.weight for it in self.items}
        return sum(weights[s] * n for s, n in cargo.items())


def distance(a: Point, b: Point) -> float:
    """Euclidean distance between two planar points."""
    return math.hypot(b[0] - a[0], b[1] - a[1])


def _check_point(p, owner: str) -> Point:
    if len(p) != 2:
        raise NonFiniteCoordinate(f"{owner}: expected 2-D coordinates, got {p!r}")
    x, y = float(p[0]), float(p[1])
    if not (math.isfinite(x) and math.isfinite(y)):
        raise NonFiniteCoordinate(f"{owner}: non-finite coordinate {p!r}")
    return (x, y)


def validate_instance(raw: PdpInstance) -> PdpInstance:
    """Check ids, coordinates, weights and cargo; return a normalized copy."""
    seen: Dict[str, str] = {}

    def claim(kind: str, ident: str):
        if ident in seen:
            raise DuplicateId(f"duplicate id {ident!r} ({seen[ident]} and {kind})")
        seen[ident] = kind

    items = []
    for it in raw.items:
        claim("item", it.id)
        if not (it.weight > 0 and math.isfinite(it.weight)):
            raise InstanceError(f"item {it.id!r}: weight must be positive, got {it.weight}")
        items.append(Item(str(it.id), float(it.weight)))
    weights = {it.id: it.weight for it in items}

    def check_items(owner: str, counts: Mapping[str, int]):
        for s in counts:
            if s not in weights:
                raise UnknownItem(f"{owner}: unknown item {s!r}")

    requests = []
    for r in raw.requests:
        claim("request", r.id)
        loc = _check_point(r.location, f"request {r.id!r}")
        demand = {str(s): int(n) for s, n in r.demand.items() if int(n) != 0}
        if not demand:
            raise InstanceError(f"request {r.id!r}: empty demand")
        check_items(f"request {r.id!r}", demand)
        requests.append(Request(r.id, loc, demand))

    quads = []
    for h in raw.quadcopters:
        claim("quadcopter", h.id)
        loc = _check_point(h.start_location, f"quadcopter {h.id!r}")
        if not h.capacity > 0:
            raise InstanceError(f"quadcopter {h.id!r}: capacity must be positive")
        if not h.max_range > 0:
            raise InstanceError(f"quadcopter {h.id!r}: max_range must be positive")
        if not 0.0 <= h.initial_charge <= 1.0:
            raise InstanceError(f"quadcopter {h.id!r}: initial_charge outside [0, 1]")
        cargo = {str(s): int(n) for s, n in h.initial_cargo.items() if int(n) != 0}
        check_items(f"quadcopter {h.id!r}", cargo)
        if any(n < 0 for n in cargo.values()):
            raise InstanceError(f"quadcopter {h.id!r}: negative initial cargo")
        load = sum(weights[s] * n for s, n in cargo.items())
        if load > h.capacity + 1e-12:
            raise CargoExceedsCapacity(
                f"quadcopter {h.id!r}: initial cargo weight {load:g} exceeds capacity {h.capacity:g}"
            )
        quads.append(Quadcopter(h.id, loc, float(h.capacity), float(h.max_range),
                                float(h.initial_charge), cargo))

    vehicles = []
    for v in raw.vehicles:
        claim("vehicle", v.id)
        vehicles.append(GroundVehicle(v.id, _check_point(v.location, f"vehicle {v.id!r}")))

    return PdpInstance(tuple(items), tuple(requests), tuple(quads), tuple(vehicles))


# ---------------------------------------------------------------------------
# JSON instance files

def instance_from_dict(doc: Mapping) -> PdpInstance:
    try:
        items = [Item(str(d["id"]), float(d["weight"])) for d in doc.get("items", [])]
        requests = [Request(str(d["id"]), tuple(d["location"]), dict(d["demand"]))
                    for d in doc.get("requests", [])]
        quads = [
            Quadcopter(
                str(d["id"]),
                tuple(d["start_location"]),
                float(d["capacity"]),
                float(d["max_range"]),
                float(d.get("initial_charge", 1.0)),
                dict(d.get("initial_cargo", {})),
            )
            for d in doc.get("quadcopters", [])
        ]
        vehicles = [GroundVehicle(str(d["id"]), tuple(d["location"])) for d in doc.get("vehicles", [])]
    except (KeyError, TypeError) as exc:
        raise InstanceError(f"malformed instance document: {exc!r}") from exc
    return validate_instance(PdpInstance(items, requests, quads, vehicles))


def instance_to_dict(inst: PdpInstance) -> dict:
    return {
        "items": [{"id": it.id, "weight": it.weight} for it in inst.items],
        "requests": [
            {"id": r.id, "location": list(r.location), "demand": dict(r.demand)} for r in inst.requests
        ],
        "quadcopters": [
            {
                "id": h.id,
                "start_location": list(h.start_location),
                "capacity": h.capacity,
                "max_range": h.max_range,
                "initial_charge": h.initial_charge,
                "initial_cargo": dict(h.initial_cargo),
            }
            for h in inst.quadcopters
        ],
        "vehicles": [{"id": v.id, "location": list(v.location)} for v in inst.vehicles],
    }


def load_instance(path) -> PdpInstance:
    with open(path) as fh:
        return instance_from_dict(json.load(fh))


def save_instance(inst: PdpInstance, path) -> None:
    with open(path, "w") as fh:
        json.dump(instance_to_dict(inst), fh, indent=2)


def worked_example(request_at: Point = (3.0, 4.0), quad_at: Point = (0.0, 0.0),
                   vehicle_at: Point = (0.0, 8.0)) -> PdpInstance:
    """One request, one quadcopter already carrying the item, one vehicle."""
    return validate_instance(
        PdpInstance(
            items=[Item("s1", 1.0)],
            requests=[Request("r1", request_at, {"s1": 1})],
            quadcopters=[Quadcopter("h1", quad_at, capacity=2.0, max_range=20.0,
                                    initial_charge=1.0, initial_cargo={"s1": 1})],
            vehicles=[GroundVehicle("v1", vehicle_at)],
        )
    )


# ---------------------------------------------------------------------------
# Hardware requirements check

@dataclass(frozen=True)
class UavRequirements:
    min_flight_minutes: float = 10.0
    thrust_to_weight_range: Tuple[float, float] = (1.5, 2.0)
    max_width_inches: float = 30.0
    max_mass_kg: float = 1.5
    payload_range_kg: Tuple[float, float] = (0.5, 1.0)
    min_max_height_ft: float = 10.0

    def __post_init__(self):
        lo, hi = self.thrust_to_weight_range
        plo, phi = self.payload_range_kg
        if not (0 < lo < hi and 0 < plo < phi):
            raise ValueError("requirement ranges must be positive and non-degenerate")
        if min(self.min_flight_minutes, self.max_width_inches, self.max_mass_kg,
               self.min_max_height_ft) <= 0:
            raise ValueError("requirement thresholds must be positive")


class MissingParameter(KeyError):
    def __str__(self):
        return f"missing parameter {self.args[0]!r}"


@dataclass(frozen=True)
class Verdict:
    number: int
    name: str
    passed: bool
    detail: str
    declared: bool = False  # True when the item is a declared hardware property


SPEC_PARAMS = ("endurance_min", "thrust_to_weight", "range_sensors", "autonomous",
               "wireless", "width_in", "mass_kg", "payload_kg", "prop_guards", "max_height_ft")


def spec_check(params: Mapping[str, object], reqs: UavRequirements = UavRequirements()) -> List[Verdict]:
    """Evaluate airframe parameters against the nine hardware requirements."""
    for key in SPEC_PARAMS:
        if key not in params:
            raise MissingParameter(key)
    p = params
    tw_lo, tw_hi = reqs.thrust_to_weight_range
    pay_lo, pay_hi = reqs.payload_range_kg
    tw = float(p["thrust_to_weight"])
    mass = float(p["mass_kg"])
    payload = float(p["payload_kg"])
    return [
        Verdict(1, "battery life", float(p["endurance_min"]) >= reqs.min_flight_minutes,
                f"{float(p['endurance_min']):g} min >= {reqs.min_flight_minutes:g} min"),
        Verdict(2, "thrust-to-weight", tw_lo <= tw <= tw_hi,
                f"{tw:g} in [{tw_lo:g}, {tw_hi:g}]"),
        Verdict(3, "range sensors", bool(p["range_sensors"]), "declared", declared=True),
        Verdict(4, "autonomous takeoff/hover/traverse/landing", bool(p["autonomous"]),
                "declared", declared=True),
        Verdict(5, "wireless link", bool(p["wireless"]), "declared", declared=True),
        Verdict(6, "maximum width", float(p["width_in"]) < reqs.max_width_inches,
                f"{float(p['width_in']):g} in < {reqs.max_width_inches:g} in"),
        Verdict(7, "total mass and payload", mass < reqs.max_mass_kg and payload >= pay_lo,
                f"{mass:g} kg < {reqs.max_mass_kg:g} kg, payload {payload:g} kg "
                f"(target {pay_lo:g}-{pay_hi:g} kg)"),
        Verdict(8, "propeller guards", bool(p["prop_guards"]), "declared", declared=True),
        Verdict(9, "maximum height", float(p["max_height_ft"]) >= reqs.min_max_height_ft,
                f"{float(p['max_height_ft']):g} ft >= {reqs.min_max_height_ft:g} ft"),
    ]


def spec_passed(report: Sequence[Verdict]) -> bool:
    return all(v.passed for v in report)


# Documentation-level agent description of the delivery quadcopter.
PEAS = {
    "performance": "reach the destination quickly and correctly",
    "future_performance": "collaboration among quadrotors as a swarm",
    "environment": "roads, buildings and objects",
    "actuators": "4 rotors",
    "sensors": "camera and IMU",
}
ODESA = {
    "observable": "partially observable",
    "deterministic": "stochastic",
    "episodic": "sequential",
    "static": "dynamic",
    "agents": "multi-agent",
}
