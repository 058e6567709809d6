import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from quaddelivery.fixtures import corpus
from quaddelivery.pdp import (PEAS, ODESA, CargoExceedsCapacity, DuplicateId, GroundVehicle,
                              InstanceError, Item, MissingParameter, NonFiniteCoordinate,
                              PdpInstance, Quadcopter, Request, UavRequirements, distance,
                              instance_from_dict, instance_to_dict, spec_check, spec_passed,
                              validate_instance)

coords = st.tuples(st.integers(-50, 50), st.integers(-50, 50)).map(lambda p: (float(p[0]), float(p[1])))


def test_empty_instance_is_valid():
    inst = validate_instance(PdpInstance())
    assert inst.n_nodes == 0
    assert inst.edges == []


def test_example_sizes(example):
    assert example.n_nodes == 3
    assert len(example.edges) == 9


def test_node_order_requests_quads_vehicles():
    inst = corpus(1, seed=3, max_quads=2, max_requests=3, max_vehicles=1)[0]
    kinds = [n.kind for n in inst.nodes]
    R, H = len(inst.requests), len(inst.quadcopters)
    assert kinds == ["request"] * R + ["quad"] * H + ["vehicle"] * len(inst.vehicles)
    assert inst.quad_node(0) == R
    if inst.vehicles:
        assert inst.vehicle_node(0) == R + H


def test_cargo_over_capacity_rejected():
    raw = PdpInstance([Item("s1", 1.0)], [], [Quadcopter("h1", (0, 0), 3.0, 10.0, 1.0, {"s1": 5})], [])
    with pytest.raises(CargoExceedsCapacity, match="h1"):
        validate_instance(raw)


def test_duplicate_ids_rejected():
    raw = PdpInstance([Item("a", 1.0)], [Request("a", (0, 0), {"a": 1})], [], [])
    with pytest.raises(DuplicateId, match="'a'"):
        validate_instance(raw)


def test_non_finite_coordinate_rejected():
    raw = PdpInstance([], [], [], [GroundVehicle("v1", (math.nan, 0.0))])
    with pytest.raises(NonFiniteCoordinate, match="v1"):
        validate_instance(raw)


@pytest.mark.parametrize("a,b,d", [((0, 0), (0, 0), 0.0), ((0, 0), (3, 4), 5.0), ((1, 1), (4, 5), 5.0)])
def test_distance_examples(a, b, d):
    assert distance(a, b) == d


@given(coords, coords, coords)
def test_distance_is_a_metric(a, b, c):
    assert distance(a, b) >= 0
    assert distance(a, b) == distance(b, a)
    assert (distance(a, b) == 0) == (a == b)
    assert distance(a, c) <= distance(a, b) + distance(b, c) + 1e-9


@pytest.mark.parametrize("inst", corpus(10, seed=5))
def test_validate_idempotent_and_json_round_trip(inst):
    assert validate_instance(inst) == inst
    assert instance_from_dict(instance_to_dict(inst)) == inst


def test_malformed_document():
    with pytest.raises(InstanceError):
        instance_from_dict({"requests": [{"id": "r1"}]})


# hardware requirements -----------------------------------------------------

GOOD = dict(endurance_min=12, thrust_to_weight=1.8, range_sensors=True, autonomous=True,
            wireless=True, width_in=24, mass_kg=1.4, payload_kg=0.5, prop_guards=True,
            max_height_ft=15)


def verdict(params, n):
    return next(v for v in spec_check(params) if v.number == n)


def test_default_requirement_constants():
    r = UavRequirements()
    assert (r.min_flight_minutes, r.thrust_to_weight_range, r.max_width_inches, r.max_mass_kg,
            r.payload_range_kg, r.min_max_height_ft) == (10, (1.5, 2.0), 30, 1.5, (0.5, 1.0), 10)


def test_requirement_examples():
    assert verdict(GOOD, 7).passed
    assert verdict(GOOD, 2).passed
    assert not verdict(dict(GOOD, mass_kg=2.0), 7).passed
    assert len(spec_check(GOOD)) == 9 and spec_passed(spec_check(GOOD))


@pytest.mark.parametrize("key,value,item", [
    ("endurance_min", 9.9, 1), ("thrust_to_weight", 1.49, 2), ("thrust_to_weight", 2.01, 2),
    ("width_in", 30, 6), ("mass_kg", 1.5, 7), ("payload_kg", 0.4, 7), ("max_height_ft", 9.9, 9),
    ("wireless", False, 5), ("prop_guards", False, 8),
])
def test_requirement_boundaries(key, value, item):
    report = spec_check(dict(GOOD, **{key: value}))
    assert not report[item - 1].passed
    assert not spec_passed(report)


def test_boundary_values_that_pass():
    p = dict(GOOD, endurance_min=10, thrust_to_weight=2.0, max_height_ft=10, payload_kg=1.0)
    assert spec_passed(spec_check(p))


def test_missing_parameter_named():
    p = dict(GOOD)
    del p["mass_kg"]
    with pytest.raises(MissingParameter, match="mass_kg"):
        spec_check(p)


def test_agent_tables_present():
    assert PEAS["actuators"] == "4 rotors"
    assert set(ODESA) == {"observable", "deterministic", "episodic", "static", "agents"}
