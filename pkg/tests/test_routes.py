import dataclasses
import json

import numpy as np
import pytest

from quaddelivery.bnb import branch_and_bound
from quaddelivery.fixtures import corpus
from quaddelivery.milp import build_layout, build_model
from quaddelivery.pdp import (GroundVehicle, Item, PdpInstance, Quadcopter, Request,
                              worked_example, validate_instance)
from quaddelivery.planner import plan_instance
from quaddelivery.routes import (DisconnectedRoute, Infeasible, Leg, OracleLimitExceeded, RoutePlan,
                                 brute_force_solve, extract_routes, makespan, plan_to_dict,
                                 validate_plan, waypoints_from_doc)


def two_request_line():
    return validate_instance(PdpInstance(
        [Item("a", 1.0), Item("b", 1.0)],
        [Request("r1", (2.0, 0.0), {"b": 1}), Request("r2", (1.0, 0.0), {"a": 1})],
        [Quadcopter("h1", (0.0, 0.0), 2.0, 10.0, 1.0, {"a": 1, "b": 1})], []))


def leg(src, dst, length, quad="h1"):
    return Leg(quad, src, dst, length, {}, 1.0, 0.0)


# makespan ------------------------------------------------------------------

def test_makespan_examples():
    assert makespan(RoutePlan()) == 0.0
    assert makespan(RoutePlan({"h1": [leg(1, 0, 5.0)]})) == 5.0
    plan = RoutePlan({"h1": [leg(2, 0, 5.0)], "h2": [leg(3, 0, 3.0), leg(0, 1, 4.0, "h2")]})
    assert makespan(plan) == 7.0


# oracle --------------------------------------------------------------------

def test_oracle_single_leg(example):
    plan = brute_force_solve(example)
    assert plan.makespan == 5.0
    assert plan.node_sequence("h1") == [1, 0]


def test_oracle_out_of_range_without_vehicle():
    inst = validate_instance(PdpInstance(
        [Item("s1", 1.0)], [Request("r1", (30.0, 0.0), {"s1": 1})],
        [Quadcopter("h1", (0.0, 0.0), 2.0, 20.0, 1.0, {"s1": 1})], []))
    with pytest.raises(Infeasible):
        brute_force_solve(inst)


def test_oracle_visits_in_x_order():
    inst = two_request_line()
    plan = brute_force_solve(inst)
    assert plan.makespan == pytest.approx(2.0)
    # r2 sits at x = 1, r1 at x = 2
    assert plan.node_sequence("h1") == [2, 1, 0]


def test_oracle_limits():
    inst = validate_instance(PdpInstance(
        [Item("s1", 1.0)], [Request(f"r{i}", (i, 1), {"s1": 1}) for i in range(5)],
        [Quadcopter("h1", (0.0, 0.0), 9.0, 99.0, 1.0, {"s1": 5})], []))
    with pytest.raises(OracleLimitExceeded):
        brute_force_solve(inst)


def test_oracle_leg_cap_is_respected(example):
    with_vehicle = worked_example(request_at=(30.0, 0.0), vehicle_at=(15.0, 0.0))
    assert brute_force_solve(with_vehicle).makespan == pytest.approx(30.0)
    with pytest.raises(Infeasible):
        brute_force_solve(with_vehicle, max_legs=1)


# extraction ----------------------------------------------------------------

def test_extract_worked_example(example):
    res = plan_instance(example)
    legs = res.plan.routes["h1"]
    assert [(l.src, l.dst) for l in legs] == [(1, 0)]
    assert legs[0].cargo == {"s1": 1}
    assert legs[0].charge == pytest.approx(0.75)


def test_extract_empty_route(example):
    lay = build_layout(example)
    plan = extract_routes(example, np.zeros(lay.n_columns), lay)
    assert plan.routes == {"h1": []}


def test_extract_orders_by_descending_t():
    # nodes: r1 0, h1 1, v1 2, v2 3, v3 4; v1 is left three times
    inst = validate_instance(PdpInstance(
        [Item("s1", 1.0)], [Request("r1", (0.0, 1.0), {"s1": 1})],
        [Quadcopter("h1", (0.0, 0.0), 2.0, 50.0, 1.0, {"s1": 1})],
        [GroundVehicle("v1", (1.0, 0.0)), GroundVehicle("v2", (2.0, 0.0)), GroundVehicle("v3", (1.0, 1.0))]))
    lay = build_layout(inst)

    def route(t_values):
        x = np.zeros(lay.n_columns)
        for (a, b), t in t_values.items():
            x[lay.index("x", "h1", a, b)] = 1
            x[lay.index("t", "h1", a, b)] = t
        return extract_routes(inst, x, lay).node_sequence("h1")

    v2_first = {(1, 2): 5, (2, 3): 4, (3, 2): 3, (2, 4): 2, (4, 2): 1, (2, 0): 0}
    v3_first = {(1, 2): 5, (2, 4): 4, (4, 2): 3, (2, 3): 2, (3, 2): 1, (2, 0): 0}
    assert route(v2_first) == [1, 2, 3, 2, 4, 2, 0]
    assert route(v3_first) == [1, 2, 4, 2, 3, 2, 0]


def test_extract_two_legs_synthetic():
    inst = worked_example()
    lay = build_layout(inst)
    x = np.zeros(lay.n_columns)
    x[lay.index("x", "h1", 1, 0)] = 1
    x[lay.index("t", "h1", 1, 0)] = 2
    x[lay.index("x", "h1", 0, 2)] = 1
    x[lay.index("t", "h1", 0, 2)] = 1
    plan = extract_routes(inst, x, lay)
    assert [(l.src, l.dst, l.t) for l in plan.routes["h1"]] == [(1, 0, 2.0), (0, 2, 1.0)]


def test_extract_disconnected(example):
    lay = build_layout(example)
    x = np.zeros(lay.n_columns)
    x[lay.index("x", "h1", 1, 0)] = 1
    x[lay.index("x", "h1", 2, 0)] = 1
    with pytest.raises(DisconnectedRoute):
        extract_routes(example, x, lay)


@pytest.mark.parametrize("inst", corpus(12, seed=21))
def test_extracted_makespan_equals_model_T(inst):
    m = build_model(inst)
    sol = branch_and_bound(m)
    if sol.status != "optimal":
        return
    plan = extract_routes(inst, sol, m.layout)
    assert plan.makespan == pytest.approx(sol.objective, abs=1e-6)
    assert validate_plan(inst, plan).ok


# validation ----------------------------------------------------------------

def test_leg_beyond_range_flagged():
    inst = worked_example(request_at=(30.0, 0.0))
    bad = RoutePlan({"h1": [Leg("h1", 1, 0, 30.0, {"s1": 1}, -0.5, 0.0)]})
    kinds = validate_plan(inst, bad).kinds()
    assert "battery" in kinds


def test_double_service_flagged(example):
    plan = RoutePlan({"h1": [Leg("h1", 1, 0, 5.0, {"s1": 1}, 0.75, 2.0),
                             Leg("h1", 0, 2, 5.0, {}, 0.5, 1.0),
                             Leg("h1", 2, 0, 5.0, {}, 0.75, 0.0)]})
    assert "revisited" in validate_plan(example, plan).kinds()


def _oracle_plans(n, seed):
    for inst in corpus(n, seed=seed):
        try:
            yield inst, brute_force_solve(inst)
        except Infeasible:
            continue


def test_oracle_plans_validate():
    count = 0
    for inst, plan in _oracle_plans(40, 31):
        assert validate_plan(inst, plan).ok
        count += 1
    assert count >= 10


def test_mutations_rejected():
    count = 0
    for inst, plan in _oracle_plans(40, 41):
        # dropping the leg into a request leaves it unserved or breaks the chain
        for qid, legs in plan.routes.items():
            for k, l in enumerate(legs):
                if inst.is_request(l.dst):
                    cut = RoutePlan(dict(plan.routes, **{qid: legs[:k] + legs[k + 1:]}))
                    assert not validate_plan(inst, cut).ok
        weights = {it.id: it.weight for it in inst.items}
        for j, quad in enumerate(inst.quadcopters):
            legs = plan.routes[quad.id]
            # halved capacity: must be caught whenever some leg now overloads
            half = dataclasses.replace(quad, capacity=quad.capacity / 2)
            heaviest = max(sum(weights[s] * n for s, n in l.cargo.items()) for l in legs)
            if heaviest > half.capacity + 1e-9:
                quads = list(inst.quadcopters)
                quads[j] = half
                mutated = dataclasses.replace(inst, quadcopters=tuple(quads))
                assert "capacity" in validate_plan(mutated, plan).kinds()
            # halved range: must be caught whenever the battery now runs out
            shorter = dataclasses.replace(quad, max_range=quad.max_range / 2)
            quads = list(inst.quadcopters)
            quads[j] = shorter
            mutated = dataclasses.replace(inst, quadcopters=tuple(quads))
            charge, runs_out = quad.initial_charge, False
            for l in legs:
                charge -= l.length / shorter.max_range
                runs_out |= charge < -1e-9
                if inst.is_vehicle(l.dst):
                    charge = 1.0
            assert ("battery" in validate_plan(mutated, plan).kinds()) == runs_out
        count += 1
    assert count >= 10


# JSON ----------------------------------------------------------------------

def test_plan_document(example, tmp_path):
    plan = brute_force_solve(example)
    doc = json.loads(json.dumps(plan_to_dict(example, plan)))
    assert doc["makespan"] == 5.0
    (l,) = doc["routes"]["h1"]
    assert (l["from"], l["to"], l["length"], l["cargo"], l["charge"], l["t"]) == ("h1", "r1", 5.0, {"s1": 1}, 0.75, 0.0)
    start, wps = waypoints_from_doc(doc)
    assert start == (0.0, 0.0) and wps == [(3.0, 4.0)]


def test_waypoints_of_idle_quad():
    doc = {"routes": {"h1": []}, "starts": {"h1": [2.0, 3.0]}}
    assert waypoints_from_doc(doc) == ((2.0, 3.0), [])
