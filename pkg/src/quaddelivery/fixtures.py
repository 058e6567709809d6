"""Seeded generator for the tiny-instance corpus."""
from __future__ import annotations

import random
from typing import List, Optional

from .pdp import GroundVehicle, Item, PdpInstance, Quadcopter, Request, validate_instance


def random_instance(seed: int, max_quads: int = 2, max_requests: int = 3, max_vehicles: int = 1,
                    max_items: int = 2, grid: int = 10) -> PdpInstance:
    rng = random.Random(seed)
    point = lambda: (float(rng.randint(0, grid)), float(rng.randint(0, grid)))
    items = [Item(f"s{i + 1}", float(rng.choice([1, 1, 2]))) for i in range(rng.randint(1, max_items))]
    requests = []
    for i in range(rng.randint(1, max_requests)):
        demand = {}
        for it in rng.sample(items, rng.randint(1, len(items))):
            n = rng.choice([1, 1, 2])
            demand[it.id] = -n if rng.random() < 0.25 else n
        requests.append(Request(f"r{i + 1}", point(), demand))
    quads = []
    for j in range(rng.randint(1, max_quads)):
        capacity = float(rng.randint(2, 5))
        cargo = {}
        load = 0.0
        for it in items:
            n = rng.randint(0, 2)
            if load + n * it.weight <= capacity:
                cargo[it.id] = n
                load += n * it.weight
        quads.append(Quadcopter(f"h{j + 1}", point(), capacity, float(rng.randint(8, 30)),
                                rng.choice([1.0, 1.0, 0.8, 0.5]), cargo))
    vehicles = [GroundVehicle(f"v{k + 1}", point()) for k in range(rng.randint(0, max_vehicles))]
    return validate_instance(PdpInstance(items, requests, quads, vehicles))


def corpus(n: int, seed: int = 0, **kwargs) -> List[PdpInstance]:
    return [random_instance(seed * 100_003 + i, **kwargs) for i in range(n)]


def random_lp(seed: int, max_rows: int = 20, max_cols: int = 20, planted: bool = True):
    """Small LP with integer data in [-5, 5].

    With ``planted`` the rows are built around a random point inside finite
    bounds, so the LP is feasible and bounded; otherwise any status can occur.
    """
    import numpy as np

    from .milp import make_model

    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, max_cols + 1))
    m = int(rng.integers(1, max_rows + 1))
    A = rng.integers(-5, 6, (m, n)).astype(float)
    c = rng.integers(-5, 6, n).astype(float)
    senses = list(rng.choice(["<=", "=", ">="], m, p=[0.5, 0.2, 0.3]))
    if planted:
        lower = np.where(rng.random(n) < 0.7, 0.0, -rng.integers(1, 4, n).astype(float))
        upper = rng.integers(1, 6, n).astype(float)
        x0 = rng.integers(lower.astype(int), upper.astype(int) + 1).astype(float)
        slack = rng.integers(0, 4, m).astype(float)
        b = A @ x0 + np.array([s if se == "<=" else -s if se == ">=" else 0.0
                               for s, se in zip(slack, senses)])
    else:
        lower = np.zeros(n)
        upper = np.where(rng.random(n) < 0.5, rng.integers(1, 6, n), np.inf)
        b = rng.integers(-5, 6, m).astype(float)
    return make_model(A, senses, b, c, lower, upper)


def random_mip(seed: int, n_binary: int, n_continuous: int = 0, n_rows: Optional[int] = None):
    """Binary (plus bounded continuous) program around a planted feasible point."""
    import numpy as np

    from .milp import make_model

    rng = np.random.default_rng(seed)
    n = n_binary + n_continuous
    m = int(rng.integers(1, n_binary + 2)) if n_rows is None else n_rows
    A = rng.integers(-5, 6, (m, n)).astype(float)
    c = rng.integers(-5, 6, n).astype(float)
    senses = list(rng.choice(["<=", ">="], m, p=[0.7, 0.3]))
    x0 = np.concatenate([rng.integers(0, 2, n_binary), rng.uniform(0, 5, n_continuous)])
    slack = rng.integers(0, 3, m).astype(float)
    b = np.floor(A @ x0) + np.array([s + 1 if se == "<=" else -s - 1 for s, se in zip(slack, senses)])
    upper = np.concatenate([np.ones(n_binary), np.full(n_continuous, 5.0)])
    kinds = ["B"] * n_binary + ["C"] * n_continuous
    return make_model(A, senses, b, c, np.zeros(n), upper, kinds)


def canny_fixtures(size: int = 64, seed: int = 0):
    """Named grayscale test images: constant, steps, a filled 20x20 square, a noisy square."""
    import numpy as np

    rng = np.random.default_rng(seed)
    constant = np.full((size, size), 128.0)
    vstep = np.zeros((size, size))
    vstep[:, size // 2:] = 100.0
    square = np.zeros((size, size))
    lo = (size - 20) // 2
    square[lo:lo + 20, lo:lo + 20] = 255.0
    noisy = np.clip(square * 0.8 + 25.0 + rng.normal(0.0, 12.0, square.shape), 0.0, 255.0)
    return {"constant": constant, "vertical_step": vstep, "horizontal_step": vstep.T.copy(),
            "square": square, "noisy_square": noisy}
