"""Closed-loop and integrator runs shared by the acceptance tests and scripts."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .control import Flight, FlightConfig, load_flight_config
from .dynamics import QuadParams, QuadState, derivative, rk4, step_vector


@dataclass(frozen=True)
class TumbleDrift:
    momentum: float  # relative drift of |I w|
    energy: float  # relative drift of w^T I w / 2


def tumble_drift(inertia=(0.1, 0.2, 0.3), rates=(1.0, 1.0, 1.0), duration=10.0, dt=1e-3) -> TumbleDrift:
    """Torque-free tumble through the full 12-state step (rotors stopped, gravity on)."""
    params = QuadParams(ixx=inertia[0], iyy=inertia[1], izz=inertia[2])
    inertia = params.inertia
    vec = QuadState(rates=tuple(rates)).as_vector()
    w0 = vec[9:12].copy()
    h0 = np.linalg.norm(inertia * w0)
    e0 = 0.5 * w0 @ (inertia * w0)
    for _ in range(int(round(duration / dt))):
        vec = step_vector(vec, (0.0, 0.0, 0.0, 0.0), dt, params)
    w = vec[9:12]
    return TumbleDrift(abs(np.linalg.norm(inertia * w) - h0) / h0, abs(0.5 * w @ (inertia * w) - e0) / e0)


def _forced_run(dt: float, duration: float, params: QuadParams) -> np.ndarray:
    hover = params.hover_speed

    def speeds(t):
        return (hover + 2.0 * math.sin(3 * t), hover + 1.5 * math.cos(2 * t),
                hover - math.sin(t), hover + 0.5 * math.sin(5 * t))

    # time rides along as a 13th state so the forcing is sampled inside each stage
    f = lambda y: np.concatenate([derivative(y[:12], speeds(y[12]), params), [1.0]])
    y = np.zeros(13)
    y[2] = 1.8
    for _ in range(int(round(duration / dt))):
        y = rk4(f, y, dt)
    return y[:12]


def rk4_convergence_ratio(dt=0.025, duration=0.25, ref_dt=1e-5) -> float:
    """Error(dt) / error(dt/2) against a fine reference, for smoothly varying rotor speeds."""
    params = QuadParams()
    ref = _forced_run(ref_dt, duration, params)
    e1 = np.linalg.norm(_forced_run(dt, duration, params) - ref)
    e2 = np.linalg.norm(_forced_run(dt / 2, duration, params) - ref)
    return float(e1 / e2)


def hover_error(duration=60.0, config: Optional[FlightConfig] = None) -> float:
    """Largest distance from the hover point over a closed-loop hold."""
    cfg = config or load_flight_config()
    target = np.array([0.0, 0.0, cfg.altitude])
    flight = Flight(cfg, QuadState(position=tuple(target)))
    worst = 0.0
    for _ in range(int(round(duration / cfg.dt))):
        flight.advance(flight.control(target).speeds)
        worst = max(worst, float(np.linalg.norm(flight.vec[0:3] - target)))
    return worst


def lateral_capture_time(offset=1.0, tolerance=0.05, duration=10.0,
                         config: Optional[FlightConfig] = None) -> Optional[float]:
    """Time after which the position error stays below ``tolerance`` (None if never)."""
    cfg = config or load_flight_config()
    target = np.array([offset, 0.0, cfg.altitude])
    flight = Flight(cfg, QuadState(position=(0.0, 0.0, cfg.altitude)))
    entered = None
    for _ in range(int(round(duration / cfg.dt))):
        flight.advance(flight.control(target).speeds)
        err = np.linalg.norm(flight.vec[0:3] - target)
        if err < tolerance:
            entered = flight.t if entered is None else entered
        else:
            entered = None
    return entered


@dataclass(frozen=True)
class StepResponse:
    overshoot: float  # fraction of the step
    settling_time: float  # last time outside the band, seconds
    final: float


def roll_step(step=0.2, band=0.02, duration=3.0, config: Optional[FlightConfig] = None) -> StepResponse:
    """Attitude loop alone tracking a roll step with hover thrust."""
    cfg = config or load_flight_config()
    p = cfg.params
    flight = Flight(cfg, QuadState(position=(0.0, 0.0, cfg.altitude)))
    times, roll = [], []
    for _ in range(int(round(duration / cfg.dt))):
        flight.advance(flight.attitude_hold((step, 0.0, 0.0), p.mass * p.g).speeds)
        times.append(flight.t)
        roll.append(flight.vec[6])
    roll = np.array(roll)
    outside = np.flatnonzero(np.abs(roll - step) > band * abs(step))
    settle = float(times[outside[-1]]) if outside.size else 0.0
    return StepResponse(max(0.0, float((roll.max() - step) / step)), settle, float(roll[-1]))
