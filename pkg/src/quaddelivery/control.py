"""Cascaded PID flight control and plus-configuration mixing.

Position loop -> attitude setpoint + collective thrust -> attitude loop ->
body torques -> mixer -> rotor speeds -> rigid-body dynamics.  Both loops
run at the simulation step.
"""
from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field, fields, replace
from importlib import resources
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .dynamics import (GimbalProximity, QuadParams, QuadState, Torque, motor_forces,
                       step_vector)

AXES = ("roll", "pitch", "yaw", "x", "y", "z")


class DivergenceDetected(RuntimeError):
    def __init__(self, message: str, trajectory: Optional["Trajectory"] = None):
        super().__init__(message)
        self.trajectory = trajectory


class UnreachableCommand(UserWarning):
    pass


@dataclass(frozen=True)
class PidGains:
    kp: float = 0.0
    ki: float = 0.0
    kd: float = 0.0
    i_min: float = -math.inf
    i_max: float = math.inf
    out_min: float = -math.inf
    out_max: float = math.inf

    def __post_init__(self):
        if min(self.kp, self.ki, self.kd) < 0:
            raise ValueError("PID gains must be non-negative")
        if not (self.i_min < self.i_max and self.out_min < self.out_max):
            raise ValueError("clamp limits must satisfy low < high")


@dataclass(frozen=True)
class ControllerState:
    integral: float = 0.0
    prev_error: Optional[float] = None


def pid_update(ctrl: ControllerState, gains: PidGains, error: float, dt: float) -> Tuple[float, ControllerState]:
    """One PID step: trapezoidal integral with clamping, derivative on error."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    prev = error if ctrl.prev_error is None else ctrl.prev_error
    integral = ctrl.integral + 0.5 * (error + prev) * dt
    integral = min(max(integral, gains.i_min), gains.i_max)
    deriv = (error - prev) / dt
    out = gains.kp * error + gains.ki * integral + gains.kd * deriv
    out = min(max(out, gains.out_min), gains.out_max)
    return out, ControllerState(integral, error)


def wrap_angle(a: float) -> float:
    return (a + math.pi) % (2.0 * math.pi) - math.pi


@dataclass(frozen=True)
class Gains:
    roll: PidGains
    pitch: PidGains
    yaw: PidGains
    x: PidGains
    y: PidGains
    z: PidGains

    def scaled(self, factor: float, which: str = "kp") -> "Gains":
        return Gains(**{a: replace(getattr(self, a), **{which: getattr(getattr(self, a), which) * factor})
                        for a in AXES})


Memory = Dict[str, ControllerState]


def fresh_memory() -> Memory:
    return {a: ControllerState() for a in AXES}


def attitude_control(state: QuadState, setpoint: Sequence[float], gains: Gains, dt: float,
                     memory: Optional[Memory] = None) -> Tuple[Torque, Memory]:
    """Independent roll/pitch/yaw PID channels producing body torques."""
    memory = dict(fresh_memory() if memory is None else memory)
    out = []
    for k, axis in enumerate(("roll", "pitch", "yaw")):
        err = setpoint[k] - state.euler[k]
        if axis == "yaw":
            err = wrap_angle(err)
        u, memory[axis] = pid_update(memory[axis], getattr(gains, axis), err, dt)
        out.append(u)
    return Torque(*out), memory


MAX_TILT = 0.3


def position_control(state: QuadState, waypoint: Sequence[float], gains: Gains, dt: float,
                     params: QuadParams, memory: Optional[Memory] = None,
                     yaw_setpoint: float = 0.0) -> Tuple[Tuple[float, float, float], float, Memory]:
    """Outer loop: altitude -> thrust, horizontal error -> small-angle tilt setpoints."""
    memory = dict(fresh_memory() if memory is None else memory)
    ex = waypoint[0] - state.position[0]
    ey = waypoint[1] - state.position[1]
    ez = waypoint[2] - state.position[2]
    ux, memory["x"] = pid_update(memory["x"], gains.x, ex, dt)
    uy, memory["y"] = pid_update(memory["y"], gains.y, ey, dt)
    uz, memory["z"] = pid_update(memory["z"], gains.z, ez, dt)
    yaw = state.euler[2]
    c, s = math.cos(yaw), math.sin(yaw)
    pitch_sp = min(max(ux * c + uy * s, -MAX_TILT), MAX_TILT)
    roll_sp = min(max(ux * s - uy * c, -MAX_TILT), MAX_TILT)
    max_thrust = 4.0 * params.k_thrust * params.omega_max ** 2
    thrust = min(max(params.mass * params.g + uz, 0.0), max_thrust)
    return (roll_sp, pitch_sp, yaw_setpoint), thrust, memory


@dataclass(frozen=True)
class MixResult:
    speeds: Tuple[float, float, float, float]
    saturated: bool


def mix_plus(total_thrust: float, torque: Torque, params: QuadParams) -> MixResult:
    """Rotor speeds (front, left, back, right) realizing thrust and torques."""
    if total_thrust < 0:
        raise ValueError("thrust must be non-negative")
    k, L, d = params.k_thrust, params.arm_length, params.b_drag
    fb = 0.5 * (total_thrust / k + torque.yaw / d)
    lr = 0.5 * (total_thrust / k - torque.yaw / d)
    pitch = torque.pitch / (L * k)
    roll = torque.roll / (L * k)
    squares = np.array([0.5 * (fb - pitch), 0.5 * (lr + roll), 0.5 * (fb + pitch), 0.5 * (lr - roll)])
    lo, hi = params.omega_min ** 2, params.omega_max ** 2
    clipped = np.clip(squares, lo, hi)
    return MixResult(tuple(float(v) for v in np.sqrt(clipped)), bool(np.any(clipped != squares)))


# ---------------------------------------------------------------------------
# route flying

@dataclass
class Trajectory:
    times: List[float] = field(default_factory=list)
    states: List[np.ndarray] = field(default_factory=list)
    speeds: List[Tuple[float, float, float, float]] = field(default_factory=list)
    # (time, waypoint index) for every capture
    captures: List[Tuple[float, int]] = field(default_factory=list)
    saturated_steps: int = 0

    def record(self, t, vec, speeds):
        self.times.append(t)
        self.states.append(vec.copy())
        self.speeds.append(tuple(speeds))

    def as_array(self) -> np.ndarray:
        if not self.times:
            return np.zeros((0, 17))
        return np.column_stack([np.array(self.times), np.array(self.states), np.array(self.speeds)])

    @property
    def final_position(self) -> np.ndarray:
        return self.states[-1][0:3]


CSV_COLUMNS = ("t", "x", "y", "z", "vx", "vy", "vz", "phi", "theta", "psi",
               "wx", "wy", "wz", "m1", "m2", "m3", "m4")


@dataclass(frozen=True)
class FlightConfig:
    params: QuadParams
    gains: Gains
    dt: float = 0.002
    capture_radius: float = 0.2
    altitude: float = 1.8
    warmup: float = 0.5
    leg_time: float = 30.0
    safety_radius: float = 1000.0


class Flight:
    """Closed-loop simulation of one quadcopter; holds the controller memory."""

    def __init__(self, config: FlightConfig, state: QuadState):
        self.cfg = config
        self.vec = state.as_vector()
        self.memory = fresh_memory()
        self.t = 0.0
        self.speeds = (config.params.hover_speed,) * 4

    @property
    def state(self) -> QuadState:
        return QuadState.from_vector(self.vec)

    def control(self, waypoint) -> MixResult:
        cfg = self.cfg
        st = self.state
        att_sp, thrust, self.memory = position_control(st, waypoint, cfg.gains, cfg.dt, cfg.params, self.memory)
        torque, self.memory = attitude_control(st, att_sp, cfg.gains, cfg.dt, self.memory)
        return mix_plus(thrust, torque, cfg.params)

    def attitude_hold(self, setpoint, thrust) -> MixResult:
        torque, self.memory = attitude_control(self.state, setpoint, self.cfg.gains, self.cfg.dt, self.memory)
        return mix_plus(thrust, torque, self.cfg.params)

    def advance(self, speeds):
        try:
            self.vec = step_vector(self.vec, speeds, self.cfg.dt, self.cfg.params)
        except GimbalProximity as exc:
            raise DivergenceDetected(f"attitude left the valid envelope at t={self.t:.3f}s: {exc}") from exc
        self.t += self.cfg.dt
        self.speeds = speeds


def fly_route(start_xy: Sequence[float], waypoints_xy: Sequence[Sequence[float]],
              config: FlightConfig, time_limit: Optional[float] = None) -> Trajectory:
    """Fly through 2-D waypoints at the configured altitude, starting in hover."""
    cfg = config
    if not cfg.capture_radius > 0:
        raise ValueError("capture radius must be positive")
    start = np.array([start_xy[0], start_xy[1], cfg.altitude], dtype=float)
    flight = Flight(cfg, QuadState(position=tuple(start)))
    traj = Trajectory()
    traj.record(0.0, flight.vec, flight.speeds)
    if time_limit is None:
        time_limit = cfg.warmup + cfg.leg_time * max(len(waypoints_xy), 1)

    def tick(target):
        mix = flight.control(target)
        traj.saturated_steps += mix.saturated
        flight.advance(mix.speeds)
        traj.record(flight.t, flight.vec, mix.speeds)
        pos = flight.vec[0:3]
        if not np.all(np.isfinite(flight.vec)) or np.linalg.norm(pos - start) > cfg.safety_radius:
            raise DivergenceDetected(f"position diverged at t={flight.t:.3f}s", traj)

    n_warm = int(round(cfg.warmup / cfg.dt))
    try:
        for _ in range(n_warm):
            tick(start)
        for idx, wp in enumerate(waypoints_xy):
            target = np.array([wp[0], wp[1], cfg.altitude], dtype=float)
            while np.linalg.norm(flight.vec[0:3] - target) > cfg.capture_radius:
                if flight.t >= time_limit:
                    return traj
                tick(target)
            traj.captures.append((flight.t, idx))
    except DivergenceDetected as exc:
        exc.trajectory = traj
        raise
    return traj


def write_trajectory_csv(path, traj: Trajectory) -> None:
    data = traj.as_array()
    np.savetxt(path, data, delimiter=",", header=",".join(CSV_COLUMNS), comments="", fmt="%.9g")


# ---------------------------------------------------------------------------
# key = value configuration files

_PARAM_KEYS = {f.name for f in fields(QuadParams)}
_SIM_KEYS = ("dt", "capture_radius", "altitude", "warmup", "leg_time", "safety_radius")
_PID_KEYS = ("kp", "ki", "kd", "i_min", "i_max", "out_min", "out_max")


class ConfigError(ValueError):
    pass


def read_key_values(text: str) -> Dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string("[config]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    return dict(parser["config"])


def _number(key: str, raw: str) -> float:
    try:
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"{key}: expected a number, got {raw!r}") from exc


def flight_config_from_text(text: str, base: Optional[FlightConfig] = None) -> FlightConfig:
    kv = read_key_values(text)
    params = {} if base is None else {f.name: getattr(base.params, f.name) for f in fields(QuadParams)}
    sim = {} if base is None else {k: getattr(base, k) for k in _SIM_KEYS}
    pid: Dict[str, Dict[str, float]] = {a: {} for a in AXES}
    if base is not None:
        for a in AXES:
            g = getattr(base.gains, a)
            pid[a] = {k: getattr(g, k) for k in _PID_KEYS}
    for key, raw in kv.items():
        if key in _PARAM_KEYS:
            params[key] = _number(key, raw)
        elif key in _SIM_KEYS:
            sim[key] = _number(key, raw)
        elif "." in key and key.split(".", 1)[0] in AXES and key.split(".", 1)[1] in _PID_KEYS:
            axis, name = key.split(".", 1)
            pid[axis][name] = _number(key, raw)
        else:
            raise ConfigError(f"unknown configuration key {key!r}")
    missing = [a for a in AXES if not pid[a]]
    if missing:
        raise ConfigError(f"no gains given for axes {missing}")
    try:
        gains = Gains(**{a: PidGains(**pid[a]) for a in AXES})
        return FlightConfig(QuadParams(**params), gains, **sim)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def load_flight_config(path=None) -> FlightConfig:
    """Shipped defaults, optionally overridden by the keys in ``path``."""
    base = flight_config_from_text(resources.files("quaddelivery").joinpath("data/flight.cfg").read_text())
    if path is None:
        return base
    with open(path) as fh:
        return flight_config_from_text(fh.read(), base)
