"""Rigid-body quadrotor model in the plus configuration.

State vector layout (12 entries)::

    x y z | vx vy vz | roll pitch yaw | wx wy wz

Position and velocity are world-frame (z up), angles are Z-Y-X Euler
angles, rates are body-frame.  Rotor order is front, left, back, right;
front/back spin clockwise seen from above, left/right counter-clockwise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence, Tuple

import numpy as np

GIMBAL_MARGIN = 1e-3


class GimbalProximity(ArithmeticError):
    pass


@dataclass(frozen=True)
class QuadParams:
    mass: float = 1.2
    ixx: float = 5e-3
    iyy: float = 5e-3
    izz: float = 1e-2
    arm_length: float = 0.25
    k_thrust: float = 1.5e-5
    b_drag: float = 3e-7
    g: float = 9.81
    omega_min: float = 0.0
    omega_max: float = 595.0
    linear_drag: float = 0.0  # N per m/s, off by default

    def __post_init__(self):
        positive = ("mass", "ixx", "iyy", "izz", "arm_length", "k_thrust", "b_drag", "g", "omega_max")
        for name in positive:
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.omega_min < 0 or self.omega_min >= self.omega_max:
            raise ValueError("motor speed limits must satisfy 0 <= omega_min < omega_max")
        if self.linear_drag < 0:
            raise ValueError("linear_drag must be non-negative")
        i = (self.ixx, self.iyy, self.izz)
        for a in range(3):
            if i[a] > i[(a + 1) % 3] + i[(a + 2) % 3] + 1e-15:
                raise ValueError("inertias violate the triangle inequality")

    @property
    def inertia(self) -> np.ndarray:
        return np.array([self.ixx, self.iyy, self.izz])

    @property
    def hover_speed(self) -> float:
        return math.sqrt(self.mass * self.g / (4.0 * self.k_thrust))

    @property
    def thrust_to_weight(self) -> float:
        return 4.0 * self.k_thrust * self.omega_max ** 2 / (self.mass * self.g)

    def with_inertia(self, ixx, iyy, izz) -> "QuadParams":
        return replace(self, ixx=ixx, iyy=iyy, izz=izz)


@dataclass(frozen=True)
class Torque:
    roll: float = 0.0
    pitch: float = 0.0
    yaw: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.roll, self.pitch, self.yaw])


@dataclass(frozen=True)
class QuadState:
    position: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    velocity: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    euler: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    rates: Tuple[float, float, float] = (0.0, 0.0, 0.0)

    def as_vector(self) -> np.ndarray:
        return np.array([*self.position, *self.velocity, *self.euler, *self.rates], dtype=float)

    @classmethod
    def from_vector(cls, v) -> "QuadState":
        v = [float(a) for a in v]
        if not all(math.isfinite(a) for a in v):
            raise ValueError("state has non-finite entries")
        return cls(tuple(v[0:3]), tuple(v[3:6]), tuple(v[6:9]), tuple(v[9:12]))


def angular_acceleration(rates: Sequence[float], torque, params: QuadParams) -> np.ndarray:
    """Body angular acceleration from Euler's rigid-body equations (diagonal inertia)."""
    wx, wy, wz = rates
    tx, ty, tz = torque.as_array() if isinstance(torque, Torque) else torque
    return np.array([
        (tx + (params.iyy - params.izz) * wy * wz) / params.ixx,
        (ty + (params.izz - params.ixx) * wx * wz) / params.iyy,
        (tz + (params.ixx - params.iyy) * wx * wy) / params.izz,
    ])


def thrust_axis(roll: float, pitch: float, yaw: float) -> np.ndarray:
    """World-frame direction of the body z axis (third column of R_zyx)."""
    cf, sf = math.cos(roll), math.sin(roll)
    ct, st = math.cos(pitch), math.sin(pitch)
    cp, sp = math.cos(yaw), math.sin(yaw)
    return np.array([cp * st * cf + sp * sf, sp * st * cf - cp * sf, ct * cf])


def translational_acceleration(euler: Sequence[float], total_thrust: float, params: QuadParams,
                               velocity: Sequence[float] = (0.0, 0.0, 0.0)) -> np.ndarray:
    a = thrust_axis(*euler) * (total_thrust / params.mass)
    a[2] -= params.g
    if params.linear_drag:
        a -= params.linear_drag / params.mass * np.asarray(velocity, dtype=float)
    return a


def euler_rates(euler: Sequence[float], rates: Sequence[float]) -> np.ndarray:
    roll, pitch, _ = euler
    if abs(pitch) > math.pi / 2 - GIMBAL_MARGIN:
        raise GimbalProximity(f"pitch {pitch:.6f} rad is too close to +-pi/2")
    wx, wy, wz = rates
    sf, cf = math.sin(roll), math.cos(roll)
    tt, ct = math.tan(pitch), math.cos(pitch)
    return np.array([
        wx + sf * tt * wy + cf * tt * wz,
        cf * wy - sf * wz,
        (sf * wy + cf * wz) / ct,
    ])


def motor_forces(speeds: Sequence[float], params: QuadParams) -> Tuple[float, Torque]:
    """Total thrust and body torques for rotor speeds (front, left, back, right)."""
    f, l, b, r = (float(w) ** 2 for w in speeds)
    k, L, d = params.k_thrust, params.arm_length, params.b_drag
    thrust = k * (f + l + b + r)
    return thrust, Torque(L * k * (l - r), L * k * (b - f), d * (f + b - l - r))


def derivative(vec: np.ndarray, speeds: Sequence[float], params: QuadParams) -> np.ndarray:
    thrust, torque = motor_forces(speeds, params)
    out = np.empty(12)
    out[0:3] = vec[3:6]
    out[3:6] = translational_acceleration(vec[6:9], thrust, params, vec[3:6])
    out[6:9] = euler_rates(vec[6:9], vec[9:12])
    out[9:12] = angular_acceleration(vec[9:12], torque, params)
    return out


def rk4(f: Callable[[np.ndarray], np.ndarray], y: np.ndarray, dt: float) -> np.ndarray:
    k1 = f(y)
    k2 = f(y + 0.5 * dt * k1)
    k3 = f(y + 0.5 * dt * k2)
    k4 = f(y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def step_vector(vec: np.ndarray, speeds: Sequence[float], dt: float, params: QuadParams) -> np.ndarray:
    if not dt > 0:
        raise ValueError("dt must be positive")
    out = rk4(lambda y: derivative(y, speeds, params), np.asarray(vec, dtype=float), dt)
    if abs(out[7]) > math.pi / 2 - GIMBAL_MARGIN:
        raise GimbalProximity(f"pitch {out[7]:.6f} rad is too close to +-pi/2")
    return out


def step(state: QuadState, speeds: Sequence[float], dt: float, params: QuadParams) -> QuadState:
    """Advance one RK4 step with the rotor speeds held constant."""
    return QuadState.from_vector(step_vector(state.as_vector(), speeds, dt, params))


def rotation_step(rates: np.ndarray, torque, dt: float, params: QuadParams) -> np.ndarray:
    """RK4 step of the body-rate equations alone (no attitude bookkeeping)."""
    return rk4(lambda w: angular_acceleration(w, torque, params), np.asarray(rates, dtype=float), dt)
