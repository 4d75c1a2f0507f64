"""Quadrotor rigid-body model: parameters, state, motor mixer and equations of motion.

World frame is x = North, y = East, z = up. The attitude is held as three Euler
angles (pitch ``theta``, roll ``phi``, yaw ``psi``) with their rates; yaw is not
wrapped, so multiple full turns accumulate.

The numeric work lives in compiled ``*_kernel`` functions that take the plain
``VehicleConstants`` record; the public functions accept ``VehicleParams`` and
are thin wrappers for interactive and test use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple, Sequence

import numpy as np
from numba import njit

Vec3 = tuple[float, float, float]


class DivergenceError(RuntimeError):
    """Raised when a state component leaves the configured sanity bound."""


class VehicleConstants(NamedTuple):
    """Compiled-code view of ``VehicleParams``, plus the inverted mixer rows."""

    m: float
    g: float
    J_theta: float
    J_phi: float
    J_psi: float
    K: float
    K_psi: float
    K_r: float
    L: float
    omega_max: float
    inverse_mixer: tuple


@dataclass(frozen=True)
class VehicleParams:
    m: float = 100.0
    J_theta: float = 0.1
    J_phi: float = 0.1
    J_psi: float = 0.01
    K: float = 1.0
    K_psi: float = 0.5
    K_r: float = 1.0
    omega_max: float = 500.0
    L: float = 0.75
    A: float = 1.0
    C_d: float = 0.5
    rho: float = 1.225
    g: float = 9.81

    def __post_init__(self):
        for name in ("m", "J_theta", "J_phi", "J_psi", "K", "K_psi", "omega_max", "L", "A", "C_d", "rho", "g"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"vehicle.{name} must be finite and > 0, got {value}")
        if not (math.isfinite(self.K_r) and self.K_r >= 0):
            raise ValueError(f"vehicle.K_r must be >= 0, got {self.K_r}")
        if 4 * self.K * self.omega_max <= self.m * self.g:
            raise ValueError("vehicle cannot hover: 4*K*omega_max must exceed m*g")

    @cached_property
    def inverse_mixer(self) -> tuple[tuple[float, ...], ...]:
        """Rows of the inverted mixer matrix, computed once per parameter set."""
        inv = np.linalg.inv(mixer_matrix(self))
        return tuple(tuple(float(v) for v in row) for row in inv)

    @cached_property
    def constants(self) -> VehicleConstants:
        f = float
        return VehicleConstants(
            f(self.m), f(self.g), f(self.J_theta), f(self.J_phi), f(self.J_psi),
            f(self.K), f(self.K_psi), f(self.K_r), f(self.L), f(self.omega_max),
            self.inverse_mixer,
        )  # fmt: skip

    @property
    def hover_thrust(self) -> float:
        return self.m * self.g

    @property
    def hover_speed(self) -> float:
        """Motor speed that holds the vehicle level at equilibrium."""
        return self.m * self.g / (4 * self.K)


class VehicleState(NamedTuple):
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0
    vx: float = 0.0
    vy: float = 0.0
    vz: float = 0.0
    theta: float = 0.0
    phi: float = 0.0
    psi: float = 0.0
    dtheta: float = 0.0
    dphi: float = 0.0
    dpsi: float = 0.0

    @property
    def position(self) -> Vec3:
        return (self.x, self.y, self.z)

    @property
    def velocity(self) -> Vec3:
        return (self.vx, self.vy, self.vz)


class BodyCommand(NamedTuple):
    u_z: float
    u_theta: float
    u_phi: float
    u_psi: float


class MotorSpeeds(NamedTuple):
    u1: float
    u2: float
    u3: float
    u4: float
    clamped: bool = False


def mixer_matrix(p: VehicleParams) -> np.ndarray:
    """Map from motor speeds (u1..u4) to body thrust and torques."""
    K, KL, KKpsi = p.K, p.K * p.L, p.K * p.K_psi
    return np.array(
        [
            [K, K, K, K],
            [KL, -KL, 0.0, 0.0],
            [0.0, 0.0, KL, -KL],
            [KKpsi, KKpsi, -KKpsi, -KKpsi],
        ]
    )


# ---------------------------------------------------------------------------
# compiled kernels


@njit(cache=True)
def clip(v, lo, hi):
    return lo if v < lo else hi if v > hi else v


@njit(cache=True)
def mix_forward_kernel(u1, u2, u3, u4, c):
    K = c.K
    KL = K * c.L
    return BodyCommand(K * (u1 + u2 + u3 + u4), KL * (u1 - u2), KL * (u3 - u4), K * c.K_psi * (u1 + u2 - u3 - u4))


@njit(cache=True)
def mix_inverse_kernel(cmd, c):
    c0, c1, c2, c3 = cmd[0], cmd[1], cmd[2], cmd[3]
    r1, r2, r3, r4 = c.inverse_mixer
    u1 = r1[0] * c0 + r1[1] * c1 + r1[2] * c2 + r1[3] * c3
    u2 = r2[0] * c0 + r2[1] * c1 + r2[2] * c2 + r2[3] * c3
    u3 = r3[0] * c0 + r3[1] * c1 + r3[2] * c2 + r3[3] * c3
    u4 = r4[0] * c0 + r4[1] * c1 + r4[2] * c2 + r4[3] * c3
    top = c.omega_max
    if 0.0 <= u1 <= top and 0.0 <= u2 <= top and 0.0 <= u3 <= top and 0.0 <= u4 <= top:
        return MotorSpeeds(u1, u2, u3, u4, False)
    return MotorSpeeds(clip(u1, 0.0, top), clip(u2, 0.0, top), clip(u3, 0.0, top), clip(u4, 0.0, top), True)


@njit(cache=True)
def desaturate_kernel(cmd, c):
    # Motor-speed units: u1,2 = a + y +- bt, u3,4 = a - y +- bp.
    W = c.omega_max
    kz, kt, ky = 4.0 * c.K, 2.0 * c.K * c.L, 4.0 * c.K * c.K_psi
    a, bt, bp, y = cmd[0] / kz, cmd[1] / kt, cmd[2] / kt, cmd[3] / ky
    half = 0.5 * W
    bt2 = clip(bt, -half, half)
    bp2 = clip(bp, -half, half)
    b12, b34 = abs(bt2), abs(bp2)
    bm = max(b12, b34)
    a2 = clip(a, bm, W - bm)
    y2 = clip(y, max(b12 - a2, a2 + b34 - W), min(W - a2 - b12, a2 - b34))
    if a2 == a and y2 == y and bt2 == bt and bp2 == bp:
        return BodyCommand(cmd[0], cmd[1], cmd[2], cmd[3]), False
    return BodyCommand(kz * a2, kt * bt2, kt * bp2, ky * y2), True


@njit(cache=True)
def translational_accel_kernel(theta, phi, psi, u_z, fx, fy, fz, c):
    st, ct = math.sin(theta), math.cos(theta)
    sp, cp = math.sin(phi), math.cos(phi)
    ss, cs = math.sin(psi), math.cos(psi)
    m = c.m
    return (
        (u_z * (cp * st * cs + sp * ss) + fx) / m,
        (u_z * (cp * st * ss - sp * cs) + fy) / m,
        (u_z * cp * ct - m * c.g + fz) / m,
    )


@njit(cache=True)
def step_kernel(state, cmd, fw, dt, c, bound):
    """RK4 step; returns ``(new_state, ok)`` with ``ok`` false on divergence.

    Angular acceleration is constant over the step and linear acceleration
    depends only on attitude, so the four stages reduce to four attitude
    evaluations.
    """
    x, y, z, vx, vy, vz, th, ph, ps, wt, wp, ws = state
    u_z = cmd[0]
    at, ap, a_s = cmd[1] / c.J_theta, cmd[2] / c.J_phi, cmd[3] * c.K_r / c.J_psi
    h = 0.5 * dt
    wt2, wp2, ws2 = wt + h * at, wp + h * ap, ws + h * a_s  # both midpoint stages
    wt4, wp4, ws4 = wt + dt * at, wp + dt * ap, ws + dt * a_s
    fx, fy, fz = fw[0], fw[1], fw[2]
    ax1, ay1, az1 = translational_accel_kernel(th, ph, ps, u_z, fx, fy, fz, c)
    ax2, ay2, az2 = translational_accel_kernel(th + h * wt, ph + h * wp, ps + h * ws, u_z, fx, fy, fz, c)
    ax3, ay3, az3 = translational_accel_kernel(th + h * wt2, ph + h * wp2, ps + h * ws2, u_z, fx, fy, fz, c)
    ax4, ay4, az4 = translational_accel_kernel(th + dt * wt2, ph + dt * wp2, ps + dt * ws2, u_z, fx, fy, fz, c)
    w = dt / 6.0
    new = VehicleState(
        x + w * (vx + 2.0 * (vx + h * ax1) + 2.0 * (vx + h * ax2) + (vx + dt * ax3)),
        y + w * (vy + 2.0 * (vy + h * ay1) + 2.0 * (vy + h * ay2) + (vy + dt * ay3)),
        z + w * (vz + 2.0 * (vz + h * az1) + 2.0 * (vz + h * az2) + (vz + dt * az3)),
        vx + w * (ax1 + 2.0 * ax2 + 2.0 * ax3 + ax4),
        vy + w * (ay1 + 2.0 * ay2 + 2.0 * ay3 + ay4),
        vz + w * (az1 + 2.0 * az2 + 2.0 * az3 + az4),
        th + w * (wt + 4.0 * wt2 + wt4),
        ph + w * (wp + 4.0 * wp2 + wp4),
        ps + w * (ws + 4.0 * ws2 + ws4),
        wt4,
        wp4,
        ws4,
    )
    ok = True
    for i in range(12):
        if not -bound <= new[i] <= bound:  # also catches NaN
            ok = False
    return new, ok


# ---------------------------------------------------------------------------
# public wrappers


def _floats(values: Sequence[float], n: int) -> tuple[float, ...]:
    out = tuple(float(v) for v in values)
    if len(out) != n:
        raise ValueError(f"expected {n} values, got {len(out)}")
    return out


def mix_forward(speeds: Sequence[float], p: VehicleParams) -> BodyCommand:
    u1, u2, u3, u4 = _floats(speeds[:4], 4)
    return mix_forward_kernel(u1, u2, u3, u4, p.constants)


def mix_inverse(cmd: Sequence[float], p: VehicleParams) -> MotorSpeeds:
    """Solve the mixer for motor speeds, then clamp each to ``[0, omega_max]``."""
    return mix_inverse_kernel(BodyCommand(*_floats(cmd, 4)), p.constants)


def desaturate(cmd: Sequence[float], p: VehicleParams) -> tuple[BodyCommand, bool]:
    """Trim a command so its motor speeds fit in ``[0, omega_max]`` without clamping.

    Priority is pitch/roll torque, then collective thrust, then yaw torque.
    Returns the feasible command and whether anything was trimmed.
    """
    return desaturate_kernel(BodyCommand(*_floats(cmd, 4)), p.constants)


def translational_accel(state: Sequence[float], u_z: float, wind_force: Sequence[float], p: VehicleParams) -> Vec3:
    fx, fy, fz = _floats(wind_force, 3)
    return translational_accel_kernel(float(state[6]), float(state[7]), float(state[8]), float(u_z), fx, fy, fz, p.constants)


def rotational_accel(cmd: Sequence[float], p: VehicleParams) -> Vec3:
    return (cmd[1] / p.J_theta, cmd[2] / p.J_phi, cmd[3] * p.K_r / p.J_psi)


def step(
    state: Sequence[float],
    cmd: Sequence[float],
    wind_force: Sequence[float],
    dt: float,
    p: VehicleParams,
    bound: float = 1e6,
) -> VehicleState:
    """Advance the 12-value state by one classical Runge-Kutta step.

    ``cmd`` and ``wind_force`` are held constant over the step.
    """
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    new, ok = step_kernel(
        VehicleState(*_floats(state, 12)),
        BodyCommand(*_floats(cmd, 4)),
        _floats(wind_force, 3),
        float(dt),
        p.constants,
        float(bound),
    )
    if not ok:
        bad = next(v for v in new if not -bound <= v <= bound)
        raise DivergenceError(f"state component {bad!r} outside sanity bound {bound:g}")
    return new
