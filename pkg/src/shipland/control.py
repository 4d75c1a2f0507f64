"""Cascaded PID flight controller with saturation and shortest-path yaw error.

Loop structure, outermost first::

    position error x, y  -> u_x, u_y -> (rotate by yaw) -> theta_d, phi_d
    theta_d, phi_d error -> u_theta, u_phi
    altitude error       -> body thrust -> world thrust u_z
    wrapped yaw error    -> u_psi

Every PID takes its error rate either from an explicit rate or, when none is
given, from a backward difference of the error. The final command is trimmed
so that the mixer never has to clip a motor.

Compiled kernels carry the arithmetic; an error rate of NaN tells a kernel to
difference the error itself. The public wrappers use ``None`` for that.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np
from numba import njit

from shipland.vehicle import BodyCommand, Vec3, VehicleParams, clip, desaturate_kernel

TWO_PI = 2.0 * math.pi
INF = math.inf
NAN = math.nan


class PidGains(NamedTuple):
    kp: float
    ki: float = 0.0
    kd: float = 0.0


class PidState(NamedTuple):
    integral: float = 0.0
    prev_error: float = NAN  # NaN until the first update
    prev_derivative: float = 0.0


class SaturationLimits(NamedTuple):
    tilt_max: float
    u_z_max: float
    torque_max: float
    yaw_torque_max: float

    @classmethod
    def from_vehicle(cls, p: VehicleParams, tilt_max: float = math.pi / 4) -> "SaturationLimits":
        return cls(
            tilt_max=float(tilt_max),
            u_z_max=float(4 * p.K * p.omega_max),
            torque_max=float(p.L * p.K * p.omega_max),
            yaw_torque_max=float(2 * p.K * p.K_psi * p.omega_max),
        )

    def clamp(self, cmd) -> BodyCommand:
        return clamp_kernel(BodyCommand(*(float(v) for v in cmd)), self)


class ControllerConstants(NamedTuple):
    """Compiled-code view of ``ControllerConfig``."""

    z: PidGains
    x: PidGains
    y: PidGains
    theta: PidGains
    phi: PidGains
    psi: PidGains
    tilt_max: float
    invert_phi_mapping: bool
    prioritized_allocation: bool


def _gains(g) -> PidGains:
    return PidGains(float(g[0]), float(g[1]), float(g[2]))


@dataclass(frozen=True)
class ControllerConfig:
    z: PidGains = PidGains(297.08, 55.6, 389.0)
    x: PidGains = PidGains(0.5, 0.05, 0.5)
    y: PidGains = PidGains(0.5, 0.05, 0.5)
    theta: PidGains = PidGains(0.324, 0.0, 0.383)
    phi: PidGains = PidGains(0.324, 0.0, 0.383)
    psi: PidGains = PidGains(0.00485, 3.83e-5, 0.0518)
    tilt_max: float = math.pi / 4
    invert_phi_mapping: bool = False
    pretrim_thrust: bool = False
    prioritized_allocation: bool = True

    def __post_init__(self):
        for name in ("z", "x", "y", "theta", "phi", "psi"):
            g = getattr(self, name)
            if len(g) != 3 or not all(math.isfinite(v) and v >= 0 for v in g):
                raise ValueError(f"gains.{name} must be three finite non-negative numbers, got {tuple(g)}")
            if not isinstance(g, PidGains):
                object.__setattr__(self, name, PidGains(*g))
        if not 0 < self.tilt_max < math.pi / 2:
            raise ValueError(f"tilt_max must lie in (0, pi/2), got {self.tilt_max}")

    @cached_property
    def constants(self) -> ControllerConstants:
        return ControllerConstants(
            _gains(self.z), _gains(self.x), _gains(self.y), _gains(self.theta), _gains(self.phi), _gains(self.psi),
            float(self.tilt_max), bool(self.invert_phi_mapping), bool(self.prioritized_allocation),
        )  # fmt: skip


class AttitudeSetpoint(NamedTuple):
    theta_d: float
    phi_d: float
    psi_d: float
    u_z: float


class Feedback(NamedTuple):
    """What the controller sees each tick.

    Position enters as the filtered tracking error (reference minus noisy
    position) and its backward-difference rate; attitude enters as filtered
    angles and their backward-difference rates.
    """

    position_error: Vec3
    position_error_rate: Vec3
    attitude: Vec3
    rates: Vec3


class ControllerState(NamedTuple):
    z: PidState = PidState()
    x: PidState = PidState()
    y: PidState = PidState()
    theta: PidState = PidState()
    phi: PidState = PidState()
    psi: PidState = PidState()
    prev_setpoint: Vec3 = (NAN, NAN, NAN)  # theta_d, phi_d, psi_d of the last tick


def initial_controller_state(cfg: ControllerConfig, p: VehicleParams) -> ControllerState:
    if cfg.pretrim_thrust and cfg.z.ki > 0:
        return ControllerState(z=PidState(integral=float(p.m * p.g / cfg.z.ki)))
    return ControllerState()


# ---------------------------------------------------------------------------
# compiled kernels


@njit(cache=True)
def pid_kernel(gains, st, error, dt, lo, hi, error_rate):
    """Rectangular-rule PID with clamping anti-windup.

    While the unclamped output is beyond a limit, the integral is not allowed
    to move further in the direction that drives it there.
    """
    if math.isnan(error_rate):
        error_rate = 0.0 if math.isnan(st.prev_error) else (error - st.prev_error) / dt
    last = st.integral
    integral = last + error * dt if gains.ki != 0.0 else last
    u = gains.kp * error + gains.ki * integral + gains.kd * error_rate
    if u > hi:
        if error > 0:
            integral = last
        u = hi
    elif u < lo:
        if error < 0:
            integral = last
        u = lo
    return PidState(integral, error, error_rate), u


@njit(cache=True)
def clamp_kernel(cmd, limits):
    tm, ym = limits.torque_max, limits.yaw_torque_max
    return BodyCommand(clip(cmd[0], 0.0, limits.u_z_max), clip(cmd[1], -tm, tm), clip(cmd[2], -tm, tm), clip(cmd[3], -ym, ym))


@njit(cache=True)
def thrust_kernel(z_error, theta, phi, st, dt, gains, u_z_max, error_rate):
    # Tilt setpoints are clamped to pi/4, so cos*cos stays near or above 0.5.
    tilt = max(math.cos(theta) * math.cos(phi), 0.5)
    st, body = pid_kernel(gains, st, z_error, dt, 0.0, u_z_max * tilt, error_rate)
    return st, clip(body / tilt, 0.0, u_z_max)


@njit(cache=True)
def tilt_kernel(u_x, u_y, psi, invert_phi):
    s, c = math.sin(psi), math.cos(psi)
    phi_d = u_x * s - u_y * c
    return u_x * c + u_y * s, (-phi_d if invert_phi else phi_d)


@njit(cache=True)
def horizontal_kernel(x_error, y_error, psi, sx, sy, dt, gx, gy, tilt_max, invert_phi, x_rate, y_rate):
    nx, u_x = pid_kernel(gx, sx, x_error, dt, -INF, INF, x_rate)
    ny, u_y = pid_kernel(gy, sy, y_error, dt, -INF, INF, y_rate)
    theta_d, phi_d = tilt_kernel(u_x, u_y, psi, invert_phi)
    lim = tilt_max
    clamped = abs(theta_d) > lim or abs(phi_d) > lim
    if clamped:
        nx = PidState(sx.integral, nx.prev_error, nx.prev_derivative)
        ny = PidState(sy.integral, ny.prev_error, ny.prev_derivative)
        theta_d = clip(theta_d, -lim, lim)
        phi_d = clip(phi_d, -lim, lim)
    return nx, ny, theta_d, phi_d, clamped


@njit(cache=True)
def attitude_kernel(theta_error, phi_error, st_theta, st_phi, dt, g_theta, g_phi, torque_max, theta_rate, phi_rate):
    st_theta, u_theta = pid_kernel(g_theta, st_theta, theta_error, dt, -torque_max, torque_max, theta_rate)
    st_phi, u_phi = pid_kernel(g_phi, st_phi, phi_error, dt, -torque_max, torque_max, phi_rate)
    return st_theta, st_phi, u_theta, u_phi


@njit(cache=True)
def wrap_kernel(psi_d, psi):
    e = np.fmod(psi_d - psi, TWO_PI)
    if e < -math.pi:
        e += TWO_PI
    elif e > math.pi:
        e -= TWO_PI
    if e == -math.pi:
        return math.pi
    return e


@njit(cache=True)
def wrap_many(psi_d, psi):
    out = np.empty(psi_d.shape[0])
    for i in range(psi_d.shape[0]):
        out[i] = wrap_kernel(psi_d[i], psi[i])
    return out


@njit(cache=True)
def yaw_kernel(psi_d, psi, st, dt, gains, yaw_torque_max, error_rate):
    return pid_kernel(gains, st, wrap_kernel(psi_d, psi), dt, -yaw_torque_max, yaw_torque_max, error_rate)


@njit(cache=True)
def control_step_kernel(fb, ref_heading, cs, dt, cc, limits, vc):
    ex, ey, ez = fb.position_error
    rx, ry, rz = fb.position_error_rate
    theta, phi, psi = fb.attitude
    dtheta, dphi, dpsi = fb.rates

    sz, u_z = thrust_kernel(ez, theta, phi, cs.z, dt, cc.z, limits.u_z_max, rz)
    sx, sy, theta_d, phi_d, clamped = horizontal_kernel(
        ex, ey, psi, cs.x, cs.y, dt, cc.x, cc.y, cc.tilt_max, cc.invert_phi_mapping, rx, ry
    )

    # Attitude derivative terms use setpoint rate minus measured rate.
    prev = cs.prev_setpoint
    if math.isnan(prev[0]):
        r_theta = r_phi = r_psi = 0.0
    else:
        r_theta = (theta_d - prev[0]) / dt
        r_phi = (phi_d - prev[1]) / dt
        r_psi = wrap_kernel(ref_heading, prev[2]) / dt

    st_theta, st_phi, u_theta, u_phi = attitude_kernel(
        theta_d - theta, phi_d - phi, cs.theta, cs.phi, dt, cc.theta, cc.phi, limits.torque_max,
        r_theta - dtheta, r_phi - dphi,
    )  # fmt: skip
    spsi, u_psi = yaw_kernel(ref_heading, psi, cs.psi, dt, cc.psi, limits.yaw_torque_max, r_psi - dpsi)

    new = ControllerState(sz, sx, sy, st_theta, st_phi, spsi, (theta_d, phi_d, ref_heading))
    raw = BodyCommand(u_z, u_theta, u_phi, u_psi)
    if cc.prioritized_allocation:
        # The motor-range trim is strictly tighter than the box limits.
        cmd, trimmed = desaturate_kernel(raw, vc)
    else:
        cmd, trimmed = clamp_kernel(raw, limits), False
    return new, cmd, AttitudeSetpoint(theta_d, phi_d, ref_heading, u_z), clamped, trimmed


# ---------------------------------------------------------------------------
# public wrappers


def _rate(r) -> float:
    return NAN if r is None else float(r)


def _state(st) -> PidState:
    prev = st[1]
    return PidState(float(st[0]), NAN if prev is None else float(prev), float(st[2]))


def pid_step(
    gains: PidGains,
    st: PidState,
    error: float,
    dt: float,
    limits: tuple[float, float] = (-INF, INF),
    error_rate: float | None = None,
) -> tuple[PidState, float]:
    """One rectangular-rule PID update with clamping anti-windup."""
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    lo, hi = limits
    return pid_kernel(_gains(gains), _state(st), float(error), float(dt), float(lo), float(hi), _rate(error_rate))


def thrust_controller(
    z_error: float,
    theta: float,
    phi: float,
    st: PidState,
    dt: float,
    gains: PidGains,
    u_z_max: float,
    error_rate: float | None = None,
) -> tuple[PidState, float]:
    """Altitude PID in the body frame, tilted into world-frame thrust."""
    return thrust_kernel(
        float(z_error), float(theta), float(phi), _state(st), float(dt), _gains(gains), float(u_z_max), _rate(error_rate)
    )


def tilt_setpoints(u_x: float, u_y: float, psi: float, invert_phi: bool = False) -> tuple[float, float]:
    """Rotate world-frame horizontal demands into pitch/roll setpoints (unclamped)."""
    return tilt_kernel(float(u_x), float(u_y), float(psi), bool(invert_phi))


def horizontal_controller(
    x_error: float,
    y_error: float,
    psi: float,
    sx: PidState,
    sy: PidState,
    dt: float,
    cfg: ControllerConfig,
    x_rate: float | None = None,
    y_rate: float | None = None,
) -> tuple[PidState, PidState, float, float, bool]:
    """Position PIDs to clamped pitch/roll setpoints.

    Returns ``(x_state, y_state, theta_d, phi_d, clamped)``. Both integrators
    hold while either setpoint is clamped.
    """
    c = cfg.constants
    return horizontal_kernel(
        float(x_error), float(y_error), float(psi), _state(sx), _state(sy), float(dt),
        c.x, c.y, c.tilt_max, c.invert_phi_mapping, _rate(x_rate), _rate(y_rate),
    )  # fmt: skip


def attitude_controller(
    theta_error: float,
    phi_error: float,
    st_theta: PidState,
    st_phi: PidState,
    dt: float,
    cfg: ControllerConfig,
    torque_max: float,
    theta_rate: float | None = None,
    phi_rate: float | None = None,
) -> tuple[PidState, PidState, float, float]:
    c = cfg.constants
    return attitude_kernel(
        float(theta_error), float(phi_error), _state(st_theta), _state(st_phi), float(dt),
        c.theta, c.phi, float(torque_max), _rate(theta_rate), _rate(phi_rate),
    )  # fmt: skip


def wrap_yaw_error(psi_d: float, psi: float) -> float:
    """Shortest signed rotation from ``psi`` to ``psi_d``, in (-pi, pi]."""
    return wrap_kernel(float(psi_d), float(psi))


def wrap_yaw_errors(psi_d: np.ndarray, psi: np.ndarray) -> np.ndarray:
    """Elementwise ``wrap_yaw_error`` over two equal-length arrays."""
    a, b = np.broadcast_arrays(np.asarray(psi_d, dtype=float), np.asarray(psi, dtype=float))
    return wrap_many(np.ascontiguousarray(a.ravel()), np.ascontiguousarray(b.ravel())).reshape(a.shape)


def yaw_controller(
    psi_d: float,
    psi: float,
    st: PidState,
    dt: float,
    gains: PidGains,
    yaw_torque_max: float,
    error_rate: float | None = None,
) -> tuple[PidState, float]:
    return yaw_kernel(float(psi_d), float(psi), _state(st), float(dt), _gains(gains), float(yaw_torque_max), _rate(error_rate))


def _vec(v) -> Vec3:
    return (float(v[0]), float(v[1]), float(v[2]))


def control_step(
    fb: Feedback,
    ref_heading: float,
    cs: ControllerState,
    dt: float,
    cfg: ControllerConfig,
    limits: SaturationLimits,
    p: VehicleParams,
) -> tuple[ControllerState, BodyCommand, AttitudeSetpoint, bool, bool]:
    """Run the full cascade once.

    Returns ``(state, command, setpoint, tilt_clamped, trimmed)``; the command
    is inside the saturation limits and, with prioritised allocation, inside
    the motor speed range as well.
    """
    fb = Feedback(*(_vec(v) for v in fb))
    cs = ControllerState(*(_state(s) for s in cs[:6]), _vec(cs[6]))
    limits = SaturationLimits(*(float(v) for v in limits))
    return control_step_kernel(fb, float(ref_heading), cs, float(dt), cfg.constants, limits, p.constants)
