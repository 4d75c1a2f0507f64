"""Wind disturbance, aerodynamic drag and the heaving, turning ship deck."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple, Sequence

import numpy as np
from numba import njit

from shipland.vehicle import Vec3, VehicleParams

TWO_PI = 2.0 * math.pi


class NoPeakError(ValueError):
    """A flat sea has no wave peak to aim for."""


def drag_constant(p: VehicleParams) -> float:
    return 0.5 * p.C_d * p.rho * p.A


@dataclass(frozen=True)
class WindParams:
    wind_min: float = 10.0
    wind_max: float = 20.0
    gust_sample_time: float = 0.5
    seed: int | None = None

    def __post_init__(self):
        if not 0 <= self.wind_min <= self.wind_max:
            raise ValueError(f"wind range must satisfy 0 <= wind_min <= wind_max, got ({self.wind_min}, {self.wind_max})")
        if not self.gust_sample_time > 0:
            raise ValueError(f"wind.gust_sample_time must be > 0, got {self.gust_sample_time}")


class WindState(NamedTuple):
    steady: Vec3
    gust: Vec3
    K_d: float
    slot: int = -1  # index of the gust sample currently held

    @property
    def velocity(self) -> Vec3:
        s, g = self.steady, self.gust
        return (s[0] + g[0], s[1] + g[1], s[2] + g[2])


def calm(K_d: float) -> WindState:
    return WindState((0.0, 0.0, 0.0), (0.0, 0.0, 0.0), K_d)


def init_wind(params: WindParams, rng: np.random.Generator, K_d: float) -> WindState:
    """Draw the steady wind: uniform magnitude in range, independent random sign per axis."""
    mag = rng.uniform(params.wind_min, params.wind_max, size=3)
    sign = rng.choice((-1.0, 1.0), size=3)
    steady = tuple(float(v) for v in mag * sign)
    return WindState(steady, (0.0, 0.0, 0.0), K_d)


def _gust_slot(t: float, sample_time: float) -> int:
    return int(t / sample_time + 1e-9)


def update_gust(state: WindState, t: float, params: WindParams, rng: np.random.Generator) -> WindState:
    """Redraw the gust when ``t`` enters a new sample interval, otherwise hold it."""
    slot = _gust_slot(t, params.gust_sample_time)
    if slot == state.slot:
        return state
    u = rng.uniform(-1.0, 1.0, size=3)
    s = state.steady
    gust = (s[0] / 5.0 * float(u[0]), s[1] / 5.0 * float(u[1]), s[2] / 5.0 * float(u[2]))
    return state._replace(gust=gust, slot=slot)


def gust_table(state: WindState, rng: np.random.Generator, n_samples: int) -> np.ndarray:
    """The first ``n_samples`` gust vectors, one row per sample interval.

    Consumes ``rng`` exactly as ``n_samples`` successive ``update_gust`` redraws.
    """
    u = rng.uniform(-1.0, 1.0, size=(n_samples, 3))
    return u * (np.asarray(state.steady) / 5.0)


@njit(cache=True)
def drag_kernel(vx, vy, vz, wx, wy, wz, K_d):
    r0, r1, r2 = vx - wx, vy - wy, vz - wz
    return (-K_d * r0 * abs(r0), -K_d * r1 * abs(r1), -K_d * r2 * abs(r2))


@njit(cache=True)
def _drag_many(v, w, K_d):
    out = np.empty_like(v)
    for i in range(v.shape[0]):
        out[i] = drag_kernel(v[i, 0], v[i, 1], v[i, 2], w[i, 0], w[i, 1], w[i, 2], K_d)
    return out


def wind_forces(vehicle_velocity: np.ndarray, wind_velocity: np.ndarray, K_d: float) -> np.ndarray:
    """Row-wise ``wind_force`` for ``(n, 3)`` arrays of vehicle and wind velocity."""
    v = np.ascontiguousarray(vehicle_velocity, dtype=float).reshape(-1, 3)
    w = np.ascontiguousarray(np.broadcast_to(np.asarray(wind_velocity, dtype=float), v.shape))
    return _drag_many(v, w, float(K_d))


def wind_force(vehicle_velocity: Sequence[float], wind: WindState) -> Vec3:
    """Per-axis quadratic drag against the air-relative velocity."""
    wx, wy, wz = wind.velocity
    v = vehicle_velocity
    return drag_kernel(float(v[0]), float(v[1]), float(v[2]), float(wx), float(wy), float(wz), float(wind.K_d))


@dataclass(frozen=True)
class ShipLeg:
    """From ``t_start`` on, sail at ``speed`` turning at ``turn_rate`` deg/s.

    ``heading`` (compass degrees) snaps the heading at the leg start; ``None``
    keeps it continuous.
    """

    t_start: float
    speed: float
    turn_rate: float
    heading: float | None = None


class ShipTrack(NamedTuple):
    """Compiled-code view of ``ShipParams``.

    ``legs`` rows are ``(t_start, speed, turn_rate rad/s, heading rad or NaN)``;
    row 0 is the initial leg.
    """

    x0: float
    y0: float
    legs: np.ndarray
    amplitude: float
    frequency: float
    phase: float


@dataclass(frozen=True)
class ShipParams:
    """Ship track and heave. Headings are compass degrees: 0 = North (+x), 90 = East (+y)."""

    x0: float = 500.0
    y0: float = 300.0
    heading: float = 300.0
    turn_rate: float = 2.0
    speed: float = 15.0
    wave_amplitude: float = 5.0
    wave_frequency: float = 0.75
    wave_phase: float = 2.2
    schedule: tuple[ShipLeg, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if not self.wave_amplitude >= 0:
            raise ValueError(f"ship.wave_amplitude must be >= 0, got {self.wave_amplitude}")
        if not self.wave_frequency > 0:
            raise ValueError(f"ship.wave_frequency must be > 0, got {self.wave_frequency}")
        if not self.speed >= 0:
            raise ValueError(f"ship.speed must be >= 0, got {self.speed}")
        last = 0.0
        for leg in self.schedule:
            if leg.speed < 0:
                raise ValueError(f"ship.schedule leg speed must be >= 0, got {leg.speed}")
            if leg.t_start < last:
                raise ValueError("ship.schedule legs must have non-decreasing t_start >= 0")
            last = leg.t_start

    @property
    def wave_period(self) -> float:
        return TWO_PI / self.wave_frequency

    @property
    def mean_deck_height(self) -> float:
        return 0.0

    @cached_property
    def track(self) -> ShipTrack:
        legs = [ShipLeg(0.0, self.speed, self.turn_rate, self.heading), *self.schedule]
        rows = [
            (leg.t_start, leg.speed, math.radians(leg.turn_rate), math.nan if leg.heading is None else math.radians(leg.heading))
            for leg in legs
        ]
        return ShipTrack(
            float(self.x0),
            float(self.y0),
            np.array(rows, dtype=float),
            float(self.wave_amplitude),
            float(self.wave_frequency),
            float(self.wave_phase),
        )


class ShipState(NamedTuple):
    position: Vec3
    velocity: Vec3
    heading: float  # rad, compass convention


@njit(cache=True)
def _arc(x, y, psi, speed, rate, t):
    # Closed-form constant-rate arc; sin(h)/h keeps the straight-line limit exact.
    h = 0.5 * rate * t
    sinc = math.sin(h) / h if h != 0.0 else 1.0
    mid = psi + h
    d = speed * t * sinc
    return x + d * math.cos(mid), y + d * math.sin(mid), psi + rate * t


@njit(cache=True)
def ship_state_kernel(t, track):
    x, y = track.x0, track.y0
    legs = track.legs
    n = legs.shape[0]
    psi = legs[0, 3]
    speed = legs[0, 1]
    for i in range(n):
        if not math.isnan(legs[i, 3]):
            psi = legs[i, 3]
        speed = legs[i, 1]
        t_end = legs[i + 1, 0] if i + 1 < n else math.inf
        if t < t_end:
            x, y, psi = _arc(x, y, psi, speed, legs[i, 2], t - legs[i, 0])
            break
        x, y, psi = _arc(x, y, psi, speed, legs[i, 2], t_end - legs[i, 0])
    a, w = track.amplitude, track.frequency
    arg = w * t + track.phase
    return ShipState(
        (x, y, a * math.sin(arg)),
        (speed * math.cos(psi), speed * math.sin(psi), a * w * math.cos(arg)),
        psi,
    )


@njit(cache=True)
def next_peak_kernel(t_now, amplitude, frequency, phase):
    """Earliest crest strictly after ``t_now``; NaN on a flat sea."""
    if amplitude == 0.0:
        return math.nan
    w, ph = frequency, phase
    k = math.floor((w * t_now + ph - 0.5 * math.pi) / TWO_PI) + 1
    t_p = (0.5 * math.pi - ph + TWO_PI * k) / w
    while t_p <= t_now:
        t_p += TWO_PI / w
    return t_p


def ship_state_at(t: float, params: ShipParams) -> ShipState:
    return ship_state_kernel(float(t), params.track)


def next_wave_peak(t_now: float, params: ShipParams) -> float:
    """Earliest time strictly after ``t_now`` at which the deck is at a crest."""
    if params.wave_amplitude == 0:
        raise NoPeakError("wave amplitude is zero; there is no peak to time")
    return next_peak_kernel(float(t_now), float(params.wave_amplitude), float(params.wave_frequency), float(params.wave_phase))
