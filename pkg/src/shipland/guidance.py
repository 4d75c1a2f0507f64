"""Reference trajectories and the wave-timed landing state machine.

Landing sequence: approach the holding point above the ship, hold there until
a descent is planned, then ramp down at the target closure rate so that the
vehicle reaches the deck just as a wave crest arrives.

Compiled kernels use integer phases and a plan tuple whose fields are NaN
while no descent is planned; the public wrappers use ``MissionPhase`` and
``None``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

from numba import njit

from shipland.environment import ShipParams, ShipState, next_peak_kernel
from shipland.vehicle import Vec3

NAN = math.nan


class MissionPhase(enum.IntEnum):
    APPROACH = 0
    HOLD = 1
    DESCENDING = 2
    TOUCHED_DOWN = 3
    TIMED_OUT = 4


# Plain ints so compiled code can compare against them.
APPROACH, HOLD, DESCENDING, TOUCHED_DOWN, TIMED_OUT = (int(m) for m in MissionPhase)


class LandingConstants(NamedTuple):
    holding_altitude: float
    position_tolerance: float
    target_relative_velocity: float
    timeout: float
    abort_factor: float
    mean_deck_height: float = 0.0


@dataclass(frozen=True)
class LandingParams:
    holding_altitude: float = 20.0
    position_tolerance: float = 1.0
    target_relative_velocity: float = 1.0
    timeout: float = 600.0
    abort_factor: float = 2.0

    def __post_init__(self):
        for name in ("holding_altitude", "position_tolerance", "target_relative_velocity", "timeout", "abort_factor"):
            if not getattr(self, name) > 0:
                raise ValueError(f"landing.{name} must be > 0, got {getattr(self, name)}")

    @cached_property
    def constants(self) -> LandingConstants:
        return LandingConstants(
            float(self.holding_altitude),
            float(self.position_tolerance),
            float(self.target_relative_velocity),
            float(self.timeout),
            float(self.abort_factor),
        )


class ReferencePoint(NamedTuple):
    position: Vec3
    heading: float
    velocity: Vec3 = (0.0, 0.0, 0.0)


@dataclass(frozen=True)
class LissajousParams:
    amplitude_x: float = 10.0
    amplitude_y: float = 10.0
    freq_x: float = 0.1
    freq_y: float = 0.2
    phase: float = 0.0
    altitude: float = 0.0
    heading: float = 0.0

    def as_row(self) -> tuple[float, ...]:
        return tuple(float(v) for v in (self.amplitude_x, self.amplitude_y, self.freq_x, self.freq_y,
                                         self.phase, self.altitude, self.heading))  # fmt: skip


@dataclass(frozen=True)
class SpiralParams:
    radius: float = 10.0
    angular_rate: float = 0.2
    climb_rate: float = 0.2
    start_altitude: float = 0.0
    heading: float = 0.0

    def as_row(self) -> tuple[float, ...]:
        return tuple(float(v) for v in (self.radius, self.angular_rate, self.climb_rate, self.start_altitude,
                                         self.heading, 0.0, 0.0))  # fmt: skip


@dataclass(frozen=True)
class HoverParams:
    position: tuple[float, float, float] = (0.0, 0.0, 0.0)
    heading: float = 0.0

    def as_row(self) -> tuple[float, ...]:
        x, y, z = self.position
        return tuple(float(v) for v in (x, y, z, self.heading, 0.0, 0.0, 0.0))


@njit(cache=True)
def lissajous_kernel(t, c):
    ax, ay, a, b, phase, altitude, heading = c
    arg = b * t + phase
    return ReferencePoint(
        (ax * math.sin(a * t), ay * math.sin(arg), altitude),
        heading,
        (ax * a * math.cos(a * t), ay * b * math.cos(arg), 0.0),
    )


@njit(cache=True)
def spiral_kernel(t, c):
    r, w, climb, z0, heading = c[0], c[1], c[2], c[3], c[4]
    s, co = math.sin(w * t), math.cos(w * t)
    return ReferencePoint((r * co, r * s, z0 + climb * t), heading, (-r * w * s, r * w * co, climb))


@njit(cache=True)
def hover_kernel(t, c):
    return ReferencePoint((c[0], c[1], c[2]), c[3], (0.0, 0.0, 0.0))


def lissajous_reference(t: float, c: LissajousParams) -> ReferencePoint:
    return lissajous_kernel(float(t), c.as_row())


def spiral_reference(t: float, c: SpiralParams) -> ReferencePoint:
    return spiral_kernel(float(t), c.as_row())


def hover_reference(t: float, c: HoverParams) -> ReferencePoint:
    return hover_kernel(float(t), c.as_row())


class DescentPlan(NamedTuple):
    t_start: float
    t_touch: float
    v_descent: float
    start_altitude: float


NO_PLAN = DescentPlan(NAN, NAN, NAN, NAN)


@njit(cache=True)
def plan_descent_kernel(t_now, lc, track):
    v = lc.target_relative_velocity
    top = lc.mean_deck_height + lc.holding_altitude
    t_peak = next_peak_kernel(t_now, track.amplitude, track.frequency, track.phase)
    if math.isnan(t_peak):
        # Flat sea: go now and aim at the mean deck.
        return DescentPlan(t_now, t_now + lc.holding_altitude / v, v, top)
    duration = (lc.holding_altitude - track.amplitude) / v
    period = 2.0 * math.pi / track.frequency
    while t_peak - t_now < duration:
        t_peak += period
    return DescentPlan(t_peak - duration, t_peak, v, top)


def plan_descent(t_now: float, landing: LandingParams, ship: ShipParams) -> DescentPlan:
    """Choose the earliest crest the vehicle can reach at the target closure rate.

    On a flat sea the descent starts immediately and targets the mean deck.
    """
    return plan_descent_kernel(float(t_now), landing.constants, ship.track)


@njit(cache=True)
def track_reference_kernel(t, ship, phase, lc, plan):
    sx, sy = ship.position[0], ship.position[1]
    svx, svy = ship.velocity[0], ship.velocity[1]
    if phase == DESCENDING and t >= plan.t_start:
        z = plan.start_altitude - plan.v_descent * (t - plan.t_start)
        return ReferencePoint((sx, sy, z), ship.heading, (svx, svy, -plan.v_descent))
    return ReferencePoint((sx, sy, lc.mean_deck_height + lc.holding_altitude), ship.heading, (svx, svy, 0.0))


def _plan(plan: DescentPlan | None) -> DescentPlan:
    return NO_PLAN if plan is None else DescentPlan(*(float(v) for v in plan))


def _ship(ship: ShipState) -> ShipState:
    return ShipState(tuple(map(float, ship[0])), tuple(map(float, ship[1])), float(ship[2]))


def ship_track_reference(
    t: float,
    ship: ShipState,
    phase: MissionPhase,
    landing: LandingParams,
    plan: DescentPlan | None,
    frozen: ReferencePoint | None = None,
) -> ReferencePoint:
    """Ship-following reference for the current phase.

    ``frozen`` is the reference that is held once the mission has ended.
    """
    if phase >= TOUCHED_DOWN and frozen is not None:
        return frozen
    return track_reference_kernel(float(t), _ship(ship), int(phase), landing.constants, _plan(plan))


@njit(cache=True)
def horizontal_error(a, b):
    return math.hypot(a[0] - b[0], a[1] - b[1])


@njit(cache=True)
def position_error(a, b):
    return math.sqrt((a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2 + (a[2] - b[2]) ** 2)


class TouchdownRecord(NamedTuple):
    time: float
    horizontal_error: float
    position_error: float
    relative_velocity: float


@njit(cache=True)
def touchdown_kernel(position, velocity, ship, tolerance, t):
    deck, dv = ship.position, ship.velocity
    miss = TouchdownRecord(NAN, NAN, NAN, NAN)
    if position[2] > deck[2]:
        return False, miss
    herr = horizontal_error(position, deck)
    if herr >= tolerance:
        return False, miss
    rel = math.sqrt((velocity[0] - dv[0]) ** 2 + (velocity[1] - dv[1]) ** 2 + (velocity[2] - dv[2]) ** 2)
    return True, TouchdownRecord(t, herr, position_error(position, deck), rel)


def detect_touchdown(
    position: Vec3,
    velocity: Vec3,
    ship: ShipState,
    tolerance: float,
    t: float,
) -> TouchdownRecord | None:
    """Contact when the vehicle is at or below the deck and horizontally over it."""
    hit, rec = touchdown_kernel(
        tuple(map(float, position)), tuple(map(float, velocity)), _ship(ship), float(tolerance), float(t)
    )
    return rec if hit else None


@njit(cache=True)
def update_phase_kernel(phase, t, position, ship, lc, plan, track, touched):
    if phase >= TOUCHED_DOWN:
        return phase, plan
    if touched and phase == DESCENDING:
        return TOUCHED_DOWN, plan
    if t >= lc.timeout:
        return TIMED_OUT, plan

    tol = lc.position_tolerance
    sx, sy = ship.position[0], ship.position[1]
    herr = math.hypot(position[0] - sx, position[1] - sy)
    hold_point = (sx, sy, lc.mean_deck_height + lc.holding_altitude)
    none = DescentPlan(NAN, NAN, NAN, NAN)

    if phase == APPROACH:
        if position_error(position, hold_point) < tol:
            return HOLD, plan_descent_kernel(t, lc, track)
        return phase, none

    if phase == HOLD:
        if math.isnan(plan.t_start):
            if position_error(position, hold_point) < tol:
                return phase, plan_descent_kernel(t, lc, track)
            return phase, none
        if t >= plan.t_start:
            if herr < tol:
                return DESCENDING, plan
            return phase, none
        return phase, plan

    # Descending: abort on drift, or on reaching deck height off the deck.
    if herr > lc.abort_factor * tol or (position[2] <= ship.position[2] and herr >= tol):
        return HOLD, none
    return phase, plan


def update_phase(
    phase: MissionPhase,
    t: float,
    position: Vec3,
    ship: ShipState,
    landing: LandingParams,
    plan: DescentPlan | None,
    ship_params: ShipParams,
    touchdown: TouchdownRecord | None = None,
) -> tuple[MissionPhase, DescentPlan | None]:
    """Advance the landing state machine by one tick.

    ``position`` is the controller's (filtered) estimate. A descent that drifts
    beyond ``abort_factor`` tolerances horizontally returns to HOLD and is
    replanned once the vehicle is back within tolerance.
    """
    new_phase, new_plan = update_phase_kernel(
        int(phase), float(t), tuple(map(float, position)), _ship(ship), landing.constants,
        _plan(plan), ship_params.track, touchdown is not None,
    )  # fmt: skip
    return MissionPhase(new_phase), (None if math.isnan(new_plan.t_start) else new_plan)
