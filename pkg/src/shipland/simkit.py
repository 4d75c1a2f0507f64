"""Simulation kernel: scenario wiring, trace recording, metrics and batch harnesses."""

from __future__ import annotations

import csv
import math
from collections import namedtuple
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from numba import njit

from shipland import control, environment, guidance, sensing, vehicle
from shipland.control import ControllerConfig, Feedback, SaturationLimits
from shipland.environment import ShipParams, WindParams
from shipland.guidance import (
    HoverParams,
    LandingParams,
    LissajousParams,
    MissionPhase,
    ReferencePoint,
    SpiralParams,
    TouchdownRecord,
)
from shipland.sensing import NoiseParams
from shipland.vehicle import VehicleParams, VehicleState

KINDS = ("ship_landing", "hover", "lissajous", "spiral")


@dataclass(frozen=True)
class FilterParams:
    omega_translation: float = 13.0
    omega_rotation: float = 31.0

    def __post_init__(self):
        if not (self.omega_translation > 0 and self.omega_rotation > 0):
            raise ValueError("filter cut-off frequencies must be > 0")


@dataclass(frozen=True)
class ScenarioConfig:
    kind: str = "ship_landing"
    duration: float = 600.0
    dt: float = 0.002
    seed: int = 0
    tail_fraction: float = 0.10
    sanity_bound: float = 1e6
    initial_position: tuple[float, float, float] = (0.0, 0.0, 0.0)
    initial_heading: float = 0.0  # rad
    vehicle: VehicleParams = field(default_factory=VehicleParams)
    wind_enabled: bool = True
    wind: WindParams = field(default_factory=WindParams)
    noise_enabled: bool = True
    translation_noise: NoiseParams = field(default_factory=lambda: NoiseParams(0.001, 0.01))
    rotation_noise: NoiseParams = field(default_factory=lambda: NoiseParams(0.0001, 0.01))
    filter: FilterParams = field(default_factory=FilterParams)
    controller: ControllerConfig = field(default_factory=ControllerConfig)
    ship: ShipParams = field(default_factory=ShipParams)
    landing: LandingParams = field(default_factory=LandingParams)
    lissajous: LissajousParams = field(default_factory=LissajousParams)
    spiral: SpiralParams = field(default_factory=SpiralParams)
    hover: HoverParams = field(default_factory=HoverParams)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"scenario.kind must be one of {KINDS}, got {self.kind!r}")
        if not self.dt > 0:
            raise ValueError(f"scenario.dt must be > 0, got {self.dt}")
        if not self.duration >= self.dt:
            raise ValueError(f"scenario.duration must be >= dt, got {self.duration}")
        if not 0 < self.tail_fraction <= 1:
            raise ValueError(f"scenario.tail_fraction must lie in (0, 1], got {self.tail_fraction}")
        if not self.sanity_bound > 0:
            raise ValueError("scenario.sanity_bound must be > 0")
        if len(self.initial_position) != 3 or not all(map(math.isfinite, self.initial_position)):
            raise ValueError("scenario.initial_position must be three finite numbers")

    @property
    def limits(self) -> SaturationLimits:
        return SaturationLimits.from_vehicle(self.vehicle, self.controller.tilt_max)


# Trace columns, with units in the name.
STATE_COLUMNS = [
    "x_m", "y_m", "z_m", "vx_mps", "vy_mps", "vz_mps",
    "theta_rad", "phi_rad", "psi_rad", "dtheta_radps", "dphi_radps", "dpsi_radps",
]  # fmt: skip
COLUMNS = (
    ["t_s"]
    + STATE_COLUMNS
    + ["meas_" + c for c in STATE_COLUMNS]
    + ["ref_x_m", "ref_y_m", "ref_z_m", "ref_psi_rad", "ref_vx_mps", "ref_vy_mps", "ref_vz_mps"]
    + ["theta_d_rad", "phi_d_rad"]
    + ["cmd_u_z_N", "cmd_u_theta_Nm", "cmd_u_phi_Nm", "cmd_u_psi_Nm"]
    + ["act_u_z_N", "act_u_theta_Nm", "act_u_phi_Nm", "act_u_psi_Nm"]
    + ["motor1_radps", "motor2_radps", "motor3_radps", "motor4_radps"]
    + ["wind_x_mps", "wind_y_mps", "wind_z_mps", "wind_fx_N", "wind_fy_N", "wind_fz_N"]
    + ["deck_x_m", "deck_y_m", "deck_z_m", "deck_vx_mps", "deck_vy_mps", "deck_vz_mps", "ship_heading_rad"]
    + ["phase", "plan_t_start_s", "plan_t_touch_s", "motor_clamped", "alloc_trimmed", "tilt_clamped"]
)
INT_COLUMNS = ("phase", "motor_clamped", "alloc_trimmed", "tilt_clamped")
TraceRecord = namedtuple("TraceRecord", COLUMNS)
_COL = {c: i for i, c in enumerate(COLUMNS)}


class Trace:
    """Per-step log, one row per simulation step, columns as in ``COLUMNS``."""

    def __init__(self, data: np.ndarray):
        self.data = data

    def __len__(self) -> int:
        return self.data.shape[0]

    def __getitem__(self, name: str) -> np.ndarray:
        return self.data[:, _COL[name]]

    def record(self, i: int) -> TraceRecord:
        return TraceRecord(*self.data[i].tolist())

    def position_errors(self) -> np.ndarray:
        d = self.data
        true = d[:, _COL["x_m"] : _COL["z_m"] + 1]
        ref = d[:, _COL["ref_x_m"] : _COL["ref_z_m"] + 1]
        return np.linalg.norm(true - ref, axis=1)

    def to_csv(self, path: str | Path) -> None:
        int_idx = [_COL[c] for c in INT_COLUMNS]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(COLUMNS)
            for row in self.data.tolist():
                for i in int_idx:
                    row[i] = int(row[i])
                w.writerow(row)


@dataclass(frozen=True)
class SummaryMetrics:
    kind: str
    seed: int
    outcome: str
    steps: int
    sim_time: float
    tail_fraction: float
    mean_error: float
    max_error: float
    time_to_land: float
    landed: bool
    touchdown_time: float = math.nan
    touchdown_horizontal_error: float = math.nan
    touchdown_position_error: float = math.nan
    touchdown_relative_velocity: float = math.nan
    clamp_events: int = 0
    tilt_clamp_events: int = 0

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, bool):
                text = "true" if v else "false"
            elif isinstance(v, str):
                text = f'"{v}"'
            elif isinstance(v, float):
                text = repr(v) if math.isfinite(v) else ("nan" if math.isnan(v) else ("inf" if v > 0 else "-inf"))
            else:
                text = str(v)
            lines.append(f"{f.name} = {text}")
        return "\n".join(lines) + "\n"


class SimulationDiverged(RuntimeError):
    def __init__(self, step: int, reason: str, trace: Trace | None = None):
        super().__init__(f"simulation diverged at step {step}: {reason}")
        self.step = step
        self.trace = trace


def compute_metrics(
    trace: Trace,
    tail_fraction: float,
    *,
    kind: str = "",
    seed: int = 0,
    outcome: str = "completed",
    duration: float | None = None,
    touchdown: TouchdownRecord | None = None,
) -> SummaryMetrics:
    """Tail-window tracking error and landing statistics of a finished run."""
    n = len(trace)
    if n == 0:
        raise ValueError("cannot compute metrics of an empty trace")
    k = max(1, math.ceil(tail_fraction * n - 1e-9))
    err = trace.position_errors()[n - k :]
    t = trace["t_s"]
    if duration is None:
        duration = float(t[-1])
    extra = {}
    if touchdown is not None:
        extra = dict(
            touchdown_time=touchdown.time,
            touchdown_horizontal_error=touchdown.horizontal_error,
            touchdown_position_error=touchdown.position_error,
            touchdown_relative_velocity=touchdown.relative_velocity,
        )
    return SummaryMetrics(
        kind=kind,
        seed=seed,
        outcome=outcome,
        steps=n,
        sim_time=float(t[-1]),
        tail_fraction=tail_fraction,
        mean_error=float(err.mean()),
        max_error=float(err.max()),
        time_to_land=touchdown.time if touchdown is not None else duration,
        landed=touchdown is not None,
        clamp_events=int(np.count_nonzero(trace["motor_clamped"] + trace["alloc_trimmed"])),
        tilt_clamp_events=int(trace["tilt_clamped"].sum()),
        **extra,
    )


def _held_steps(sample_time: float, dt: float) -> int:
    """Integration steps per held sample; at least one."""
    return max(1, round(sample_time / dt))


def _streams(cfg: ScenarioConfig) -> tuple[np.random.Generator, np.random.Generator, np.random.Generator]:
    wind_ss, trans_ss, rot_ss = np.random.SeedSequence(cfg.seed).spawn(3)
    pick = lambda own, derived: np.random.default_rng(own if own is not None else derived)  # noqa: E731
    return (
        pick(cfg.wind.seed, wind_ss),
        pick(cfg.translation_noise.seed, trans_ss),
        pick(cfg.rotation_noise.seed, rot_ss),
    )


REF_KIND = {"ship_landing": 0, "hover": 1, "lissajous": 2, "spiral": 3}


def _reference_row(cfg: ScenarioConfig) -> tuple[float, ...]:
    if cfg.kind == "hover":
        return cfg.hover.as_row()
    if cfg.kind == "lissajous":
        return cfg.lissajous.as_row()
    if cfg.kind == "spiral":
        return cfg.spiral.as_row()
    return (0.0,) * 7


def reference_at(t: float, cfg: ScenarioConfig) -> ReferencePoint:
    """Reference of a tracking or hover scenario at time ``t``."""
    kind = REF_KIND[cfg.kind]
    if kind == 0:
        raise ValueError("the landing reference depends on the mission state; use run_scenario")
    return _fixed_reference(float(t), kind, _reference_row(cfg))


@njit(cache=True)
def _fixed_reference(t, kind, row):
    if kind == 1:
        return guidance.hover_kernel(t, row)
    if kind == 2:
        return guidance.lissajous_kernel(t, row)
    return guidance.spiral_kernel(t, row)


# Kernel outcome codes.
COMPLETED, TOUCHED, TIMED_OUT_CODE, DIVERGED_STATE, DIVERGED_TILT = 0, 1, 2, 3, 4
OUTCOME_NAMES = {COMPLETED: "completed", TOUCHED: "touched_down", TIMED_OUT_CODE: "timed_out"}


@njit(cache=True)
def _put3(row, i, v):
    row[i] = v[0]
    row[i + 1] = v[1]
    row[i + 2] = v[2]


@njit(cache=True)
def _simulate(
    out, n_steps, dt, kind, ref_row, state, cs, cc, limits, vc,
    K_d, steady, gusts, gust_every, tnoise, rnoise, noise_every,
    a_trans, a_rot, track, lc, bound,
):  # fmt: skip
    """Fill ``out`` row by row; return ``(rows, outcome, touchdown)``."""
    half_pi = 0.5 * math.pi
    b_trans, b_rot = 1.0 - a_trans, 1.0 - a_rot
    nan = math.nan
    landing_run = kind == 0
    phase = guidance.APPROACH
    plan = guidance.DescentPlan(nan, nan, nan, nan)
    touched = False
    record = guidance.TouchdownRecord(nan, nan, nan, nan)
    frozen = guidance.ReferencePoint((0.0, 0.0, 0.0), 0.0, (0.0, 0.0, 0.0))
    rel_f = (0.0, 0.0, 0.0)
    att_f = (0.0, 0.0, 0.0)
    pos_est = (state[0], state[1], state[2])
    ship = environment.ShipState((nan, nan, nan), (nan, nan, nan), nan)

    for k in range(n_steps):
        t = k * dt
        g = gusts[k // gust_every]
        wind = (steady[0] + g[0], steady[1] + g[1], steady[2] + g[2])

        # Guidance runs on the previous tick's position estimate.
        if landing_run:
            ship = environment.ship_state_kernel(t, track)
            if phase == guidance.DESCENDING:
                touched, record = guidance.touchdown_kernel(
                    (state[0], state[1], state[2]), (state[3], state[4], state[5]), ship, lc.position_tolerance, t
                )
            new_phase, plan = guidance.update_phase_kernel(phase, t, pos_est, ship, lc, plan, track, touched)
            if new_phase != phase and new_phase >= guidance.TOUCHED_DOWN:
                frozen = guidance.ReferencePoint((state[0], state[1], state[2]), ship.heading, (0.0, 0.0, 0.0))
            phase = new_phase
            if phase >= guidance.TOUCHED_DOWN:
                ref = frozen
            else:
                ref = guidance.track_reference_kernel(t, ship, phase, lc, plan)
        else:
            ref = _fixed_reference(t, kind, ref_row)
        rp, rv = ref.position, ref.velocity

        # Translation is measured relative to the reference so that a moving
        # reference does not show up as filter lag.
        n = tnoise[k // noise_every]
        x = (state[0] + n[0] - rp[0], state[1] + n[1] - rp[1], state[2] + n[2] - rp[2])
        n = rnoise[k // noise_every]
        xa = (state[6] + n[0], state[7] + n[1], state[8] + n[2])
        if k == 0:
            rel_f, att_f = x, xa
            rel_rate = (-rv[0], -rv[1], -rv[2])
            rate_f = (0.0, 0.0, 0.0)
        else:
            prev, prev_a = rel_f, att_f
            rel_f = (a_trans * prev[0] + b_trans * x[0], a_trans * prev[1] + b_trans * x[1], a_trans * prev[2] + b_trans * x[2])
            att_f = (a_rot * prev_a[0] + b_rot * xa[0], a_rot * prev_a[1] + b_rot * xa[1], a_rot * prev_a[2] + b_rot * xa[2])
            rel_rate = sensing.backdiff3(rel_f, prev, dt)
            rate_f = sensing.backdiff3(att_f, prev_a, dt)
        pos_est = (rp[0] + rel_f[0], rp[1] + rel_f[1], rp[2] + rel_f[2])
        vel_est = (rv[0] + rel_rate[0], rv[1] + rel_rate[1], rv[2] + rel_rate[2])
        fb = control.Feedback(
            (-rel_f[0], -rel_f[1], -rel_f[2]), (-rel_rate[0], -rel_rate[1], -rel_rate[2]), att_f, rate_f
        )

        cs, demand, sp, tilt_clamped, trimmed = control.control_step_kernel(fb, ref.heading, cs, dt, cc, limits, vc)
        speeds = vehicle.mix_inverse_kernel(demand, vc)
        act = vehicle.mix_forward_kernel(speeds[0], speeds[1], speeds[2], speeds[3], vc)
        fw = environment.drag_kernel(state[3], state[4], state[5], wind[0], wind[1], wind[2], K_d)

        row = out[k]
        row[0] = t
        for i in range(12):
            row[1 + i] = state[i]
        _put3(row, 13, pos_est)
        _put3(row, 16, vel_est)
        _put3(row, 19, att_f)
        _put3(row, 22, rate_f)
        _put3(row, 25, rp)
        row[28] = ref.heading
        _put3(row, 29, rv)
        row[32] = sp.theta_d
        row[33] = sp.phi_d
        for i in range(4):
            row[34 + i] = demand[i]
            row[38 + i] = act[i]
        row[42], row[43], row[44], row[45] = speeds.u1, speeds.u2, speeds.u3, speeds.u4
        _put3(row, 46, wind)
        _put3(row, 49, fw)
        _put3(row, 52, ship.position)
        _put3(row, 55, ship.velocity)
        row[58] = ship.heading
        row[59] = phase
        row[60] = plan.t_start
        row[61] = plan.t_touch
        row[62] = 1.0 if speeds.clamped else 0.0
        row[63] = 1.0 if trimmed else 0.0
        row[64] = 1.0 if tilt_clamped else 0.0

        if phase == guidance.TOUCHED_DOWN:
            return k + 1, TOUCHED, record
        if phase == guidance.TIMED_OUT:
            return k + 1, TIMED_OUT_CODE, record
        state, ok = vehicle.step_kernel(state, act, fw, dt, vc, bound)
        if not ok:
            return k + 1, DIVERGED_STATE, record
        if abs(state[6]) >= half_pi or abs(state[7]) >= half_pi:
            return k + 1, DIVERGED_TILT, record
    return n_steps, (TIMED_OUT_CODE if landing_run else COMPLETED), record


@dataclass
class RunResult:
    trace: Trace
    metrics: SummaryMetrics
    touchdown: TouchdownRecord | None = None
    events: list[tuple[float, str, str]] = field(default_factory=list)

    def __iter__(self):
        # allow ``trace, metrics = run_scenario(cfg)``
        return iter((self.trace, self.metrics))


def phase_events(trace: Trace) -> list[tuple[float, str, str]]:
    """``(time, from, to)`` for every mission phase change in a trace."""
    phase = trace["phase"].astype(int)
    prev = np.concatenate(([int(MissionPhase.APPROACH)], phase[:-1]))
    idx = np.flatnonzero(phase != prev)
    t = trace["t_s"]
    return [(float(t[i]), MissionPhase(prev[i]).name, MissionPhase(phase[i]).name) for i in idx]


def run_scenario(cfg: ScenarioConfig) -> RunResult:
    """Simulate one scenario at a single fixed rate.

    Each step: ship and wind update, reference, noisy filtered measurement,
    control, mixing with motor clamps, drag, then one integrator step. A
    landing run stops at touchdown or timeout.

    Raises ``SimulationDiverged`` carrying the offending step index.
    """
    p = cfg.vehicle
    dt = float(cfg.dt)
    n_steps = max(1, round(cfg.duration / dt))
    wind_rng, trans_rng, rot_rng = _streams(cfg)
    K_d = environment.drag_constant(p)

    gust_every = _held_steps(cfg.wind.gust_sample_time, dt)
    n_gusts = (n_steps - 1) // gust_every + 1
    if cfg.wind_enabled:
        wind = environment.init_wind(cfg.wind, wind_rng, K_d)
        gusts = environment.gust_table(wind, wind_rng, n_gusts)
    else:
        wind = environment.calm(K_d)
        gusts = np.zeros((n_gusts, 3))

    # Both noise channels share one hold interval so they index one table row.
    noise_every = _held_steps(cfg.translation_noise.sample_time, dt)
    if _held_steps(cfg.rotation_noise.sample_time, dt) != noise_every:
        raise ValueError("translation and rotation noise must share one sample_time")
    n_noise = (n_steps - 1) // noise_every + 1

    def table(params: NoiseParams, rng):
        if not cfg.noise_enabled:
            return np.zeros((n_noise, 3))
        return sensing.noise_table(params, rng, n_noise)

    tnoise = table(cfg.translation_noise, trans_rng)
    rnoise = table(cfg.rotation_noise, rot_rng)

    x0, y0, z0 = (float(v) for v in cfg.initial_position)
    state = VehicleState(x0, y0, z0, 0.0, 0.0, 0.0, 0.0, 0.0, float(cfg.initial_heading), 0.0, 0.0, 0.0)
    cs = control.initial_controller_state(cfg.controller, p)
    out = np.empty((n_steps, len(COLUMNS)))
    rows, code, record = _simulate(
        out, n_steps, dt, REF_KIND[cfg.kind], _reference_row(cfg), state, cs,
        cfg.controller.constants, cfg.limits, p.constants,
        float(K_d), tuple(float(v) for v in wind.steady), gusts, gust_every, tnoise, rnoise, noise_every,
        math.exp(-cfg.filter.omega_translation * dt), math.exp(-cfg.filter.omega_rotation * dt),
        cfg.ship.track, cfg.landing.constants, float(cfg.sanity_bound),
    )  # fmt: skip
    trace = Trace(out[:rows])
    if code == DIVERGED_STATE:
        raise SimulationDiverged(rows - 1, f"state left the +-{cfg.sanity_bound:g} bound or became non-finite", trace)
    if code == DIVERGED_TILT:
        raise SimulationDiverged(rows - 1, "pitch or roll reached +-pi/2", trace)

    touchdown = TouchdownRecord(*record) if code == TOUCHED else None
    metrics = compute_metrics(
        trace,
        cfg.tail_fraction,
        kind=cfg.kind,
        seed=cfg.seed,
        outcome=OUTCOME_NAMES[code],
        duration=n_steps * dt,
        touchdown=touchdown,
    )
    return RunResult(trace, metrics, touchdown, phase_events(trace))


# ---------------------------------------------------------------------------
# batch harnesses


@dataclass(frozen=True)
class SweepRow:
    omega_translation: float
    omega_rotation: float
    mean_error: float
    time_to_land: float
    landed: bool
    outcome: str


def _sweep_cell(args: tuple[ScenarioConfig, float, float]) -> SweepRow:
    base, wt, wr = args
    cfg = replace(base, filter=FilterParams(wt, wr))
    try:
        m = run_scenario(cfg).metrics
    except SimulationDiverged:
        return SweepRow(wt, wr, math.inf, cfg.duration, False, "diverged")
    return SweepRow(wt, wr, m.mean_error, m.time_to_land, m.landed, m.outcome)


def _map(fn, items: list, workers: int) -> list:
    if workers > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(i) for i in items]


def sweep_filter_cutoff(
    base: ScenarioConfig,
    translation_grid: Sequence[float],
    rotation_grid: Sequence[float],
    workers: int = 1,
) -> list[SweepRow]:
    """Run ``base`` once per (translation, rotation) cut-off pair, row-major order."""
    cells = [(base, float(wt), float(wr)) for wt in translation_grid for wr in rotation_grid]
    if any(wt <= 0 or wr <= 0 for _, wt, wr in cells):
        raise ValueError("cut-off frequencies must be > 0")
    return _map(_sweep_cell, cells, workers)


SUITE_KINDS = ("lissajous", "spiral", "hover")


def preset(kind: str, wind: bool, base: ScenarioConfig | None = None, seed: int | None = None) -> ScenarioConfig:
    """Scenario presets for tracking and hover runs; the vehicle starts on its reference.

    Tracking error is averaged over the final 75% of the run.
    """
    base = base or ScenarioConfig()
    durations = {"hover": 60.0, "lissajous": 2 * math.pi / base.lissajous.freq_x, "spiral": 2 * 2 * math.pi / base.spiral.angular_rate}
    cfg = replace(
        base,
        kind=kind,
        duration=durations.get(kind, base.duration),
        wind_enabled=wind,
        tail_fraction=0.75,
        seed=base.seed if seed is None else seed,
    )
    if cfg.kind != "ship_landing":
        r = reference_at(0.0, cfg)
        cfg = replace(cfg, initial_position=tuple(r.position), initial_heading=r.heading)
    return cfg


@dataclass(frozen=True)
class SuiteRow:
    kind: str
    wind_error: float
    no_wind_error: float


def _suite_cell(cfg: ScenarioConfig) -> float:
    try:
        return run_scenario(cfg).metrics.mean_error
    except SimulationDiverged:
        return math.inf


def run_suite(base: ScenarioConfig | None = None, kinds: Iterable[str] = SUITE_KINDS, workers: int = 1) -> list[SuiteRow]:
    """Tail-window mean error for each trajectory kind, with and without wind."""
    kinds = list(kinds)
    cfgs = [preset(k, w, base) for k in kinds for w in (True, False)]
    errs = _map(_suite_cell, cfgs, workers)
    return [SuiteRow(k, errs[2 * i], errs[2 * i + 1]) for i, k in enumerate(kinds)]


def write_table(path: str | Path, rows: Sequence, header: Sequence[str] | None = None) -> None:
    """Write dataclass rows as CSV."""
    if header is None:
        header = [f.name for f in fields(rows[0])] if rows else []
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([getattr(r, h) for h in header])
