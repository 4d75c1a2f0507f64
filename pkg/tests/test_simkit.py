import csv
import math
from dataclasses import replace

import numpy as np
import pytest

from shipland.control import ControllerConfig
from shipland.environment import WindParams
from shipland.guidance import HoverParams, LandingParams
from shipland.sensing import NoiseParams
from shipland.simkit import (
    COLUMNS,
    ScenarioConfig,
    SimulationDiverged,
    Trace,
    compute_metrics,
    phase_events,
    preset,
    reference_at,
    run_scenario,
    run_suite,
    sweep_filter_cutoff,
)

QUIET = dict(wind_enabled=False, noise_enabled=False)


def synthetic_trace(errors):
    data = np.zeros((len(errors), len(COLUMNS)))
    data[:, COLUMNS.index("t_s")] = np.arange(len(errors)) * 0.01
    data[:, COLUMNS.index("x_m")] = errors
    return Trace(data)


class TestConfig:
    @pytest.mark.parametrize(
        "bad",
        [dict(kind="orbit"), dict(dt=0), dict(duration=0.001), dict(tail_fraction=0), dict(initial_position=(0, 0))],
    )
    def test_invalid(self, bad):
        with pytest.raises(ValueError):
            ScenarioConfig(**bad)

    def test_mismatched_noise_hold_rejected(self):
        cfg = ScenarioConfig(kind="hover", duration=0.1, rotation_noise=NoiseParams(0.0001, 0.02))
        with pytest.raises(ValueError, match="sample_time"):
            run_scenario(cfg)


class TestMetrics:
    def test_constant_offset(self):
        m = compute_metrics(synthetic_trace(np.full(100, 0.1)), 0.5)
        assert m.mean_error == pytest.approx(0.1) and m.max_error == pytest.approx(0.1)

    def test_linear_error_tail(self):
        n = 100_001
        m = compute_metrics(synthetic_trace(np.linspace(0, 1, n)), 0.75)
        assert m.mean_error == pytest.approx(0.625, abs=1e-4)

    def test_perfect(self):
        assert compute_metrics(synthetic_trace(np.zeros(10)), 0.1).mean_error == 0

    def test_empty(self):
        with pytest.raises(ValueError):
            compute_metrics(synthetic_trace(np.zeros(0)), 0.1)

    def test_no_touchdown_sentinel(self):
        m = compute_metrics(synthetic_trace(np.zeros(10)), 0.1, duration=600.0)
        assert m.time_to_land == 600.0 and not m.landed and math.isnan(m.touchdown_relative_velocity)

    def test_text_export(self):
        text = compute_metrics(synthetic_trace(np.zeros(3)), 0.1, kind="hover", seed=4).to_text()
        assert 'kind = "hover"' in text and "seed = 4" in text and "landed = false" in text


class TestRun:
    def test_single_step(self):
        for kind in ("ship_landing", "hover"):
            r = run_scenario(ScenarioConfig(kind=kind, duration=0.002, dt=0.002))
            assert len(r.trace) == 1

    def test_trace_shape(self):
        r = run_scenario(ScenarioConfig(kind="hover", duration=1.0))
        t = r.trace["t_s"]
        assert r.trace.data.shape == (500, len(COLUMNS)) and np.all(np.diff(t) > 0)
        rec = r.trace.record(10)
        assert rec.t_s == pytest.approx(0.02) and rec.phase == 0

    def test_pretrimmed_quiet_hover(self):
        cfg = replace(preset("hover", False), noise_enabled=False, controller=ControllerConfig(pretrim_thrust=True))
        m = run_scenario(cfg).metrics
        assert m.mean_error < 0.01

    def test_energy_at_trim(self):
        cfg = ScenarioConfig(kind="hover", duration=30, controller=ControllerConfig(pretrim_thrust=True), **QUIET)
        tr = run_scenario(cfg).trace
        v2 = tr["vx_mps"] ** 2 + tr["vy_mps"] ** 2 + tr["vz_mps"] ** 2
        tail = v2[int(0.9 * len(v2)) :]
        assert 0.5 * cfg.vehicle.m * tail.max() < 1.0

    def test_altitude_step_settles(self):
        cfg = ScenarioConfig(kind="hover", duration=40, hover=HoverParams((0, 0, 5)), **QUIET)
        tr = run_scenario(cfg).trace
        late = tr["t_s"] >= 30
        assert np.abs(tr["z_m"][late] - 5).max() <= 0.05

    @pytest.mark.parametrize("target", [(10.0, 0.0), (0.0, 10.0), (-10.0, 0.0), (0.0, -10.0)])
    def test_moves_toward_horizontal_target(self, target):
        cfg = ScenarioConfig(kind="hover", duration=20, hover=HoverParams((*target, 0.0)), **QUIET)
        tr = run_scenario(cfg).trace
        end = np.array([tr["x_m"][-1], tr["y_m"][-1]])
        assert np.linalg.norm(end - target) < 0.5

    def test_target_east_with_yaw(self):
        cfg = ScenarioConfig(kind="hover", duration=30, hover=HoverParams((0, 10, 0), heading=math.pi / 2), **QUIET)
        tr = run_scenario(cfg).trace
        assert tr["y_m"][-1] == pytest.approx(10, abs=0.3) and tr["psi_rad"][-1] == pytest.approx(math.pi / 2, abs=0.05)

    def test_divergence_reports_step(self):
        with pytest.raises(SimulationDiverged) as info:
            run_scenario(ScenarioConfig(sanity_bound=5.0, duration=20))
        exc = info.value
        assert exc.step == len(exc.trace) - 1 and exc.step > 0

    def test_deterministic(self):
        cfg = ScenarioConfig(duration=10.0)
        a, b = run_scenario(cfg).trace.data, run_scenario(cfg).trace.data
        assert np.array_equal(a, b, equal_nan=True)
        c = run_scenario(replace(cfg, seed=1)).trace.data
        assert not np.array_equal(a, c, equal_nan=True)

    def test_component_seed_overrides(self):
        base = ScenarioConfig(kind="hover", duration=2.0, wind=WindParams(seed=42))
        w0 = run_scenario(base).trace["wind_x_mps"]
        w1 = run_scenario(replace(base, seed=9)).trace["wind_x_mps"]
        assert np.array_equal(w0, w1)

    def test_wind_and_noise_off(self):
        tr = run_scenario(ScenarioConfig(kind="hover", duration=1.0, **QUIET)).trace
        assert not tr["wind_x_mps"].any() and np.array_equal(tr["meas_x_m"], tr["x_m"])

    def test_noise_held_for_sample_time(self):
        tr = run_scenario(ScenarioConfig(kind="hover", duration=0.1, wind_enabled=False)).trace
        noise = tr["meas_theta_rad"] - tr["theta_rad"]
        assert noise[0] != 0

    def test_gust_stays_bounded(self):
        tr = run_scenario(ScenarioConfig(kind="hover", duration=5.0)).trace
        for axis in "xyz":
            w = tr[f"wind_{axis}_mps"]
            steady = np.median(w)
            assert np.all(np.abs(w - w.mean()) <= 0.4 * abs(steady) + 1e-9)

    def test_landing_events(self):
        r = run_scenario(ScenarioConfig())
        names = [e[1:] for e in r.events]
        assert names == [("APPROACH", "HOLD"), ("HOLD", "DESCENDING"), ("DESCENDING", "TOUCHED_DOWN")]
        assert r.metrics.outcome == "touched_down" and r.touchdown.time == r.trace["t_s"][-1]
        assert r.metrics.time_to_land <= 600 and phase_events(r.trace) == r.events

    def test_timeout(self):
        r = run_scenario(ScenarioConfig(duration=1.0))
        assert r.metrics.outcome == "timed_out" and r.metrics.time_to_land == pytest.approx(1.0)
        r = run_scenario(ScenarioConfig(duration=3.0, landing=LandingParams(timeout=2.0)))
        assert r.metrics.outcome == "timed_out" and r.trace["phase"][-1] == 4

    def test_csv(self, tmp_path):
        r = run_scenario(ScenarioConfig(kind="hover", duration=0.02))
        path = tmp_path / "t.csv"
        r.trace.to_csv(path)
        rows = list(csv.reader(path.open()))
        assert rows[0] == list(COLUMNS) and len(rows) == 11
        back = np.array([[float(v) for v in row] for row in rows[1:]])
        assert np.array_equal(back, r.trace.data, equal_nan=True)
        assert rows[1][COLUMNS.index("phase")] == "0"


class TestHarness:
    def test_preset_starts_on_reference(self):
        for kind in ("hover", "lissajous", "spiral"):
            cfg = preset(kind, True)
            assert cfg.initial_position == reference_at(0.0, cfg).position
            assert cfg.tail_fraction == 0.75

    def test_reference_at_rejects_landing(self):
        with pytest.raises(ValueError):
            reference_at(0.0, ScenarioConfig())

    def test_one_cell_sweep_equals_run(self):
        base = ScenarioConfig(duration=60.0)
        (row,) = sweep_filter_cutoff(base, [13.0], [31.0])
        m = run_scenario(base).metrics
        assert row.mean_error == m.mean_error and row.time_to_land == m.time_to_land

    def test_sweep_order_and_sentinels(self):
        base = ScenarioConfig(duration=10.0)
        rows = sweep_filter_cutoff(base, [2.0, 13.0], [2.0, 31.0])
        assert [(r.omega_translation, r.omega_rotation) for r in rows] == [(2, 2), (2, 31), (13, 2), (13, 31)]
        failed = [r for r in rows if r.outcome != "touched_down"]
        assert all(r.time_to_land == 10.0 for r in failed)

    def test_sweep_rejects_non_positive(self):
        with pytest.raises(ValueError):
            sweep_filter_cutoff(ScenarioConfig(), [0.0], [1.0])

    def test_parallel_sweep_matches_serial(self):
        base = ScenarioConfig(duration=5.0)
        grid = [5.0, 13.0]
        assert sweep_filter_cutoff(base, grid, grid, workers=2) == sweep_filter_cutoff(base, grid, grid)

    def test_suite(self):
        a = run_suite()
        assert [r.kind for r in a] == ["lissajous", "spiral", "hover"]
        assert run_suite() == a
        for r in a:
            assert 0 < r.no_wind_error <= r.wind_error < 3
