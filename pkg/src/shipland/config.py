"""TOML scenario files: parsing with typo protection, validation and dumping.

Layout::

    [scenario]            kind, duration, dt, seed, tail_fraction, ...
    [vehicle]             physical constants
    [wind]                steady range, gust hold time, optional seed
    [translation_noise]   variance, sample_time, optional seed
    [rotation_noise]
    [filter]              omega_translation, omega_rotation
    [controller]          gains as [kp, ki, kd] arrays, tilt_max, flags
    [ship]                track and heave; [[ship.schedule]] legs
    [landing]
    [lissajous] [spiral] [hover]

Every omitted key keeps its default, so an empty file is the default landing
scenario.
"""

from __future__ import annotations

import dataclasses
import math
import re
from pathlib import Path
from typing import Any

import tomli
import tomli_w

from shipland.control import ControllerConfig, PidGains
from shipland.environment import ShipLeg, ShipParams, WindParams
from shipland.guidance import HoverParams, LandingParams, LissajousParams, SpiralParams
from shipland.sensing import NoiseParams
from shipland.simkit import FilterParams, ScenarioConfig
from shipland.vehicle import VehicleParams

# TOML section -> type of the ScenarioConfig field of the same name
SECTIONS: dict[str, type] = {
    "vehicle": VehicleParams,
    "wind": WindParams,
    "translation_noise": NoiseParams,
    "rotation_noise": NoiseParams,
    "filter": FilterParams,
    "controller": ControllerConfig,
    "ship": ShipParams,
    "landing": LandingParams,
    "lissajous": LissajousParams,
    "spiral": SpiralParams,
    "hover": HoverParams,
}
SCENARIO_KEYS = tuple(f.name for f in dataclasses.fields(ScenarioConfig) if f.name not in SECTIONS)


class ConfigError(ValueError):
    """Unparseable or invalid scenario file; ``problems`` lists every issue found."""

    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("invalid scenario configuration:\n  " + "\n  ".join(self.problems))


def _line_of(text: str, section: str | None, key: str) -> int | None:
    """Best-effort 1-based line number of ``key`` (inside ``section`` if given)."""
    in_section = section is None
    header = re.compile(r"^\s*\[\[?\s*([^\]]+?)\s*\]\]?")
    assign = re.compile(rf"^\s*{re.escape(key)}\s*=")
    for n, line in enumerate(text.splitlines(), 1):
        m = header.match(line)
        if m:
            if section is None:
                if m.group(1) == key:
                    return n
                continue
            in_section = m.group(1) == section or m.group(1).startswith(section + ".")
            continue
        if in_section and assign.match(line):
            return n
    return None


def _where(text: str, section: str | None, key: str) -> str:
    line = _line_of(text, section, key)
    path = f"{section}.{key}" if section else key
    return f"{path} (line {line})" if line else path


def _is_number(v: Any) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _coerce(value: Any, default: Any) -> Any:
    """Check ``value`` against the type of ``default`` and convert TOML arrays to tuples."""
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise TypeError(f"must be true or false, got {value!r}")
        return value
    if isinstance(default, tuple):
        if not isinstance(value, list) or len(value) != len(default) or not all(map(_is_number, value)):
            raise TypeError(f"must be an array of {len(default)} numbers, got {value!r}")
        items = tuple(float(v) for v in value)
        return PidGains(*items) if isinstance(default, PidGains) else items
    if isinstance(default, str):
        if not isinstance(value, str):
            raise TypeError(f"must be a string, got {value!r}")
        return value
    if isinstance(default, int) or default is None:
        if isinstance(value, int) and not isinstance(value, bool):
            return value
        raise TypeError(f"must be an integer, got {value!r}")
    if not _is_number(value):
        raise TypeError(f"must be a number, got {value!r}")
    return float(value)


DEFAULT_SCENARIO = ScenarioConfig()


def _defaults(inst: Any) -> dict[str, Any]:
    return {f.name: getattr(inst, f.name) for f in dataclasses.fields(inst)}


def _build(section: str, table: dict, text: str, problems: list[str], extra: dict | None = None):
    base = getattr(DEFAULT_SCENARIO, section)
    defaults = _defaults(base)
    kwargs: dict[str, Any] = dict(extra or {})
    for key, value in table.items():
        if key in kwargs:
            continue
        if key not in defaults:
            problems.append(f"unknown key {_where(text, section, key)}; expected one of {sorted(defaults)}")
            continue
        try:
            kwargs[key] = _coerce(value, defaults[key])
        except TypeError as exc:
            problems.append(f"{_where(text, section, key)}: {exc}")
    try:
        return dataclasses.replace(base, **kwargs)
    except ValueError as exc:
        problems.append(str(exc))
        return None


def _ship(table: dict, text: str, problems: list[str]) -> ShipParams | None:
    legs = []
    raw = table.get("schedule", [])
    if not isinstance(raw, list) or not all(isinstance(r, dict) for r in raw):
        problems.append("ship.schedule must be an array of tables ([[ship.schedule]])")
        raw = []
    leg_defaults = {"t_start": 0.0, "speed": 0.0, "turn_rate": 0.0, "heading": None}
    for i, leg in enumerate(raw):
        kwargs: dict[str, Any] = {}
        for key, value in leg.items():
            path = f"ship.schedule[{i}].{key}"
            if key not in leg_defaults:
                problems.append(f"unknown key {path}; expected one of {sorted(leg_defaults)}")
            elif not _is_number(value):
                problems.append(f"{path}: must be a number, got {value!r}")
            else:
                kwargs[key] = float(value)
        missing = {"t_start", "speed", "turn_rate"} - kwargs.keys()
        if missing:
            problems.append(f"ship.schedule[{i}] is missing {sorted(missing)}")
            continue
        legs.append(ShipLeg(**kwargs))
    return _build("ship", table, text, problems, {"schedule": tuple(legs)})


def parse_config_text(text: str, overrides: dict[str, Any] | None = None) -> ScenarioConfig:
    """Parse TOML text into a validated ``ScenarioConfig``.

    ``overrides`` replaces ``[scenario]`` keys (the CLI's ``--seed`` and
    ``--tail``). Raises ``ConfigError`` listing every problem found.
    """
    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError([f"TOML syntax error: {exc}"]) from None

    problems: list[str] = []
    for name in doc:
        if name != "scenario" and name not in SECTIONS:
            problems.append(f"unknown section {_where(text, None, name)}; expected one of {['scenario', *SECTIONS]}")

    parts: dict[str, Any] = {}
    for name, cls in SECTIONS.items():
        table = doc.get(name, {})
        if not isinstance(table, dict):
            problems.append(f"{name} must be a table ([{name}])")
            continue
        built = _ship(table, text, problems) if cls is ShipParams else _build(name, table, text, problems)
        if built is not None:
            parts[name] = built

    scen = doc.get("scenario", {})
    if not isinstance(scen, dict):
        problems.append("scenario must be a table ([scenario])")
        scen = {}
    scen = {**scen, **(overrides or {})}
    defaults = _defaults(DEFAULT_SCENARIO)
    for key, value in scen.items():
        if key not in SCENARIO_KEYS:
            problems.append(f"unknown key {_where(text, 'scenario', key)}; expected one of {sorted(SCENARIO_KEYS)}")
            continue
        try:
            parts[key] = _coerce(value, defaults[key])
        except TypeError as exc:
            problems.append(f"{_where(text, 'scenario', key)}: {exc}")

    if problems:
        raise ConfigError(problems)
    try:
        return dataclasses.replace(DEFAULT_SCENARIO, **parts)
    except ValueError as exc:
        raise ConfigError([str(exc)]) from None


def parse_config(path: str | Path, overrides: dict[str, Any] | None = None) -> ScenarioConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError([f"cannot read {path}: {exc.strerror}"]) from None
    return parse_config_text(text, overrides)


def _plain(value: Any) -> Any:
    if isinstance(value, tuple):
        return [_plain(v) for v in value]
    if isinstance(value, float) and not math.isfinite(value):
        raise ValueError("non-finite values cannot be written to TOML")
    return value


def _table(obj: Any) -> dict[str, Any]:
    # TOML has no null, so None-valued keys (optional seeds) are left out.
    out = {}
    for f in dataclasses.fields(obj):
        value = getattr(obj, f.name)
        if value is None:
            continue
        if f.name == "schedule":
            out[f.name] = [{k: v for k, v in dataclasses.asdict(leg).items() if v is not None} for leg in value]
        else:
            out[f.name] = _plain(value)
    return out


def config_to_dict(cfg: ScenarioConfig) -> dict[str, Any]:
    doc: dict[str, Any] = {"scenario": {k: _plain(getattr(cfg, k)) for k in SCENARIO_KEYS}}
    for name in SECTIONS:
        doc[name] = _table(getattr(cfg, name))
    if not doc["ship"]["schedule"]:
        del doc["ship"]["schedule"]
    return doc


def dump_config(cfg: ScenarioConfig) -> str:
    """TOML text that ``parse_config_text`` turns back into an equal config."""
    header = "# shipland scenario. Angles: ship headings and turn rates in degrees, all others in radians.\n\n"
    return header + tomli_w.dumps(config_to_dict(cfg))
