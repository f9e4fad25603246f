"""INI-style parameter files.

Global file (``HYBRID_TRACKER_CONFIG``)::

    [vehicle]
    wheelbase = 2.7
    [pure_pursuit_vision]
    kp = 5.25
    [stanley]
    k = 1.0
    [sim]
    gps_sigma = 0.02
    [scenario.tunnel]
    speed_kmh = 30

A scenario file passed to ``run --scenario`` has one ``[scenario]`` section
with ``base = <name>`` or an explicit ``segments`` list plus the same keys
as a ``[scenario.<name>]`` override section.

Window lists use ``start-end:value`` items separated by commas, e.g.
``lane_model = 50-60:none, 95-105:left-only`` and
``gps_timeline = 0-5:2:0.8, 5-20:0:6.0`` (rtk state, hdop).
"""

from __future__ import annotations

import configparser
import os
from dataclasses import fields, replace
from pathlib import Path

from hybrid_tracker.plant import VehicleParams
from hybrid_tracker.scenarios import SCENARIOS, Scenario, ScenarioError, build_scenario
from hybrid_tracker.selector import RtkState
from hybrid_tracker.sim import SimConfig
from hybrid_tracker.trackers import GPS_PID, VISION_PID, PidGains, PurePursuitParams, StanleyParams

ENV_VAR = "HYBRID_TRACKER_CONFIG"


class ConfigError(ValueError):
    pass


def _coerce(section, cls, base):
    kwargs = {}
    names = {f.name: f.type for f in fields(cls)}
    for key, raw in section.items():
        if key not in names:
            raise ConfigError(f"[{section.name}] unknown key {key!r}")
        current = getattr(base, key)
        if isinstance(current, bool):
            kwargs[key] = section.getboolean(key)
        elif isinstance(current, int) and not isinstance(current, bool):
            kwargs[key] = int(raw)
        elif isinstance(current, float):
            kwargs[key] = float(raw)
        else:
            kwargs[key] = raw.strip()
    return replace(base, **kwargs)


def _pure_pursuit(section, default_pid: PidGains) -> PurePursuitParams:
    base = PurePursuitParams(pid=default_pid)
    pid = {k: float(section.pop(k)) for k in ("kp", "ki", "kd") if k in section}
    params = _coerce(section, PurePursuitParams, base)
    if pid:
        params = replace(params, pid=replace(default_pid, **pid))
    return params


class _Section(dict):
    """Plain dict view of a configparser section that remembers its name."""

    def __init__(self, name, items, parser_section):
        super().__init__(items)
        self.name = name
        self._src = parser_section

    def getboolean(self, key):
        return self._src.getboolean(key)


def _section(parser, name):
    sec = parser[name]
    return _Section(name, {k: v for k, v in sec.items()}, sec)


def _read(path) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(default_section="__defaults__")
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parser


def load_sim_config(path=None, base: SimConfig | None = None) -> tuple[SimConfig, dict]:
    """Apply a global parameter file; returns the config and per-scenario overrides."""
    cfg = base or SimConfig()
    path = path if path is not None else os.environ.get(ENV_VAR)
    if not path:
        return cfg, {}
    parser = _read(path)
    overrides = {}
    try:
        for name in parser.sections():
            sec = _section(parser, name)
            if name == "vehicle":
                cfg = replace(cfg, vehicle=_coerce(sec, VehicleParams, cfg.vehicle))
            elif name == "pure_pursuit_vision":
                cfg = replace(cfg, pp_vision=_pure_pursuit(sec, VISION_PID))
            elif name == "pure_pursuit_gps":
                cfg = replace(cfg, pp_gps=_pure_pursuit(sec, GPS_PID))
            elif name == "stanley":
                cfg = replace(cfg, stanley=_coerce(sec, StanleyParams, StanleyParams()))
            elif name == "sim":
                sim_keys = {f.name for f in fields(SimConfig)} - {
                    "vehicle", "pp_vision", "pp_gps", "stanley", "camera"}
                bad = set(sec) - sim_keys
                if bad:
                    raise ConfigError(f"[sim] unknown keys {sorted(bad)}")
                cfg = _coerce(sec, SimConfig, cfg)
            elif name.startswith("scenario."):
                overrides[name.split(".", 1)[1]] = dict(sec)
            else:
                raise ConfigError(f"unknown section [{name}]")
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid value in {path}: {exc}") from exc
    return cfg, overrides


def _windows(text: str, n_fields: int):
    out = []
    for item in filter(None, (p.strip() for p in text.split(","))):
        rng, *vals = item.split(":")
        if len(vals) != n_fields:
            raise ConfigError(f"bad window entry {item!r}")
        a, b = (float(v) for v in rng.split("-"))
        out.append((a, b, *vals))
    return out


def _segments(text: str):
    segs = []
    for item in filter(None, (p.strip() for p in text.split(","))):
        kind, *vals = item.split(":")
        if kind == "line" and len(vals) == 1:
            segs.append(("line", float(vals[0])))
        elif kind == "arc" and len(vals) == 2:
            segs.append(("arc", float(vals[0]), float(vals[1])))
        else:
            raise ConfigError(f"bad segment {item!r}")
    return segs


def apply_scenario_overrides(scn: Scenario, values: dict) -> Scenario:
    values = dict(values)
    speed = values.pop("speed_kmh", None)
    if "segments" in values:
        scn = Scenario(scn.name, _segments(values.pop("segments")), speed=scn.speed,
                       road_width=scn.road_width, hd_map_windows=scn.hd_map_windows,
                       lane_model=scn.lane_model)
    if speed is not None:
        scale = scn.speed / (float(speed) / 3.6)
        scn.speed = float(speed) / 3.6
        scn.duration = round(scn.duration * scale, 2)
        scn.gps_timeline = [(a * scale, b * scale, r, h) for a, b, r, h in scn.gps_timeline]
    for key, raw in values.items():
        if key in ("road_width", "duration", "start_offset"):
            setattr(scn, key, float(raw))
        elif key == "outer_lanes":
            scn.outer_lanes = raw.strip().lower() in ("1", "true", "yes", "on")
        elif key == "hd_map_windows":
            scn.hd_map_windows = [(a, b, int(f)) for a, b, f in _windows(raw, 1)]
        elif key == "lane_model":
            scn.lane_model = [(a, b, v.strip()) for a, b, v in _windows(raw, 1)]
        elif key == "gps_timeline":
            scn.gps_timeline = [(a, b, RtkState(int(r)), float(h)) for a, b, r, h in _windows(raw, 2)]
        elif key not in ("base", "name"):
            raise ConfigError(f"unknown scenario key {key!r}")
    return scn


def resolve_scenario(spec: str, overrides: dict | None = None) -> Scenario:
    """Scenario by name, or from a ``[scenario]`` file when ``spec`` is a path."""
    overrides = overrides or {}
    if spec in SCENARIOS or spec == "straight_highspeed":
        scn = build_scenario(spec)
        return apply_scenario_overrides(scn, overrides.get(spec, {}))
    path = Path(spec)
    if not path.is_file():
        raise ScenarioError(f"unknown scenario {spec!r}; valid names: {', '.join(SCENARIOS)}")
    parser = _read(path)
    if "scenario" not in parser:
        raise ConfigError(f"{path} has no [scenario] section")
    values = dict(parser["scenario"].items())
    base = values.get("base", "straight")
    scn = build_scenario(base)
    scn.name = values.get("name", path.stem)
    return apply_scenario_overrides(scn, values)
