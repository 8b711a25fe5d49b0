"""Strict JSON scenario files: converter, control loop, events, analysis knobs.

A scenario file fully determines a study, so every command run on the same
file is reproducible.  Unknown keys are rejected everywhere — a misspelled
knob should fail loudly instead of silently falling back to a default.

Schema (all values SI units):

    {
      "converter": {
        "switching_frequency": 50000.0,
        "ports": [
          {"index": 1, "dc_voltage": 400.0, "turns_ratio": 1.0,
           "leakage_inductance": 15e-6, "dc_capacitance": 500e-6,
           "load": {"kind": "voltage_source", "value": 400.0}},
          ...
        ]
      },
      "control": {
        "mode": "zvs" | "sps",
        "update_period": null,            # seconds; null = one switching period
        "controllers": {"2": {"kp": 0.04, "ki": 200.0, "reference": 500.0}, ...}
      },
      "events": [{"time": 0.02, "port": 4, "set": "load", "value": 2000.0}, ...],
      "analysis": {"eps_current": 1e-6, "settle_band": 0.02,
                   "duration": 0.06, "points_per_period": 2000},
      "sweep": {"port": 4, "power_min": 200.0, "power_max": 2000.0, "steps": 10}
    }

Load values follow the load kind (volts / ohms / watts); event values follow
what they set (a load value or a reference voltage).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .core import ConfigError, ConverterConfig, LoadModel, PortSpec, validate_config
from .control import MODE_ONLINE_ZVS, MODE_SPS, PiController, ScenarioEvent


class ScenarioError(ValueError):
    """A scenario file is malformed or violates the schema."""


@dataclass(frozen=True)
class AnalysisSettings:
    eps_current: float = 0.0
    settle_band: float = 0.02
    duration: float = 0.05
    points_per_period: int = 2000


@dataclass(frozen=True)
class SweepSettings:
    port: int
    power_min: float
    power_max: float
    steps: int


@dataclass(frozen=True)
class Scenario:
    """Validated contents of one scenario file."""

    config: ConverterConfig
    mode: str
    controllers: dict
    events: tuple
    analysis: AnalysisSettings
    sweep: SweepSettings | None
    update_period: float | None = None


def _require(mapping, key, where):
    if key not in mapping:
        raise ScenarioError(f"{where}: missing required key {key!r}")
    return mapping[key]


def _check_keys(mapping, allowed, where):
    if not isinstance(mapping, dict):
        raise ScenarioError(f"{where}: expected an object, got {type(mapping).__name__}")
    unknown = set(mapping) - set(allowed)
    if unknown:
        raise ScenarioError(f"{where}: unknown key(s) {sorted(unknown)}; allowed: {sorted(allowed)}")


def _number(value, where):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"{where}: expected a number, got {value!r}")
    return float(value)


def _parse_port(obj, pos):
    where = f"converter.ports[{pos}]"
    _check_keys(obj, {"index", "dc_voltage", "turns_ratio", "leakage_inductance",
                      "dc_capacitance", "load"}, where)
    load_obj = obj.get("load")
    load = None
    if load_obj is not None:
        _check_keys(load_obj, {"kind", "value"}, f"{where}.load")
        try:
            load = LoadModel(kind=_require(load_obj, "kind", f"{where}.load"),
                             value=_number(_require(load_obj, "value", f"{where}.load"),
                                           f"{where}.load.value"))
        except ConfigError as exc:
            raise ScenarioError(f"{where}.load: {exc}") from exc
    return PortSpec(
        index=int(_require(obj, "index", where)),
        dc_voltage=_number(_require(obj, "dc_voltage", where), f"{where}.dc_voltage"),
        turns_ratio=_number(_require(obj, "turns_ratio", where), f"{where}.turns_ratio"),
        leakage_inductance=_number(_require(obj, "leakage_inductance", where),
                                   f"{where}.leakage_inductance"),
        dc_capacitance=_number(obj.get("dc_capacitance", 0.0), f"{where}.dc_capacitance"),
        load=load,
    )


def parse_scenario(source) -> Scenario:
    """Parse and validate a scenario from a path, JSON string, or dict."""
    if isinstance(source, dict):
        data = source
    else:
        text = str(source)
        if isinstance(source, Path) or not text.lstrip().startswith("{"):
            path = Path(source)
            if not path.exists():
                raise ScenarioError(f"scenario file not found: {path}")
            text = path.read_text()
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"invalid JSON (line {exc.lineno}, column {exc.colno}): {exc.msg}") from exc

    _check_keys(data, {"converter", "control", "events", "analysis", "sweep"}, "scenario")

    conv = _require(data, "converter", "scenario")
    _check_keys(conv, {"switching_frequency", "ports"}, "converter")
    ports_raw = _require(conv, "ports", "converter")
    if not isinstance(ports_raw, list):
        raise ScenarioError("converter.ports: expected a list")
    ports = tuple(_parse_port(p, i) for i, p in enumerate(ports_raw))
    config = ConverterConfig(
        ports=ports,
        switching_frequency=_number(_require(conv, "switching_frequency", "converter"),
                                    "converter.switching_frequency"),
    )
    try:
        validate_config(config)
    except ConfigError as exc:
        raise ScenarioError(f"converter: {exc}") from exc
    if ports[0].load is not None and ports[0].load.kind != "voltage_source":
        raise ScenarioError("converter.ports[0]: port 1 is the reference and must be a voltage source")
    for p in ports[1:]:
        if p.load is not None and p.load.kind == "voltage_source":
            raise ScenarioError(f"converter.ports[{p.index - 1}]: only port 1 may be a voltage source")

    ctl = _require(data, "control", "scenario")
    _check_keys(ctl, {"mode", "update_period", "controllers"}, "control")
    mode = _require(ctl, "mode", "control")
    if mode not in (MODE_SPS, MODE_ONLINE_ZVS):
        raise ScenarioError(f"control.mode: expected 'sps' or 'zvs', got {mode!r}")
    update_period = ctl.get("update_period")
    if update_period is not None:
        update_period = _number(update_period, "control.update_period")
    controllers = {}
    for key, spec in _require(ctl, "controllers", "control").items():
        where = f"control.controllers[{key!r}]"
        try:
            port = int(key)
        except ValueError:
            raise ScenarioError(f"{where}: controller keys are port indices") from None
        if not 2 <= port <= config.n_ports:
            raise ScenarioError(f"{where}: port 1 is never controlled; expected 2..{config.n_ports}")
        _check_keys(spec, {"kp", "ki", "reference"}, where)
        controllers[port] = PiController(
            kp=_number(_require(spec, "kp", where), f"{where}.kp"),
            ki=_number(_require(spec, "ki", where), f"{where}.ki"),
            reference=_number(_require(spec, "reference", where), f"{where}.reference"),
        )

    events = []
    for i, obj in enumerate(data.get("events", [])):
        where = f"events[{i}]"
        _check_keys(obj, {"time", "port", "set", "value"}, where)
        try:
            events.append(ScenarioEvent(
                time=_number(_require(obj, "time", where), f"{where}.time"),
                port=int(_require(obj, "port", where)),
                set=_require(obj, "set", where),
                value=_number(_require(obj, "value", where), f"{where}.value"),
            ))
        except ValueError as exc:
            raise ScenarioError(f"{where}: {exc}") from exc
    if any(b.time < a.time for a, b in zip(events, events[1:])):
        raise ScenarioError("events: times must be non-decreasing")

    ana = data.get("analysis", {})
    _check_keys(ana, {"eps_current", "settle_band", "duration", "points_per_period"}, "analysis")
    analysis = AnalysisSettings(
        eps_current=_number(ana.get("eps_current", 0.0), "analysis.eps_current"),
        settle_band=_number(ana.get("settle_band", 0.02), "analysis.settle_band"),
        duration=_number(ana.get("duration", 0.05), "analysis.duration"),
        points_per_period=int(ana.get("points_per_period", 2000)),
    )
    if analysis.eps_current < 0.0:
        raise ScenarioError("analysis.eps_current: must be non-negative")

    sweep = None
    if "sweep" in data:
        sw = data["sweep"]
        _check_keys(sw, {"port", "power_min", "power_max", "steps"}, "sweep")
        sweep = SweepSettings(
            port=int(_require(sw, "port", "sweep")),
            power_min=_number(_require(sw, "power_min", "sweep"), "sweep.power_min"),
            power_max=_number(_require(sw, "power_max", "sweep"), "sweep.power_max"),
            steps=int(_require(sw, "steps", "sweep")),
        )
        if sweep.power_min <= 0.0 or sweep.power_max < sweep.power_min:
            raise ScenarioError("sweep: power range must be positive and ordered")
        if sweep.steps < 1:
            raise ScenarioError("sweep.steps: must be >= 1")
        if not 2 <= sweep.port <= config.n_ports:
            raise ScenarioError(f"sweep.port: expected 2..{config.n_ports}")

    return Scenario(config=config, mode=mode, controllers=controllers, events=tuple(events),
                    analysis=analysis, sweep=sweep, update_period=update_period)
