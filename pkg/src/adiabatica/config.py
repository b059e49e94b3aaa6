"""Scenario configuration: JSON loading, validation and override handling.

Configs are strict: unknown keys are rejected and every guard of the
downstream modules is checked at load time, with the offending key path in
the error message.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .grids import Grid
from .model import (FrameCase, GaussianMode, LinearMode, ModelParams,
                    StandingWaveMode, TabulatedMode)

EXPERIMENTS = ("a0-map", "max-locus", "fidelity-map", "atrace",
               "effective-model", "snapshot")

_NEEDS_GRID = {"a0-map", "fidelity-map", "atrace", "snapshot"}
_NEEDS_RUN = {"fidelity-map", "atrace", "effective-model", "snapshot"}
_SINGLE_DETUNING = {"atrace", "effective-model", "snapshot"}


class ConfigError(ValueError):
    """A configuration file failed validation."""


def _fail(path: str, message: str):
    raise ConfigError(f"{path}: {message}")


def _check_keys(obj: dict, path: str, allowed: set[str], required: set[str]):
    if not isinstance(obj, dict):
        _fail(path, "expected an object")
    unknown = set(obj) - allowed
    if unknown:
        _fail(path, f"unknown key(s) {sorted(unknown)}")
    missing = required - set(obj)
    if missing:
        _fail(path, f"missing required key(s) {sorted(missing)}")


def _number(obj: dict, key: str, path: str, default=None):
    if key not in obj:
        if default is None:
            _fail(path, f"missing required key '{key}'")
        return float(default)
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _fail(f"{path}.{key}", "expected a number")
    return float(value)


def _positive(obj: dict, key: str, path: str, default=None):
    value = _number(obj, key, path, default)
    if value <= 0:
        _fail(f"{path}.{key}", "must be > 0")
    return value


# ---------------------------------------------------------------------------
# Blocks
# ---------------------------------------------------------------------------

def _parse_mode(obj, path):
    _check_keys(obj, path, {"kind", "amplitude", "width", "wavenumber",
                            "gradient", "positions", "samples"}, {"kind"})
    kind = obj["kind"]
    if kind == "gaussian":
        _check_keys(obj, path, {"kind", "amplitude", "width"},
                    {"kind", "amplitude", "width"})
        return GaussianMode(_number(obj, "amplitude", path),
                            _positive(obj, "width", path))
    if kind == "standing_wave":
        _check_keys(obj, path, {"kind", "amplitude", "wavenumber"},
                    {"kind", "amplitude", "wavenumber"})
        return StandingWaveMode(_number(obj, "amplitude", path),
                                _positive(obj, "wavenumber", path))
    if kind == "linear":
        _check_keys(obj, path, {"kind", "gradient"}, {"kind", "gradient"})
        return LinearMode(_number(obj, "gradient", path))
    if kind == "tabulated":
        _check_keys(obj, path, {"kind", "positions", "samples"},
                    {"kind", "positions", "samples"})
        try:
            return TabulatedMode(np.asarray(obj["positions"], dtype=float),
                                 np.asarray(obj["samples"], dtype=float))
        except (ValueError, TypeError) as exc:
            _fail(path, str(exc))
    _fail(f"{path}.kind", f"unknown mode kind {kind!r}")


def _parse_detunings(value, path):
    """A single number, a range spec, or explicit values; returns an array."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return np.asarray([float(value)]), False
    if isinstance(value, dict):
        if "values" in value:
            _check_keys(value, path, {"values"}, {"values"})
            arr = np.asarray(value["values"], dtype=float)
            if arr.ndim != 1 or arr.size == 0:
                _fail(f"{path}.values", "expected a non-empty list of numbers")
            return arr, True
        _check_keys(value, path, {"start", "stop", "count", "spacing"},
                    {"start", "stop", "count"})
        start = _number(value, "start", path)
        stop = _number(value, "stop", path)
        count = value["count"]
        if not isinstance(count, int) or count < 1:
            _fail(f"{path}.count", "expected an integer >= 1")
        spacing = value.get("spacing", "linear")
        if spacing == "linear":
            return np.linspace(start, stop, count), True
        if spacing == "log":
            if start <= 0 or stop <= 0:
                _fail(path, "log spacing needs positive start and stop")
            return np.geomspace(start, stop, count), True
        _fail(f"{path}.spacing", "expected 'linear' or 'log'")
    _fail(path, "expected a number, a range spec or {'values': [...]}")


def _parse_model(obj, path):
    _check_keys(obj, path, {"mass", "detuning", "photon_index", "frame_case",
                            "mode"}, {"detuning", "mode"})
    mass = _positive(obj, "mass", path, default=1.0)
    photon_index = obj.get("photon_index", 1)
    if isinstance(photon_index, bool) or not isinstance(photon_index, int) \
            or photon_index < 1:
        _fail(f"{path}.photon_index", "expected an integer >= 1")
    case_name = obj.get("frame_case", "case1")
    try:
        case = FrameCase(case_name)
    except ValueError:
        _fail(f"{path}.frame_case", "expected 'case1' or 'case2'")
    mode = _parse_mode(obj["mode"], f"{path}.mode")
    detunings, swept = _parse_detunings(obj["detuning"], f"{path}.detuning")
    base = ModelParams(mode=mode, detuning=float(detunings[0]),
                       photon_index=photon_index, mass=mass, frame_case=case)
    return base, detunings, swept


def _parse_grid(obj, path):
    _check_keys(obj, path, {"points", "x_min", "x_max"},
                {"points", "x_min", "x_max"})
    points = obj["points"]
    if isinstance(points, bool) or not isinstance(points, int):
        _fail(f"{path}.points", "expected an integer power of two")
    try:
        return Grid(points, _number(obj, "x_min", path), _number(obj, "x_max", path))
    except ValueError as exc:
        _fail(path, str(exc))


@dataclass
class StateSpec:
    x0: float
    p0: float
    width: float
    frame: str
    population_upper: float
    population_lower: float


def _parse_state(obj, path):
    _check_keys(obj, path, {"x0", "p0", "width", "frame", "population_upper",
                            "population_lower"}, {"p0"})
    frame = obj.get("frame", "bare")
    if frame not in ("bare", "adiabatic"):
        _fail(f"{path}.frame", "expected 'bare' or 'adiabatic'")
    w_up = _number(obj, "population_upper", path, default=1.0)
    w_dn = _number(obj, "population_lower", path, default=0.0)
    if w_up < 0 or w_dn < 0 or w_up + w_dn <= 0:
        _fail(path, "populations must be nonnegative with a positive sum")
    total = w_up + w_dn
    return StateSpec(
        x0=_number(obj, "x0", path, default=0.0),
        p0=_number(obj, "p0", path),
        width=_positive(obj, "width", path, default=1.0),
        frame=frame,
        population_upper=w_up / total,
        population_lower=w_dn / total,
    )


@dataclass
class RunSpec:
    t_final: float | None
    x_stop: float | None
    dt: float | None
    stride: int | None

    def resolve_t_final(self, state: StateSpec, mass: float) -> float:
        if self.t_final is not None:
            return self.t_final
        duration = (self.x_stop - state.x0) * mass / state.p0
        if duration <= 0:
            raise ConfigError(
                "run.x_stop: not reachable from state.x0 with the given p0")
        return duration


def _parse_run(obj, path):
    _check_keys(obj, path, {"t_final", "x_stop", "dt", "stride"}, set())
    if ("t_final" in obj) == ("x_stop" in obj):
        _fail(path, "exactly one of 't_final' and 'x_stop' is required")
    t_final = _positive(obj, "t_final", path) if "t_final" in obj else None
    x_stop = _number(obj, "x_stop", path) if "x_stop" in obj else None
    dt = _positive(obj, "dt", path) if "dt" in obj else None
    stride = obj.get("stride")
    if stride is not None and (isinstance(stride, bool)
                               or not isinstance(stride, int) or stride < 1):
        _fail(f"{path}.stride", "expected an integer >= 1")
    return RunSpec(t_final, x_stop, dt, stride)


@dataclass
class SearchSpec:
    x_lo: float | None
    x_hi: float | None
    scan_points: int

    def window(self):
        if self.x_lo is None or self.x_hi is None:
            return None
        return (self.x_lo, self.x_hi)


def _parse_search(obj, path):
    _check_keys(obj, path, {"x_lo", "x_hi", "scan_points"}, set())
    if ("x_lo" in obj) != ("x_hi" in obj):
        _fail(path, "'x_lo' and 'x_hi' must be given together")
    scan = obj.get("scan_points", 400)
    if isinstance(scan, bool) or not isinstance(scan, int) or scan < 8:
        _fail(f"{path}.scan_points", "expected an integer >= 8")
    lo = _number(obj, "x_lo", path) if "x_lo" in obj else None
    hi = _number(obj, "x_hi", path) if "x_hi" in obj else None
    if lo is not None and hi is not None and hi <= lo:
        _fail(path, "needs x_hi > x_lo")
    return SearchSpec(lo, hi, scan)


# ---------------------------------------------------------------------------
# Whole config
# ---------------------------------------------------------------------------

@dataclass
class ScenarioConfig:
    experiment: str
    base_params: ModelParams
    detunings: np.ndarray
    swept: bool
    grid: Grid | None
    state: StateSpec | None
    run: RunSpec | None
    search: SearchSpec | None
    abscissa: str
    raw: dict = field(repr=False, default_factory=dict)


def validate_config(data: dict, experiment: str | None = None) -> ScenarioConfig:
    """Validate a parsed config dict; `experiment` overrides the file's tag."""
    _check_keys(data, "config", {"experiment", "model", "grid", "state", "run",
                                 "search", "output"}, {"model"})
    tag = experiment or data.get("experiment")
    if tag is None:
        _fail("config.experiment", "no experiment tag given (file or command line)")
    if tag not in EXPERIMENTS:
        _fail("config.experiment", f"unknown experiment {tag!r}; "
              f"expected one of {list(EXPERIMENTS)}")
    if experiment and "experiment" in data and data["experiment"] != experiment:
        _fail("config.experiment",
              f"file says {data['experiment']!r} but {experiment!r} was requested")

    base, detunings, swept = _parse_model(data["model"], "config.model")
    if tag in _SINGLE_DETUNING and detunings.size != 1:
        _fail("config.model.detuning", f"experiment {tag!r} needs a single detuning")

    grid = _parse_grid(data["grid"], "config.grid") if "grid" in data else None
    if tag in _NEEDS_GRID and grid is None:
        _fail("config.grid", f"experiment {tag!r} needs a grid block")

    state = _parse_state(data["state"], "config.state") if "state" in data else None
    if tag != "a0-map" and state is None:
        _fail("config.state", f"experiment {tag!r} needs a state block")
    if tag == "a0-map" and state is None:
        _fail("config.state", "a0-map needs a state block with p0")

    run = _parse_run(data["run"], "config.run") if "run" in data else None
    if tag in _NEEDS_RUN and run is None:
        _fail("config.run", f"experiment {tag!r} needs a run block")
    if run is not None and run.x_stop is not None:
        if state is None or state.p0 == 0:
            _fail("config.run.x_stop", "requires a state block with nonzero p0")
        run.resolve_t_final(state, base.mass)

    search = (_parse_search(data["search"], "config.search")
              if "search" in data else None)
    if search is not None and tag != "max-locus":
        _fail("config.search", "only the max-locus experiment takes a search block")
    if tag == "max-locus" and search is None:
        search = SearchSpec(None, None, 400)

    # single-run traces default to the measured packet center; sweep matrices
    # need the shared kinematic axis
    abscissa = "measured" if tag == "atrace" else "kinematic"
    if "output" in data and "abscissa" in data["output"]:
        _check_keys(data["output"], "config.output", {"abscissa"}, set())
        abscissa = data["output"]["abscissa"]
        if abscissa not in ("kinematic", "measured"):
            _fail("config.output.abscissa", "expected 'kinematic' or 'measured'")
    elif "output" in data:
        _check_keys(data["output"], "config.output", {"abscissa"}, set())

    # guards that couple state and grid
    if grid is not None and state is not None and tag in ("fidelity-map", "atrace",
                                                          "snapshot"):
        p_needed = abs(state.p0) + 6.0 / state.width
        if not grid.supports_momentum(p_needed):
            _fail("config.grid", f"momentum cutoff {grid.k_max:.4g} does not cover "
                  f"p0 + 6/width = {p_needed:.4g}")
        if (state.x0 - 5.0 * state.width < grid.x_min
                or state.x0 + 5.0 * state.width > grid.x_max):
            _fail("config.state.x0", "packet sits closer than 5 widths to a "
                  "domain edge")

    canonical = json.loads(json.dumps(data, sort_keys=True))
    canonical["experiment"] = tag
    return ScenarioConfig(tag, base, detunings, swept, grid, state, run,
                          search, abscissa, canonical)


def apply_overrides(data: dict, overrides) -> dict:
    """Apply 'dotted.path=json-or-string' overrides to a config dict."""
    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, _, text = item.partition("=")
        try:
            value = json.loads(text)
        except json.JSONDecodeError:
            value = text
        target = data
        parts = key.split(".")
        for part in parts[:-1]:
            node = target.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {key!r} descends into a non-object")
            target = node
        target[parts[-1]] = value
    return data


def load_config(path, experiment: str | None = None,
                overrides=None) -> ScenarioConfig:
    """Read, override and validate a JSON scenario configuration."""
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: "
                          f"{exc.msg}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be an object")
    data = apply_overrides(data, overrides)
    return validate_config(data, experiment)
