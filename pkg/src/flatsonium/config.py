"""
Run configuration.

Handles:
- RunConfig defaults (the Fig. 2/3 circuit and noise values)
- Named presets for each figure
- TOML loading with section.key and line diagnostics, and lossless dumping
- Layering: defaults < preset < config file < command-line overrides
- FLATSONIUM_THREADS worker cap
"""

import copy
import logging
import math
import os
import re
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from collections.abc import Mapping
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Optional

import tomli_w

from .circuit import CircuitError, CircuitParams
from .noise import NoiseModel, NoiseModelError, with_mode
from .spectrum import (
    DEFAULT_FD_STEP,
    DEFAULT_GRID_N,
    DEFAULT_SLOPE_TOL,
    DEFAULT_SWEET_GRID_N,
    DEFAULT_TRANSITIONS,
)

logger = logging.getLogger(__name__)

THREADS_ENV = "FLATSONIUM_THREADS"
MODES = ("global-only", "uncorrelated", "correlated")

DEFAULT_VERIFY_DIM = 120
DEFAULT_OUTPUT = "flatsonium.csv"


class ConfigError(ValueError):
    """Invalid configuration value, key or document."""

    def __init__(self, message: str, field: Optional[str] = None, line: Optional[int] = None):
        self.field = field
        self.line = line
        where = field or "config"
        if line is not None:
            where = f"{where} (line {line})"
        super().__init__(f"{where}: {message}")


# =============================================================================
# Schema
# =============================================================================

def _finite(x: float) -> bool:
    return math.isfinite(x)


def _amplitude(x: Any) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool) and _finite(x) and x >= 0


@dataclass(frozen=True)
class _Key:
    kind: type
    check: Any = None
    requirement: str = ""


SCHEMA: dict[str, dict[str, _Key]] = {
    "circuit": {
        "ec_ghz": _Key(float, lambda x: _finite(x) and x > 0, "> 0"),
        "el_ghz": _Key(float, lambda x: _finite(x) and x > 0, "> 0"),
        "ej_sum_ghz": _Key(float, lambda x: _finite(x) and x >= 0, ">= 0"),
        "b": _Key(float, lambda x: _finite(x) and x >= 0, ">= 0"),
        "r": _Key(float, _finite, "finite"),
    },
    "noise": {
        "a_s_phi0": _Key(float, lambda x: _finite(x) and x >= 0, ">= 0"),
        "a_d_phi0": _Key(float, lambda x: _finite(x) and x >= 0, ">= 0"),
        "c_sd": _Key(float, lambda x: 0 <= x <= 1, "in [0, 1]"),
        "log_factor": _Key(float, lambda x: _finite(x) and x > 0, "> 0"),
        "alpha": _Key(float, lambda x: _finite(x) and x > 0, "> 0"),
        "f_ir_hz": _Key(float, lambda x: _finite(x) and x > 0, "> 0"),
        "a_d_overlay_phi0": _Key(
            list, lambda xs: all(_amplitude(x) for x in xs), "a list of amplitudes >= 0"
        ),
    },
    "run": {
        "grid_n": _Key(int, lambda x: x >= 1, ">= 1"),
        "dim": _Key(int, lambda x: x >= 2, ">= 2"),
        "verify_dim": _Key(int, lambda x: x >= 2, ">= 2"),
        "transitions": _Key(list),
        "output_path": _Key(str, lambda x: len(x) > 0, "nonempty"),
        "mode": _Key(str, lambda x: x in MODES, f"one of {', '.join(MODES)}"),
        "fd_step_phi0": _Key(float, lambda x: _finite(x) and x > 0, "> 0"),
        "slope_tol_ghz_per_phi0": _Key(float, lambda x: _finite(x) and x > 0, "> 0"),
        "sweet_grid_n": _Key(int, lambda x: x >= 101, ">= 101"),
        "self_consistent": _Key(bool),
    },
}

DEFAULTS: dict[str, dict[str, Any]] = {
    "circuit": {"ec_ghz": 6.0, "el_ghz": 0.5, "ej_sum_ghz": 20.0, "b": 3.0, "r": 2.0},
    "noise": {
        "a_s_phi0": 5e-6,
        "a_d_phi0": 0.0,
        "c_sd": 0.0,
        "log_factor": 4.0,
        "alpha": 1.0,
        "f_ir_hz": 1e-4,
        "a_d_overlay_phi0": [],
    },
    "run": {
        "grid_n": DEFAULT_GRID_N,
        "dim": 50,
        "verify_dim": DEFAULT_VERIFY_DIM,
        "transitions": [list(t) for t in DEFAULT_TRANSITIONS],
        "output_path": DEFAULT_OUTPUT,
        "mode": "global-only",
        "fd_step_phi0": DEFAULT_FD_STEP,
        "slope_tol_ghz_per_phi0": DEFAULT_SLOPE_TOL,
        "sweet_grid_n": DEFAULT_SWEET_GRID_N,
        "self_consistent": False,
    },
}

# Each preset overrides the defaults
PRESETS: dict[str, dict[str, dict[str, Any]]] = {
    "fig2": {
        "run": {"mode": "global-only"},
    },
    "fig3": {
        "noise": {"a_s_phi0": 5e-6, "a_d_phi0": 0.0, "c_sd": 0.0},
        "run": {"mode": "global-only", "grid_n": 501},
    },
    "fig3-r3": {
        "circuit": {"b": 4.0, "r": 3.0},
        "noise": {"a_s_phi0": 5e-6, "a_d_phi0": 0.0, "c_sd": 0.0},
        "run": {"mode": "global-only", "grid_n": 501},
    },
    "fluxonium": {
        "circuit": {"b": 0.0, "r": 0.0},
        "noise": {"a_s_phi0": 5e-6, "a_d_phi0": 0.0, "c_sd": 0.0},
        "run": {"mode": "global-only"},
    },
    "fig4a": {
        "noise": {
            "a_s_phi0": 5e-6, "a_d_phi0": 1e-6, "c_sd": 0.0, "a_d_overlay_phi0": [1e-7, 2e-6, 5e-6],
        },
        "run": {"mode": "uncorrelated", "grid_n": 501},
    },
    "fig4b": {
        "noise": {
            "a_s_phi0": 5e-6, "a_d_phi0": 1e-6, "c_sd": 1.0, "a_d_overlay_phi0": [1e-7, 2e-6, 5e-6],
        },
        "run": {"mode": "correlated", "grid_n": 501},
    },
}

PRESET_DESCRIPTIONS = {
    "fig2": "transition spectrum, E_C=6 E_L=0.5 E_JSigma=20 GHz, r=2, b=3",
    "fig3": "global flux noise A_s=5 uPhi0 on the r=2 circuit",
    "fig3-r3": "global flux noise on the r=3, b=4 circuit",
    "fluxonium": "single-junction limit b=0, r=0",
    "fig4a": "uncorrelated global and local noise, A_d=1 uPhi0, overlays 0.1, 2, 5 uPhi0",
    "fig4b": "correlated (c_sd=1) global and local noise, A_d=1 uPhi0, overlays 0.1, 2, 5 uPhi0",
}


# =============================================================================
# RunConfig
# =============================================================================

@dataclass(frozen=True)
class RunConfig:
    """Everything a command needs: circuit, noise model and run options."""

    params: CircuitParams = CircuitParams(**DEFAULTS["circuit"])
    noise: NoiseModel = NoiseModel()
    grid_n: int = DEFAULT_GRID_N
    dim: int = 50
    verify_dim: int = DEFAULT_VERIFY_DIM
    transitions: tuple[tuple[int, int], ...] = DEFAULT_TRANSITIONS
    output_path: Path = Path(DEFAULT_OUTPUT)
    mode: str = "global-only"
    fd_step: float = DEFAULT_FD_STEP
    slope_tol: float = DEFAULT_SLOPE_TOL
    sweet_grid_n: int = DEFAULT_SWEET_GRID_N
    a_d_overlay: tuple[float, ...] = ()
    workers: Optional[int] = field(default=None, compare=False)

    def phi2_grid(self) -> list[float]:
        """grid_n evenly spaced Phi2/Phi0 values over [0, 1]; a single point sits at 0."""
        if self.grid_n == 1:
            return [0.0]
        return [i / (self.grid_n - 1) for i in range(self.grid_n)]

    def noise_for_mode(self) -> NoiseModel:
        return with_mode(self.noise, self.mode)

    def with_overrides(self, **overrides: Any) -> "RunConfig":
        """
        Apply command-line overrides; None values are ignored.

        Raises:
            ConfigError: if an override is out of range
        """
        keys = ("grid_n", "dim", "verify_dim", "sweet_grid_n", "mode", "output_path")
        changes = {}
        for name, value in overrides.items():
            if value is None:
                continue
            if name not in keys:
                raise ConfigError(f"unknown override {name!r}")
            if name == "output_path":
                changes[name] = Path(value)
                continue
            _check_value("run", name, value, line=None)
            changes[name] = value
        updated = replace(self, **changes)
        _check_transitions(updated.transitions, updated.dim, line=None)
        return updated


def to_document(config: RunConfig) -> dict[str, dict[str, Any]]:
    """Nested dict in the TOML layout."""
    p, n = config.params, config.noise
    return {
        "circuit": {
            "ec_ghz": float(p.ec_ghz),
            "el_ghz": float(p.el_ghz),
            "ej_sum_ghz": float(p.ej_sum_ghz),
            "b": float(p.b),
            "r": float(p.r),
        },
        "noise": {
            "a_s_phi0": float(n.a_s),
            "a_d_phi0": float(n.a_d),
            "c_sd": float(n.c_sd),
            "log_factor": float(n.log_factor),
            "alpha": float(n.alpha),
            "f_ir_hz": float(n.f_ir_hz),
            "a_d_overlay_phi0": [float(a) for a in config.a_d_overlay],
        },
        "run": {
            "grid_n": config.grid_n,
            "dim": config.dim,
            "verify_dim": config.verify_dim,
            "transitions": [list(t) for t in config.transitions],
            "output_path": str(config.output_path),
            "mode": config.mode,
            "fd_step_phi0": float(config.fd_step),
            "slope_tol_ghz_per_phi0": float(config.slope_tol),
            "sweet_grid_n": config.sweet_grid_n,
            "self_consistent": bool(n.self_consistent),
        },
    }


def from_document(document: Mapping[str, Mapping[str, Any]], lines: Optional[Mapping[str, int]] = None) -> RunConfig:
    """
    Build a RunConfig from a complete nested document.

    Args:
        document: all sections and keys, already type-checked
        lines: "section.key" -> line number, for diagnostics

    Raises:
        ConfigError: if a value is out of range or inconsistent
    """
    lines = lines or {}
    for section, keys in SCHEMA.items():
        for key in keys:
            _check_value(section, key, document[section][key], lines.get(f"{section}.{key}"))

    c, n, r = document["circuit"], document["noise"], document["run"]
    transitions = _check_transitions(r["transitions"], r["dim"], lines.get("run.transitions"))
    try:
        params = CircuitParams(**{k: float(v) for k, v in c.items()})
        noise = NoiseModel(
            a_s=float(n["a_s_phi0"]),
            a_d=float(n["a_d_phi0"]),
            c_sd=float(n["c_sd"]),
            log_factor=float(n["log_factor"]),
            alpha=float(n["alpha"]),
            f_ir_hz=float(n["f_ir_hz"]),
            self_consistent=bool(r["self_consistent"]),
        )
    except (CircuitError, NoiseModelError) as e:
        raise ConfigError(str(e))
    return RunConfig(
        params=params,
        noise=noise,
        grid_n=r["grid_n"],
        dim=r["dim"],
        verify_dim=r["verify_dim"],
        transitions=transitions,
        output_path=Path(r["output_path"]),
        mode=r["mode"],
        fd_step=float(r["fd_step_phi0"]),
        slope_tol=float(r["slope_tol_ghz_per_phi0"]),
        sweet_grid_n=r["sweet_grid_n"],
        a_d_overlay=tuple(float(a) for a in n["a_d_overlay_phi0"]),
    )


def _check_value(section: str, key: str, value: Any, line: Optional[int]) -> Any:
    name = f"{section}.{key}"
    spec = SCHEMA[section][key]
    if spec.kind is float:
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
    elif spec.kind is int:
        ok = isinstance(value, int) and not isinstance(value, bool)
    else:
        ok = isinstance(value, spec.kind)
    if not ok:
        raise ConfigError(
            f"expected {spec.kind.__name__}, got {type(value).__name__} {value!r}", field=name, line=line
        )
    if spec.check is not None and not spec.check(value):
        raise ConfigError(f"must be {spec.requirement}, got {value!r}", field=name, line=line)
    return value


def _check_transitions(value: Any, dim: int, line: Optional[int]) -> tuple[tuple[int, int], ...]:
    pairs = []
    for pair in value:
        if (
            not isinstance(pair, (list, tuple))
            or len(pair) != 2
            or not all(isinstance(x, int) and not isinstance(x, bool) for x in pair)
        ):
            raise ConfigError(f"entries must be [i, j] integer pairs, got {pair!r}", "run.transitions", line)
        i, j = pair
        if not 0 <= i < j:
            raise ConfigError(f"pair {list(pair)} must satisfy 0 <= i < j", "run.transitions", line)
        if j >= dim:
            raise ConfigError(f"pair {list(pair)} needs more than dim={dim} levels", "run.transitions", line)
        pairs.append((i, j))
    if not pairs:
        raise ConfigError("at least one transition is required", "run.transitions", line)
    return tuple(pairs)


# =============================================================================
# TOML
# =============================================================================

_SECTION_RE = re.compile(r"^\s*\[\s*([A-Za-z0-9_.-]+)\s*\]")
_KEY_RE = re.compile(r"^\s*([A-Za-z0-9_-]+)\s*=")


def _key_lines(text: str) -> dict[str, int]:
    """Map "section" and "section.key" to the 1-based line they appear on."""
    lines: dict[str, int] = {}
    section = ""
    for number, raw in enumerate(text.splitlines(), start=1):
        header = _SECTION_RE.match(raw)
        if header:
            section = header.group(1)
            lines.setdefault(section, number)
            continue
        key = _KEY_RE.match(raw)
        if key:
            name = f"{section}.{key.group(1)}" if section else key.group(1)
            lines.setdefault(name, number)
    return lines


def parse_document(text: str) -> tuple[dict[str, dict[str, Any]], dict[str, int]]:
    """
    Parse and type-check a partial TOML config document.

    Returns:
        (document, "section.key" -> line)

    Raises:
        ConfigError: for TOML syntax errors, unknown sections or keys, or
            values of the wrong type
    """
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        line = getattr(e, "lineno", None)
        if line is None:
            match = re.search(r"line (\d+)", str(e))
            line = int(match.group(1)) if match else None
        raise ConfigError(f"invalid TOML: {e}", line=line)

    lines = _key_lines(text)
    document: dict[str, dict[str, Any]] = {}
    for section, table in raw.items():
        if section not in SCHEMA:
            raise ConfigError(
                f"unknown section; expected one of {', '.join(SCHEMA)}", field=section, line=lines.get(section)
            )
        if not isinstance(table, dict):
            raise ConfigError("must be a table", field=section, line=lines.get(section))
        for key, value in table.items():
            name = f"{section}.{key}"
            if key not in SCHEMA[section]:
                raise ConfigError("unknown key", field=name, line=lines.get(name))
            _check_value(section, key, value, lines.get(name))
        document[section] = dict(table)
    return document, lines


def _merge(base: dict[str, dict[str, Any]], layer: Mapping[str, Mapping[str, Any]]) -> None:
    for section, table in layer.items():
        base[section].update(copy.deepcopy(dict(table)))


def load_config_text(text: str) -> RunConfig:
    """Defaults overlaid with a TOML document."""
    document, lines = parse_document(text)
    merged = copy.deepcopy(DEFAULTS)
    _merge(merged, document)
    return from_document(merged, lines)


def load_config(path: Path) -> RunConfig:
    """
    Read a TOML config file over the defaults.

    Raises:
        ConfigError: if the file is unreadable or invalid
    """
    return resolve_config(path=path)


def dump_config(config: RunConfig) -> str:
    """Serialize to TOML; load_config_text(dump_config(c)) == c."""
    return tomli_w.dumps(to_document(config))


def resolve_config(
    preset: Optional[str] = None,
    path: Optional[Path] = None,
    **overrides: Any,
) -> RunConfig:
    """
    Layer defaults, a preset, a config file and explicit overrides, in that order.

    Raises:
        ConfigError: for an unknown preset or any invalid value
    """
    merged = copy.deepcopy(DEFAULTS)
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; expected one of {', '.join(PRESETS)}", field="preset")
        _merge(merged, PRESETS[preset])
        logger.debug(f"Applied preset {preset}")

    lines: dict[str, int] = {}
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigError(f"cannot read {path}: {e}", field="config")
        document, lines = parse_document(text)
        _merge(merged, document)
        logger.debug(f"Loaded config file {path}")

    return from_document(merged, lines).with_overrides(**overrides)


def workers_from_env(environ: Optional[Mapping[str, str]] = None) -> Optional[int]:
    """
    Worker cap from FLATSONIUM_THREADS; unset, empty or 0 means automatic.

    Raises:
        ConfigError: if the value is not a nonnegative integer
    """
    environ = os.environ if environ is None else environ
    raw = environ.get(THREADS_ENV, "").strip()
    if not raw:
        return None
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"must be a nonnegative integer, got {raw!r}", field=THREADS_ENV)
    if value < 0:
        raise ConfigError(f"must be a nonnegative integer, got {raw!r}", field=THREADS_ENV)
    return value or None
