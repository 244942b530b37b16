"""Scenario / sweep configuration files.

The format is line-oriented ``key = value`` text. ``#`` starts a comment.
Lists are written ``[a, b, ...]``; ``schemes`` also accepts a bare
comma-separated list. Omitted keys take the defaults of
:class:`~satbeam.geometry.Scenario`. Unknown keys are rejected.
"""

from __future__ import annotations

import ast
import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

from ..baselines import SCHEMES
from ..geometry import Scenario
from ..solver import SolverConfig

SWEEP_AXES = ("power", "users", "ura_size", "spacing")

_SCENARIO_KEYS = {
    "power_w": float,
    "users": int,
    "ura": None,
    "spacing": float,
    "fft_size": int,
    "window_start": int,
    "carrier_hz": float,
    "bandwidth_hz": float,
    "altitude_m": float,
    "min_elevation_deg": float,
    "user_gain_dbi": float,
    "noise_temp_k": float,
    "element_pattern_exponent": float,
}
_SOLVER_KEYS = {
    "solver.max_iter": ("max_outer_iters", int),
    "solver.tol": ("tolerance", float),
    "solver.beta_mode": ("beta_mode", str),
    "solver.step0": ("step0", float),
    "solver.theta_init": ("theta_init", float),
    "solver.init": ("init_assignment", str),
}
_SWEEP_KEYS = ("trials", "seed", "schemes", "sweep_axis", "sweep_values")
KNOWN_KEYS = frozenset(_SCENARIO_KEYS) | frozenset(_SOLVER_KEYS) | frozenset(_SWEEP_KEYS)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SweepConfig:
    scenario: Scenario = field(default_factory=Scenario)
    sweep_axis: str = "power"
    sweep_values: tuple = ()
    trials: int = 50
    schemes: tuple[str, ...] = SCHEMES
    seed: int = 0
    solver: SolverConfig = field(default_factory=SolverConfig)
    output_path: str = "results"

    def __post_init__(self):
        if self.sweep_axis not in SWEEP_AXES:
            raise ConfigError(f"sweep_axis must be one of {SWEEP_AXES}, got {self.sweep_axis!r}")
        if not self.sweep_values:
            object.__setattr__(self, "sweep_values", (self._base_value(),))
        values = tuple(self.sweep_values)
        object.__setattr__(self, "sweep_values", values)
        increasing = all(a < b for a, b in zip(values, values[1:]))
        decreasing = all(a > b for a, b in zip(values, values[1:]))
        if not (increasing or decreasing):
            raise ConfigError(f"sweep_values must be strictly monotone, got {values}")
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        unknown = [s for s in self.schemes if s not in SCHEMES]
        if unknown or not self.schemes:
            raise ConfigError(f"unknown schemes {unknown}; choose from {SCHEMES}")
        for v in values:  # surfaces e.g. users > antennas at parse time
            self.scenario_for(v)

    def _base_value(self):
        s = self.scenario
        return {
            "power": s.power_w,
            "users": s.users,
            "ura_size": s.ura[0],
            "spacing": s.spacing,
        }[self.sweep_axis]

    def scenario_for(self, value) -> Scenario:
        """Base scenario with the swept parameter set to ``value``."""
        try:
            if self.sweep_axis == "power":
                return self.scenario.replace(power_w=float(value))
            if self.sweep_axis == "users":
                return self.scenario.replace(users=int(value))
            if self.sweep_axis == "ura_size":
                return self.scenario.replace(ura=(int(value), int(value)))
            return self.scenario.replace(spacing=float(value))
        except ValueError as exc:
            raise ConfigError(f"{self.sweep_axis}={value}: {exc}") from exc

    def replace(self, **changes) -> "SweepConfig":
        return dataclasses.replace(self, **changes)


def _parse_value(raw: str):
    raw = raw.strip()
    if not raw:
        raise ConfigError("empty value")
    try:
        return ast.literal_eval(raw)
    except (ValueError, SyntaxError):
        return raw  # bare word


def _as_number(key, value, kind):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key}: expected a number, got {value!r}")
    if kind is int:
        if float(value) != int(value):
            raise ConfigError(f"{key}: expected an integer, got {value!r}")
        return int(value)
    return float(value)


def _as_ura(value):
    if isinstance(value, str) and "x" in value:
        value = tuple(int(p) for p in value.lower().split("x"))
    if isinstance(value, int):
        value = (value, value)
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ConfigError(f"ura: expected [nx, ny], got {value!r}")
    return tuple(_as_number("ura", v, int) for v in value)


def _as_list(key, value):
    if isinstance(value, (list, tuple)):
        return tuple(value)
    if isinstance(value, str):
        return tuple(p.strip() for p in value.split(",") if p.strip())
    return (value,)


def parse_config_text(text: str) -> SweepConfig:
    entries: dict[str, object] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in KNOWN_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in entries:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            entries[key] = _parse_value(raw)
        except ConfigError as exc:
            raise ConfigError(f"line {lineno}: {key}: {exc}") from None

    scenario_args = {}
    for key, kind in _SCENARIO_KEYS.items():
        if key in entries:
            value = entries[key]
            scenario_args[key] = _as_ura(value) if key == "ura" else _as_number(key, value, kind)
    solver_args = {}
    for key, (name, kind) in _SOLVER_KEYS.items():
        if key in entries:
            value = entries[key]
            solver_args[name] = str(value) if kind is str else _as_number(key, value, kind)

    sweep_args = {}
    if "trials" in entries:
        sweep_args["trials"] = _as_number("trials", entries["trials"], int)
    if "seed" in entries:
        sweep_args["seed"] = _as_number("seed", entries["seed"], int)
    if "schemes" in entries:
        sweep_args["schemes"] = tuple(str(s) for s in _as_list("schemes", entries["schemes"]))
    if "sweep_axis" in entries:
        sweep_args["sweep_axis"] = str(entries["sweep_axis"])
    if "sweep_values" in entries:
        values = _as_list("sweep_values", entries["sweep_values"])
        axis = sweep_args.get("sweep_axis", "power")
        kind = int if axis in ("users", "ura_size") else float
        sweep_args["sweep_values"] = tuple(_as_number("sweep_values", v, kind) for v in values)

    try:
        return SweepConfig(
            scenario=Scenario(**scenario_args),
            solver=SolverConfig(**solver_args),
            **sweep_args,
        )
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


def parse_config(path) -> SweepConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    return parse_config_text(text)
