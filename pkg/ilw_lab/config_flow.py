"""Validated scenario configs for the ILW lab."""
from __future__ import annotations

from collections.abc import Mapping
import copy
from dataclasses import dataclass, field, replace
import json
from pathlib import Path
from typing import Any

import voluptuous as vol

from .const import (
    CONF_AMPLITUDE,
    CONF_BANDWIDTH,
    CONF_DEALIAS,
    CONF_DELTA,
    CONF_DT,
    CONF_EVOLVE,
    CONF_GRID,
    CONF_HORIZON,
    CONF_KIND,
    CONF_LENGTH,
    CONF_MODE,
    CONF_NUM_POINTS,
    CONF_OPTIONS,
    CONF_OUTPUTS,
    CONF_PEAK_HEIGHT,
    CONF_PERTURBATION,
    CONF_PHYSICS,
    CONF_POSITIONS,
    CONF_RECORD_STRIDE,
    CONF_SCENARIO,
    CONF_SEED,
    CONF_SPEEDS,
    CONF_SWEEP,
    CONF_TAIL_WATCH,
    DEFAULT_DELTA,
    DEFAULT_DT,
    DEFAULT_HORIZON,
    DEFAULT_LENGTH,
    DEFAULT_NUM_POINTS,
    DEFAULT_PEAK_HEIGHT,
    DEFAULT_PENALTY,
    DEFAULT_RECORD_STRIDE,
    DEFAULT_SPECTRUM_NUM_POINTS,
    LOGGER,
    MIN_GRID_POINTS,
    PERTURBATION_MODE,
    PERTURBATION_RANDOM_SMOOTH,
    SCENARIO_COLLIDE,
    SCENARIO_CONVERGENCE,
    SCENARIO_HESSIAN_D,
    SCENARIO_LIMITS,
    SCENARIO_PERTURB,
    SCENARIO_PROPAGATE,
    SCENARIO_SPECTRUM,
    SCENARIOS,
)
from .evolve import EvolveConfig
from .exceptions import ConfigInvalid, InvalidParameter, render_message
from .spectral_core import Grid, make_grid

SPECTRUM_OPERATORS = ["L1", "L2", "T11", "T12", "S2pp", "augmented"]
DEFAULT_OUTPUTS = "out"
MAX_SEED = 2**64 - 1


def _even(value: int) -> int:
    if value % 2:
        raise vol.Invalid("must be even")
    return value


def _increasing(values: list[float]) -> list[float]:
    if any(right <= left for left, right in zip(values, values[1:])):
        raise vol.Invalid("speeds must be increasing")
    return values


POSITIVE_FLOAT = vol.All(vol.Coerce(float), vol.Range(min=0, min_included=False))
POSITIVE_INT = vol.All(vol.Coerce(int), vol.Range(min=1))
SEED = vol.All(int, vol.Range(min=0, max=MAX_SEED))
GRID_SIZE = vol.All(vol.Coerce(int), vol.Range(min=MIN_GRID_POINTS), _even)

GRID_SCHEMA = vol.Schema(
    {
        vol.Required(CONF_NUM_POINTS, default=DEFAULT_NUM_POINTS): GRID_SIZE,
        vol.Required(CONF_LENGTH, default=DEFAULT_LENGTH): POSITIVE_FLOAT,
    }
)

PHYSICS_SCHEMA = vol.Schema(
    {
        vol.Required(CONF_DELTA, default=DEFAULT_DELTA): POSITIVE_FLOAT,
        vol.Required(CONF_SPEEDS, default=lambda: [1.0]): vol.All([POSITIVE_FLOAT], vol.Length(min=1), _increasing),
        vol.Optional(CONF_POSITIONS): [vol.Coerce(float)],
    }
)

EVOLVE_SCHEMA = vol.Schema(
    {
        vol.Required(CONF_DT, default=DEFAULT_DT): POSITIVE_FLOAT,
        vol.Required(CONF_HORIZON, default=DEFAULT_HORIZON): POSITIVE_FLOAT,
        vol.Required(CONF_DEALIAS, default=True): bool,
        vol.Required(CONF_RECORD_STRIDE, default=DEFAULT_RECORD_STRIDE): POSITIVE_INT,
        vol.Required(CONF_TAIL_WATCH, default=False): bool,
        vol.Required(CONF_PEAK_HEIGHT, default=DEFAULT_PEAK_HEIGHT): POSITIVE_FLOAT,
    }
)

PERTURBATION_SCHEMA = vol.Schema(
    {
        vol.Required(CONF_KIND): vol.In([PERTURBATION_MODE, PERTURBATION_RANDOM_SMOOTH]),
        vol.Required(CONF_AMPLITUDE): POSITIVE_FLOAT,
        vol.Required(CONF_SEED): SEED,
        vol.Required(CONF_MODE, default=3): POSITIVE_INT,
        vol.Required(CONF_BANDWIDTH, default=16): POSITIVE_INT,
    }
)

OPTIONS_SCHEMAS: dict[str, vol.Schema] = {
    SCENARIO_PROPAGATE: vol.Schema({}),
    SCENARIO_COLLIDE: vol.Schema({vol.Required("separation", default=30.0): POSITIVE_FLOAT}),
    SCENARIO_PERTURB: vol.Schema({vol.Required("separation", default=40.0): POSITIVE_FLOAT}),
    SCENARIO_SPECTRUM: vol.Schema(
        {
            vol.Required("operators", default=lambda: list(SPECTRUM_OPERATORS)): vol.All(
                [vol.In(SPECTRUM_OPERATORS)], vol.Length(min=1)
            ),
            vol.Required("penalty", default=DEFAULT_PENALTY): POSITIVE_FLOAT,
            vol.Required("separation", default=40.0): POSITIVE_FLOAT,
            vol.Required("ratio_speeds", default=lambda: [1.5, 2.0, 3.0]): vol.All([POSITIVE_FLOAT], vol.Length(min=2)),
            vol.Required("lambda1_speeds", default=lambda: [0.5, 1.0, 2.0]): [POSITIVE_FLOAT],
            vol.Required("psi_separations", default=lambda: [40.0, 60.0]): vol.All(
                [POSITIVE_FLOAT], vol.Length(min=2), _increasing
            ),
        }
    ),
    SCENARIO_HESSIAN_D: vol.Schema(
        {
            vol.Required("max_count", default=5): vol.All(vol.Coerce(int), vol.Range(min=1, max=8)),
            vol.Required("tuples", default=10): POSITIVE_INT,
            vol.Required(CONF_SEED, default=2024): SEED,
        }
    ),
    SCENARIO_LIMITS: vol.Schema(
        {
            vol.Required("xi", default=lambda: [0.0, 1e-4, 1e-3, 1e-2, 0.1, 1.0, 10.0]): vol.All(
                [vol.All(vol.Coerce(float), vol.Range(min=0))], vol.Length(min=1)
            ),
        }
    ),
    SCENARIO_CONVERGENCE: vol.Schema(
        {
            vol.Required("dt_values", default=lambda: [4e-3, 2e-3, 1e-3]): vol.All([POSITIVE_FLOAT], vol.Length(min=2)),
            vol.Required("num_points", default=lambda: [64, 128, 256]): vol.All([GRID_SIZE], vol.Length(min=2)),
            vol.Required("box_lengths", default=lambda: [40.0, 60.0, 80.0]): vol.All([POSITIVE_FLOAT], vol.Length(min=2)),
            vol.Required("order_num_points", default=128): GRID_SIZE,
            vol.Required("order_length", default=40.0): POSITIVE_FLOAT,
            vol.Required("order_horizon", default=1.0): POSITIVE_FLOAT,
        }
    ),
}

CONFIG_SCHEMA = vol.Schema(
    {
        vol.Required(CONF_SCENARIO): vol.In(SCENARIOS),
        vol.Required(CONF_GRID, default=dict): GRID_SCHEMA,
        vol.Required(CONF_PHYSICS, default=dict): PHYSICS_SCHEMA,
        vol.Required(CONF_EVOLVE, default=dict): EVOLVE_SCHEMA,
        vol.Optional(CONF_PERTURBATION): PERTURBATION_SCHEMA,
        vol.Required(CONF_OPTIONS, default=dict): dict,
        vol.Required(CONF_OUTPUTS, default=DEFAULT_OUTPUTS): str,
        vol.Optional(CONF_SWEEP): [dict],
    }
)


@dataclass(frozen=True)
class PerturbationConfig:
    """Mean-free initial perturbation of the reference state."""

    kind: str
    amplitude: float
    seed: int
    mode: int = 3
    bandwidth: int = 16


@dataclass(frozen=True)
class ScenarioConfig:
    """A validated scenario with its defaults filled in."""

    scenario: str
    grid: Grid
    delta: float
    speeds: tuple[float, ...]
    positions: tuple[float, ...]
    evolve: EvolveConfig
    perturbation: PerturbationConfig | None
    options: dict[str, Any]
    outputs: str
    data: dict[str, Any] = field(repr=False)
    sweep: tuple[ScenarioConfig, ...] = ()

    def as_dict(self) -> dict[str, Any]:
        """Return the normalized config, without the sweep entries."""
        return copy.deepcopy(self.data)


def deep_merge(base: Mapping[str, Any], override: Mapping[str, Any]) -> dict[str, Any]:
    """Merge override into a copy of base; nested mappings merge, other values replace."""
    merged = copy.deepcopy(dict(base))
    for key, value in override.items():
        if isinstance(value, Mapping) and isinstance(merged.get(key), Mapping):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def _format_error(error: vol.Invalid, prefix: str = "") -> str:
    path = "/".join(str(part) for part in error.path)
    location = f"{prefix}{path}" if path else (prefix.rstrip("/") or "config")
    return f"{location}: {error.msg}"


def _default_positions(count: int, separation: float) -> list[float]:
    return [separation * (j - 0.5 * (count - 1)) for j in range(count)]


SCENARIO_GRID_DEFAULTS: dict[str, dict[str, Any]] = {
    SCENARIO_SPECTRUM: {CONF_NUM_POINTS: DEFAULT_SPECTRUM_NUM_POINTS},
}


def _with_scenario_grid(data: dict[str, Any]) -> dict[str, Any]:
    """Fill grid keys the document leaves out with the scenario's own defaults."""
    scenario = data.get(CONF_SCENARIO)
    grid = data.get(CONF_GRID, {})
    if not isinstance(scenario, str) or scenario not in SCENARIO_GRID_DEFAULTS or not isinstance(grid, dict):
        return data
    return {**data, CONF_GRID: {**SCENARIO_GRID_DEFAULTS[scenario], **grid}}


def _build(data: dict[str, Any], prefix: str = "") -> tuple[ScenarioConfig | None, list[str]]:
    """Validate one config document; return it and every violation found."""
    try:
        validated = CONFIG_SCHEMA(_with_scenario_grid(data))
    except vol.MultipleInvalid as error:
        return None, sorted(_format_error(item, prefix) for item in error.errors)

    violations: list[str] = []
    scenario = validated[CONF_SCENARIO]
    try:
        validated[CONF_OPTIONS] = OPTIONS_SCHEMAS[scenario](validated[CONF_OPTIONS])
    except vol.MultipleInvalid as error:
        violations.extend(_format_error(item, f"{prefix}{CONF_OPTIONS}/") for item in error.errors)

    physics = validated[CONF_PHYSICS]
    speeds = physics[CONF_SPEEDS]
    if CONF_POSITIONS not in physics:
        separation = validated[CONF_OPTIONS].get("separation", 40.0) if not violations else 40.0
        physics[CONF_POSITIONS] = [0.0] if len(speeds) == 1 else _default_positions(len(speeds), separation)
        if scenario == SCENARIO_COLLIDE:
            # Faster solitons start behind so that they overtake.
            physics[CONF_POSITIONS].reverse()
    elif len(physics[CONF_POSITIONS]) != len(speeds):
        violations.append(f"{prefix}{CONF_PHYSICS}/{CONF_POSITIONS}: must have one entry per speed")

    if scenario in (SCENARIO_COLLIDE, SCENARIO_PERTURB) and len(speeds) != 2:
        violations.append(f"{prefix}{CONF_PHYSICS}/{CONF_SPEEDS}: scenario {scenario} needs exactly two speeds")
    if scenario == SCENARIO_PERTURB and CONF_PERTURBATION not in validated:
        violations.append(f"{prefix}{CONF_PERTURBATION}: required for scenario {scenario}")

    grid = evolve = None
    try:
        grid = make_grid(validated[CONF_GRID][CONF_NUM_POINTS], validated[CONF_GRID][CONF_LENGTH])
    except InvalidParameter as error:
        violations.append(f"{prefix}{CONF_GRID}: {error}")
    try:
        evolve = EvolveConfig(**validated[CONF_EVOLVE])
    except InvalidParameter as error:
        violations.append(f"{prefix}{CONF_EVOLVE}: {error}")

    if violations:
        return None, violations

    perturbation = PerturbationConfig(**validated[CONF_PERTURBATION]) if CONF_PERTURBATION in validated else None
    sweep_entries = validated.pop(CONF_SWEEP, [])
    config = ScenarioConfig(
        scenario=scenario,
        grid=grid,
        delta=physics[CONF_DELTA],
        speeds=tuple(speeds),
        positions=tuple(physics[CONF_POSITIONS]),
        evolve=evolve,
        perturbation=perturbation,
        options=dict(validated[CONF_OPTIONS]),
        outputs=validated[CONF_OUTPUTS],
        data=validated,
    )

    runs = []
    for index, entry in enumerate(sweep_entries):
        if CONF_SWEEP in entry:
            violations.append(f"{prefix}{CONF_SWEEP}/{index}: sweeps cannot nest")
            continue
        run, run_violations = _build(deep_merge(_base_document(data), entry), f"{prefix}{CONF_SWEEP}/{index}/")
        violations.extend(run_violations)
        if run is not None:
            runs.append(run)
    if violations:
        return None, violations
    return replace(config, sweep=tuple(runs)), []


def _base_document(data: Mapping[str, Any]) -> dict[str, Any]:
    return {key: value for key, value in data.items() if key != CONF_SWEEP}


def apply_overrides(
    data: dict[str, Any], *, scenario: str | None = None, seed: int | None = None, outputs: str | None = None
) -> dict[str, Any]:
    """Apply command-line overrides to a raw config document."""
    data = copy.deepcopy(data)
    if scenario is not None:
        declared = data.setdefault(CONF_SCENARIO, scenario)
        if declared != scenario:
            raise ConfigInvalid([render_message("scenario_mismatch", {"command": scenario, "scenario": declared})])
    if seed is not None:
        if isinstance(data.get(CONF_PERTURBATION), dict):
            data[CONF_PERTURBATION][CONF_SEED] = seed
        if data.get(CONF_SCENARIO) == SCENARIO_HESSIAN_D:
            data.setdefault(CONF_OPTIONS, {})[CONF_SEED] = seed
    if outputs is not None:
        data[CONF_OUTPUTS] = outputs
    return data


def parse_config(
    text: str, *, scenario: str | None = None, seed: int | None = None, outputs: str | None = None
) -> ScenarioConfig:
    """Parse and validate a JSON config, reporting all violations together."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as error:
        raise ConfigInvalid([f"config: not valid JSON ({error})"]) from error
    if not isinstance(data, dict):
        raise ConfigInvalid(["config: expected a JSON object"])

    data = apply_overrides(data, scenario=scenario, seed=seed, outputs=outputs)
    config, violations = _build(data)
    if violations:
        LOGGER.error("Config rejected with %s violation(s)", len(violations))
        raise ConfigInvalid(violations)
    LOGGER.debug("Config for scenario %s validated", config.scenario)
    return config


def load_config(
    path: str | Path, *, scenario: str | None = None, seed: int | None = None, outputs: str | None = None
) -> ScenarioConfig:
    """Read a config file and validate it."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as error:
        raise ConfigInvalid([render_message("config_unreadable", {"path": path, "error": error})]) from error
    return parse_config(text, scenario=scenario, seed=seed, outputs=outputs)
