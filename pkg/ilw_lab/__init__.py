"""The ilw_lab package: exact ILW solitons, conservation laws, spectral stability checks."""
from __future__ import annotations

from .config_flow import ScenarioConfig, load_config, parse_config
from .coordinator import run_config, run_scenario
from .exceptions import ConfigInvalid, IlwLabError, InvalidParameter, NumericalFailure, OutputError

__all__ = [
    "ConfigInvalid",
    "IlwLabError",
    "InvalidParameter",
    "NumericalFailure",
    "OutputError",
    "ScenarioConfig",
    "load_config",
    "parse_config",
    "run_config",
    "run_scenario",
]
