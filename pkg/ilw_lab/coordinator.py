"""Scenario coordinator: runs validated configs, writes artifacts and maps outcomes to exit codes."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .config_flow import ScenarioConfig
from .const import (
    EXIT_ASSERTION,
    EXIT_NUMERICAL,
    EXIT_OK,
    EXIT_USAGE,
    LAB_NUMERICAL_ERRORS,
    LAB_USAGE_ERRORS,
    LOGGER,
)
from .diagnostics import report_failure, write_outputs
from .exceptions import IlwLabError, NumericalFailure, NumericalWarning, OutputError
from .scenarios import SCENARIO_DESCRIPTIONS, ScenarioResult


class ScenarioCoordinator:
    """Runs one scenario and owns its output directory."""

    def __init__(self, config: ScenarioConfig, out_dir: str | Path | None = None) -> None:
        """Initialize the coordinator."""
        self.config = config
        self.out_dir = Path(out_dir if out_dir is not None else config.outputs)
        self.description = SCENARIO_DESCRIPTIONS[config.scenario]
        self.result: ScenarioResult | None = None
        self.exit_code: int | None = None

    def refresh(self) -> ScenarioResult:
        """Run the scenario; third-party numerical errors become NumericalFailure."""
        LOGGER.info("Running scenario %s", self.config.scenario)
        try:
            return self.description.runner(self.config)
        except NumericalFailure:
            raise
        except NumericalWarning as warning:
            raise NumericalFailure("strict_warning", {"warning": warning}) from warning
        except LAB_NUMERICAL_ERRORS as error:
            raise NumericalFailure("numerical_error", {"label": self.config.scenario, "error": error}) from error

    def run(self) -> int:
        """Run, write artifacts and return the exit code."""
        try:
            self._prepare_directory()
            self.result = self.refresh()
            write_outputs(
                self.result.trace if self.description.writes_trace else [],
                {
                    "scenario": self.result.scenario,
                    "checks": [check.as_dict() for check in self.result.checks],
                    "tables": self.result.tables,
                },
                self.out_dir,
                spectra=self.result.spectra if self.description.writes_spectrum else (),
                config=self.config.as_dict(),
            )
        except LAB_USAGE_ERRORS as error:
            self.exit_code = self._fail(error, EXIT_USAGE)
        except (NumericalFailure, OutputError) as error:
            self.exit_code = self._fail(error, EXIT_NUMERICAL)
        else:
            if self.result.passed:
                LOGGER.info("Scenario %s passed", self.config.scenario)
                self.exit_code = EXIT_OK
            else:
                LOGGER.warning("Scenario %s failed checks: %s", self.config.scenario, ", ".join(self.result.failed))
                self.exit_code = EXIT_ASSERTION
        return self.exit_code

    def _prepare_directory(self) -> None:
        try:
            self.out_dir.mkdir(parents=True, exist_ok=True)
        except OSError as error:
            raise OutputError("write_failed", {"path": self.out_dir, "error": error}) from error

    def _fail(self, error: IlwLabError, code: int) -> int:
        LOGGER.error("Scenario %s stopped: %s", self.config.scenario, error)
        report_failure(error, self.out_dir)
        return code


def run_scenario(config: ScenarioConfig, out_dir: str | Path | None = None) -> int:
    """Run one scenario and return its exit code."""
    return ScenarioCoordinator(config, out_dir).run()


def combine_exit_codes(codes: list[int]) -> int:
    """Numerical failures dominate, then usage errors, then failed checks."""
    for code in (EXIT_NUMERICAL, EXIT_USAGE, EXIT_ASSERTION):
        if code in codes:
            return code
    return EXIT_OK


def run_sweep(config: ScenarioConfig, threads: int = 1) -> list[int]:
    """Run every sweep entry on a thread pool; results come back in entry order."""
    base = Path(config.outputs)
    jobs = [(entry, base / f"run_{index}") for index, entry in enumerate(config.sweep)]
    LOGGER.info("Sweeping %s runs on %s thread(s)", len(jobs), threads)
    with ThreadPoolExecutor(max_workers=max(1, threads)) as executor:
        return list(executor.map(lambda job: run_scenario(*job), jobs))


def run_config(config: ScenarioConfig, threads: int = 1) -> int:
    """Run a config, or its sweep when one is declared."""
    if config.sweep:
        return combine_exit_codes(run_sweep(config, threads))
    return run_scenario(config)
