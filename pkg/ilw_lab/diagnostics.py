"""Output files, provenance and failure reports for scenario runs."""
from __future__ import annotations

from collections.abc import Iterable, Mapping
import csv
from functools import lru_cache
import io
import json
import math
from pathlib import Path
import subprocess
import sys
from typing import Any

import numpy as np

from .const import (
    CONF_OUTPUTS,
    FILE_CONFIG_ECHO,
    FILE_FAILURE,
    FILE_SPECTRUM,
    FILE_SUMMARY,
    FILE_TRACE,
    LOGGER,
    SIGNIFICANT_DIGITS,
)
from .evolve import TraceRecord
from .exceptions import IlwLabError, OutputError

MANIFEST_FILE = Path(__file__).with_name("manifest.json")
REDACTED = "**REDACTED**"
TO_REDACT = {CONF_OUTPUTS}

SPECTRUM_HEADER = ["operator", "index", "eigenvalue"]


def format_number(value: float) -> str:
    """Return a float with 17 significant digits."""
    return format(float(value), f".{SIGNIFICANT_DIGITS}g")


def redact_data(data: Any, to_redact: Iterable[str]) -> Any:
    """Replace the values of sensitive keys at any depth."""
    keys = set(to_redact)
    if isinstance(data, Mapping):
        return {key: REDACTED if key in keys else redact_data(value, keys) for key, value in data.items()}
    if isinstance(data, list):
        return [redact_data(item, keys) for item in data]
    return data


def jsonable(data: Any) -> Any:
    """Convert arrays and numpy scalars to plain JSON values; non-finite floats become strings."""
    if isinstance(data, Mapping):
        return {str(key): jsonable(value) for key, value in data.items()}
    if isinstance(data, (list, tuple)):
        return [jsonable(item) for item in data]
    if isinstance(data, np.ndarray):
        return jsonable(data.tolist())
    if isinstance(data, (bool, np.bool_)):
        return bool(data)
    if isinstance(data, (int, np.integer)):
        return int(data)
    if isinstance(data, (float, np.floating)):
        value = float(data)
        return value if math.isfinite(value) else str(value)
    return data


@lru_cache(maxsize=1)
def package_version() -> str:
    """Return git describe output when available, otherwise the manifest version."""
    try:
        described = subprocess.run(
            ["git", "describe", "--tags", "--always", "--dirty"],
            cwd=Path(__file__).parent,
            capture_output=True,
            text=True,
            timeout=5,
            check=True,
        )
        if described.stdout.strip():
            return described.stdout.strip()
    except (OSError, subprocess.SubprocessError) as error:
        LOGGER.debug("git describe unavailable: %s", error)
    with MANIFEST_FILE.open(encoding="utf-8") as handle:
        return json.load(handle)["version"]


def trace_header(peak_count: int) -> list[str]:
    """Return the trace columns with one position/height pair per peak."""
    peaks = [f"peak{index}_{column}" for index in range(1, peak_count + 1) for column in ("pos", "h")]
    return ["t", "H0", "H1", "H2", "H3", "n_peaks", *peaks, "sobolev_half"]


def trace_rows(records: Iterable[TraceRecord]) -> tuple[list[str], list[list[str]]]:
    """Serialize trace records; rows with fewer peaks are padded with empty cells."""
    records = list(records)
    width = max((len(record.peaks) for record in records), default=0)
    rows = []
    for record in records:
        peaks = [format_number(value) for peak in record.peaks for value in peak]
        padding = [""] * (2 * (width - len(record.peaks)))
        rows.append(
            [
                format_number(record.t),
                *(format_number(value) for value in record.H),
                str(len(record.peaks)),
                *peaks,
                *padding,
                format_number(record.sobolev_half),
            ]
        )
    return trace_header(width), rows


def spectrum_rows(spectra: Iterable[tuple[str, np.ndarray]]) -> list[list[str]]:
    """Serialize eigenvalue lists as CSV rows."""
    return [[label, str(index), format_number(value)] for label, values in spectra for index, value in enumerate(values)]


def _csv_text(header: list[str], rows: list[list[str]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def _write(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    except OSError as error:
        LOGGER.error("Could not write %s: %s", path, error)
        raise OutputError("write_failed", {"path": path, "error": error}) from error


def build_summary(scenario: str, checks: Iterable[Mapping[str, Any]], tables: Mapping[str, Any], config: Mapping[str, Any]) -> dict[str, Any]:
    """Return the summary document."""
    checks = list(checks)
    return jsonable(
        {
            "scenario": scenario,
            "version": package_version(),
            "passed": all(check["passed"] for check in checks if check["gating"]),
            "checks": checks,
            "tables": tables,
            "config": redact_data(config, TO_REDACT),
        }
    )


def write_outputs(
    records: Iterable[TraceRecord],
    reports: Mapping[str, Any],
    directory: str | Path,
    *,
    spectra: Iterable[tuple[str, np.ndarray]] = (),
    config: Mapping[str, Any] | None = None,
) -> list[Path]:
    """Write trace.csv, spectrum.csv, summary.json and config.echo into directory."""
    directory = Path(directory)
    config = dict(config or {})
    summary = build_summary(reports.get("scenario", ""), reports.get("checks", []), reports.get("tables", {}), config)
    files = {
        FILE_TRACE: _csv_text(*trace_rows(records)),
        FILE_SPECTRUM: _csv_text(SPECTRUM_HEADER, spectrum_rows(spectra)),
        FILE_SUMMARY: json.dumps(summary, indent=2, sort_keys=True) + "\n",
        FILE_CONFIG_ECHO: json.dumps(jsonable(redact_data(config, TO_REDACT)), indent=2, sort_keys=True) + "\n",
    }
    written = []
    for name, text in files.items():
        _write(directory / name, text)
        written.append(directory / name)
    LOGGER.info("Wrote %s files to %s", len(written), directory)
    return written


def report_failure(error: IlwLabError, directory: str | Path | None = None) -> dict[str, Any]:
    """Print the failure report to stderr and write failure.json when the directory exists."""
    report = jsonable(error.as_report())
    text = json.dumps(report, indent=2, sort_keys=True)
    print(text, file=sys.stderr)
    if directory is not None and Path(directory).is_dir():
        try:
            _write(Path(directory) / FILE_FAILURE, text + "\n")
        except OutputError as write_error:
            LOGGER.error("Failure report not saved: %s", write_error)
    return report
