"""Errors and warnings raised by the ILW lab."""
from __future__ import annotations

from functools import lru_cache
import json
from pathlib import Path
from typing import Any

STRINGS_FILE = Path(__file__).with_name("strings.json")


@lru_cache(maxsize=1)
def _exception_messages() -> dict[str, str]:
    with STRINGS_FILE.open(encoding="utf-8") as handle:
        strings = json.load(handle)
    return {key: value["message"] for key, value in strings["exceptions"].items()}


def render_message(translation_key: str, placeholders: dict[str, Any] | None = None) -> str:
    """Render the catalog message for a translation key."""
    template = _exception_messages().get(translation_key)
    if template is None:
        return translation_key
    try:
        return template.format(**(placeholders or {}))
    except (KeyError, IndexError):
        return template


class IlwLabError(Exception):
    """Base error carrying a catalog key and its placeholders."""

    def __init__(
        self,
        translation_key: str,
        translation_placeholders: dict[str, Any] | None = None,
    ) -> None:
        """Initialize the error and render its message."""
        self.translation_key = translation_key
        self.translation_placeholders = dict(translation_placeholders or {})
        super().__init__(render_message(translation_key, self.translation_placeholders))

    def as_report(self) -> dict[str, Any]:
        """Return the machine-readable failure report."""
        return {
            "error": self.translation_key,
            "message": str(self),
            "placeholders": {key: str(value) for key, value in self.translation_placeholders.items()},
        }


class InvalidParameter(IlwLabError, ValueError):
    """A library call received arguments outside its domain."""


class ConfigInvalid(IlwLabError):
    """A scenario config failed validation."""

    def __init__(self, violations: list[str]) -> None:
        """Keep every violation, not only the first."""
        self.violations = list(violations)
        super().__init__("config_invalid", {"violations": "; ".join(self.violations)})

    def as_report(self) -> dict[str, Any]:
        report = super().as_report()
        report["violations"] = self.violations
        return report


class NumericalFailure(IlwLabError):
    """A computation produced no usable result."""


class OutputError(IlwLabError):
    """Writing an artifact failed."""


class NumericalWarning(UserWarning):
    """Recoverable numerical concern; escalated to an error by --strict."""


class BoxSizeWarning(NumericalWarning):
    """The periodic box is too short for the soliton tails."""


class CflWarning(NumericalWarning):
    """The time step violates the nonlinear CFL estimate."""


class TailWarning(NumericalWarning):
    """The solution reached the edge of the box."""
