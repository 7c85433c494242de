"""Exception hierarchy. Every failure names the stage that rejected the input."""

from __future__ import annotations

from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from .models.reports import SearchReport


class PanelimeError(Exception):
    """Base class for all panelime failures."""


class TableError(PanelimeError, ValueError):
    """A table failed to load, validate or reformat."""


class ImputationError(PanelimeError, ValueError):
    """Imputation preconditions were not met."""


class ModelError(PanelimeError, ValueError):
    """A black-box model could not be fitted or queried."""


class SearchBudgetError(ModelError):
    """The search budget ran out before any trial succeeded."""

    def __init__(self, message: str, report: "SearchReport | None" = None) -> None:
        super().__init__(message)
        self.report = report


class ExplanationError(PanelimeError, ValueError):
    """A local surrogate could not be built."""


class SummaryError(PanelimeError, ValueError):
    """A global summary (pick, frequency, ICE) received invalid input."""


class EvaluationError(PanelimeError, ValueError):
    """A metric or experiment received degenerate input."""


class MissingArtifactError(PanelimeError, FileNotFoundError):
    """An upstream stage has not produced the artifact this stage reads."""


__all__ = [
    "PanelimeError",
    "TableError",
    "ImputationError",
    "ModelError",
    "SearchBudgetError",
    "ExplanationError",
    "SummaryError",
    "EvaluationError",
    "MissingArtifactError",
]
