"""Exception hierarchy shared across the engine.

Every error carries a stable ``code`` so the HTTP layer and the CLI can emit
structured envelopes without inspecting exception types.
"""

from __future__ import annotations

from typing import Any


class ElicitError(Exception):
    """Base class for all engine errors."""

    code = "error"

    def __init__(self, message: str, details: Any = None):
        super().__init__(message)
        self.message = message
        self.details = details

    def envelope(self) -> dict:
        return {"code": self.code, "message": self.message, "details": self.details}


class ConfigurationError(ElicitError):
    """Invalid configuration, e.g. an infeasible support/family combination."""

    code = "configuration"


class ValidationError(ElicitError):
    """Judgement or constraint data violating an invariant."""

    code = "validation"


class FitFailureError(ElicitError):
    """Optimizer failed to converge after all restarts."""

    code = "fit_failure"

    def __init__(self, message: str, best_residual: float | None = None, details: Any = None):
        super().__init__(message, details)
        self.best_residual = best_residual


class ScheduleError(ElicitError):
    """Conditioning schedule could not be built (e.g. rounding collisions)."""

    code = "schedule"


class TransformError(ElicitError):
    """A scale transform is undefined for the supplied values."""

    code = "transform"


class CorrelationError(ElicitError):
    """Concordance judgements do not yield a positive definite matrix."""

    code = "correlation"

    def __init__(self, message: str, diagnosis: Any = None):
        super().__init__(message, details=diagnosis)
        self.diagnosis = diagnosis


class StageError(ElicitError):
    """An event was submitted out of the SHELF stage order."""

    code = "stage"


class SessionLockError(ElicitError):
    """A second writer tried to mutate a locked session."""

    code = "locked"


class SessionNotFoundError(ElicitError):
    """Unknown session id."""

    code = "not_found"


class SimulationError(ElicitError):
    """A simulation run failed its own sanity checks."""

    code = "simulation"
