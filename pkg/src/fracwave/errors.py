"""Error types shared across fracwave modules."""

from typing import Any, Dict, List, Optional


class FracwaveError(Exception):
    """Base class for all fracwave failures.

    Every error carries a short machine-readable ``kind`` and can render
    itself as the JSON document the CLI writes to stderr.
    """

    kind = "error"
    numerical = False

    def __init__(self, message: str, **details: Any):
        super().__init__(message)
        self.message = message
        self.details = details

    def to_dict(self) -> Dict[str, Any]:
        doc: Dict[str, Any] = {"error": self.kind, "message": self.message}
        if self.details:
            doc["details"] = self.details
        return doc


class DomainError(FracwaveError, ValueError):
    """Arguments fall outside an operation's domain."""

    kind = "domain"


class PreconditionError(FracwaveError, ValueError):
    """An input violates a checked hypothesis (e.g. test-function boundary values)."""

    kind = "precondition"


class ConfigurationError(FracwaveError, ValueError):
    """Run configuration is malformed or inconsistent."""

    kind = "configuration"


class StateError(FracwaveError):
    """Evolution state is incomplete for the requested step."""

    kind = "state"


class DegenerateInputError(FracwaveError, ValueError):
    """Input makes the requested fit meaningless (e.g. identically zero)."""

    kind = "degenerate-input"


class MLOverflowError(FracwaveError, OverflowError):
    """Mittag-Leffler value exceeds the double-precision range."""

    kind = "overflow"
    numerical = True


class StepFailureError(FracwaveError):
    """Corrector iteration did not converge."""

    kind = "step-failure"
    numerical = True

    def __init__(self, message: str, node_index: int, **details: Any):
        super().__init__(message, node_index=node_index, **details)
        self.node_index = node_index


class IndeterminateError(FracwaveError):
    """Mesh refinement gave inconsistent threshold crossings."""

    kind = "indeterminate"
    numerical = True

    def __init__(self, message: str, crossing_times: List[Optional[float]], **details: Any):
        super().__init__(message, crossing_times=crossing_times, **details)
        self.crossing_times = crossing_times


class RateUndefinedError(FracwaveError):
    """Log-log fit impossible because the quantity changes sign in the window."""

    kind = "rate-undefined"
    numerical = True


def exit_code(exc: BaseException) -> int:
    """Map an exception to the CLI exit status (1 validation, 2 numerical)."""
    if isinstance(exc, FracwaveError) and exc.numerical:
        return 2
    if isinstance(exc, (FloatingPointError, ArithmeticError)):
        return 2
    return 1


def error_document(exc: BaseException) -> Dict[str, Any]:
    """JSON-ready description of any exception."""
    if isinstance(exc, FracwaveError):
        return exc.to_dict()
    return {"error": type(exc).__name__, "message": str(exc)}
