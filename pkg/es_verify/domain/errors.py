# domain/errors.py

from typing import Iterable, Optional, Sequence


class ErrorCategory:
    OBJECTIVE = "objective"
    PARAMETER = "parameter"
    ESTIMATION = "estimation"
    INVARIANT = "invariant"
    USAGE = "usage"
    UNKNOWN = "unknown"


class ApplicationError(Exception):
    """Base exception class for application-specific errors."""
    def __init__(self, message: str, category: str = ErrorCategory.UNKNOWN):
        super().__init__(message)
        self.category = category


class ObjectiveEvaluationError(ApplicationError):
    """The objective returned a non-finite value."""
    def __init__(self, message: str, iteration: Optional[int] = None,
                 point: Optional[Sequence[float]] = None):
        if iteration is not None:
            message = f"iteration {iteration}: {message}"
        super().__init__(message, ErrorCategory.OBJECTIVE)
        self.iteration = iteration
        self.point = None if point is None else [float(v) for v in point]


class ObjectiveSpecError(ApplicationError):
    """Unknown objective id, variant or malformed parameter."""
    def __init__(self, message: str, valid_ids: Iterable[str] = ()):
        self.valid_ids = list(valid_ids)
        if self.valid_ids:
            message = f"{message} (valid ids: {', '.join(self.valid_ids)})"
        super().__init__(message, ErrorCategory.USAGE)


class ParameterError(ApplicationError, ValueError):
    def __init__(self, message: str):
        super().__init__(message, ErrorCategory.PARAMETER)


class OracleUnavailableError(ApplicationError):
    def __init__(self, message: str):
        super().__init__(message, ErrorCategory.OBJECTIVE)


class EstimationError(ApplicationError):
    def __init__(self, message: str):
        super().__init__(message, ErrorCategory.ESTIMATION)


class InvariantViolation(ApplicationError):
    def __init__(self, message: str):
        super().__init__(message, ErrorCategory.INVARIANT)


class UsageError(ApplicationError):
    def __init__(self, message: str):
        super().__init__(message, ErrorCategory.USAGE)
