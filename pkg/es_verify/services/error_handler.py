import logging
from typing import Callable, Optional

from ..domain import (
    IErrorHandler,
    IEventBus,
    EventType,
    ErrorCategory,
    ApplicationError,
    ObjectiveEvaluationError,
    ObjectiveSpecError,
    OracleUnavailableError,
    UsageError,
)
from .core import publish

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

class ErrorHandler(IErrorHandler):
    def __init__(self, event_bus: Optional[IEventBus] = None):
        self.event_bus = event_bus
        self.logger = logging.getLogger(__name__)
        self._error_callbacks: dict[str, list[Callable]] = {}

    @staticmethod
    def categorize(error: Exception) -> str:
        if isinstance(error, ApplicationError):
            return error.category
        if isinstance(error, (ValueError, TypeError)):
            return ErrorCategory.PARAMETER
        return ErrorCategory.UNKNOWN

    def handle_error(self, error: Exception, context: str = None) -> int:
        """Log the error, notify observers and return the process exit status."""
        category = self.categorize(error)

        # Expected application errors do not need a traceback
        self.logger.error(
            f"Error in {context or 'unknown context'} ({category}): {str(error)}",
            exc_info=not isinstance(error, ApplicationError)
        )

        error_data = {
            "error": str(error),
            "category": category,
            "context": context
        }
        publish(self.event_bus, EventType.ERROR_OCCURRED, **error_data)

        for callback in self._error_callbacks.get(category, []):
            try:
                callback(error_data)
            except Exception as e:
                self.logger.error(f"Error in error callback: {e}", exc_info=True)

        return self.exit_status(error)

    def register_callback(self, category: str, callback: Callable) -> None:
        """Register a callback for a specific error category."""
        if category not in self._error_callbacks:
            self._error_callbacks[category] = []
        self._error_callbacks[category].append(callback)

    @staticmethod
    def exit_status(error: Exception) -> int:
        if isinstance(error, (UsageError, ObjectiveSpecError)):
            return EXIT_USAGE
        return EXIT_FAILURE

    @staticmethod
    def format_user_message(error: Exception) -> str:
        """Format an error message suitable for the terminal."""
        if isinstance(error, ObjectiveSpecError):
            return f"Unknown or malformed objective: {error}"
        elif isinstance(error, UsageError):
            return f"Usage error: {error}"
        elif isinstance(error, ObjectiveEvaluationError):
            return f"Objective returned a non-finite value, run aborted: {error}"
        elif isinstance(error, OracleUnavailableError):
            return f"This check needs a suboptimality oracle: {error}"
        elif isinstance(error, ApplicationError):
            return str(error)
        else:
            return f"An unexpected error occurred: {error}"
