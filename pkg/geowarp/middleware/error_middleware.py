import json
import logging
from typing import Optional, Tuple

from pydantic import ValidationError

from geowarp.core.exceptions import GeoWarpError, NumericalError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERICAL = 2


class ErrorMiddleware:
    """
    Maps exceptions raised by a subcommand to an exit code and a JSON error body
    """

    @staticmethod
    def exit_code_for(error: BaseException) -> int:
        if isinstance(error, NumericalError):
            return EXIT_NUMERICAL
        return EXIT_VALIDATION

    def handle_error(self, error: Exception, command: str) -> Tuple[int, str]:
        """Log the failure and return (exit code, JSON error body)"""
        code = self.exit_code_for(error)
        if isinstance(error, (GeoWarpError, ValidationError, ValueError, OSError, KeyError)):
            logger.error(f"Error in {command}: {error}")
        else:
            logger.exception(f"Unexpected error in {command}: {error}")

        error_response = {
            "error": "Numerical failure" if code == EXIT_NUMERICAL else "Command failed",
            "status": "error",
            "command": command,
            "message": str(error),
            "type": type(error).__name__,
        }
        term = getattr(error, "term", None)
        if term is not None:
            error_response["term"] = term
        return code, json.dumps(error_response)

    def handle_validation_error(
        self, message: str, command: str, field: Optional[str] = None
    ) -> Tuple[int, str]:
        """Reject a run before any work starts"""
        error_response = {
            "error": "Validation failed",
            "status": "error",
            "command": command,
            "message": message,
            "type": "ValidationError",
        }
        if field:
            error_response["field"] = field
        return EXIT_VALIDATION, json.dumps(error_response)


# Global middleware instance
error_middleware = ErrorMiddleware()
