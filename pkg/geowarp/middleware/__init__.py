"""
Cross-cutting handling of subcommand failures.
"""

from .error_middleware import (
    EXIT_NUMERICAL,
    EXIT_OK,
    EXIT_VALIDATION,
    ErrorMiddleware,
    error_middleware,
)

__all__ = [
    "ErrorMiddleware",
    "error_middleware",
    "EXIT_OK",
    "EXIT_VALIDATION",
    "EXIT_NUMERICAL",
]
