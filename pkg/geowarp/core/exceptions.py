from typing import Any, Optional


class GeoWarpError(Exception):
    """Base class for all geowarp errors."""


class FieldError(GeoWarpError, ValueError):
    """Invalid dense field: wrong shape, non-finite or out-of-range values."""


class GeometryError(GeoWarpError, ValueError):
    """Invalid camera intrinsics, pose or depth."""


class DegenerateMotionError(GeometryError):
    """Camera motion carries no epipolar information (near-zero translation)."""


class EstimationError(GeoWarpError):
    """Fundamental-matrix estimation failed."""


class InsufficientCorrespondencesError(EstimationError, ValueError):
    """Fewer correspondences than the estimator needs."""


class NumericalError(GeoWarpError, ArithmeticError):
    """A loss or gradient became non-finite."""

    def __init__(self, message: str, term: Optional[str] = None):
        super().__init__(message)
        self.term = term


class OptimizationAborted(NumericalError):
    """Optimization hit a non-finite loss; carries the last good state."""

    def __init__(
        self,
        message: str,
        term: Optional[str] = None,
        last_good: Any = None,
        trace: Any = None,
    ):
        super().__init__(message, term=term)
        self.last_good = last_good
        self.trace = trace


class ParseError(GeoWarpError, ValueError):
    """Malformed KITTI artifact or container file."""

    def __init__(self, message: str, line: Optional[int] = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class SceneSpecError(GeoWarpError, ValueError):
    """Synthetic scene description violates its invariants."""
