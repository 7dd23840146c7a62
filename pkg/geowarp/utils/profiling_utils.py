import logging
import time
from contextlib import contextmanager
from typing import Dict

logger = logging.getLogger(__name__)


@contextmanager
def profile_stage(stage_name: str, profiling_data: Dict[str, dict], verbose: bool = False):
    """Time a block of a CLI run when verbose mode is enabled.

    Args:
        stage_name: Key under which the timing is stored
        profiling_data: Dictionary receiving ``{"duration_seconds", "duration_ms"}``
        verbose: No-op when False, so non-verbose outputs stay deterministic

    Example:
        >>> timings = {}
        >>> with profile_stage("render", timings, verbose=True):
        ...     pass
        >>> sorted(timings["render"])
        ['duration_ms', 'duration_seconds']
    """
    if not verbose:
        yield
        return

    start_time = time.perf_counter()
    try:
        yield
    finally:
        duration = time.perf_counter() - start_time
        profiling_data[stage_name] = {
            "duration_seconds": round(duration, 3),
            "duration_ms": round(duration * 1000, 1),
        }
        logger.debug(f"{stage_name} took {duration:.3f}s")
