import logging
import os
from pathlib import Path
from typing import Optional

from dotenv import load_dotenv

from geowarp.config.constants import OptimizerDefaults

logger = logging.getLogger(__name__)

THREADS_ENV_VAR = "GEOWARP_THREADS"
STAGE_ITERATIONS_ENV_VAR = "GEOWARP_STAGE_ITERATIONS"


def load_env_file(env_file: Optional[str] = None, override: bool = False) -> bool:
    """Load environment variables from .env file"""
    if env_file is None:
        project_root = Path(__file__).parent.parent.parent
        env_file = project_root / ".env"

    env_path = Path(env_file)

    if not env_path.exists():
        logger.debug(f".env file not found at {env_path}")
        return False

    try:
        load_dotenv(env_path, override=override)
        logger.info(f"Loaded environment variables from {env_path}")
        return True
    except Exception as e:
        logger.error(f"Failed to load .env file: {e}")
        return False


def get_env_var(key: str, default: str = "", required: bool = False) -> str:
    """Get environment variable with optional validation"""
    value = os.getenv(key, default)
    if required and not value:
        raise ValueError(f"Required environment variable {key} is not set")
    return value


def get_env_int(key: str, default: int = 0, required: bool = False) -> int:
    """Get environment variable as integer"""
    value = get_env_var(key, str(default), required)
    try:
        return int(value)
    except ValueError:
        raise ValueError(f"Environment variable {key} must be an integer, got: {value}")


def get_env_float(key: str, default: float = 0.0, required: bool = False) -> float:
    """Get environment variable as float"""
    value = get_env_var(key, repr(default), required)
    try:
        return float(value)
    except ValueError:
        raise ValueError(f"Environment variable {key} must be a number, got: {value}")


def get_env_bool(key: str, default: bool = False, required: bool = False) -> bool:
    """Get environment variable as boolean"""
    value = get_env_var(key, str(default).lower(), required)
    return value.lower() in ("true", "1", "yes", "on")


def get_max_workers() -> int:
    """Parallelism cap from GEOWARP_THREADS (at least 1)."""
    return max(1, get_env_int(THREADS_ENV_VAR, 1))


def get_stage_iterations() -> int:
    """Iterations per optimizer stage from GEOWARP_STAGE_ITERATIONS, read at call time."""
    return get_env_int(STAGE_ITERATIONS_ENV_VAR, OptimizerDefaults.STAGE_ITERATIONS.value)


def validate_env_config() -> dict:
    """Check that the optional numeric environment variables parse."""
    problems = []
    for key in (THREADS_ENV_VAR, STAGE_ITERATIONS_ENV_VAR):
        raw = os.getenv(key)
        if raw is None:
            continue
        try:
            if int(raw) < 1:
                problems.append(f"{key} must be >= 1")
        except ValueError:
            problems.append(f"{key} must be an integer")
    return {"valid": len(problems) == 0, "problems": problems}


def print_env_status():
    """Log the environment configuration status"""
    validation = validate_env_config()

    if validation["valid"]:
        logger.debug("Environment configuration OK")
    else:
        logger.warning(f"Environment problems: {', '.join(validation['problems'])}")

    for var in (THREADS_ENV_VAR, STAGE_ITERATIONS_ENV_VAR, "LOG_LEVEL", "LOG_TO_FILE"):
        value = os.getenv(var, "not set")
        logger.debug(f"{var}: {value}")
