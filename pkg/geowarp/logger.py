import logging

from geowarp.config.env_loader import get_env_bool, get_env_var

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
DEFAULT_LOG_FILE = "geowarp.log"


def resolve_level(name: str) -> int:
    """Map a LOG_LEVEL value to a logging level; unknown names fall back to INFO."""
    level = logging.getLevelNamesMapping().get(name.strip().upper())
    return level if level is not None else logging.INFO


def setup_logging(force: bool = False, verbose: bool = False) -> logging.Logger:
    """Configure the root logger from LOG_LEVEL, LOG_TO_FILE and LOG_FILE.

    Args:
        force: Replace handlers installed by an earlier call (the CLI calls this
               after loading the env file, which may change the variables).
        verbose: Log at DEBUG regardless of LOG_LEVEL.
    """
    handlers: list[logging.Handler] = [logging.StreamHandler()]
    if get_env_bool("LOG_TO_FILE"):
        handlers.append(logging.FileHandler(get_env_var("LOG_FILE", DEFAULT_LOG_FILE), mode="a"))

    level = logging.DEBUG if verbose else resolve_level(get_env_var("LOG_LEVEL", "INFO"))
    logging.basicConfig(level=level, format=LOG_FORMAT, handlers=handlers, force=force)
    return logging.getLogger("geowarp")
