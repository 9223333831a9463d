"""
Process-level settings for rmt, read from the environment (and .env)
"""
import os
from typing import Any, Dict

import dotenv

from rmt.utils.errors import ConfigError

DEFAULT_MASTER_SEED = 20240601
EIGENSOLVERS = ("householder_ql", "lapack")


def load_settings(overrides: Dict[str, Any] = None) -> Dict[str, Any]:
    """
    Collect settings from environment variables

    Args:
        overrides: Values that take precedence over the environment

    Returns:
        Dictionary of upper-case setting names to typed values
    """
    dotenv.load_dotenv()

    settings = dict(
        SECRET_KEY=os.environ.get("SECRET_KEY", "dev"),
        PORT=int(os.environ.get("PORT", 5000)),
        LOG_LEVEL=os.environ.get("LOG_LEVEL", "INFO"),
        RMT_MASTER_SEED=int(os.environ.get("RMT_MASTER_SEED", DEFAULT_MASTER_SEED)),
        RMT_THREADS=int(os.environ.get("RMT_THREADS", 1)),
        RMT_EIGENSOLVER=os.environ.get("RMT_EIGENSOLVER", "householder_ql").lower(),
        RMT_ENUMERATION_GUARD=int(float(os.environ.get("RMT_ENUMERATION_GUARD", 1e8))),
        VERSION="1.0.0",
    )
    if overrides:
        settings.update(overrides)

    if settings["RMT_EIGENSOLVER"] not in EIGENSOLVERS:
        raise ConfigError(f"Unknown eigensolver: {settings['RMT_EIGENSOLVER']}")
    if settings["RMT_THREADS"] < 1:
        raise ConfigError("RMT_THREADS must be at least 1")
    return settings


def get_setting(name: str) -> Any:
    """Read a single setting"""
    return load_settings()[name]
