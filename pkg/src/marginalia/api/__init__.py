"""HTTP service and command-line interface."""

from .config import ServiceConfig, load_config
from .service import create_app

__all__ = ["ServiceConfig", "create_app", "load_config"]
