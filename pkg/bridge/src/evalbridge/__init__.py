"""Reference external fitness evaluator over a line-delimited JSON protocol."""

from .config import BridgeConfig, load_config
from .network import build_network, parameter_count
from .server import handle_request, serve

__version__ = "0.1.0"

__all__ = [
    "BridgeConfig",
    "build_network",
    "handle_request",
    "load_config",
    "parameter_count",
    "serve",
]
