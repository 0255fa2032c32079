"""Reference placement-policy providers for the stablepack bridge protocol."""

from .protocol import handle_line
from .providers import GreedyProvider, RandomProvider, make_provider
from .server import make_tcp_server, serve, serve_stdio

__version__ = "0.1.0"
