"""Nested contract knowledge graphs for construction-contract risk review."""

import nckg.config  # noqa: F401
from nckg.__version__ import (  # noqa: F401
    __author__,
    __copyright__,
    __email__,
    __license__,
    __title__,
    __version__,
)
from nckg.client import Gateway, GatewayConfig  # noqa: F401
from nckg.const import *  # noqa: F401,F403
from nckg.exceptions import *  # noqa: F401,F403
from nckg.store import GraphStore  # noqa: F401
