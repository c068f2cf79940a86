"""Loss robustness measures for Bayesian decisions (bindings to the C++ core)."""

from ._core import *  # noqa: F401,F403
from ._core import __version__, run_cli

__all__ = [name for name in dir() if not name.startswith("_")]
