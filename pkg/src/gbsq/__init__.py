"""Pseudo-spectral solver and diagnostics for generalized Boussinesq flows on the 2-torus."""

from .dynamics import NumericsParams, State, SystemParams, integrate, step
from .io import RunConfig, load_config, parse_config, read_snapshot, write_snapshot
from .runner import RunResult, run, twin_run

__all__ = [
    "NumericsParams",
    "RunConfig",
    "RunResult",
    "State",
    "SystemParams",
    "integrate",
    "load_config",
    "parse_config",
    "read_snapshot",
    "run",
    "step",
    "twin_run",
    "write_snapshot",
]
__version__ = "0.1.0"
