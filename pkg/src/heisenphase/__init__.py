"""Heisenberg-group operator calculus on sampled phase space."""

from .core import GroupElement, Params, PhasePoint
from .grid import ConfigFn, GridSpec, PhaseFn, self_dual_grids

__all__ = ["GroupElement", "Params", "PhasePoint", "ConfigFn", "GridSpec", "PhaseFn", "self_dual_grids"]
__version__ = "0.1.0"
