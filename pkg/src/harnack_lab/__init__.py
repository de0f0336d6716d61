"""Jet-based verification of Ricci-flow Harnack identities on exact solutions."""

from .checks import Residual, compare, vanishes
from .harnack import HarnackData, LieAlgebraElement, bracket_and_inner, harnack_Z, trace_harnack
from .jets import ConfigurationError, Jet, jet_seed
from .solutions import DomainError, FlowSolution, make_solution, sample_points
from .spacetime import build_spacetime_connection, spacetime_curvature

__all__ = [
    "ConfigurationError",
    "DomainError",
    "FlowSolution",
    "HarnackData",
    "Jet",
    "LieAlgebraElement",
    "Residual",
    "bracket_and_inner",
    "build_spacetime_connection",
    "compare",
    "harnack_Z",
    "jet_seed",
    "make_solution",
    "sample_points",
    "spacetime_curvature",
    "trace_harnack",
    "vanishes",
]
