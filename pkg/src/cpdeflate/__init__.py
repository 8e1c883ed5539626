"""Rank-1 tensor approximation, deflation-based CP decomposition, and
convergence diagnostics, with a reproducible benchmark CLI."""

from . import bench, diagnostics, kernels, rank1, solvers, tensors
from .kernels import EigPair, KroneckerSum, SingularTriplet
from .rank1 import CEState, Rank1Term
from .solvers import CPModel, DeflationTrace, SolveReport, StopRule

__version__ = "0.1.0"

__all__ = [
    "CEState",
    "CPModel",
    "DeflationTrace",
    "EigPair",
    "KroneckerSum",
    "Rank1Term",
    "SingularTriplet",
    "SolveReport",
    "StopRule",
    "bench",
    "diagnostics",
    "kernels",
    "rank1",
    "solvers",
    "tensors",
]
