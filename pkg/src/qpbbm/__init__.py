"""Spectral Picard solver and verification suite for the generalized BBM equation
with quasi-periodic initial data."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    BlowUpError,
    ConfigurationError,
    ConvergenceError,
    DomainError,
    EnvelopeViolationError,
    TreeTooLargeError,
)
from .lattice import Truncation, default_omega, enumerate_lattice, multiplier, multipliers  # noqa: E402
from .spectral import CoeffField, DecayKind, DecayProfile, convolve_p, evaluate_u, make_initial  # noqa: E402
from .bounds import HorizonReport, b_frak, horizon, zeta_partial  # noqa: E402
from .combinatorics import TreeNode, TreeStats, diamond_sum, enumerate_tree, stats, tree_eval  # noqa: E402
from .picard import SolverConfig, TimeGridField, picard_step, residual, solve, uniqueness_probe  # noqa: E402
from .oracle import OdeState, rhs, rk4_integrate  # noqa: E402

__all__ = [
    "BlowUpError", "ConfigurationError", "ConvergenceError", "DomainError", "EnvelopeViolationError",
    "TreeTooLargeError", "Truncation", "default_omega", "enumerate_lattice", "multiplier", "multipliers",
    "CoeffField", "DecayKind", "DecayProfile", "convolve_p", "evaluate_u", "make_initial",
    "HorizonReport", "b_frak", "horizon", "zeta_partial", "TreeNode", "TreeStats", "diamond_sum",
    "enumerate_tree", "stats", "tree_eval", "SolverConfig", "TimeGridField", "picard_step", "residual",
    "solve", "uniqueness_probe", "OdeState", "rhs", "rk4_integrate",
]
