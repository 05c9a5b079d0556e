"""Exact jet-space calculus, symmetries, adjoint-symmetries and conservation laws."""

from .adjoint_symmetry import (
    action_lie,
    action_s1,
    action_s2,
    adjoint_residual,
    conservation_current,
    gauge_adjoint_symmetry,
    pairing_vanishes,
    symmetry_residual,
)
from .calculus import LinDiffOp, adjoint_frechet, euler, frechet, is_total_divergence
from .grammar import Namespace, ParseError, format_expr, parse_expr
from .jet_core import DiffExpr, MultiIndex, total_derivative
from .pde_system import PdeSystem, check_solution, compatibility_operator, hadamard_factor, reduce_on_solutions

__version__ = "0.1.0"


def corpus_path(name: str):
    """Path of a bundled example file such as ``"kdv.sys"``."""
    from importlib.resources import files

    return files(__name__) / "corpus" / name
