"""Simulation and analysis toolkit for decentralized gradient descent."""

from __future__ import annotations

from ._accel import backend
from .engine import AgentStates, DivergenceError, Trace, dgd_step, lyapunov_value, mean_state, run, stacked_gradient
from .mixing import MixingMatrix, lazy_transform, metropolis_weights, paper_example_matrix, symmetric_eigenvalues, validate
from .netgen import Graph, generate_random_graph, is_connected
from .problems import (
    basis_pursuit_dual,
    generate_bp_instance,
    generate_ls_instance,
    least_squares,
    quadratic_example,
    shrink,
)
from .theory import BoundSet, bound_set

__version__ = "0.1.0"

__all__ = [
    "AgentStates",
    "BoundSet",
    "DivergenceError",
    "Graph",
    "MixingMatrix",
    "Trace",
    "backend",
    "basis_pursuit_dual",
    "bound_set",
    "dgd_step",
    "generate_bp_instance",
    "generate_ls_instance",
    "generate_random_graph",
    "is_connected",
    "lazy_transform",
    "least_squares",
    "lyapunov_value",
    "mean_state",
    "metropolis_weights",
    "paper_example_matrix",
    "quadratic_example",
    "run",
    "shrink",
    "stacked_gradient",
    "symmetric_eigenvalues",
    "validate",
]
