"""Shared tolerance and budget constants."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    """Numerical constants used across modules.

    ``slack`` is the single additive allowance applied to every theoretical
    inequality check; ``lyapunov_rel`` is the relative allowance on the
    Lyapunov descent check. ``lyapunov_ulps`` sets its absolute floor,
    ``n * (ulps * eps * max(1, max|x|))**2``, below which changes in the
    Lyapunov value are rounding noise of iterates sitting at a fixed point.
    """

    stochastic: float = 1e-12
    symmetric: float = 1e-12
    unit_eigenvalue: float = 1e-10
    jacobi_off: float = 1e-13
    jacobi_sweeps: int = 100
    slack: float = 1e-10
    lyapunov_rel: float = 1e-12
    lyapunov_ulps: float = 1000.0
    overflow_guard: float = 1e12
    fixed_point_tol: float = 1e-12
    fd_step: float = 1e-6
    shrink_kink: float = 1e-4
    rank_condition: float = 1e12
    connect_retries: int = 1000
    plateau_window: int = 50
    plateau_rel: float = 1e-3
    rsc_theta: float = 0.5


TOL = Tolerances()
