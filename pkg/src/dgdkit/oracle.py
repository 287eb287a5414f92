"""Centralized ground truth for verifying decentralized runs."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg

from . import kernels
from .config import TOL
from .mixing import symmetric_eigenvalues
from .problems import (
    BasisPursuitInstance,
    LeastSquaresInstance,
    LeastSquaresProblem,
    instance_hash,
    shrink,
)


class OracleError(RuntimeError):
    pass


class RankDeficientError(OracleError):
    pass


def centralized_gd(grad, alpha, x0, max_iter=10_000, tol=1e-10, history=False):
    """Plain gradient descent ``x <- x - alpha * grad(x)``.

    Stops once ``||grad(x)|| <= tol`` or after ``max_iter`` steps. With
    ``history=True`` also returns the array of all visited iterates.
    """
    x = np.array(x0, dtype=np.float64, copy=True)
    path = [x.copy()] if history else None
    for _ in range(int(max_iter)):
        g = np.asarray(grad(x), dtype=np.float64)
        if np.linalg.norm(g) <= tol:
            break
        x = x - alpha * g
        if history:
            path.append(x.copy())
    if history:
        return x, np.array(path)
    return x


def _ls_normal_equations(problem_or_inst):
    if isinstance(problem_or_inst, LeastSquaresInstance):
        A, b = problem_or_inst.A, problem_or_inst.b
    elif isinstance(problem_or_inst, LeastSquaresProblem):
        A, b = problem_or_inst.A, problem_or_inst.b
    else:
        raise TypeError("expected a least-squares instance or problem")
    gram = np.einsum("nmp,nmq->pq", A, A)
    rhs = np.einsum("nmp,nm->p", A, b)
    return gram, rhs


def least_squares_solve(inst) -> np.ndarray:
    """Solve ``(sum A_i^T A_i) x = sum A_i^T b_i``.

    Raises
    ------
    RankDeficientError
        When the Gram matrix condition number exceeds 1e12.
    """
    gram, rhs = _ls_normal_equations(inst)
    lam = symmetric_eigenvalues(gram)
    if lam[-1] <= 0 or lam[0] / lam[-1] > TOL.rank_condition:
        cond = np.inf if lam[-1] <= 0 else lam[0] / lam[-1]
        raise RankDeficientError(f"Gram matrix is rank deficient (condition ~ {cond:.3e})")
    try:
        c = scipy.linalg.cho_factor(gram)
        return scipy.linalg.cho_solve(c, rhs)
    except np.linalg.LinAlgError:
        return scipy.linalg.solve(gram, rhs, assume_a="sym")


@dataclass
class BPSolution:
    x: np.ndarray
    y: np.ndarray
    iterations: int
    residual: float


def bp_centralized_solve(inst: BasisPursuitInstance, tol: float = 1e-10, max_iter: int = 1_000_000) -> BPSolution:
    """Gradient descent on the basis-pursuit dual with stepsize ``1 / (gamma ||A||^2)``.

    The primal estimate is ``y = gamma Shrink(A^T x)``; the dual gradient is
    ``A y - b``, so the stop rule ``||A y - b|| <= tol ||b||`` is the
    feasibility postcondition.
    """
    A = np.ascontiguousarray(inst.A)
    b = np.ascontiguousarray(inst.b, dtype=np.float64)
    gamma = float(inst.gamma)
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    norm2 = symmetric_eigenvalues(A @ A.T)[0]
    step = 1.0 / (gamma * norm2) if norm2 > 0 else 1.0
    target = tol * float(np.linalg.norm(b))
    x, y, it, res = kernels.bp_dual_gd(A, b, gamma, step, np.zeros(A.shape[0]), int(max_iter), target)
    if res > target:
        raise OracleError(f"no convergence in {max_iter} iterations, residual {res:.3e} > {target:.3e}")
    return BPSolution(np.asarray(x), np.asarray(y), int(it), float(res))


def verify_gamma(inst: BasisPursuitInstance, y_star, tol: float = 1e-6) -> bool:
    """True when ``y_star`` is feasible and no larger in l1 than ``y_true``.

    An operational check that ``gamma`` is large enough for the regularized
    problem to return an l1 minimizer.
    """
    y_star = np.asarray(y_star, dtype=np.float64)
    feas = np.linalg.norm(inst.A @ y_star - inst.b) <= tol * max(np.linalg.norm(inst.b), 1e-300)
    l1 = np.sum(np.abs(y_star)) <= np.sum(np.abs(inst.y_true)) * (1.0 + tol)
    return bool(feas and l1)


def bp_optimality_residual(inst: BasisPursuitInstance, sol: BPSolution) -> float:
    """Max deviation from ``y = gamma Shrink(A^T x)``."""
    return float(np.max(np.abs(sol.y - inst.gamma * shrink(inst.A.T @ sol.x)), initial=0.0))


class OracleCache:
    """JSON cache of oracle outputs keyed by the SHA-256 of the instance."""

    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _path(self, inst):
        return self.root / f"{instance_hash(inst)}.json"

    def get(self, inst):
        path = self._path(inst)
        if not path.exists():
            return None
        with open(path) as fh:
            d = json.load(fh)
        return {k: (np.array(v) if isinstance(v, list) else v) for k, v in d.items()}

    def put(self, inst, **values):
        payload = {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in values.items()}
        with open(self._path(inst), "w") as fh:
            json.dump(payload, fh, sort_keys=True)


def solve(inst, cache: OracleCache | None = None, tol: float = 1e-10) -> dict:
    """Ground truth for an instance: ``x_star`` (and ``y_star`` for basis pursuit)."""
    if cache is not None:
        hit = cache.get(inst)
        if hit is not None:
            return hit
    if isinstance(inst, LeastSquaresInstance):
        out = {"x_star": least_squares_solve(inst)}
    elif isinstance(inst, BasisPursuitInstance):
        sol = bp_centralized_solve(inst, tol=tol)
        out = {"x_star": sol.x, "y_star": sol.y, "iterations": sol.iterations, "residual": sol.residual}
    else:
        raise TypeError(f"no oracle for {type(inst).__name__}")
    if cache is not None:
        cache.put(inst, **out)
    return out
