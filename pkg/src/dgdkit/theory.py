"""Closed-form constants and bounds for fixed-stepsize DGD.

Constants that need information the problem does not carry (per-agent
minima, convexity moduli) are reported as ``None`` rather than guessed.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .config import TOL
from .mixing import MixingMatrix
from .problems import BasisPursuitDual, ConsensusProblem


class BoundUnavailable(ValueError):
    """A bound needs data the problem does not provide."""


def gradient_bound_D(prob: ConsensusProblem) -> float:
    """``D = sqrt(2 L_h sum_i (f_i(0) - f_i^o))``, the uniform bound on ``||h(k)||`` from ``x(0) = 0``."""
    if prob.f_min is None:
        raise BoundUnavailable("per-agent minimum values are unknown")
    f0 = prob.values(np.zeros((prob.n, prob.p)))
    gap = float(np.sum(f0 - prob.f_min))
    return math.sqrt(max(2.0 * prob.L_h * gap, 0.0))


def generalized_D(prob: ConsensusProblem, x0, w: MixingMatrix, alpha: float) -> float:
    """Gradient bound for a nonzero start: adds ``(L_h/alpha) * (sum ||x_i||^2 - sum w_ij x_i^T x_j)``."""
    from .engine import consensus_gap

    D = gradient_bound_D(prob)
    x0 = np.asarray(x0, dtype=np.float64).reshape(prob.n, prob.p)
    extra = (prob.L_h / alpha) * 2.0 * float(consensus_gap(x0, w))
    return math.sqrt(D * D + extra)


def sc_constants(mu_fbar: float, L_fbar: float) -> tuple[float, float]:
    """``(c1, c2)`` for a strongly convex average objective."""
    s = mu_fbar + L_fbar
    return 1.0 / s, mu_fbar * L_fbar / s


def rsc_constants(nu_fbar: float, L_fbar: float, theta: float | None = None) -> tuple[float, float]:
    """``(c1, c2) = (theta / L_fbar, (1 - theta) nu_fbar)`` under restricted strong convexity."""
    theta = TOL.rsc_theta if theta is None else theta
    if not 0.0 <= theta <= 1.0:
        raise ValueError("theta must lie in [0, 1]")
    return theta / L_fbar, (1.0 - theta) * nu_fbar


def convexity_constants(prob: ConsensusProblem, theta: float | None = None):
    """``(c1, c2)`` from whichever modulus the problem knows, else ``None``."""
    if prob.mu_f > 0:
        return sc_constants(prob.mu_fbar, prob.L_fbar)
    if prob.nu_f > 0:
        return rsc_constants(prob.nu_fbar, prob.L_fbar, theta)
    return None


def stepsize_ceiling(prob: ConsensusProblem, w: MixingMatrix, theta: float | None = None) -> float:
    """``min((1 + lambda_n) / L_h, c1)``, or the first term alone without a convexity modulus."""
    a = (1.0 + w.lambda_n) / prob.L_h
    cc = convexity_constants(prob, theta)
    return a if cc is None else min(a, cc[0])


def deviation_bound(alpha: float, D: float, beta: float) -> float:
    """``alpha D / (1 - beta)``: uniform bound on ``||x_i(k) - x_bar(k)||``."""
    return alpha * D / (1.0 - beta)


def linear_rate_constants(alpha, c2, D, L_h, beta, delta=None):
    """Contraction ``c3``, offset ``c4`` and neighborhood ``c4 / sqrt(1 - c3^2)``.

    With ``delta`` omitted, ``delta = c2 / (2 (1 - alpha c2))`` so that
    ``c3 = sqrt(1 - alpha c2 / 2)``.

    Returns
    -------
    tuple
        ``(delta, c3, c4, neighborhood)``.
    """
    if not alpha * c2 < 1.0:
        raise ValueError("need alpha * c2 < 1")
    if delta is None:
        if c2 <= 0:
            raise ValueError("the default delta needs c2 > 0")
        delta = c2 / (2.0 * (1.0 - alpha * c2))
    c3sq = 1.0 - alpha * c2 + alpha * delta - alpha * alpha * delta * c2
    c4sq = alpha**3 * (alpha + 1.0 / delta) * (L_h * D) ** 2 / (1.0 - beta) ** 2
    c3 = math.sqrt(c3sq)
    c4 = math.sqrt(c4sq)
    neighborhood = c4 / math.sqrt(1.0 - c3sq) if c3sq < 1.0 else math.inf
    return delta, c3, c4, neighborhood


def constant_C(prob, w, alpha, x0, xtilde, xstar) -> float:
    """``(||x0 - x_tilde|| + ||x_tilde - x*||) / sqrt(n)`` over stacked vectors.

    ``xtilde`` is a minimizer of the Lyapunov function (the DGD fixed point);
    ``xstar`` is a solution of the original problem, repeated per agent.
    """
    n = prob.n
    x0 = np.zeros((n, prob.p)) if x0 is None else np.asarray(x0, dtype=np.float64).reshape(n, prob.p)
    xt = np.asarray(xtilde, dtype=np.float64).reshape(n, prob.p)
    xs = np.broadcast_to(np.asarray(xstar, dtype=np.float64).reshape(-1, prob.p)[-1], (n, prob.p))
    return (np.linalg.norm(x0 - xt) + np.linalg.norm(xt - xs)) / math.sqrt(n)


def lyapunov_minimizer(prob, w, alpha, x0=None, tol=None, max_iter=1_000_000):
    """DGD fixed point, found by iterating until successive change ``< tol`` (1e-12)."""
    from .engine import run

    tol = TOL.fixed_point_tol if tol is None else tol
    tr = run(prob, w, alpha, x0=x0, max_iter=max_iter, tol=tol, keep_states=False, block=20000)
    return tr.final


def descent_inequality_check(rbar_k, rbar_k1, alpha, C, D, L_h, beta, slack=None) -> bool:
    """``rbar(k+1) <= rbar(k) - alpha/(2 C^2) rbar(k)^2 + alpha^3 D^2 L_h^2 / (2 (1 - beta)^2)``."""
    slack = TOL.slack if slack is None else slack
    noise = alpha**3 * (D * L_h) ** 2 / (2.0 * (1.0 - beta) ** 2)
    drop = alpha / (2.0 * C * C) * rbar_k * rbar_k if C > 0 else 0.0
    return bool(rbar_k1 <= rbar_k - drop + noise + slack)


def descent_threshold(C, alpha, L_h, D, beta) -> float:
    """``rbar`` level above which the sublinear decrease is guaranteed."""
    return C * math.sqrt(2.0) * alpha * L_h * D / (1.0 - beta)


def bp_primal_bound(prob: BasisPursuitDual, states, xbar_star) -> np.ndarray:
    """``n gamma max_i ||A_i|| ||x_i - x_bar*||``; broadcasts over leading axes of ``states``."""
    X = np.asarray(states, dtype=np.float64)
    d = np.linalg.norm(X - np.asarray(xbar_star, dtype=np.float64), axis=-1)
    return prob.n * prob.gamma * np.max(prob.block_norms * d, axis=-1)


@dataclass
class BoundSet:
    """Every constant the diagnostics compare against; ``None`` when not computable."""

    alpha: float
    L_h: float
    L_fbar: float
    lambda_n: float
    beta: float
    alpha_max_thm1: float
    ceiling: float
    D: float | None = None
    dev_bound: float | None = None
    c1: float | None = None
    c2: float | None = None
    delta: float | None = None
    c3: float | None = None
    c4: float | None = None
    neighborhood: float | None = None
    local_neighborhood: float | None = None
    C: float | None = None
    e0: float | None = None
    gradient_bound_kind: str = "zero-start"

    @property
    def thm1_ok(self) -> bool:
        """Stepsize satisfies the bounded-gradient condition."""
        return self.alpha <= self.alpha_max_thm1 * (1.0 + 1e-12)

    @property
    def rate_ok(self) -> bool:
        """Linear-rate hypotheses hold and constants are available."""
        return self.c3 is not None and self.alpha <= self.ceiling * (1.0 + 1e-12) and 0.0 < self.c3 < 1.0

    def to_json(self) -> str:
        def clean(v):
            if isinstance(v, float) and not math.isfinite(v):
                return None
            return v

        return json.dumps({k: clean(v) for k, v in asdict(self).items()}, indent=2, sort_keys=True)


def bound_set(prob, w, alpha, x0=None, theta=None, C=None, e0=None) -> BoundSet:
    """Assemble the :class:`BoundSet` for one run.

    A nonzero ``x0`` switches ``D`` to the generalized bound. ``e0`` is the
    initial mean error ``||x_bar(0) - x*||`` used by the local-error envelope.
    """
    a1 = (1.0 + w.lambda_n) / prob.L_h
    bs = BoundSet(
        alpha=float(alpha),
        L_h=prob.L_h,
        L_fbar=prob.L_fbar,
        lambda_n=w.lambda_n,
        beta=w.beta,
        alpha_max_thm1=a1,
        ceiling=stepsize_ceiling(prob, w, theta),
        C=C,
        e0=e0,
    )
    if prob.f_min is not None:
        if x0 is not None and np.any(np.asarray(x0) != 0):
            bs.D = generalized_D(prob, x0, w, alpha)
            bs.gradient_bound_kind = "generalized"
        else:
            bs.D = gradient_bound_D(prob)
        if w.beta < 1.0:
            bs.dev_bound = deviation_bound(alpha, bs.D, w.beta)
    cc = convexity_constants(prob, theta)
    if cc is not None:
        bs.c1, bs.c2 = cc
        if bs.D is not None and w.beta < 1.0 and alpha * bs.c2 < 1.0 and bs.c2 > 0:
            bs.delta, bs.c3, bs.c4, bs.neighborhood = linear_rate_constants(alpha, bs.c2, bs.D, prob.L_h, w.beta)
            bs.local_neighborhood = bs.neighborhood + bs.dev_bound
    return bs
