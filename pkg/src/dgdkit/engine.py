"""The decentralized gradient descent iteration.

One round: every agent reads the round-``k`` state, mixes its neighbors'
copies with weights ``w_ij`` and takes a local gradient step::

    x_i(k+1) = sum_j w_ij x_j(k) - alpha * grad f_i(x_i(k))

All agents update simultaneously from the same immutable ``k``-state.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import kernels
from .config import TOL
from .mixing import MixingMatrix
from .problems import ConsensusProblem


class DivergenceError(ArithmeticError):
    """An iterate entry exceeded the overflow guard."""


@dataclass(frozen=True)
class AgentStates:
    """Round counter and stacked iterate, one row per agent."""

    k: int
    x: np.ndarray

    @property
    def stacked(self) -> np.ndarray:
        """Agent-major vector ``[x_1; ...; x_n]`` of length ``n * p``."""
        return self.x.reshape(-1)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]


@dataclass
class StateBlock:
    """Consecutive states ``x(k0), ..., x(k0 + len - 1)`` passed to run hooks."""

    k0: int
    x: np.ndarray

    def __len__(self):
        return self.x.shape[0]

    @property
    def ks(self) -> np.ndarray:
        return np.arange(self.k0, self.k0 + len(self))


@dataclass
class Trace:
    alpha: float
    meta: dict = field(default_factory=dict)
    states: np.ndarray | None = None
    iterations: int = 0
    status: str = "max_iter"
    final: np.ndarray | None = None

    @property
    def diverged(self) -> bool:
        return self.status == "diverged"


def mean_state(s) -> np.ndarray:
    """Agent average ``x_bar``; accepts :class:`AgentStates` or an ``(..., n, p)`` array."""
    x = s.x if isinstance(s, AgentStates) else np.asarray(s, dtype=np.float64)
    return x.mean(axis=-2)


def stacked_gradient(s, prob: ConsensusProblem) -> np.ndarray:
    """``h(k)``: per-agent gradients at the agents' own iterates, agent-major."""
    x = s.x if isinstance(s, AgentStates) else np.asarray(s, dtype=np.float64)
    return prob.grads(x).reshape(x.shape[:-2] + (-1,))


def consensus_gap(x, w: MixingMatrix) -> np.ndarray:
    """``0.5 (sum_i ||x_i||^2 - sum_ij w_ij x_i^T x_j)`` for ``(..., n, p)`` input.

    Evaluated as ``0.5 * sum_{i<j} w_ij ||x_i - x_j||^2`` (exact for doubly
    stochastic ``W``), which avoids cancellation near consensus.
    """
    x = np.asarray(x, dtype=np.float64)
    i, j, v = w.offdiag_pairs()
    flat = np.ascontiguousarray(x.reshape((-1,) + x.shape[-2:]))
    return kernels.pair_gap(flat, i, j, v).reshape(x.shape[:-2])


def lyapunov_value(s, w: MixingMatrix, alpha: float, prob: ConsensusProblem):
    """``xi_alpha(x) = consensus_gap(x) + alpha * sum_i f_i(x_i)``.

    DGD is unit-stepsize gradient descent on this function.
    """
    x = s.x if isinstance(s, AgentStates) else np.asarray(s, dtype=np.float64)
    return consensus_gap(x, w) + alpha * prob.values(x).sum(axis=-1)


def _check_dims(x, w, prob):
    if x.shape != (prob.n, prob.p):
        raise ValueError(f"state shape {x.shape} != ({prob.n}, {prob.p})")
    if w.n != prob.n:
        raise ValueError(f"mixing matrix is {w.n}x{w.n} but the problem has {prob.n} agents")


def dgd_step(s: AgentStates, w: MixingMatrix, alpha: float, prob: ConsensusProblem, guard: float | None = None) -> AgentStates:
    """One synchronous round.

    Raises
    ------
    DivergenceError
        If any entry of the new state exceeds ``guard`` (default 1e12).
    """
    guard = TOL.overflow_guard if guard is None else guard
    x = np.ascontiguousarray(s.x, dtype=np.float64)
    _check_dims(x, w, prob)
    y = kernels.mix_step(w.w, x, prob.grads(x), float(alpha))
    if not np.all(np.abs(y) <= guard):
        raise DivergenceError(f"iterate exceeded {guard:g} at round {s.k + 1}")
    return AgentStates(s.k + 1, y)


def _advance(prob, w, alpha, x, n_steps, tol, guard):
    """Run up to ``n_steps`` rounds from ``x``; returns (states incl. x, status)."""
    spec = prob.kernel()
    W = w.w
    if spec is not None:
        name, args = spec
        fn = kernels.ls_run if name == "ls" else kernels.bp_run
        return fn(W, *args, float(alpha), x, int(n_steps), float(tol), float(guard))
    hist = np.empty((n_steps + 1,) + x.shape)
    hist[0] = x
    for k in range(n_steps):
        y = kernels.mix_step(W, x, prob.grads(x), float(alpha))
        hist[k + 1] = y
        if not np.all(np.abs(y) <= guard):
            return hist[: k + 2], kernels.RUN_DIVERGED
        if tol > 0.0 and np.sqrt(np.sum((y - x) ** 2)) < tol:
            return hist[: k + 2], kernels.RUN_STOPPED
        x = y
    return hist, kernels.RUN_MAX_ITER


_STATUS = {
    kernels.RUN_MAX_ITER: "max_iter",
    kernels.RUN_STOPPED: "converged",
    kernels.RUN_DIVERGED: "diverged",
}


def run(
    prob: ConsensusProblem,
    w: MixingMatrix,
    alpha: float,
    x0=None,
    max_iter: int = 1000,
    tol: float = 0.0,
    hooks: Sequence[Callable[[StateBlock], None]] = (),
    keep_states: bool = True,
    block: int = 1000,
    guard: float | None = None,
    meta: dict | None = None,
) -> Trace:
    """Iterate DGD from ``x0`` (zeros by default).

    Stops after ``max_iter`` rounds, when ``||x(k+1) - x(k)|| < tol``, or
    when the overflow guard trips (which takes precedence). Rounds are
    processed in blocks of ``block``; each hook is called once per block
    with a :class:`StateBlock`, so every round is seen exactly once.
    """
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    guard = TOL.overflow_guard if guard is None else guard
    x = np.zeros((prob.n, prob.p)) if x0 is None else np.array(x0, dtype=np.float64).reshape(prob.n, prob.p)
    x = np.ascontiguousarray(x)
    _check_dims(x, w, prob)
    trace = Trace(alpha=float(alpha), meta=dict(meta or {}))
    kept = [x[None]] if keep_states else None
    first = StateBlock(0, x[None].copy())
    for hook in hooks:
        hook(first)
    done = 0
    status = kernels.RUN_MAX_ITER
    while done < max_iter:
        steps = min(block, max_iter - done)
        hist, status = _advance(prob, w, alpha, x, steps, tol, guard)
        produced = hist.shape[0] - 1
        blk = StateBlock(done + 1, hist[1:])
        for hook in hooks:
            hook(blk)
        if keep_states:
            kept.append(hist[1:])
        done += produced
        x = np.ascontiguousarray(hist[-1])
        if status != kernels.RUN_MAX_ITER:
            break
    trace.iterations = done
    trace.status = _STATUS[status]
    trace.final = x
    if keep_states:
        trace.states = np.concatenate(kept, axis=0)
    return trace
