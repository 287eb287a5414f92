"""Consensus problems and the three concrete instance families.

A problem evaluates every agent at once on a stacked iterate ``X`` of shape
``(..., n, p)``: row ``i`` of the last two axes is agent ``i``'s copy. Leading
axes broadcast, so a whole block of iterates can be measured in one call.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np

from . import kernels
from ._accel import HAS_NUMBA
from .mixing import symmetric_eigenvalues


def shrink(z):
    """Componentwise soft threshold at 1: ``sign(z) * max(|z| - 1, 0)``."""
    z = np.asarray(z, dtype=np.float64)
    return np.sign(z) * np.maximum(np.abs(z) - 1.0, 0.0)


def _clip_excess(z):
    """``z - Proj_[-1, 1](z)``, which equals ``shrink(z)``."""
    return z - np.clip(z, -1.0, 1.0)


class ConsensusProblem:
    """Sum of ``n`` per-agent objectives over a shared variable in ``R^p``.

    Subclasses implement :meth:`values` and :meth:`grads` on stacked arrays.
    ``f_min`` holds the per-agent minimum values when they are known in
    closed form; ``mu_f`` and ``nu_f`` are the strong and restricted strong
    convexity moduli of the total objective, with 0 meaning unknown.
    """

    kind = "generic"

    def __init__(self, n, p, lipschitz, f_min=None, mu_f=0.0, nu_f=0.0):
        self.n = int(n)
        self.p = int(p)
        self.lipschitz = np.asarray(lipschitz, dtype=np.float64).reshape(self.n)
        self.f_min = None if f_min is None else np.asarray(f_min, dtype=np.float64).reshape(self.n)
        self.mu_f = float(mu_f)
        self.nu_f = float(nu_f)

    # stacked evaluation -------------------------------------------------

    def values(self, X) -> np.ndarray:
        raise NotImplementedError

    def grads(self, X) -> np.ndarray:
        raise NotImplementedError

    # per-agent accessors ------------------------------------------------

    def f(self, i: int, x) -> float:
        X = np.broadcast_to(np.asarray(x, dtype=np.float64), (self.n, self.p))
        return float(self.values(X)[i])

    def grad(self, i: int, x) -> np.ndarray:
        X = np.broadcast_to(np.asarray(x, dtype=np.float64), (self.n, self.p)).copy()
        return self.grads(X)[i]

    # aggregates ---------------------------------------------------------

    def _spread(self, x):
        x = np.asarray(x, dtype=np.float64)
        return np.broadcast_to(x[..., None, :], x.shape[:-1] + (self.n, self.p))

    def total(self, x):
        """``f(x) = sum_i f_i(x)`` for ``x`` of shape ``(..., p)``."""
        return self.values(self._spread(x)).sum(axis=-1)

    def total_grad(self, x):
        return self.grads(np.ascontiguousarray(self._spread(x))).sum(axis=-2)

    def mean_value(self, x):
        """``f_bar(x) = f(x) / n``."""
        return self.total(x) / self.n

    @property
    def L_h(self) -> float:
        return float(np.max(self.lipschitz))

    @property
    def L_fbar(self) -> float:
        return float(np.mean(self.lipschitz))

    @property
    def mu_fbar(self) -> float:
        return self.mu_f / self.n

    @property
    def nu_fbar(self) -> float:
        return self.nu_f / self.n

    def kernel(self):
        """``(name, args)`` for a compiled whole-run loop, or ``None``."""
        return None


class CallableProblem(ConsensusProblem):
    """Problem assembled from per-agent value and gradient callables."""

    def __init__(self, fs, grads, p, lipschitz, f_min=None, mu_f=0.0, nu_f=0.0):
        super().__init__(len(fs), p, lipschitz, f_min, mu_f, nu_f)
        self._fs = list(fs)
        self._gs = list(grads)

    def values(self, X):
        X = np.asarray(X, dtype=np.float64)
        return np.stack([np.apply_along_axis(f, -1, X[..., i, :]) for i, f in enumerate(self._fs)], axis=-1)

    def grads(self, X):
        X = np.asarray(X, dtype=np.float64)
        out = np.empty(X.shape)
        for i, g in enumerate(self._gs):
            out[..., i, :] = np.apply_along_axis(g, -1, X[..., i, :])
        return out


class QuadraticExample(ConsensusProblem):
    """Three identical agents ``f_i(x) = (L_h / 2)(x - 1)^2`` on the real line."""

    kind = "quadratic-example"

    def __init__(self, L_h: float, n: int = 3, center: float = 1.0):
        if not L_h > 0:
            raise ValueError("L_h must be positive")
        super().__init__(n, 1, np.full(n, float(L_h)), np.zeros(n), mu_f=n * float(L_h))
        self.scale = float(L_h)
        self.center = float(center)

    def values(self, X):
        X = np.asarray(X, dtype=np.float64)
        return 0.5 * self.scale * np.sum((X - self.center) ** 2, axis=-1)

    def grads(self, X):
        return self.scale * (np.asarray(X, dtype=np.float64) - self.center)


def quadratic_example(L_h: float) -> QuadraticExample:
    return QuadraticExample(L_h)


class LeastSquaresProblem(ConsensusProblem):
    """``f_i(x) = 0.5 ||b_i - A_i x||^2`` with ``A`` of shape ``(n, m, p)``."""

    kind = "least-squares"

    def __init__(self, A, b):
        A = np.ascontiguousarray(A, dtype=np.float64)
        b = np.ascontiguousarray(b, dtype=np.float64)
        if A.ndim != 3 or b.shape != A.shape[:2]:
            raise ValueError(f"inconsistent shapes A{A.shape}, b{b.shape}")
        n, m, p = A.shape
        grams = np.einsum("nmp,nmq->npq", A, A)
        lips = np.array([symmetric_eigenvalues(g)[0] for g in grams])
        total_gram = grams.sum(axis=0)
        mu = max(float(symmetric_eigenvalues(total_gram)[-1]), 0.0)
        f_min = np.empty(n)
        for i in range(n):
            sol, _, rank, _ = np.linalg.lstsq(A[i], b[i], rcond=None)
            if rank == m:
                f_min[i] = 0.0
            else:
                r = A[i] @ sol - b[i]
                f_min[i] = 0.5 * float(r @ r)
        super().__init__(n, p, lips, f_min, mu_f=mu)
        self.A = A
        self.b = b

    def values(self, X):
        r = np.einsum("nmp,...np->...nm", self.A, X) - self.b
        return 0.5 * np.sum(r * r, axis=-1)

    def grads(self, X):
        X = np.asarray(X, dtype=np.float64)
        if HAS_NUMBA and X.ndim >= 2:
            if X.ndim == 2:
                return kernels.ls_grads(self.A, self.b, np.ascontiguousarray(X))
            flat = np.ascontiguousarray(X.reshape((-1,) + X.shape[-2:]))
            return kernels._ls_grads_batch_nb(self.A, self.b, flat).reshape(X.shape)
        r = np.einsum("nmp,...np->...nm", self.A, X) - self.b
        return np.einsum("nmp,...nm->...np", self.A, r)

    def kernel(self):
        return "ls", (self.A, self.b)


def least_squares(A_list, b_list) -> LeastSquaresProblem:
    A = np.stack([np.atleast_2d(np.asarray(a, dtype=np.float64)) for a in A_list])
    b = np.stack([np.atleast_1d(np.asarray(v, dtype=np.float64)) for v in b_list])
    return LeastSquaresProblem(A, b)


class BasisPursuitDual(ConsensusProblem):
    """Column-partitioned dual of the l1 + l2/(2 gamma) regularized basis pursuit.

    ``f_i(x) = (gamma/2) ||A_i^T x - Proj(A_i^T x)||^2 - b^T x / n`` with the
    blocks stored as ``A`` of shape ``(n, p, q_i)``. Local minima are not
    finite in general, so ``f_min`` is ``None``. ``nu_f`` may be injected
    when a restricted strong convexity constant is known.
    """

    kind = "basis-pursuit"

    def __init__(self, blocks, b, gamma, nu_f=0.0):
        if not gamma > 0:
            raise ValueError("gamma must be positive")
        A = np.ascontiguousarray(blocks, dtype=np.float64)
        b = np.ascontiguousarray(b, dtype=np.float64)
        if A.ndim != 3 or A.shape[1] != b.shape[0]:
            raise ValueError(f"inconsistent shapes blocks{A.shape}, b{b.shape}")
        n, p, _ = A.shape
        norms2 = np.array([symmetric_eigenvalues(a @ a.T)[0] for a in A])
        super().__init__(n, p, float(gamma) * norms2, None, mu_f=0.0, nu_f=nu_f)
        self.A = A
        self.b = b
        self.gamma = float(gamma)
        self.bn = b / n
        self.block_norms = np.sqrt(norms2)

    def values(self, X):
        X = np.asarray(X, dtype=np.float64)
        Z = np.einsum("npq,...np->...nq", self.A, X)
        e = _clip_excess(Z)
        return 0.5 * self.gamma * np.sum(e * e, axis=-1) - X @ self.bn

    def grads(self, X):
        X = np.asarray(X, dtype=np.float64)
        if HAS_NUMBA and X.ndim >= 2:
            if X.ndim == 2:
                return kernels.bp_grads(self.A, self.bn, self.gamma, np.ascontiguousarray(X))
            flat = np.ascontiguousarray(X.reshape((-1,) + X.shape[-2:]))
            return kernels._bp_grads_batch_nb(self.A, self.bn, self.gamma, flat).reshape(X.shape)
        Z = np.einsum("npq,...np->...nq", self.A, X)
        return self.gamma * np.einsum("npq,...nq->...np", self.A, shrink(Z)) - self.bn

    def primal(self, X):
        """Stacked local primal estimates ``y_i = gamma Shrink(A_i^T x_i)``, shape ``(..., q)``."""
        Z = np.einsum("npq,...np->...nq", self.A, np.asarray(X, dtype=np.float64))
        y = self.gamma * shrink(Z)
        return y.reshape(y.shape[:-2] + (-1,))

    def kernel(self):
        return "bp", (self.A, self.bn, self.gamma)


# --------------------------------------------------------------------------
# instances


def _rng(seed):
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


@dataclass
class LeastSquaresInstance:
    """Per-agent ``A_i`` (m x p), ``b_i = A_i x_true + noise_i``.

    ``noise`` is the standard deviation of the additive measurement noise;
    with ``noise == 0`` every ``b_i`` is exactly ``A_i x_true``.
    """

    A: np.ndarray
    b: np.ndarray
    x_true: np.ndarray
    seed: int | None = None
    noise: float = 0.0

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def p(self):
        return self.A.shape[2]

    def problem(self) -> LeastSquaresProblem:
        return LeastSquaresProblem(self.A, self.b)

    def to_dict(self):
        return {
            "kind": "least-squares",
            "seed": self.seed,
            "noise": self.noise,
            "n": int(self.A.shape[0]),
            "m": int(self.A.shape[1]),
            "p": int(self.A.shape[2]),
            "A": self.A.tolist(),
            "b": self.b.tolist(),
            "x_true": self.x_true.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            np.array(d["A"], dtype=np.float64),
            np.array(d["b"], dtype=np.float64),
            np.array(d["x_true"], dtype=np.float64),
            d.get("seed"),
            float(d.get("noise", 0.0)),
        )


def generate_ls_instance(n: int, p: int, seed: int, m: int | None = None, noise: float = 0.0) -> LeastSquaresInstance:
    """Gaussian ``A_i`` and ``x_true``; ``m`` rows per agent (default ``p``)."""
    m = p if m is None else m
    rng = _rng([seed, 1])
    x_true = rng.standard_normal(p)
    A = rng.standard_normal((n, m, p))
    b = np.einsum("nmp,p->nm", A, x_true)
    if noise > 0:
        b = b + noise * rng.standard_normal((n, m))
    return LeastSquaresInstance(A, b, x_true, seed, float(noise))


@dataclass
class BasisPursuitInstance:
    """Column blocks ``A_i`` (p x q_i), measurement ``b = A y_true``, weight ``gamma``."""

    blocks: np.ndarray
    b: np.ndarray
    gamma: float
    y_true: np.ndarray
    seed: int | None = None

    @property
    def n(self):
        return self.blocks.shape[0]

    @property
    def p(self):
        return self.blocks.shape[1]

    @property
    def q(self):
        return self.blocks.shape[0] * self.blocks.shape[2]

    @property
    def A(self) -> np.ndarray:
        """The full ``p x q`` dictionary with blocks side by side."""
        return np.concatenate(list(self.blocks), axis=1)

    def problem(self, nu_f: float = 0.0) -> BasisPursuitDual:
        return BasisPursuitDual(self.blocks, self.b, self.gamma, nu_f=nu_f)

    def with_gamma(self, gamma: float) -> "BasisPursuitInstance":
        return BasisPursuitInstance(self.blocks, self.b, float(gamma), self.y_true, self.seed)

    def to_dict(self):
        return {
            "kind": "basis-pursuit",
            "seed": self.seed,
            "n": int(self.n),
            "p": int(self.p),
            "q": int(self.q),
            "gamma": self.gamma,
            "blocks": self.blocks.tolist(),
            "b": self.b.tolist(),
            "y_true": self.y_true.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            np.array(d["blocks"], dtype=np.float64),
            np.array(d["b"], dtype=np.float64),
            float(d["gamma"]),
            np.array(d["y_true"], dtype=np.float64),
            d.get("seed"),
        )


def generate_bp_instance(p: int, q: int, n: int, sparsity: int, gamma: float | None, seed: int) -> BasisPursuitInstance:
    """Gaussian dictionary split into ``n`` equal column blocks.

    ``y_true`` has ``sparsity`` N(0, 1) entries at uniformly drawn positions.
    ``gamma=None`` selects ``10 * ||y_true||_inf``.
    """
    if q % n:
        raise ValueError(f"n={n} must divide q={q}")
    if not (0 <= sparsity <= p):
        raise ValueError("sparsity must lie in [0, p]")
    rng = _rng([seed, 2])
    A = rng.standard_normal((p, q))
    y = np.zeros(q)
    support = rng.choice(q, size=sparsity, replace=False)
    y[support] = rng.standard_normal(sparsity)
    b = A @ y
    if gamma is None:
        gamma = 10.0 * float(np.max(np.abs(y))) if sparsity else 1.0
    blocks = np.ascontiguousarray(A.reshape(p, n, q // n).transpose(1, 0, 2))
    return BasisPursuitInstance(blocks, b, float(gamma), y, seed)


def basis_pursuit_dual(inst: BasisPursuitInstance, nu_f: float = 0.0) -> BasisPursuitDual:
    return inst.problem(nu_f=nu_f)


def instance_from_dict(d):
    kind = d.get("kind")
    if kind == "least-squares":
        return LeastSquaresInstance.from_dict(d)
    if kind == "basis-pursuit":
        return BasisPursuitInstance.from_dict(d)
    raise ValueError(f"unknown instance kind {kind!r}")


def dump_instance(inst, path) -> None:
    with open(path, "w") as fh:
        json.dump(inst.to_dict(), fh)


def load_instance(path):
    with open(path) as fh:
        return instance_from_dict(json.load(fh))


def instance_hash(inst) -> str:
    payload = json.dumps(inst.to_dict(), sort_keys=True).encode()
    return hashlib.sha256(payload).hexdigest()
