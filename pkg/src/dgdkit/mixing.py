"""Symmetric doubly stochastic mixing matrices and their spectra."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .config import TOL
from .netgen import Graph


class MixingError(ValueError):
    pass


def symmetric_eigenvalues(m, tol: float | None = None, max_sweeps: int | None = None) -> np.ndarray:
    """All eigenvalues of a dense symmetric matrix, nonincreasing.

    Cyclic Jacobi rotations until the off-diagonal Frobenius norm drops below
    ``tol`` times the matrix Frobenius norm.
    """
    a = np.asarray(m, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise MixingError(f"expected a square matrix, got shape {a.shape}")
    if a.size and np.max(np.abs(a - a.T)) > TOL.symmetric * max(1.0, np.max(np.abs(a))):
        raise MixingError("matrix is not symmetric")
    if a.shape[0] == 0:
        return np.empty(0)
    a = 0.5 * (a + a.T)
    tol = TOL.jacobi_off if tol is None else tol
    sweeps = TOL.jacobi_sweeps if max_sweeps is None else max_sweeps
    d, _, converged = kernels.jacobi_eigenvalues(np.ascontiguousarray(a), tol, sweeps)
    if not converged:
        raise MixingError(f"Jacobi did not converge in {sweeps} sweeps")
    return np.sort(d)[::-1].copy()


@dataclass(frozen=True)
class MixingMatrix:
    """Immutable mixing matrix with cached spectrum.

    ``lam`` holds the eigenvalues sorted nonincreasing; ``beta`` is the
    second largest eigenvalue magnitude ``max(|lam[1]|, |lam[-1]|)``.
    """

    w: np.ndarray
    name: str = "custom"
    lam: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        w = np.array(self.w, dtype=np.float64, copy=True)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise MixingError(f"mixing matrix must be square, got {w.shape}")
        w.setflags(write=False)
        object.__setattr__(self, "w", w)
        lam = symmetric_eigenvalues(w)
        lam.setflags(write=False)
        object.__setattr__(self, "lam", lam)

    @property
    def n(self) -> int:
        return self.w.shape[0]

    @property
    def lambda_2(self) -> float:
        return float(self.lam[1]) if self.n > 1 else 0.0

    @property
    def lambda_n(self) -> float:
        return float(self.lam[-1]) if self.n > 1 else float(self.lam[0])

    @property
    def beta(self) -> float:
        if self.n == 1:
            return 0.0
        return float(max(abs(self.lam[1]), abs(self.lam[-1])))

    def offdiag_pairs(self):
        """``(i, j, w_ij)`` arrays for the nonzero entries with ``i < j``."""
        i, j = np.nonzero(np.triu(self.w, k=1))
        return i, j, self.w[i, j]


def _symmetric_from_upper(n, pairs, diag_rest=True):
    w = np.zeros((n, n))
    for i, j, v in pairs:
        w[i, j] = v
        w[j, i] = v
    if diag_rest:
        np.fill_diagonal(w, 1.0 - (w.sum(axis=1) - np.diag(w)))
    return w


def metropolis_weights(g: Graph) -> MixingMatrix:
    """Metropolis rule ``w_ij = 1 / (1 + max(deg_i, deg_j))`` on graph edges."""
    deg = g.degrees
    pairs = [(i, j, 1.0 / (1.0 + max(deg[i], deg[j]))) for i, j in g.edges]
    return MixingMatrix(_symmetric_from_upper(g.n, pairs), name="metropolis")


def paper_example_matrix(tau: float) -> MixingMatrix:
    """3-agent matrix with eigenvalues ``{1, 1 - 3 tau, 3 tau - 1}``."""
    if not (0.0 < tau < 1.0 / 3.0):
        raise MixingError("tau must lie in (0, 1/3)")
    r = 1.0 - 2.0 * tau
    w = np.array([[r, tau, tau], [tau, tau, r], [tau, r, tau]])
    return MixingMatrix(w, name=f"example(tau={tau!r})")


def lazy_transform(m: MixingMatrix) -> MixingMatrix:
    """``(W + I) / 2``; maps each eigenvalue ``lam`` to ``(lam + 1) / 2``."""
    return MixingMatrix(0.5 * (m.w + np.eye(m.n)), name=f"lazy({m.name})")


def validate(m, tol: float | None = None, graph: Graph | None = None) -> list[str]:
    """Return human-readable descriptions of violated invariants (empty if valid)."""
    tol = TOL.stochastic if tol is None else tol
    w = m.w if isinstance(m, MixingMatrix) else np.asarray(m, dtype=np.float64)
    problems = []
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        return [f"not square: shape {w.shape}"]
    n = w.shape[0]
    asym = np.max(np.abs(w - w.T)) if n else 0.0
    if asym > tol:
        problems.append(f"symmetry: max |w_ij - w_ji| = {asym:.3e}")
    row = np.max(np.abs(w.sum(axis=1) - 1.0))
    if row > tol:
        problems.append(f"row sums: max deviation {row:.3e}")
    col = np.max(np.abs(w.sum(axis=0) - 1.0))
    if col > tol:
        problems.append(f"column sums: max deviation {col:.3e}")
    if graph is not None:
        allowed = graph.adjacency() + np.eye(n)
        bad = np.argwhere((w != 0.0) & (allowed == 0.0))
        if bad.size:
            i, j = bad[0]
            problems.append(f"sparsity: w[{i}][{j}] != 0 but ({i}, {j}) is not an edge")
    if problems:
        return problems
    lam = m.lam if isinstance(m, MixingMatrix) else symmetric_eigenvalues(w)
    if abs(lam[0] - 1.0) > TOL.unit_eigenvalue:
        problems.append(f"largest eigenvalue {lam[0]!r} != 1")
    if lam[-1] < -1.0 - TOL.unit_eigenvalue:
        problems.append(f"smallest eigenvalue {lam[-1]!r} < -1")
    return problems


def dump_csv(m: MixingMatrix, path) -> None:
    rows = [",".join(f"{v:.17g}" for v in row) for row in m.w]
    Path(path).write_text("\n".join(rows) + "\n")


def load_csv(path, name: str = "csv") -> MixingMatrix:
    rows = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
    w = np.array([[float(v) for v in ln.split(",")] for ln in rows])
    return MixingMatrix(w, name=name)
