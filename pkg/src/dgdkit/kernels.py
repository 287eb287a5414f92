"""Hot numeric loops.

Every kernel has two implementations: an ``_nb`` loop version compiled with
numba and an ``_np`` vectorized version. The public names are bound to one of
them at import time according to :data:`dgdkit._accel.HAS_NUMBA`.

Run kernels share a status convention: ``RUN_MAX_ITER`` (step budget
exhausted), ``RUN_STOPPED`` (successive change fell below ``tol``) and
``RUN_DIVERGED`` (an entry exceeded ``guard`` or became non-finite).
"""

from __future__ import annotations

import math

import numpy as np

from ._accel import HAS_NUMBA, njit

RUN_MAX_ITER = 0
RUN_STOPPED = 1
RUN_DIVERGED = 2

__all__ = [
    "RUN_MAX_ITER",
    "RUN_STOPPED",
    "RUN_DIVERGED",
    "jacobi_eigenvalues",
    "mix_step",
    "ls_grads",
    "ls_run",
    "bp_grads",
    "bp_run",
    "bp_dual_gd",
    "pair_gap",
]


# --------------------------------------------------------------------------
# Jacobi eigenvalues


@njit
def _jacobi_nb(a, tol, max_sweeps):
    a = a.copy()
    n = a.shape[0]
    scale = 0.0
    for i in range(n):
        for j in range(n):
            scale += a[i, j] * a[i, j]
    scale = math.sqrt(scale)
    for sweep in range(max_sweeps + 1):
        off = 0.0
        for i in range(n):
            for j in range(n):
                if i != j:
                    off += a[i, j] * a[i, j]
        if math.sqrt(off) <= tol * scale:
            return np.diag(a).copy(), sweep, True
        if sweep == max_sweeps:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = 1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - s * akq
                    a[k, q] = s * akp + c * akq
                for k in range(n):
                    apk = a[p, k]
                    aqk = a[q, k]
                    a[p, k] = c * apk - s * aqk
                    a[q, k] = s * apk + c * aqk
                a[p, q] = 0.0
                a[q, p] = 0.0
    return np.diag(a).copy(), max_sweeps, False


def _round_robin(n):
    """Disjoint (p, q) pairings covering every pair once per sweep."""
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        pairs = [(players[i], players[m - 1 - i]) for i in range(m // 2)]
        pairs = [(min(p, q), max(p, q)) for p, q in pairs if p < n and q < n]
        if pairs:
            P = np.array([p for p, _ in pairs], dtype=np.intp)
            Q = np.array([q for _, q in pairs], dtype=np.intp)
            rounds.append((P, Q))
        players = [players[0]] + [players[-1]] + players[1:-1]
    return rounds


def _jacobi_np(a, tol, max_sweeps):
    a = np.array(a, dtype=np.float64, copy=True)
    n = a.shape[0]
    scale = np.sqrt(np.sum(a * a))
    rounds = _round_robin(n)
    offmask = ~np.eye(n, dtype=bool)
    for sweep in range(max_sweeps + 1):
        off = np.sqrt(np.sum(a[offmask] ** 2))
        if off <= tol * scale:
            return np.diag(a).copy(), sweep, True
        if sweep == max_sweeps:
            break
        for P, Q in rounds:
            apq = a[P, Q]
            nz = apq != 0.0
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                theta = np.where(nz, (a[Q, Q] - a[P, P]) / (2.0 * apq), 0.0)
                t = 1.0 / (np.abs(theta) + np.sqrt(theta * theta + 1.0))
            t = np.where(theta < 0.0, -t, t)
            t = np.where(nz, t, 0.0)
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            colP = a[:, P]
            colQ = a[:, Q]
            a[:, P] = c * colP - s * colQ
            a[:, Q] = s * colP + c * colQ
            rowP = a[P, :]
            rowQ = a[Q, :]
            a[P, :] = c[:, None] * rowP - s[:, None] * rowQ
            a[Q, :] = s[:, None] * rowP + c[:, None] * rowQ
            a[P, Q] = 0.0
            a[Q, P] = 0.0
    return np.diag(a).copy(), max_sweeps, False


# --------------------------------------------------------------------------
# mixing step: out = W X - alpha G


@njit
def _mix_nb(W, X, G, alpha):
    return W @ X - alpha * G


def _mix_np(W, X, G, alpha):
    return W @ X - alpha * G


# --------------------------------------------------------------------------
# least squares: f_i(x) = 0.5 ||A_i x - b_i||^2


@njit
def _ls_grads_nb(A, b, X):
    n, m, p = A.shape
    out = np.empty((n, p))
    r = np.empty(m)
    for i in range(n):
        for k in range(m):
            acc = 0.0
            for j in range(p):
                acc += A[i, k, j] * X[i, j]
            r[k] = acc - b[i, k]
        for j in range(p):
            acc = 0.0
            for k in range(m):
                acc += A[i, k, j] * r[k]
            out[i, j] = acc
    return out


@njit
def _ls_grads_batch_nb(A, b, X):
    out = np.empty(X.shape)
    for t in range(X.shape[0]):
        out[t] = _ls_grads_nb(A, b, X[t])
    return out


def _ls_grads_np(A, b, X):
    r = np.einsum("nmp,np->nm", A, X) - b
    return np.einsum("nmp,nm->np", A, r)


# --------------------------------------------------------------------------
# basis-pursuit dual: grad f_i(x) = gamma A_i Shrink(A_i^T x) - b/n


@njit
def _bp_grads_nb(A, bn, gamma, X):
    n, p, q = A.shape
    out = np.empty((n, p))
    s = np.empty(q)
    for i in range(n):
        s[:] = 0.0
        for j in range(p):
            xij = X[i, j]
            for r in range(q):
                s[r] += A[i, j, r] * xij
        for r in range(q):
            z = s[r]
            if z > 1.0:
                s[r] = z - 1.0
            elif z < -1.0:
                s[r] = z + 1.0
            else:
                s[r] = 0.0
        for j in range(p):
            acc = 0.0
            for r in range(q):
                acc += A[i, j, r] * s[r]
            out[i, j] = gamma * acc - bn[j]
    return out


@njit
def _bp_grads_batch_nb(A, bn, gamma, X):
    out = np.empty(X.shape)
    for t in range(X.shape[0]):
        out[t] = _bp_grads_nb(A, bn, gamma, X[t])
    return out


def _shrink(z):
    return np.sign(z) * np.maximum(np.abs(z) - 1.0, 0.0)


def _bp_grads_np(A, bn, gamma, X):
    Z = np.einsum("npq,np->nq", A, X)
    return gamma * np.einsum("npq,nq->np", A, _shrink(Z)) - bn


# --------------------------------------------------------------------------
# whole-run loops


@njit
def _diverged_nb(X, guard):
    n, p = X.shape
    for i in range(n):
        for c in range(p):
            v = X[i, c]
            if not (abs(v) <= guard):
                return True
    return False


@njit
def _change_nb(X, Y):
    n, p = X.shape
    acc = 0.0
    for i in range(n):
        for c in range(p):
            d = X[i, c] - Y[i, c]
            acc += d * d
    return math.sqrt(acc)


@njit
def _ls_run_nb(W, A, b, alpha, X0, n_steps, tol, guard):
    n, p = X0.shape
    hist = np.empty((n_steps + 1, n, p))
    hist[0] = X0
    X = X0.copy()
    for k in range(n_steps):
        G = _ls_grads_nb(A, b, X)
        Y = _mix_nb(W, X, G, alpha)
        hist[k + 1] = Y
        if _diverged_nb(Y, guard):
            return hist[: k + 2], RUN_DIVERGED
        if tol > 0.0 and _change_nb(Y, X) < tol:
            return hist[: k + 2], RUN_STOPPED
        X = Y
    return hist, RUN_MAX_ITER


@njit
def _bp_run_nb(W, A, bn, gamma, alpha, X0, n_steps, tol, guard):
    n, p = X0.shape
    hist = np.empty((n_steps + 1, n, p))
    hist[0] = X0
    X = X0.copy()
    for k in range(n_steps):
        G = _bp_grads_nb(A, bn, gamma, X)
        Y = _mix_nb(W, X, G, alpha)
        hist[k + 1] = Y
        if _diverged_nb(Y, guard):
            return hist[: k + 2], RUN_DIVERGED
        if tol > 0.0 and _change_nb(Y, X) < tol:
            return hist[: k + 2], RUN_STOPPED
        X = Y
    return hist, RUN_MAX_ITER


def _generic_run_np(grads, W, X0, alpha, n_steps, tol, guard):
    hist = np.empty((n_steps + 1,) + X0.shape)
    hist[0] = X0
    X = X0
    for k in range(n_steps):
        Y = W @ X - alpha * grads(X)
        hist[k + 1] = Y
        if not np.all(np.abs(Y) <= guard):
            return hist[: k + 2], RUN_DIVERGED
        if tol > 0.0 and np.sqrt(np.sum((Y - X) ** 2)) < tol:
            return hist[: k + 2], RUN_STOPPED
        X = Y
    return hist, RUN_MAX_ITER


def _ls_run_np(W, A, b, alpha, X0, n_steps, tol, guard):
    return _generic_run_np(lambda X: _ls_grads_np(A, b, X), W, X0, alpha, n_steps, tol, guard)


def _bp_run_np(W, A, bn, gamma, alpha, X0, n_steps, tol, guard):
    return _generic_run_np(
        lambda X: _bp_grads_np(A, bn, gamma, X), W, X0, alpha, n_steps, tol, guard
    )


# --------------------------------------------------------------------------
# centralized dual gradient descent for the regularized basis pursuit


@njit
def _bp_dual_gd_nb(A, b, gamma, step, x0, max_iter, tol):
    p, q = A.shape
    x = x0.copy()
    y = np.zeros(q)
    g = np.empty(p)
    gnorm = np.inf
    it = 0
    while True:
        for r in range(q):
            acc = 0.0
            for j in range(p):
                acc += A[j, r] * x[j]
            if acc > 1.0:
                y[r] = gamma * (acc - 1.0)
            elif acc < -1.0:
                y[r] = gamma * (acc + 1.0)
            else:
                y[r] = 0.0
        gn = 0.0
        for j in range(p):
            acc = 0.0
            for r in range(q):
                acc += A[j, r] * y[r]
            g[j] = acc - b[j]
            gn += g[j] * g[j]
        gnorm = math.sqrt(gn)
        if gnorm <= tol or it >= max_iter:
            break
        for j in range(p):
            x[j] -= step * g[j]
        it += 1
    return x, y, it, gnorm


def _bp_dual_gd_np(A, b, gamma, step, x0, max_iter, tol):
    x = np.array(x0, dtype=np.float64, copy=True)
    it = 0
    while True:
        y = gamma * _shrink(A.T @ x)
        g = A @ y - b
        gnorm = float(np.sqrt(g @ g))
        if gnorm <= tol or it >= max_iter:
            break
        x -= step * g
        it += 1
    return x, y, it, gnorm


# --------------------------------------------------------------------------
# consensus gap over edges


@njit
def _pair_gap_nb(X, ii, jj, v):
    m, n, p = X.shape
    out = np.zeros(m)
    for t in range(m):
        acc = 0.0
        for e in range(ii.shape[0]):
            s = 0.0
            for c in range(p):
                d = X[t, ii[e], c] - X[t, jj[e], c]
                s += d * d
            acc += v[e] * s
        out[t] = 0.5 * acc
    return out


def _pair_gap_np(X, ii, jj, v):
    d = X[:, ii, :] - X[:, jj, :]
    return 0.5 * np.sum(v * np.sum(d * d, axis=-1), axis=-1)


if HAS_NUMBA:
    pair_gap = _pair_gap_nb
    jacobi_eigenvalues = _jacobi_nb
    mix_step = _mix_nb
    ls_grads = _ls_grads_nb
    ls_run = _ls_run_nb
    bp_grads = _bp_grads_nb
    bp_run = _bp_run_nb
    bp_dual_gd = _bp_dual_gd_nb
else:
    pair_gap = _pair_gap_np
    jacobi_eigenvalues = _jacobi_np
    mix_step = _mix_np
    ls_grads = _ls_grads_np
    ls_run = _ls_run_np
    bp_grads = _bp_grads_np
    bp_run = _bp_run_np
    bp_dual_gd = _bp_dual_gd_np
