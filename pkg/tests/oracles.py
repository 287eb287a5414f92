"""Independent reference computations used by the test suites."""

from __future__ import annotations

import numpy as np


def central_fd(f, x, h=1e-6):
    """Central finite-difference gradient of a scalar function."""
    x = np.asarray(x, dtype=np.float64)
    g = np.empty_like(x)
    for j in range(x.size):
        e = np.zeros_like(x)
        e.flat[j] = h
        g.flat[j] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def power_iteration(m, iters=2000, seed=0):
    """Largest eigenvalue of a symmetric positive semidefinite matrix."""
    v = np.random.default_rng(seed).standard_normal(m.shape[0])
    lam = 0.0
    for _ in range(iters):
        u = m @ v
        lam_new = float(np.linalg.norm(u))
        if lam_new == 0.0:
            return 0.0
        v = u / lam_new
        if abs(lam_new - lam) <= 1e-15 * lam_new:
            break
        lam = lam_new
    return float(v @ m @ v)


def rel_err(a, b, floor=1e-3):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), floor))
