"""Per-iteration error metrics and bound auditing.

Metrics are computed on blocks of iterates at once; :class:`Auditor` is an
engine hook that accumulates them over a run and flags every iteration at
which a theoretical bound whose hypotheses hold is violated.

For problems with a non-unique solution set (the basis-pursuit dual) the
mean error is measured against the single reference solution supplied by
the oracle. That distance upper-bounds the distance to the solution set, so
upper-bound checks remain one-sided safe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import TOL
from .engine import AgentStates, StateBlock, lyapunov_value
from .mixing import MixingMatrix
from .problems import BasisPursuitDual, ConsensusProblem
from .theory import BoundSet, bp_primal_bound, descent_threshold

FIELDS = (
    "k",
    "max_dev",
    "dev_bound",
    "rbar",
    "ebar",
    "h_norm",
    "D",
    "lyapunov",
    "local_err_max",
    "envelope",
    "grad_dev_max",
    "g_gap",
    "local_gap",
    "primal_err",
    "primal_bound",
)


@dataclass(frozen=True)
class Reference:
    """Centralized optimum: ``x_star`` in ``R^p``, ``f_star = f(x_star)``, optional primal ``y_star``."""

    x_star: np.ndarray
    f_star: float
    y_star: np.ndarray | None = None


def reference_for(prob: ConsensusProblem, x_star, y_star=None) -> Reference:
    x_star = np.asarray(x_star, dtype=np.float64).reshape(prob.p)
    return Reference(x_star, float(prob.total(x_star)), None if y_star is None else np.asarray(y_star, dtype=np.float64))


@dataclass
class IterationRecord:
    k: int
    max_dev: float
    rbar: float
    ebar: float
    h_norm: float
    lyapunov: float
    local_err_max: float
    dev_bound: float = math.nan
    D: float = math.nan
    envelope: float = math.nan
    grad_dev_max: float = math.nan
    g_gap: float = math.nan
    local_gap: float = math.nan
    primal_err: float = math.nan
    primal_bound: float = math.nan
    flags: tuple[str, ...] = ()


def _nan_if_none(v):
    return math.nan if v is None else float(v)


def gradient_deviation(s, prob: ConsensusProblem):
    """Max over agents of ``||grad f_i(x_i) - grad f_i(x_bar)||`` and ``||g - g_bar||``.

    ``g`` averages the gradients at the agents' iterates, ``g_bar`` the
    gradients at the mean. Broadcasts over leading axes.
    """
    X = s.x if isinstance(s, AgentStates) else np.asarray(s, dtype=np.float64)
    diff = _grad_diffs(X, prob)
    per_agent = np.linalg.norm(diff, axis=-1).max(axis=-1)
    return per_agent, np.linalg.norm(diff.mean(axis=-2), axis=-1)


def _grad_diffs(X, prob, G=None):
    xbar = X.mean(axis=-2, keepdims=True)
    G = prob.grads(X) if G is None else G
    return G - prob.grads(np.ascontiguousarray(np.broadcast_to(xbar, X.shape)))


def local_objective_gap(s, prob: ConsensusProblem, ref: Reference, chunk: int = 8):
    """``max_i f_bar(x_i) - f_bar*``; broadcasts over leading axes."""
    X = s.x if isinstance(s, AgentStates) else np.asarray(s, dtype=np.float64)
    lead = X.shape[:-2]
    flat = X.reshape((-1,) + X.shape[-2:])
    out = np.empty(flat.shape[0])
    for a in range(0, flat.shape[0], chunk):
        vals = prob.mean_value(flat[a : a + chunk])
        out[a : a + chunk] = vals.max(axis=-1)
    return (out - ref.f_star / prob.n).reshape(lead)


def _metrics(X, prob, w, alpha, ref, local_gap):
    xbar = X.mean(axis=-2)
    dev = np.linalg.norm(X - xbar[..., None, :], axis=-1)
    G = prob.grads(X)
    out = {
        "max_dev": dev.max(axis=-1),
        "rbar": (prob.total(xbar) - ref.f_star) / prob.n,
        "ebar": np.linalg.norm(xbar - ref.x_star, axis=-1),
        "h_norm": np.linalg.norm(G, axis=(-2, -1)),
        "lyapunov": lyapunov_value(X, w, alpha, prob),
        "local_err_max": np.linalg.norm(X - ref.x_star, axis=-1).max(axis=-1),
    }
    diff = _grad_diffs(X, prob, G)
    dnorm = np.linalg.norm(diff, axis=-1)
    out["grad_dev_max"] = dnorm.max(axis=-1)
    out["g_gap"] = np.linalg.norm(diff.mean(axis=-2), axis=-1)
    scale = np.maximum(1.0, np.abs(X).max(axis=(-2, -1)))
    out["_lyap_floor"] = X.shape[-2] * (TOL.lyapunov_ulps * np.finfo(np.float64).eps * scale) ** 2
    out["_grad_dev_scaled"] = (dnorm / prob.lipschitz).max(axis=-1)
    m = X.shape[0]
    out["local_gap"] = local_objective_gap(X, prob, ref) if local_gap else np.full(m, math.nan)
    if isinstance(prob, BasisPursuitDual) and ref.y_star is not None:
        out["primal_err"] = np.linalg.norm(prob.primal(X) - ref.y_star, axis=-1)
        out["primal_bound"] = bp_primal_bound(prob, X, ref.x_star)
    else:
        out["primal_err"] = np.full(m, math.nan)
        out["primal_bound"] = np.full(m, math.nan)
    return out


class Auditor:
    """Engine hook measuring every round and checking it against ``bounds``.

    A check runs only when its hypotheses hold for this run: the stepsize
    conditions in ``bounds`` and, for constants that assume a zero start,
    ``x(0) = 0``. ``violations`` counts flagged iterations per check.
    """

    CHECKS = ("grad", "dev", "lyap", "grad_dev", "rate", "envelope", "descent", "local_gap", "primal")

    def __init__(self, prob, w: MixingMatrix, alpha, ref: Reference, bounds: BoundSet | None = None,
                 local_gap: bool = False, slack: float | None = None):
        self.prob = prob
        self.w = w
        self.alpha = float(alpha)
        self.ref = ref
        self.bounds = bounds
        self.local_gap = local_gap
        self.slack = TOL.slack if slack is None else slack
        self.columns: dict[str, list[np.ndarray]] = {f: [] for f in FIELDS}
        self.flag_rows: list[tuple[str, ...]] = []
        self.violations = {c: 0 for c in self.CHECKS}
        self._prev = None
        self._x0_norm = None
        self._e0 = None

    # ------------------------------------------------------------------

    def _bound_columns(self, ks):
        bs = self.bounds
        m = ks.shape[0]
        nan = np.full(m, math.nan)
        if bs is None:
            return nan, nan, nan
        D = np.full(m, _nan_if_none(bs.D))
        if bs.dev_bound is None:
            dev = nan
        elif bs.gradient_bound_kind == "generalized":
            dev = bs.beta ** ks * self._x0_norm + bs.dev_bound
        else:
            dev = np.full(m, bs.dev_bound)
        if bs.rate_ok and bs.local_neighborhood is not None and self._e0 is not None:
            env = bs.c3 ** ks * self._e0 + bs.local_neighborhood
        else:
            env = nan
        return dev, D, env

    def __call__(self, block: StateBlock):
        X = np.asarray(block.x, dtype=np.float64)
        ks = block.ks
        if block.k0 == 0 and self._x0_norm is None:
            self._x0_norm = float(np.linalg.norm(X[0]))
            self._e0 = float(np.linalg.norm(X[0].mean(axis=0) - self.ref.x_star))
        met = _metrics(X, self.prob, self.w, self.alpha, self.ref, self.local_gap)
        dev_b, D, env = self._bound_columns(ks)
        met["k"] = ks
        met["dev_bound"] = dev_b
        met["D"] = D
        met["envelope"] = env
        flags = self._flags(met, ks)
        for f in FIELDS:
            self.columns[f].append(np.asarray(met[f]))
        self.flag_rows.extend(flags)
        self._prev = {f: met[f][-1] for f in ("lyapunov", "ebar", "rbar")}

    def _flags(self, met, ks):
        bs = self.bounds
        m = ks.shape[0]
        bad = {}
        s = self.slack
        if bs is not None and bs.thm1_ok:
            if bs.D is not None:
                bad["grad"] = met["h_norm"] > met["D"] + s
                bad["grad_dev"] = (met["_grad_dev_scaled"] > met["dev_bound"] + s) | (
                    met["g_gap"] > met["dev_bound"] * self.prob.L_h + s
                )
            if bs.dev_bound is not None:
                bad["dev"] = met["max_dev"] > met["dev_bound"] + s
            lyap = met["lyapunov"]
            prev = np.concatenate([[self._prev["lyapunov"] if self._prev else np.inf], lyap[:-1]])
            bad["lyap"] = lyap > prev + TOL.lyapunov_rel * np.abs(prev) + met["_lyap_floor"]
            if self.local_gap and bs.D is not None:
                bad["local_gap"] = met["local_gap"] > met["rbar"] + self.alpha * bs.D**2 / (1 - bs.beta) + s
        if bs is not None and bs.rate_ok:
            e = met["ebar"]
            prev = np.concatenate([[self._prev["ebar"] if self._prev else np.inf], e[:-1]])
            bad["rate"] = np.isfinite(prev) & (e**2 > bs.c3**2 * prev**2 + bs.c4**2 + s)
            if bs.alpha < bs.ceiling and bs.gradient_bound_kind == "zero-start":
                bad["envelope"] = met["local_err_max"] > met["envelope"] + s
        if (bs is not None and bs.C is not None and bs.D is not None and bs.thm1_ok
                and self.alpha <= 1.0 / bs.L_fbar * (1 + 1e-12)):
            r = met["rbar"]
            prev = np.concatenate([[self._prev["rbar"] if self._prev else np.nan], r[:-1]])
            thr = descent_threshold(bs.C, self.alpha, bs.L_h, bs.D, bs.beta)
            noise = self.alpha**3 * (bs.D * bs.L_h) ** 2 / (2 * (1 - bs.beta) ** 2)
            active = np.isfinite(prev) & (prev > thr)
            rhs = prev - self.alpha / (2 * bs.C**2) * prev**2 + noise + s
            bad["descent"] = active & (r > rhs)
        if not np.all(np.isnan(met["primal_err"])):
            bad["primal"] = met["primal_err"] > met["primal_bound"] + s
        rows = []
        for idx in range(m):
            row = tuple(name for name in self.CHECKS if name in bad and bool(bad[name][idx]))
            rows.append(row)
        for name, arr in bad.items():
            self.violations[name] += int(np.count_nonzero(arr))
        return rows

    # ------------------------------------------------------------------

    @property
    def table(self) -> dict[str, np.ndarray]:
        return {f: (np.concatenate(v) if v else np.empty(0)) for f, v in self.columns.items()}

    @property
    def total_violations(self) -> int:
        return sum(self.violations.values())

    def records(self) -> list[IterationRecord]:
        t = self.table
        out = []
        for idx in range(t["k"].shape[0]):
            kw = {f: float(t[f][idx]) for f in FIELDS if f != "k"}
            out.append(IterationRecord(k=int(t["k"][idx]), flags=self.flag_rows[idx], **kw))
        return out


def measure(s: AgentStates, prob, w, alpha, ref: Reference, bounds: BoundSet | None = None,
            local_gap: bool = True) -> IterationRecord:
    """Metrics of a single state, with the bound-violation flags that need no history."""
    aud = Auditor(prob, w, alpha, ref, bounds, local_gap=local_gap)
    aud._x0_norm = float(np.linalg.norm(s.x))
    aud(StateBlock(s.k, np.asarray(s.x, dtype=np.float64)[None]))
    return aud.records()[0]
