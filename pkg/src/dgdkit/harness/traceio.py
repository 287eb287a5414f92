"""CSV trace files and the stepsize comparison table."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from ..config import TOL

TRACE_COLUMNS = (
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
    "flags",
)

AUX_COLUMNS = ("k", "grad_dev_max", "g_gap", "local_gap", "primal_err", "primal_bound")


def _fmt(v) -> str:
    return "%.17g" % v


def _columns_of(records, names):
    """Column arrays from a list of records or a mapping of arrays."""
    if isinstance(records, dict):
        return [records[c] for c in names]
    return [[getattr(r, c) for r in records] for c in names]


def _write(path, names, cols, flags=None):
    with open(path, "w", newline="") as fh:
        fh.write(",".join(names) + "\n")
        m = len(cols[0]) if cols else 0
        lines = []
        for idx in range(m):
            parts = [str(int(cols[0][idx]))] + [_fmt(c[idx]) for c in cols[1:]]
            if flags is not None:
                parts.append("|".join(flags[idx]))
            lines.append(",".join(parts))
        if lines:
            fh.write("\n".join(lines) + "\n")


def emit_trace(records, path, flags=None) -> None:
    """Write one row per iteration with floats at 17 significant digits.

    ``records`` is a list of :class:`~dgdkit.diagnostics.IterationRecord` or a
    column mapping such as ``Auditor.table`` (then pass ``flags`` separately).
    Violated checks are joined with ``|`` in the ``flags`` column.
    """
    cols = _columns_of(records, TRACE_COLUMNS[:-1])
    if flags is None:
        flags = [r.flags for r in records] if not isinstance(records, dict) else [()] * len(cols[0])
    _write(path, TRACE_COLUMNS, cols, flags)


def emit_aux(table, path) -> None:
    """Second per-iteration file with the gradient-deviation and primal columns."""
    _write(path, AUX_COLUMNS, _columns_of(table, AUX_COLUMNS))


def read_trace(path) -> dict:
    """Parse a trace CSV back to column arrays (``flags`` as tuples)."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    out = {}
    for j, name in enumerate(header):
        if name == "flags":
            out[name] = [tuple(r[j].split("|")) if r[j] else () for r in body]
        elif name == "k":
            out[name] = np.array([int(r[j]) for r in body], dtype=np.int64)
        else:
            out[name] = np.array([float(r[j]) for r in body], dtype=np.float64)
    return out


# ----------------------------------------------------------------------
# plateau detection


def plateau_start(ebar, window: int | None = None, rel: float | None = None):
    """First ``k`` whose ``window``-iteration span has relative range below ``rel``."""
    window = TOL.plateau_window if window is None else window
    rel = TOL.plateau_rel if rel is None else rel
    e = np.asarray(ebar, dtype=np.float64)
    if e.size <= window:
        return None
    seg = np.lib.stride_tricks.sliding_window_view(e, window + 1)
    hi, lo = seg.max(axis=1), seg.min(axis=1)
    ok = np.isfinite(hi) & (hi - lo <= rel * hi)
    hits = np.flatnonzero(ok)
    return int(hits[0]) if hits.size else None


def plateau_level(ebar) -> float:
    """Median of the final 10% of the ``ebar`` sequence."""
    e = np.asarray(ebar, dtype=np.float64)
    if e.size == 0:
        return math.nan
    tail = e[-max(1, e.size // 10):]
    return float(np.median(tail))


@dataclass
class StepsizeRow:
    alpha: float
    status: str
    iterations: int
    plateau_k: int | None
    plateau: float
    neighborhood: float
    local_neighborhood: float


@dataclass
class Comparison:
    rows: list = field(default_factory=list)

    def usable(self):
        return sorted((r for r in self.rows if r.status != "diverged"), key=lambda r: r.alpha)

    @property
    def ordered(self) -> bool:
        """Plateau levels are nondecreasing in ``alpha`` among non-diverged runs."""
        lv = [r.plateau for r in self.usable()]
        return all(a <= b for a, b in zip(lv, lv[1:]))

    def ratio(self, alpha_hi: float, alpha_lo: float) -> float:
        """``plateau(alpha_hi) / plateau(alpha_lo)``; nan for a diverged or missing row."""
        by = {r.alpha: r for r in self.usable()}
        if alpha_hi not in by or alpha_lo not in by:
            return math.nan
        return by[alpha_hi].plateau / by[alpha_lo].plateau


def compare_stepsizes(traces) -> Comparison:
    """Summarize runs of the same problem at different stepsizes.

    Each entry needs ``alpha``, ``status``, ``iterations``, ``table`` (with an
    ``ebar`` column) and ``bounds`` (a BoundSet or ``None``).
    """
    rows = []
    for t in traces:
        nb = getattr(t.bounds, "neighborhood", None) if t.bounds is not None else None
        lnb = getattr(t.bounds, "local_neighborhood", None) if t.bounds is not None else None
        nbv = math.nan if nb is None else float(nb)
        lnbv = math.nan if lnb is None else float(lnb)
        if t.status == "diverged":
            rows.append(StepsizeRow(t.alpha, "diverged", t.iterations, None, math.nan, nbv, lnbv))
            continue
        e = t.table["ebar"]
        rows.append(StepsizeRow(t.alpha, t.status, t.iterations, plateau_start(e), plateau_level(e), nbv, lnbv))
    return Comparison(rows)


SUMMARY_COLUMNS = ("alpha", "status", "iterations", "plateau_k", "plateau", "neighborhood", "local_neighborhood")


def write_summary(cmp: Comparison, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(SUMMARY_COLUMNS) + "\n")
        for r in cmp.rows:
            pk = "" if r.plateau_k is None else str(r.plateau_k)
            fh.write(
                f"{_fmt(r.alpha)},{r.status},{r.iterations},{pk},{_fmt(r.plateau)},"
                f"{_fmt(r.neighborhood)},{_fmt(r.local_neighborhood)}\n"
            )
