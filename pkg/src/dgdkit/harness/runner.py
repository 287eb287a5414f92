"""Scenario orchestration: build, run, audit and write artifacts."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import oracle, theory
from ..diagnostics import Auditor, Reference, reference_for
from ..engine import run
from ..mixing import MixingMatrix, lazy_transform, metropolis_weights, paper_example_matrix
from ..netgen import generate_random_graph
from ..problems import QuadraticExample, generate_bp_instance, generate_ls_instance
from .config import RunConfig, to_ini, validated
from .traceio import compare_stepsizes, emit_aux, emit_trace, write_summary

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_VIOLATION = 3
EXIT_DIVERGED = 4


@dataclass
class Setup:
    cfg: RunConfig
    w: MixingMatrix
    prob: object
    inst: object = None
    ref: Reference | None = None
    graph: object = None
    oracle_info: dict = field(default_factory=dict)


@dataclass
class AlphaResult:
    index: int
    alpha: float
    status: str
    iterations: int
    bounds: theory.BoundSet
    violations: dict
    table: dict
    flags: list

    @property
    def total_violations(self) -> int:
        return sum(self.violations.values())


@dataclass
class ScenarioResult:
    setup: Setup
    results: list
    comparison: object
    exit_code: int


def build_network(cfg: RunConfig) -> tuple[MixingMatrix, object]:
    if cfg.mixing == "paper-example":
        return paper_example_matrix(cfg.tau), None
    if cfg.n == 1:
        return MixingMatrix(np.ones((1, 1)), name="single"), None
    g = generate_random_graph(cfg.n, cfg.eta, cfg.graph_seed)
    w = metropolis_weights(g)
    if cfg.mixing == "metropolis-lazy":
        w = lazy_transform(w)
    return w, g


def build_problem(cfg: RunConfig):
    """``(instance, problem)``; the instance is ``None`` for the quadratic example."""
    if cfg.problem == "quadratic-example":
        return None, QuadraticExample(cfg.L_h, n=cfg.n)
    if cfg.problem == "least-squares":
        inst = generate_ls_instance(cfg.n, cfg.p, cfg.instance_seed, m=cfg.m, noise=cfg.noise)
        return inst, inst.problem()
    inst = generate_bp_instance(cfg.p, cfg.q, cfg.n, cfg.sparsity, cfg.gamma, cfg.instance_seed)
    return inst, inst.problem(nu_f=cfg.nu_f)


def build_reference(cfg: RunConfig, inst, prob):
    """Oracle optimum for the run, consulting the JSON cache when configured."""
    if inst is None:
        return reference_for(prob, np.full(prob.p, prob.center)), {"x_star": [prob.center]}
    cache = oracle.OracleCache(cfg.oracle_cache) if cfg.oracle_cache else None
    sol = oracle.solve(inst, cache=cache, tol=cfg.oracle_tol)
    info = {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in sol.items()}
    y = sol.get("y_star")
    if y is not None:
        info["gamma_ok"] = oracle.verify_gamma(inst, y, tol=1e-6)
        if not info["gamma_ok"]:
            log.warning("gamma=%g failed the l1 recovery check; y* may not solve basis pursuit", inst.gamma)
    return reference_for(prob, sol["x_star"], y), info


def build(cfg: RunConfig) -> Setup:
    cfg = validated(cfg)
    w, g = build_network(cfg)
    inst, prob = build_problem(cfg)
    ref, info = build_reference(cfg, inst, prob)
    return Setup(cfg, w, prob, inst, ref, g, info)


def resolve_alphas(setup: Setup) -> list[float]:
    cfg = setup.cfg
    if cfg.alpha_scale == "absolute":
        return [float(a) for a in cfg.alphas]
    if cfg.alpha_scale == "thm1":
        base = (1.0 + setup.w.lambda_n) / setup.prob.L_h
    else:
        base = theory.stepsize_ceiling(setup.prob, setup.w, cfg.theta)
    return [float(f * base) for f in cfg.alphas]


def _x0(setup):
    if setup.cfg.x0 is None:
        return None
    return np.array(setup.cfg.x0, dtype=np.float64).reshape(setup.prob.n, setup.prob.p)


def _constant_C(setup, alpha, x0, bs):
    """``C`` from the numerically located Lyapunov minimizer, when it is reachable."""
    if not (bs.rate_ok and bs.D is not None):
        return None
    xt = theory.lyapunov_minimizer(setup.prob, setup.w, alpha, x0=x0, max_iter=200_000)
    return float(theory.constant_C(setup.prob, setup.w, alpha, x0, xt, setup.ref.x_star))


def run_alpha(setup: Setup, idx: int, alpha: float) -> AlphaResult:
    cfg = setup.cfg
    x0 = _x0(setup)
    xbar0 = np.zeros(setup.prob.p) if x0 is None else x0.mean(axis=0)
    e0 = float(np.linalg.norm(xbar0 - setup.ref.x_star))
    bs = theory.bound_set(setup.prob, setup.w, alpha, x0=x0, theta=cfg.theta, e0=e0)
    if cfg.audit:
        bs.C = _constant_C(setup, alpha, x0, bs)
    aud = Auditor(setup.prob, setup.w, alpha, setup.ref, bs, local_gap=cfg.local_gap)
    tr = run(setup.prob, setup.w, alpha, x0=x0, max_iter=cfg.max_iter_for(idx), tol=cfg.tol,
             hooks=[aud], keep_states=False)
    log.info("alpha=%.6g: %s after %d iterations, %d flagged", alpha, tr.status, tr.iterations, aud.total_violations)
    return AlphaResult(idx, alpha, tr.status, tr.iterations, bs, dict(aud.violations), aud.table, list(aud.flag_rows))


def exit_code_for(results, audit: bool) -> int:
    if results and all(r.status == "diverged" for r in results):
        return EXIT_DIVERGED
    if audit and any(r.total_violations for r in results):
        return EXIT_VIOLATION
    return EXIT_OK


def write_artifacts(out: Path, setup: Setup, results, cmp) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.ini").write_text(to_ini(setup.cfg))
    runs = []
    for r in results:
        stem = f"trace_{r.index:02d}"
        emit_trace(r.table, out / f"{stem}.csv", flags=r.flags)
        emit_aux(r.table, out / f"{stem}_aux.csv")
        (out / f"bounds_{r.index:02d}.json").write_text(r.bounds.to_json() + "\n")
        runs.append({"index": r.index, "alpha": r.alpha, "status": r.status, "iterations": r.iterations,
                     "violations": r.violations, "trace": f"{stem}.csv"})
    write_summary(cmp, out / "summary.csv")
    spec = {
        "scenario": setup.cfg.name,
        "lambda_2": setup.w.lambda_2,
        "lambda_n": setup.w.lambda_n,
        "beta": setup.w.beta,
        "runs": runs,
        "oracle": {k: v for k, v in setup.oracle_info.items() if k != "y_star"},
    }
    (out / "summary.json").write_text(json.dumps(spec, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return None
    raise TypeError(type(v).__name__)


def run_scenario(cfg: RunConfig, out=None, write: bool = True) -> ScenarioResult:
    """Run every stepsize of ``cfg`` and (optionally) write its artifacts.

    Divergence is recorded per stepsize and never aborts the sweep. Raises
    :class:`~dgdkit.harness.config.ConfigError` for an invalid config.
    """
    setup = build(cfg)
    alphas = resolve_alphas(setup)
    results = [run_alpha(setup, i, a) for i, a in enumerate(alphas)]
    cmp = compare_stepsizes(results)
    if write:
        write_artifacts(Path(out if out is not None else cfg.out), setup, results, cmp)
    return ScenarioResult(setup, results, cmp, exit_code_for(results, cfg.audit))
