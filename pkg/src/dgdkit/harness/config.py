"""Declarative run configuration.

Config files are INI-style: ``[section]`` headers followed by ``key = value``
lines, ``#`` or ``;`` comments. Lists are comma separated. The recognized
keys are listed in ``KEYS``; see the README for the grammar.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, fields, replace

PROBLEM_KINDS = ("quadratic-example", "least-squares", "basis-pursuit")
MIXING_SCHEMES = ("metropolis", "metropolis-lazy", "paper-example")
ALPHA_SCALES = ("absolute", "ceiling", "thm1")


class ConfigError(ValueError):
    """Invalid configuration; ``errors`` holds one message per offending field."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass(frozen=True)
class RunConfig:
    name: str = "custom"
    # problem
    problem: str = "least-squares"
    n: int = 20
    p: int = 3
    m: int | None = None
    q: int | None = None
    sparsity: int | None = None
    L_h: float = 1.0
    noise: float = 0.0
    instance_seed: int = 0
    gamma: float | None = None
    nu_f: float = 0.0
    # network
    eta: float = 0.3
    graph_seed: int = 0
    mixing: str = "metropolis"
    tau: float = 0.2
    # run
    alphas: tuple = (0.9,)
    alpha_scale: str = "ceiling"
    max_iter: tuple = (1000,)
    tol: float = 0.0
    x0: tuple | None = None
    theta: float = 0.5
    local_gap: bool = False
    # output
    out: str = "dgd-out"
    audit: bool = False
    oracle_cache: str | None = None
    oracle_tol: float = 1e-10

    def max_iter_for(self, idx: int) -> int:
        return int(self.max_iter[0] if len(self.max_iter) == 1 else self.max_iter[idx])


# (section, key) -> field name
KEYS = {
    ("scenario", "name"): "name",
    ("problem", "kind"): "problem",
    ("problem", "n"): "n",
    ("problem", "p"): "p",
    ("problem", "m"): "m",
    ("problem", "q"): "q",
    ("problem", "sparsity"): "sparsity",
    ("problem", "l_h"): "L_h",
    ("problem", "noise"): "noise",
    ("problem", "seed"): "instance_seed",
    ("problem", "gamma"): "gamma",
    ("problem", "nu_f"): "nu_f",
    ("network", "eta"): "eta",
    ("network", "seed"): "graph_seed",
    ("network", "mixing"): "mixing",
    ("network", "tau"): "tau",
    ("run", "alphas"): "alphas",
    ("run", "alpha_scale"): "alpha_scale",
    ("run", "max_iter"): "max_iter",
    ("run", "tol"): "tol",
    ("run", "x0"): "x0",
    ("run", "theta"): "theta",
    ("run", "local_gap"): "local_gap",
    ("output", "dir"): "out",
    ("output", "audit"): "audit",
    ("output", "oracle_cache"): "oracle_cache",
    ("output", "oracle_tol"): "oracle_tol",
}

_INT = {"n", "p", "m", "q", "sparsity", "instance_seed", "graph_seed"}
_FLOAT = {"L_h", "noise", "gamma", "nu_f", "eta", "tau", "tol", "theta", "oracle_tol"}
_BOOL = {"local_gap", "audit"}
_FLOAT_LIST = {"alphas", "x0"}
_OPTIONAL = {"m", "q", "sparsity", "gamma", "x0", "oracle_cache"}


def _parse_bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _convert(fname, text):
    text = text.strip()
    if fname in _OPTIONAL and text.lower() in ("", "none"):
        return None
    if fname in _INT:
        return int(text)
    if fname in _FLOAT:
        return float(text)
    if fname in _BOOL:
        return _parse_bool(text)
    if fname in _FLOAT_LIST:
        return tuple(float(v) for v in text.split(",") if v.strip())
    if fname == "max_iter":
        return tuple(int(float(v)) for v in text.split(",") if v.strip())
    return text


def apply_items(cfg: RunConfig, items) -> RunConfig:
    """Apply ``((section, key), text)`` pairs on top of ``cfg``."""
    changes, errors = {}, []
    for (section, key), text in items:
        label = f"{section}.{key}"
        fname = KEYS.get((section.lower(), key.lower()))
        if fname is None:
            errors.append(f"{label}: unknown key")
            continue
        try:
            changes[fname] = _convert(fname, text)
        except ValueError as exc:
            errors.append(f"{label}: {exc}")
    if errors:
        raise ConfigError(errors)
    return replace(cfg, **changes)


def parse_text(text: str, base: RunConfig | None = None) -> RunConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError([f"syntax: {exc}"]) from exc
    items = [((s, k), v) for s in cp.sections() for k, v in cp.items(s)]
    return apply_items(base or RunConfig(), items)


def load_config(path, base: RunConfig | None = None) -> RunConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError([f"config: cannot read {path}: {exc.strerror}"]) from exc
    return parse_text(text, base)


def parse_overrides(pairs) -> list:
    """``section.key=value`` strings to items for :func:`apply_items`."""
    out, errors = [], []
    for s in pairs:
        lhs, sep, rhs = s.partition("=")
        sec, dot, key = lhs.strip().partition(".")
        if not sep or not dot:
            errors.append(f"override {s!r}: expected section.key=value")
            continue
        out.append(((sec, key), rhs))
    if errors:
        raise ConfigError(errors)
    return out


def check(cfg: RunConfig) -> list[str]:
    """Field-level validation messages (empty when valid)."""
    e = []
    if cfg.problem not in PROBLEM_KINDS:
        e.append(f"problem.kind: {cfg.problem!r} not in {PROBLEM_KINDS}")
    if cfg.mixing not in MIXING_SCHEMES:
        e.append(f"network.mixing: {cfg.mixing!r} not in {MIXING_SCHEMES}")
    if cfg.alpha_scale not in ALPHA_SCALES:
        e.append(f"run.alpha_scale: {cfg.alpha_scale!r} not in {ALPHA_SCALES}")
    if not cfg.alphas:
        e.append("run.alphas: at least one stepsize required")
    elif any(not a > 0 for a in cfg.alphas):
        e.append("run.alphas: stepsizes must be positive")
    if len(cfg.max_iter) not in (1, len(cfg.alphas)):
        e.append("run.max_iter: give one value or one per stepsize")
    if any(k < 0 for k in cfg.max_iter):
        e.append("run.max_iter: must be nonnegative")
    if cfg.n < 1:
        e.append("problem.n: must be >= 1")
    if cfg.p < 1:
        e.append("problem.p: must be >= 1")
    if cfg.tol < 0:
        e.append("run.tol: must be nonnegative")
    if not 0.0 <= cfg.theta <= 1.0:
        e.append("run.theta: must lie in [0, 1]")
    if cfg.noise < 0:
        e.append("problem.noise: must be nonnegative")
    if cfg.gamma is not None and not cfg.gamma > 0:
        e.append("problem.gamma: must be positive")
    if cfg.mixing == "paper-example":
        if cfg.n != 3:
            e.append("problem.n: paper-example mixing needs n = 3")
        if not 0.0 < cfg.tau < 1.0 / 3.0:
            e.append("network.tau: must lie in (0, 1/3)")
    elif cfg.n >= 2 and not 0.0 < cfg.eta <= 1.0:
        e.append("network.eta: must lie in (0, 1]")
    if cfg.problem == "quadratic-example":
        if cfg.p != 1:
            e.append("problem.p: the quadratic example is scalar (p = 1)")
        if not cfg.L_h > 0:
            e.append("problem.l_h: must be positive")
    if cfg.problem == "least-squares" and cfg.m is not None and cfg.m < 1:
        e.append("problem.m: must be >= 1")
    if cfg.problem == "basis-pursuit":
        if cfg.q is None:
            e.append("problem.q: required for basis pursuit")
        elif cfg.q % cfg.n:
            e.append(f"problem.q: n={cfg.n} must divide q={cfg.q}")
        if cfg.sparsity is None:
            e.append("problem.sparsity: required for basis pursuit")
        elif not 0 <= cfg.sparsity <= cfg.p:
            e.append("problem.sparsity: must lie in [0, p]")
    if cfg.x0 is not None and len(cfg.x0) != cfg.n * cfg.p:
        e.append(f"run.x0: expected {cfg.n * cfg.p} values, got {len(cfg.x0)}")
    return e


def validated(cfg: RunConfig) -> RunConfig:
    errors = check(cfg)
    if errors:
        raise ConfigError(errors)
    return cfg


def to_ini(cfg: RunConfig) -> str:
    """Serialize back to the file grammar (round-trips through :func:`parse_text`)."""
    by_section: dict[str, list[str]] = {}
    values = {f.name: getattr(cfg, f.name) for f in fields(cfg)}
    for (section, key), fname in KEYS.items():
        v = values[fname]
        if v is None:
            text = "none"
        elif isinstance(v, tuple):
            text = ", ".join(repr(x) for x in v)
        elif isinstance(v, bool):
            text = "true" if v else "false"
        else:
            text = repr(v) if isinstance(v, float) else str(v)
        by_section.setdefault(section, []).append(f"{key} = {text}")
    return "\n\n".join(f"[{s}]\n" + "\n".join(lines) for s, lines in by_section.items()) + "\n"
