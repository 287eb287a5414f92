"""Command-line entry point: ``dgdkit run | spectrum | oracle``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace

from .. import theory
from .config import ConfigError, RunConfig, apply_items, load_config, parse_overrides, validated
from .runner import EXIT_CONFIG, build_network, build_problem, build_reference, run_scenario
from .scenarios import SCENARIOS, get


def _common(p):
    p.add_argument("--config", help="INI-style config file")
    p.add_argument("--scenario", choices=sorted(SCENARIOS), help="start from a canned scenario")
    p.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                   help="override a config value (repeatable)")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dgdkit", description="Decentralized gradient descent experiments.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a stepsize sweep and write CSV traces")
    _common(p_run)
    p_run.add_argument("--audit", action="store_true", help="exit 3 on any bound violation")
    p_run.add_argument("--out", help="output directory")

    p_spec = sub.add_parser("spectrum", help="print lambda_2, lambda_n, beta and stepsize limits")
    _common(p_spec)

    p_orc = sub.add_parser("oracle", help="precompute the centralized ground truth")
    _common(p_orc)
    p_orc.add_argument("--out", help="write the solution as JSON here")

    sub.add_parser("scenarios", help="list canned scenarios")
    return parser


def resolve_config(args) -> RunConfig:
    if not args.config and not args.scenario:
        raise ConfigError(["config: give --config and/or --scenario"])
    cfg = get(args.scenario) if args.scenario else RunConfig()
    if args.config:
        cfg = load_config(args.config, base=cfg)
    cfg = apply_items(cfg, parse_overrides(args.set))
    if getattr(args, "audit", False):
        cfg = replace(cfg, audit=True)
    if getattr(args, "out", None) and args.command == "run":
        cfg = replace(cfg, out=args.out)
    return validated(cfg)


def cmd_run(cfg: RunConfig) -> int:
    res = run_scenario(cfg)
    for r in res.results:
        bad = ",".join(f"{k}={v}" for k, v in r.violations.items() if v) or "none"
        print(f"alpha={r.alpha:.6g}  status={r.status}  iterations={r.iterations}  violations={bad}")
    for row in res.comparison.rows:
        print(f"alpha={row.alpha:.6g}  plateau={row.plateau:.6g}  plateau_k={row.plateau_k}")
    print(f"artifacts in {cfg.out}; exit {res.exit_code}")
    return res.exit_code


def cmd_spectrum(cfg: RunConfig) -> int:
    w, _ = build_network(cfg)
    _, prob = build_problem(cfg)
    print(f"lambda_2 = {w.lambda_2:.17g}")
    print(f"lambda_n = {w.lambda_n:.17g}")
    print(f"beta     = {w.beta:.17g}")
    print(f"(1 + lambda_n) / L_h = {(1.0 + w.lambda_n) / prob.L_h:.17g}")
    print(f"ceiling  = {theory.stepsize_ceiling(prob, w, cfg.theta):.17g}")
    return 0


def cmd_oracle(cfg: RunConfig, out=None) -> int:
    inst, prob = build_problem(cfg)
    ref, info = build_reference(cfg, inst, prob)
    payload = {"x_star": ref.x_star.tolist(), "f_star": ref.f_star}
    payload.update({k: v for k, v in info.items() if k != "x_star"})
    text = json.dumps(payload, indent=2, sort_keys=True)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    print(text)
    return 0


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.command == "scenarios":
        for name, cfg in sorted(SCENARIOS.items()):
            print(f"{name:10s} {cfg.problem:18s} n={cfg.n} alphas={cfg.alphas} ({cfg.alpha_scale})")
        return 0
    try:
        cfg = resolve_config(args)
        if args.command == "run":
            return cmd_run(cfg)
        if args.command == "spectrum":
            return cmd_spectrum(cfg)
        return cmd_oracle(cfg, getattr(args, "out", None))
    except ConfigError as exc:
        for msg in exc.errors:
            print(f"config error: {msg}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
