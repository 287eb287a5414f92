"""Time the hot kernels under the numba and pure-numpy backends.

Each backend runs in its own subprocess because the backend is fixed at
import time by ``DGDKIT_DISABLE_NUMBA``. Usage::

    python benchmarks/bench_kernels.py            # both backends, side by side
    python benchmarks/bench_kernels.py --single   # current backend only, JSON
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def _best(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def workloads():
    from dgdkit import kernels
    from dgdkit.mixing import metropolis_weights, symmetric_eigenvalues
    from dgdkit.netgen import generate_random_graph
    from dgdkit.problems import generate_bp_instance, generate_ls_instance

    w = metropolis_weights(generate_random_graph(100, 0.3, 7))
    ls = generate_ls_instance(100, 3, 11, noise=0.1).problem()
    bp = generate_bp_instance(50, 100, 100, 10, None, 5).problem()
    _, ls_args = ls.kernel()
    _, bp_args = bp.kernel()
    X = np.zeros((100, 3))
    Y = np.zeros((100, 50))
    ii, jj, vv = w.offdiag_pairs()
    block = np.random.default_rng(0).standard_normal((1000, 100, 3))
    sym = np.random.default_rng(1).standard_normal((100, 100))
    sym = sym + sym.T
    a = 0.9 * (1 + w.lambda_n) / ls.L_h
    b = 0.9 * (1 + w.lambda_n) / bp.L_h
    return {
        "ls_run 2000 rounds (n=100, p=3)": lambda: kernels.ls_run(w.w, *ls_args, a, X, 2000, 0.0, 1e12),
        "bp_run 500 rounds (n=100, p=50)": lambda: kernels.bp_run(w.w, *bp_args, b, Y, 500, 0.0, 1e12),
        "pair_gap 1000 states": lambda: kernels.pair_gap(block, ii, jj, vv),
        "jacobi eigenvalues 100x100": lambda: symmetric_eigenvalues(sym),
    }


def single(repeat):
    from dgdkit._accel import backend

    return {"backend": backend(), "seconds": {k: _best(f, repeat) for k, f in workloads().items()}}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--single", action="store_true", help="benchmark the current backend and print JSON")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if args.single:
        print(json.dumps(single(args.repeat)))
        return 0
    out = {}
    for flag in ("0", "1"):
        env = dict(os.environ, DGDKIT_DISABLE_NUMBA=flag)
        proc = subprocess.run([sys.executable, __file__, "--single", "--repeat", str(args.repeat)],
                              env=env, capture_output=True, text=True, check=True)
        res = json.loads(proc.stdout.strip().splitlines()[-1])
        out[res["backend"]] = res["seconds"]
    names = list(next(iter(out.values())))
    width = max(len(n) for n in names)
    print(f"{'kernel':<{width}}  {'numba [s]':>10}  {'numpy [s]':>10}  {'speedup':>8}")
    for n in names:
        nb, npy = out.get("numba", {}).get(n, float("nan")), out["numpy"][n]
        print(f"{n:<{width}}  {nb:10.4f}  {npy:10.4f}  {npy / nb:8.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
