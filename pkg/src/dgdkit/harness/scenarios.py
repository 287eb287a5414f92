"""Canned scenarios behind the experiment figures and the worked example."""

from __future__ import annotations

from .config import RunConfig

# Noisy least squares on the 100-agent network. With exact data every agent
# shares the minimizer and DGD has no alpha-dependent error floor.
_LS100 = dict(problem="least-squares", n=100, p=3, noise=0.1, instance_seed=11, eta=0.3, graph_seed=7)

_BP_DESK = dict(problem="basis-pursuit", n=10, p=25, q=50, sparsity=3, instance_seed=5, eta=0.3, graph_seed=3)

SCENARIOS: dict[str, RunConfig] = {
    "example21": RunConfig(
        name="example21",
        problem="quadratic-example",
        n=3,
        p=1,
        L_h=1.0,
        mixing="paper-example",
        tau=0.2,
        alphas=(0.59, 0.6, 0.61),
        alpha_scale="absolute",
        max_iter=(5000,),
        x0=(1.0, 0.0, 2.0),
    ),
    "fig1": RunConfig(
        name="fig1",
        alphas=(0.9, 0.6, 0.3, 0.18, 0.09),
        alpha_scale="ceiling",
        max_iter=(20000,),
        **_LS100,
    ),
    "fig2": RunConfig(
        name="fig2",
        alphas=(1.0, 1.15, 1.5),
        alpha_scale="ceiling",
        max_iter=(20000,),
        **_LS100,
    ),
    "bp-desk": RunConfig(
        name="bp-desk",
        alphas=(0.9, 0.45, 0.18, 0.09),
        alpha_scale="thm1",
        max_iter=(20000, 20000, 40000, 40000),
        **_BP_DESK,
    ),
    "bp-large": RunConfig(
        name="bp-large",
        problem="basis-pursuit",
        n=100,
        p=50,
        q=100,
        sparsity=10,
        instance_seed=5,
        eta=0.3,
        graph_seed=7,
        alphas=(0.9,),
        alpha_scale="thm1",
        max_iter=(30000,),
    ),
}


def get(name: str) -> RunConfig:
    try:
        return SCENARIOS[name]
    except KeyError:
        raise KeyError(f"unknown scenario {name!r}; choose from {sorted(SCENARIOS)}") from None
