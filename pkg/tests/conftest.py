from __future__ import annotations

import sys

import numpy as np
import pytest

from dgdkit import generate_ls_instance, generate_random_graph, metropolis_weights, paper_example_matrix, quadratic_example
from dgdkit.problems import generate_bp_instance


@pytest.fixture(scope="session")
def example():
    """Three-agent quadratic with the tau = 0.2 matrix."""
    return quadratic_example(1.0), paper_example_matrix(0.2)


@pytest.fixture(scope="session")
def ls_small():
    g = generate_random_graph(20, 0.3, 1)
    inst = generate_ls_instance(20, 3, 1)
    return inst, inst.problem(), metropolis_weights(g)


@pytest.fixture(scope="session")
def bp_desk():
    inst = generate_bp_instance(25, 50, 10, 3, None, 5)
    g = generate_random_graph(10, 0.3, 3)
    return inst, inst.problem(), metropolis_weights(g)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
