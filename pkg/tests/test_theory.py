from __future__ import annotations

import json
import math

import numpy as np
import pytest

from dgdkit import theory
from dgdkit.engine import run
from dgdkit.mixing import MixingMatrix, paper_example_matrix
from dgdkit.problems import QuadraticExample, generate_bp_instance, quadratic_example


def test_gradient_bound_D_values():
    assert theory.gradient_bound_D(quadratic_example(1.0)) == pytest.approx(math.sqrt(3), abs=1e-12)
    assert theory.gradient_bound_D(quadratic_example(4.0)) == pytest.approx(4 * math.sqrt(3), abs=1e-12)
    assert theory.gradient_bound_D(QuadraticExample(2.0, center=0.0)) == 0.0


def test_gradient_bound_needs_minima(bp_desk):
    with pytest.raises(theory.BoundUnavailable):
        theory.gradient_bound_D(bp_desk[1])


def test_generalized_D(example):
    q, w = example
    D = theory.gradient_bound_D(q)
    assert theory.generalized_D(q, np.zeros(3), w, 0.5) == pytest.approx(D)
    assert theory.generalized_D(q, np.full(3, 2.5), w, 0.5) == pytest.approx(D)
    # x0 = (1, 0, 2): x^T x - x^T W x = 5 - 2.2 = 2.8, so D^2 = 3 + 2.8 / 0.5
    Dg = theory.generalized_D(q, [1.0, 0.0, 2.0], w, 0.5)
    assert Dg == pytest.approx(math.sqrt(8.6), abs=1e-12)
    tr = run(q, w, 0.5, x0=[[1.0], [0.0], [2.0]], max_iter=500)
    assert np.linalg.norm(q.grads(tr.states), axis=(1, 2)).max() <= Dg


def test_stepsize_ceiling(example):
    q, w = example
    assert theory.stepsize_ceiling(q, w) == pytest.approx(0.5)
    near = MixingMatrix(np.array([[1e-9, 1 - 1e-9], [1 - 1e-9, 1e-9]]))
    assert theory.stepsize_ceiling(QuadraticExample(1.0, n=2), near) < 1e-8


def test_convexity_constants():
    assert theory.sc_constants(1, 1) == (0.5, 0.5)
    assert theory.sc_constants(2, 8) == pytest.approx((0.1, 1.6))
    assert theory.sc_constants(1e-12, 3.0)[1] == pytest.approx(0.0, abs=1e-11)
    assert theory.rsc_constants(0.7, 2.0, 0.0) == (0.0, 0.7)
    assert theory.rsc_constants(0.7, 2.0, 1.0) == (0.5, 0.0)
    assert theory.rsc_constants(0.5, 2.0, 0.5) == (0.25, 0.25)
    assert theory.rsc_constants(0.5, 2.0) == (0.25, 0.25)
    with pytest.raises(ValueError):
        theory.rsc_constants(0.5, 2.0, 1.5)


def test_linear_rate_constants():
    delta, c3, c4, nb = theory.linear_rate_constants(0.5, 0.5, math.sqrt(3), 1.0, 0.4)
    assert delta == pytest.approx(1 / 3)
    assert c3 == pytest.approx(math.sqrt(0.875), abs=1e-12)
    assert nb == pytest.approx(5.400617248673217, rel=1e-12)
    closed = (0.5 * math.sqrt(3) / 0.6) * math.sqrt(16 - 2)
    assert nb == pytest.approx(closed, rel=1e-12)
    _, c3s, _, nbs = theory.linear_rate_constants(1e-9, 0.5, 1.0, 1.0, 0.4)
    assert c3s == pytest.approx(1.0, abs=1e-9) and nbs < 1e-7
    with pytest.raises(ValueError):
        theory.linear_rate_constants(3.0, 0.5, 1.0, 1.0, 0.4)


def test_explicit_delta():
    delta, c3, c4, _ = theory.linear_rate_constants(0.2, 0.5, 2.0, 1.5, 0.3, delta=1.0)
    assert delta == 1.0
    assert c3**2 == pytest.approx(1 - 0.1 + 0.2 - 0.04 * 0.5)
    assert c4**2 == pytest.approx(0.2**3 * 1.2 * (1.5 * 2.0) ** 2 / 0.49)


def test_deviation_bound():
    assert theory.deviation_bound(0.1, math.sqrt(3), 0.4) == pytest.approx(0.28867513459481287)
    assert theory.deviation_bound(0.1, 0.0, 0.4) == 0.0
    assert theory.deviation_bound(0.1, 2.0, 0.0) == pytest.approx(0.2)


def test_constant_C(example):
    q, w = example
    ones = np.ones((3, 1))
    assert theory.constant_C(q, w, 0.5, ones, ones, [1.0]) == 0.0
    xt = theory.lyapunov_minimizer(q, w, 0.5)
    # identical agents: the fixed point is consensus at the common minimizer
    np.testing.assert_allclose(xt, 1.0, atol=1e-11)
    assert theory.constant_C(q, w, 0.5, None, xt, [1.0]) == pytest.approx(1.0, abs=1e-10)
    cs = [theory.constant_C(q, w, 0.5, s * np.array([1.0, -2.0, 0.5]), xt, [1.0]) for s in (1, 2, 4, 8)]
    assert all(a < b for a, b in zip(cs, cs[1:]))


def test_descent_inequality_check():
    assert theory.descent_inequality_check(0.0, 0.0, 0.1, 1.0, 1.0, 1.0, 0.5)
    assert not theory.descent_inequality_check(1.0, 2.0, 0.1, 1.0, 1e-6, 1.0, 0.5)
    assert theory.descent_inequality_check(1.0, 0.9, 0.1, 1.0, 1.0, 1.0, 0.5)


def test_bp_primal_bound():
    inst = generate_bp_instance(4, 6, 1, 2, None, 3)
    prob = inst.problem()
    x = np.array([[0.3, -0.1, 0.2, 0.5]])
    xs = np.zeros(4)
    assert theory.bp_primal_bound(prob, np.zeros((1, 4)), xs) == 0.0
    expect = inst.gamma * np.linalg.norm(inst.A, 2) * np.linalg.norm(x[0] - xs)
    assert theory.bp_primal_bound(prob, x, xs) == pytest.approx(expect, rel=1e-12)


def test_bound_set_example(example):
    q, w = example
    bs = theory.bound_set(q, w, 0.5)
    assert bs.alpha_max_thm1 == pytest.approx(0.6)
    assert bs.ceiling == pytest.approx(0.5)
    assert bs.D == pytest.approx(math.sqrt(3))
    assert bs.dev_bound == pytest.approx(0.5 * math.sqrt(3) / 0.6)
    assert bs.c3 == pytest.approx(math.sqrt(0.875))
    assert bs.neighborhood == pytest.approx(5.400617248673217)
    assert bs.local_neighborhood == pytest.approx(bs.neighborhood + bs.dev_bound)
    assert bs.thm1_ok and bs.rate_ok
    assert 0 < bs.c3 < 1
    d = json.loads(bs.to_json())
    assert d["gradient_bound_kind"] == "zero-start"
    assert all(v is None or isinstance(v, str) or v >= 0 for k, v in d.items() if k != "lambda_n")


def test_bound_set_generalized_and_bp(example, bp_desk):
    q, w = example
    bs = theory.bound_set(q, w, 0.5, x0=[1.0, 0.0, 2.0])
    assert bs.gradient_bound_kind == "generalized"
    assert bs.D == pytest.approx(math.sqrt(8.6))
    bp = theory.bound_set(bp_desk[1], bp_desk[2], 1e-4)
    assert bp.D is None and bp.c1 is None and bp.c3 is None
    assert not bp.rate_ok
    assert bp.ceiling == pytest.approx(bp.alpha_max_thm1)
    assert theory.bound_set(bp_desk[1], bp_desk[2], 1e-4, theta=0.5).c1 is None
    assert bp_desk[0].problem(nu_f=0.2).nu_fbar == pytest.approx(0.02)
