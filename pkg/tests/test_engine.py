from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import central_fd, rel_err

from dgdkit import theory
from dgdkit.engine import (
    AgentStates,
    DivergenceError,
    consensus_gap,
    dgd_step,
    lyapunov_value,
    mean_state,
    run,
    stacked_gradient,
)
from dgdkit.mixing import MixingMatrix, metropolis_weights
from dgdkit.netgen import generate_random_graph
from dgdkit.problems import CallableProblem, generate_ls_instance


def _s(*vals):
    return AgentStates(0, np.array(vals, dtype=np.float64).reshape(len(vals), -1))


def test_two_cycle_steps(example):
    q, w = example
    s1 = dgd_step(_s(1, 0, 2), w, 0.6, q)
    np.testing.assert_allclose(s1.x.ravel(), [1, 2, 0], atol=1e-15)
    s2 = dgd_step(s1, w, 0.6, q)
    np.testing.assert_allclose(s2.x.ravel(), [1, 0, 2], atol=1e-15)
    assert s2.k == 2


def test_fixed_point_unchanged(example):
    q, w = example
    s = dgd_step(_s(1, 1, 1), w, 0.3, q)
    np.testing.assert_array_equal(s.x.ravel(), [1, 1, 1])


def test_step_guard(example):
    q, w = example
    with pytest.raises(DivergenceError):
        dgd_step(_s(1e13, 0, 0), w, 0.1, q)


def test_dimension_checks(example):
    q, w = example
    with pytest.raises(ValueError):
        dgd_step(_s(1, 0), w, 0.5, q)
    with pytest.raises(ValueError):
        run(q, w, 0.0)


def test_run_trichotomy(example):
    q, w = example
    x0 = np.array([[1.0], [0.0], [2.0]])
    ok = run(q, w, 0.59, x0=x0, max_iter=5000)
    np.testing.assert_allclose(ok.final, 1.0, atol=1e-8)
    bad = run(q, w, 0.61, x0=x0, max_iter=100_000, keep_states=False)
    assert bad.diverged
    empty = run(q, w, 0.5, x0=x0, max_iter=0)
    assert empty.states.shape == (1, 3, 1)
    np.testing.assert_array_equal(empty.states[0], x0)


def test_mean_state_examples():
    assert mean_state(_s(1, 0, 2))[0] == 1.0
    assert mean_state(_s(4.5, 4.5))[0] == 4.5
    np.testing.assert_array_equal(mean_state(np.array([[1.0, -2.0], [-1.0, 2.0]])), [0.0, 0.0])


def test_lyapunov_examples(example):
    q, w = example
    assert lyapunov_value(_s(0, 0, 0), w, 0.5, q) == pytest.approx(0.75)
    c = 1.7
    assert lyapunov_value(_s(c, c, c), w, 0.5, q) == pytest.approx(0.5 * q.values(np.full((3, 1), c)).sum())
    s1 = dgd_step(_s(0, 0, 0), w, 0.5, q)
    assert lyapunov_value(s1, w, 0.5, q) <= 0.75


def test_consensus_gap_matches_quadratic_form(ls_small, rng):
    _, prob, w = ls_small
    x = rng.standard_normal((prob.n, prob.p))
    direct = 0.5 * (np.sum(x * x) - np.sum(w.w * (x @ x.T)))
    assert consensus_gap(x, w) == pytest.approx(direct, rel=1e-12)


def test_stacked_gradient(example):
    q, _ = example
    h = stacked_gradient(_s(1, 0, 2), q)
    np.testing.assert_array_equal(h, [0, -1, 1])
    np.testing.assert_array_equal(stacked_gradient(_s(1, 1, 1), q), 0)
    assert np.linalg.norm(h) == pytest.approx(np.sqrt(2))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6), frac=st.floats(0.05, 2.0))
def test_mean_iteration_identity(seed, frac):
    rng = np.random.default_rng(seed)
    g = generate_random_graph(12, 0.4, seed)
    w = metropolis_weights(g)
    prob = generate_ls_instance(12, 3, seed).problem()
    alpha = frac * (1 + w.lambda_n) / prob.L_h
    s = AgentStates(0, rng.standard_normal((12, 3)))
    nxt = dgd_step(s, w, alpha, prob)
    gk = prob.grads(s.x).mean(axis=0)
    np.testing.assert_allclose(mean_state(nxt), mean_state(s) - alpha * gk, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6), frac=st.floats(0.01, 1.0))
def test_lyapunov_descent_any_state(seed, frac):
    rng = np.random.default_rng(seed)
    w = metropolis_weights(generate_random_graph(10, 0.4, seed))
    prob = generate_ls_instance(10, 3, seed, noise=0.3).problem()
    alpha = frac * (1 + w.lambda_n) / prob.L_h
    s = AgentStates(0, 3 * rng.standard_normal((10, 3)))
    before = lyapunov_value(s, w, alpha, prob)
    after = lyapunov_value(dgd_step(s, w, alpha, prob), w, alpha, prob)
    assert after <= before + 1e-12 * abs(before)


def test_dgd_is_unit_gradient_step_on_lyapunov(ls_small, rng):
    _, prob, w = ls_small
    alpha = 0.02
    x = rng.standard_normal((prob.n, prob.p))
    grad = central_fd(lambda v: lyapunov_value(v.reshape(x.shape), w, alpha, prob), x.ravel(), 1e-5)
    step = dgd_step(AgentStates(0, x), w, alpha, prob).x.ravel()
    assert rel_err(step, x.ravel() - grad) < 1e-4
    assert rel_err(x.ravel() - step, grad) < 1e-4


def test_gradient_bound_from_zero(ls_small):
    _, prob, w = ls_small
    D = theory.gradient_bound_D(prob)
    alpha = (1 + w.lambda_n) / prob.L_h
    tr = run(prob, w, alpha, max_iter=2000)
    h = np.linalg.norm(tr.states, axis=(1, 2))
    assert h.max() <= D + 1e-10


def test_single_agent_is_centralized_gd():
    prob = generate_ls_instance(1, 3, 5).problem()
    w = MixingMatrix(np.ones((1, 1)))
    x = np.ones((1, 3))
    alpha = 0.5 / prob.L_h
    y = dgd_step(AgentStates(0, x), w, alpha, prob).x
    np.testing.assert_array_equal(y, x - alpha * prob.grads(x))


def test_hooks_see_every_round_once(ls_small):
    _, prob, w = ls_small
    seen = []
    run(prob, w, 0.01, max_iter=250, block=64, hooks=[lambda b: seen.extend(b.ks.tolist())], keep_states=False)
    assert seen == list(range(251))


def test_stop_tolerance(ls_small):
    _, prob, w = ls_small
    tr = run(prob, w, 0.5 * (1 + w.lambda_n) / prob.L_h, max_iter=100_000, tol=1e-9)
    assert tr.status == "converged"
    assert np.linalg.norm(tr.states[-1] - tr.states[-2]) < 1e-9
    assert tr.states.shape[0] == tr.iterations + 1


def test_generic_path_matches_kernel_path(ls_small):
    inst, prob, w = ls_small
    generic = CallableProblem(
        [lambda x, i=i: prob.f(i, x) for i in range(prob.n)],
        [lambda x, i=i: prob.grad(i, x) for i in range(prob.n)],
        prob.p,
        prob.lipschitz,
    )
    a = run(prob, w, 0.01, max_iter=50).states
    b = run(generic, w, 0.01, max_iter=50).states
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-14)
