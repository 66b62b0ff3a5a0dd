"""Generalized soft thresholding: closed form vs brute force."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from entromin.shrinkage import soft_threshold, soft_threshold_vec, \
    reweighted_prox_step


def q_obj(u, xt, tau):
    return 0.5 * (u - xt) ** 2 + tau * np.abs(u)


GRID = np.arange(-4.0, 4.0 + 1e-9, 1e-4)


def grid_min(xt, tau):
    return np.min(q_obj(GRID, xt, tau))


def test_oracle_equivalence_sample():
    rng = np.random.default_rng(5)
    xt = rng.uniform(-2, 2, 500)
    tau = rng.uniform(-2, 2, 500)
    out = soft_threshold_vec(xt, tau)
    closed = q_obj(out, xt, tau)
    for i in range(500):
        assert closed[i] <= grid_min(xt[i], tau[i]) + 1e-8


def test_positive_tau_cases():
    assert soft_threshold(3.0, 1.0) == 2.0
    assert soft_threshold(-3.0, 1.0) == -2.0
    assert soft_threshold(0.5, 1.0) == 0.0
    assert soft_threshold(-0.5, 1.0) == 0.0
    assert soft_threshold(0.0, 1.0) == 0.0


def test_negative_tau_inflates():
    assert soft_threshold(2.0, -1.0) == 3.0
    assert soft_threshold(-2.0, -1.0) == -3.0
    # tie at the origin goes to the nonnegative branch
    assert soft_threshold(0.0, -0.5) == 0.5


def test_zero_tau_identity():
    x = np.linspace(-2, 2, 11)
    np.testing.assert_array_equal(soft_threshold_vec(x, 0.0), x)


@given(st.floats(-10, 10, allow_nan=False), st.floats(-3, 3, allow_nan=False))
@settings(max_examples=200, deadline=None)
def test_odd_symmetry(xt, tau):
    if xt == 0.0:
        return
    a = soft_threshold(xt, tau)
    b = soft_threshold(-xt, tau)
    assert a == -b


@given(st.floats(-5, 5, allow_nan=False))
@settings(max_examples=100, deadline=None)
def test_magnitude_nonincreasing_in_tau(xt):
    taus = np.linspace(-2, 2, 41)
    mags = np.abs([soft_threshold(xt, t) for t in taus])
    assert np.all(np.diff(mags) <= 1e-12)


def test_continuity_for_nonneg_tau():
    tau = 0.7
    xs = np.linspace(-3, 3, 20001)
    ys = soft_threshold_vec(xs, tau)
    assert np.max(np.abs(np.diff(ys))) < 2e-3


def test_jump_at_origin_for_negative_tau():
    tau = -0.8
    left = soft_threshold(-1e-12, tau)
    right = soft_threshold(1e-12, tau)
    assert right - left == pytest.approx(2 * abs(tau), abs=1e-9)


def test_vector_broadcast_scalar_tau():
    x = np.array([3.0, -3.0, 0.5])
    np.testing.assert_allclose(soft_threshold_vec(x, 1.0), [2.0, -2.0, 0.0])


def test_reweighted_prox_step_matches_elementwise():
    rng = np.random.default_rng(2)
    xt = rng.standard_normal(40)
    w = rng.uniform(-1, 2, 40)
    lam, kappa = 0.3, 2.5
    got = reweighted_prox_step(xt, w, lam, kappa)
    want = np.array([soft_threshold(v, lam / kappa * wi)
                     for v, wi in zip(xt, w)])
    np.testing.assert_allclose(got, want, rtol=0, atol=1e-15)


def test_reweighted_prox_step_validation():
    with pytest.raises(ValueError):
        reweighted_prox_step(np.ones(3), np.ones(4), 0.1, 2.0)
    with pytest.raises(ValueError):
        reweighted_prox_step(np.ones(3), np.ones(3), 0.1, 0.0)
    with pytest.raises(ValueError):
        reweighted_prox_step(np.ones(3), np.ones(3), -0.1, 2.0)
