import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smoothpeano import smoothfn as sf
from smoothpeano.errors import DomainError, OrderError, SingularQuotientError

mpmath.mp.dps = 40


def mp_B(t):
    return mpmath.exp(-1 / t) if t > 0 else mpmath.mpf(0)


def mp_phi(x):
    t = 3 * x - 1
    if t <= 0:
        return mpmath.mpf(0)
    if t >= 1:
        return mpmath.mpf(1)
    return mp_B(t) / (mp_B(t) + mp_B(1 - t))


def mp_derivs(fn, x, order):
    return [float(mpmath.diff(fn, mpmath.mpf(x), k)) for k in range(order + 1)]


def assert_close(got, want, rel=1e-8, abs_=1e-10):
    got = np.asarray(got, dtype=float)
    want = np.asarray(want, dtype=float)
    assert np.all(np.abs(got - want) <= abs_ + rel * np.abs(want)), (got, want)


X = sf.identity()


@pytest.mark.parametrize("x0", [0.05, 0.2, 0.5, 0.9, 1.7])
def test_flat_against_mpmath(x0):
    got = sf.flat(X).derivatives(np.array([x0]), 5)[:, 0]
    assert_close(got, mp_derivs(mp_B, x0, 5))


@pytest.mark.parametrize("x0", [0.36, 0.45, 0.5, 0.6, 0.66])
def test_phi_against_mpmath(x0):
    got = sf.make_phi().derivatives(np.array([x0]), 4)[:, 0]
    assert_close(got, mp_derivs(mp_phi, x0, 4), rel=1e-7, abs_=1e-9)
    assert sf.phi_pointwise(x0) == pytest.approx(float(mp_phi(x0)), rel=1e-12)


def test_phi_is_exactly_flat_outside_middle_third():
    xs = np.array([-1.0, 0.0, 0.2, 1 / 3 - 1e-9, 2 / 3 + 1e-9, 0.9, 2.0])
    d = sf.make_phi().derivatives(xs, 4)
    assert np.all(d[0] == np.array([0, 0, 0, 0, 1, 1, 1]))
    assert np.all(d[1:] == 0.0)


@pytest.mark.parametrize("u", [0.1, 0.3, 0.5, 0.77, 0.95])
def test_sigmoid_against_quadrature(u):
    w = lambda s: mp_B(s) * mp_B(1 - s)
    z = mpmath.quad(w, [0, 0.5, 1])
    want = mpmath.quad(w, [0, u]) / z
    assert sf.sigmoid_values(u)[0] == pytest.approx(float(want), abs=1e-13)
    d = sf.sigmoid(X).derivatives(np.array([u]), 2)[:, 0]
    assert d[1] == pytest.approx(float(w(mpmath.mpf(u)) / z), rel=1e-10)


def test_sigmoid_symmetry_and_ends():
    u = np.linspace(0.0, 1.0, 101)
    s = sf.sigmoid_values(u)
    assert s[0] == 0.0 and s[-1] == 1.0
    assert np.allclose(s + s[::-1], 1.0, atol=1e-14)
    assert np.all(np.diff(s) >= 0)


@pytest.mark.parametrize("x0", [0.1, 0.4, 0.8])
def test_chain_and_product_rules_against_mpmath(x0):
    f = sf.exp(X * X) / (X + 2.0) * sf.sigmoid(X)
    def ref(t):
        w = lambda s: mp_B(s) * mp_B(1 - s)
        S = mpmath.quad(w, [0, t]) / mpmath.quad(w, [0, 0.5, 1])
        return mpmath.exp(t * t) / (t + 2) * S
    got = f.derivatives(np.array([x0]), 3)[:, 0]
    assert_close(got, mp_derivs(ref, x0, 3), rel=1e-6, abs_=1e-9)


@settings(max_examples=50, deadline=None)
@given(a=st.floats(-3, 3), b=st.floats(-3, 3), x0=st.floats(0.05, 0.95))
def test_affine_combination_is_linear(a, b, x0):
    f, g = sf.flat(X), sf.sigmoid(X)
    xs = np.array([x0])
    lhs = sf.affine_combination([(a, f), (b, g)], 0.5).derivatives(xs, 4)
    rhs = a * f.derivatives(xs, 4) + b * g.derivatives(xs, 4)
    rhs[0] += 0.5
    assert np.allclose(lhs, rhs, rtol=1e-12, atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(a=st.floats(-1, 1), width=st.floats(0.05, 3), x0=st.floats(0, 1))
def test_phi_rescaled_matches_scaling_rule(a, width, x0):
    b = a + width
    x = a + x0 * width
    got = sf.phi_rescaled(sf.make_phi(), a, b).derivatives(np.array([x]), 3)[:, 0]
    base = sf.make_phi().derivatives(np.array([x0]), 3)[:, 0]
    want = base / width ** np.arange(4)
    assert np.allclose(got, want, rtol=1e-9, atol=1e-9 * np.max(np.abs(want)) + 1e-300)


def test_periodize_repeats():
    f = sf.sigmoid(X / sf.TWO_PI).periodize(0.0, sf.TWO_PI)
    xs = np.array([0.3, 1.1, 4.0])
    assert np.allclose(f.derivatives(xs, 2), f.derivatives(xs + 3 * sf.TWO_PI, 2), atol=1e-12)


def test_transition_map_is_monotone_and_flat():
    m = sf.transition_map((1.0, 3.0), 5.0, 2.0)
    xs = np.linspace(1.0, 3.0, 201)
    d = m.derivatives(xs, 3)
    assert d[0, 0] == 5.0 and d[0, -1] == 2.0
    assert np.all(np.diff(d[0]) <= 0)
    assert np.all(d[1:, [0, -1]] == 0.0)


def test_ck_norm_of_polynomial():
    est = sf.ck_norm(X * X, 2, interval=(0.0, 1.0))
    assert est.raw == pytest.approx(2.0)
    est = sf.ck_norm(X * X, 1, safety_factor=1.25, interval=(0.0, 1.0))
    assert est.value == pytest.approx(2.5)


def test_jet_eval_returns_value_and_derivatives():
    j = sf.jet_eval(sf.exp(X), 0.0, 3)
    assert j.coeffs == pytest.approx((1.0, 1.0, 1.0, 1.0))


def test_errors():
    with pytest.raises(SingularQuotientError):
        (1.0 / X).derivatives(np.array([0.0, 0.5]), 1)
    with pytest.raises(OrderError):
        X.derivatives(np.array([0.5]), sf.MAX_ORDER + 1)
    with pytest.raises(DomainError):
        X.restrict(0.0, 1.0).derivatives(np.array([2.0]), 0)
    with pytest.raises(DomainError):
        sf.phi_rescaled(sf.make_phi(), 1.0, 1.0)


def test_shared_subexpressions_evaluate_once_per_call():
    g = sf.flat(X)
    f = g * g + g
    xs = np.linspace(0.1, 0.9, 5)
    want = np.exp(-2 / xs) + np.exp(-1 / xs)
    assert np.allclose(f(xs), want, rtol=1e-14)
    assert math.isclose(float(f(0.5)), math.exp(-4) + math.exp(-2), rel_tol=1e-14)
