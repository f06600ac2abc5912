from fractions import Fraction

import numpy as np
import pytest

from smoothpeano.cantor import G_KIND, J_KIND
from smoothpeano.ceiling_field import (
    ceiling, ceiling_monotone_check, ceiling_values, continuity_check, field_samples,
    gap_flatness_check, psi, psi_descent, tail_bound, tangency_check, tiebreak_check,
)
from smoothpeano.errors import DomainError, OutOfLuneError

XS = np.linspace(0.0, 1.0, 257)


def test_tail_bound(fam):
    assert tail_bound(fam, 4) == pytest.approx(0.25)
    assert tail_bound(fam, 2) == pytest.approx(1.0)


def test_end_ceilings_are_exact(fam, idx):
    lo = ceiling(Fraction(0), fam, idx)
    hi = ceiling(Fraction(1), fam, idx)
    assert lo.tail_bound == 0.0 and hi.tail_bound == 0.0
    assert np.array_equal(lo(XS), fam.root.f(XS))
    assert np.allclose(hi(XS), fam.root.g(XS), rtol=1e-13, atol=1e-300)
    assert np.allclose(hi.derivatives(XS, 2), fam.root.g.derivatives(XS, 2), rtol=1e-9, atol=1e-12)


def test_gap_ceiling_is_constant_on_the_closed_gap(fam, idx):
    w = (1, 17, 300)
    alpha, beta = idx.gap_endpoints(w)
    inside = ceiling((alpha + beta) / 2, fam, idx)
    assert inside.kind == G_KIND and inside.word == w and inside.tail_bound == 0.0
    left = ceiling(alpha, fam, idx)
    right = ceiling(beta, fam, idx)
    assert left.kind == J_KIND and left.edge == 1
    assert right.kind == J_KIND and right.edge == -1
    ref = inside.derivatives(XS, 2)
    assert np.allclose(left.derivatives(XS, 2), ref, rtol=1e-12, atol=1e-15)
    assert np.allclose(right.derivatives(XS, 2), ref, rtol=1e-12, atol=1e-15)


def test_ceiling_fn_matches_vectorized_route(fam, idx):
    c = ceiling(Fraction(3, 10), fam, idx)
    assert np.allclose(c.fn(XS), c(XS), atol=1e-15)
    vals = ceiling_values(fam, idx, [Fraction(3, 10)] * XS.size, XS, 1)
    assert np.allclose(vals, c.derivatives(XS, 1), atol=1e-15)


def test_exact_ceilings_are_monotone_without_slack(fam, idx):
    # gap parameters carry no tail, so their ceilings must be ordered outright
    rng = np.random.default_rng(7)
    ts = sorted(Fraction(int(v), 10 ** 9) for v in rng.integers(0, 10 ** 9, 40))
    gaps = [t for t in ts if ceiling(t, fam, idx).kind == G_KIND]
    assert len(gaps) > 20
    for t, s in zip(gaps, gaps[1:]):
        assert np.all(ceiling(t, fam, idx)(XS) <= ceiling(s, fam, idx)(XS) + 1e-15)


def test_monotone_and_flatness_checks(fam, idx):
    rng = np.random.default_rng(0)
    pairs = [tuple(sorted(rng.random(2))) for _ in range(30)]
    assert ceiling_monotone_check(fam, idx, pairs)["ok"]
    with pytest.raises(DomainError):
        ceiling_monotone_check(fam, idx, [(0.8, 0.2)])
    r = gap_flatness_check(fam, idx)
    assert r["ok"] and r["checked"] >= 50


def test_psi_is_the_slope_of_every_ceiling(fam, idx):
    for t in (Fraction(1, 7), Fraction(1, 2), Fraction(9, 10)):
        c = ceiling(t, fam, idx)
        xs = np.linspace(0.02, 0.98, 97)
        d = c.derivatives(xs, 1)
        y = np.clip(d[0], fam.root.f(xs), fam.root.g(xs))
        assert np.allclose(psi(xs, y, fam, idx), d[1], atol=1e-10)


def test_psi_scalar_and_errors(fam, idx):
    assert isinstance(psi(0.5, 0.01, fam, idx), float)
    with pytest.raises(OutOfLuneError):
        psi(0.5, 1.0, fam, idx)
    with pytest.raises(OutOfLuneError):
        psi(0.5, -0.1, fam, idx)


def test_descent_words_are_valid(fam):
    xs = np.full(50, 0.4)
    ys = np.linspace(0.0, float(fam.root.g(0.4)), 50)
    _, words = psi_descent(fam, xs, ys)
    assert np.all(words[:, 0] == 1)
    for k in range(1, fam.depth):
        assert np.all((words[:, k] >= 1) & (words[:, k] <= fam.m[k]))
    # higher points descend into lexicographically later words
    keys = [tuple(w) for w in words]
    assert keys == sorted(keys)


def test_property_checks(fam, idx):
    r = tangency_check(fam, idx, [Fraction(1, 3), 0.61, 0.999], 512)
    assert r["ok"] and r["bound"] == pytest.approx(1.0) and r["absolute_bound"] == 0.25
    assert continuity_check(fam, idx, pairs=5)["ok"]
    assert tiebreak_check(fam, samples=50)["ok"]


def test_field_samples_cover_the_lune(fam):
    samples = field_samples(fam, nx=9, ny=5)
    assert len(samples) == 45
    assert all(np.isfinite(s.slope) for s in samples)
    # floor samples follow the floor, which is identically zero here
    assert all(s.slope == 0.0 for s in samples if s.y == 0.0)
