import math

import numpy as np
import pytest
import sympy
from hypothesis import given
from hypothesis import strategies as st

from smoothpeano import smoothfn as sf
from smoothpeano.errors import BudgetError, DepthError, DomainError, InvalidWordError, NoSuccessorError
from smoothpeano.lune import DEFAULT_AMPLITUDE, Lune, default_lune, lune_norm
from smoothpeano.subdivision import (
    EpsilonSchedule, build_family, check_step5, choose_n_omega, concat, family_check_lemma29,
    family_export, has_successor, parity, successor, support_from_parity, validate,
)

M = (1, 4, 6)


def test_word_helpers():
    assert validate([1, 3, 6], M) == (1, 3, 6)
    for bad in ([], [2], [1, 5], [1, 1, 1, 1]):
        with pytest.raises(InvalidWordError):
            validate(bad, M)
    assert concat((1,), (2, 3)) == (1, 2, 3)
    assert successor((1, 2), M) == (1, 3)
    assert not has_successor((1, 4), M)
    with pytest.raises(NoSuccessorError):
        successor((1, 4), M)
    assert parity((1, 2, 3, 4)) == (True, False, True)


@given(st.lists(st.booleans(), max_size=12))
def test_support_from_parity_has_width_two_thirds_power(par):
    a, b = support_from_parity(par)
    assert b - a == pytest.approx((2 / 3) ** len(par), rel=1e-12)
    assert 0.0 <= a < b <= 1.0


def test_epsilon_schedule():
    eps = EpsilonSchedule()
    assert [eps(k) for k in range(1, 4)] == [0.5, 0.25, 0.125]
    assert eps.tail(4) == pytest.approx(sum(0.5 ** j for j in range(4, 200)))
    assert eps.partial_sums(3) == pytest.approx([0.5, 0.75, 0.875])
    custom = EpsilonSchedule(0.3, 2.0)
    assert custom.tail(2) == pytest.approx(sum(2.0 * 0.3 ** j for j in range(2, 200)))
    with pytest.raises(DomainError):
        EpsilonSchedule(1.0)


def _sympy_sup(expr, x, lo, hi, order, samples=200_001):
    """max over derivative orders <= order of sup |d^j expr| on a fine grid."""
    xs = np.linspace(lo, hi, samples)[1:-1]
    out = 0.0
    for j in range(order + 1):
        f = sympy.lambdify(x, sympy.diff(expr, x, j), "numpy")
        with np.errstate(all="ignore"):
            v = np.nan_to_num(np.asarray(f(xs), dtype=float) * np.ones_like(xs))
        out = max(out, float(np.max(np.abs(v))))
    return out


def test_first_subdivision_count_against_symbolic_oracle():
    x = sympy.symbols("x")
    hump = DEFAULT_AMPLITUDE * sympy.E ** 4 * sympy.exp(-1 / x - 1 / (1 - x))
    B = lambda t: sympy.exp(-1 / t)
    phi = B(3 * x - 1) / (B(3 * x - 1) + B(2 - 3 * x))
    k = 2
    L_norm = sf.SAFETY_FACTOR * _sympy_sup(hump, x, 0, 1, k)
    P = max(1.0, _sympy_sup(phi, x, 1 / 3, 2 / 3, k))
    eps = EpsilonSchedule()
    want = math.floor(L_norm * 2 ** k * P / eps(k)) + 1
    assert choose_n_omega(default_lune(), k, eps) == want


def test_default_family_sequences(fam):
    assert fam.m == (1, 10286, 83626, 1060990)
    assert fam.n[1:] == (5143, 41813, 530495)
    assert all(mk == 2 * nk for mk, nk in zip(fam.m[1:], fam.n[1:]))
    assert fam.count(3) == 10286 * 83626
    # n_k is the largest n_w over the depth-(k-1) classes
    for k in range(2, fam.depth + 1):
        assert fam.n[k - 1] == max(c.n_next for c in fam.classes.values() if c.depth == k - 1)


def test_path_engine_matches_node_chain(small_fam):
    fam = small_fam
    xs = np.linspace(0.0, 1.0, 129)
    rng = np.random.default_rng(1)
    words = [(1,), (1, 1), (1, fam.m[1]), (1, 2, 1), (1, 7, fam.m[2])]
    words += [(1, int(rng.integers(1, fam.m[1] + 1)), int(rng.integers(1, fam.m[2] + 1))) for _ in range(4)]
    for w in words:
        L = fam.node(w)
        for order in (0, 2):
            ref_f = L.f.derivatives(xs, order)
            ref_g = L.g.derivatives(xs, order)
            scale = np.max(np.abs(ref_g - ref_f)) + 1e-300
            assert np.max(np.abs(fam.eval_word(w, xs, order) - ref_f)) <= 1e-12 * max(1.0, np.max(np.abs(ref_f)))
            assert np.max(np.abs(fam.eval_word(w, xs, order, "g") - ref_g)) <= 1e-12 * max(1.0, scale, np.max(np.abs(ref_g)))
        assert fam.support(w) == fam.class_of(w).support


def test_children_stack_inside_parent(small_fam):
    fam = small_fam
    w = (1, 5)
    kids = fam.children(w)
    assert len(kids) == fam.m[2]
    xs = np.linspace(0.0, 1.0, 65)
    parent_f = fam.eval_word(w, xs)[0]
    parent_g = fam.eval_word(w, xs, which="g")[0]
    for kid in kids[:6]:
        f = fam.eval_word(kid, xs)[0]
        g = fam.eval_word(kid, xs, which="g")[0]
        assert np.all(f >= parent_f - 1e-15) and np.all(g <= parent_g + 1e-15) and np.all(f <= g + 1e-15)
    # consecutive children share a boundary curve
    for a, b in zip(kids[:6], kids[1:7]):
        assert np.allclose(fam.eval_word(a, xs, which="g")[0], fam.eval_word(b, xs)[0], atol=1e-15)
    assert fam.children((1, 2, 3)) == []


def test_step5_and_lemma_checks(fam):
    r = check_step5(fam, depths=[1, 2, 3])
    assert r["ok"] and r["covered"] == {1: 1, 2: fam.count(2), 3: fam.count(3)}
    assert r["max_ratio"] <= 1.0
    lem = family_check_lemma29(fam)
    assert lem["ok"] and lem["min_slack"] > 0
    # the class norm is what every node of that class has
    w = (1, 3, 8)
    c = fam.class_of(w)
    node = fam.node(w)
    raw = lune_norm(Lune(node.f, node.g, node.domain, c.support, node.gap), 3, fam.grid).raw
    assert raw == pytest.approx(c.raw_norm, rel=1e-9)


def test_step5_fails_under_a_tighter_schedule(fam):
    assert not check_step5(fam, EpsilonSchedule(0.1, 0.1), [2])["ok"]


def test_errors_and_budget(fam):
    with pytest.raises(BudgetError):
        list(fam.words(4))
    with pytest.raises(DepthError):
        fam.words(5)
    with pytest.raises(DepthError):
        build_family(default_lune(), depth=0)
    with pytest.raises(DomainError):
        build_family(Lune(sf.constant(0.0, (0.0, 2.0)), sf.constant(1.0, (0.0, 2.0)), (0.0, 2.0)))


def test_export_is_plain_data(small_fam):
    data = family_export(small_fam, node_limit=20_000)
    assert data["m"] == [1, 10286, 83626]
    assert len(data["nodes"]) == 1 + 10286
    assert sum(c["nodes"] for c in data["classes"] if c["depth"] == 2) == 10286
