import math
from fractions import Fraction

import numpy as np
import pytest

from smoothpeano.assembly import (
    PlanarEmbedding, TheoremSchedule, base_cylinder, build_cylinder, build_cylinder_with_norm,
    build_planar, ceiling_deviation, curvature, curvature_check, cylinder_lunes,
    cylinder_property_check, periodic_ramp, polar, proximity_check, smallest_odd_above,
)
from smoothpeano.errors import BudgetError, DomainError

TH = np.linspace(0.0, 2 * math.pi, 721)


@pytest.fixture(scope="module")
def base():
    return base_cylinder(3)


@pytest.fixture(scope="module")
def stacked():
    return build_cylinder_with_norm((0.0, 1.0), (0.0, 1.0), 2, 0.1, 3)


def test_periodic_ramp():
    g = periodic_ramp()
    d = g.derivatives(np.array([0.0, math.pi, 2 * math.pi]), 4)
    assert d[0].tolist() == [0.0, 1.0, 0.0]
    assert np.all(d[1:] == 0.0)
    v = g(TH)
    assert np.allclose(v, v[::-1], atol=1e-14)
    assert np.allclose(g(TH + 2 * math.pi), v, atol=1e-14)
    assert np.all(np.diff(v[:361]) >= 0) and np.all((v >= 0) & (v <= 1))


def test_cylinder_lunes_are_the_ramp_in_unit_coordinates():
    L1, L2 = cylinder_lunes()
    u = np.linspace(0.0, 1.0, 257)
    g = periodic_ramp()
    assert np.allclose(L1.g(u), g(2 * math.pi * u), atol=1e-14)
    assert np.allclose(L2.f(u), g(math.pi + 2 * math.pi * u), atol=1e-14)
    for L in (L1, L2):
        L.check()


def test_base_cylinder_path_is_continuous_at_the_thirds(base):
    eps = Fraction(1, 10 ** 30)
    for s in (Fraction(1, 3), Fraction(2, 3)):
        th, y = base.curve([s - eps, s, s + eps])
        dth = np.abs(np.angle(np.exp(1j * (th - th[1]))))
        assert np.max(dth) < 1e-6 and np.max(np.abs(y - y[1])) < 1e-6
    th, y = base.curve([Fraction(0), Fraction(1)])
    assert (th[0], y[0]) == (0.0, 0.0)
    assert th[1] == pytest.approx(math.pi) and y[1] == 1.0


def test_cylinder_properties():
    r = cylinder_property_check(build_cylinder((0.0, 1.0), (2.0, 5.0), 3))
    assert r["ok"]
    assert r["start"] == (0.0, 2.0)
    assert r["end"][0] == pytest.approx(math.pi) and r["end"][1] == pytest.approx(5.0)


def test_cylinder_ceiling_is_tangent_to_psi(stacked):
    for t in (0.13, 0.5, 0.871):
        F = stacked.ceiling(t, TH, 1)
        assert np.allclose(stacked.psi(TH, F[0]), F[1], atol=1e-9)


def test_stacked_cylinder(stacked):
    assert stacked.n == 25 and stacked.n % 2 == 1
    assert stacked.n > (stacked.C + 1) / 0.1
    assert 1.0 < stacked.C < 2.0
    for t in (0.05, 0.5, 0.95):
        assert ceiling_deviation(stacked, t, 2) < 0.1
    # consecutive stacks join
    j = 7
    t = Fraction(j, stacked.n)
    th, y = stacked.curve([t - Fraction(1, 10 ** 30), t])
    assert abs(np.angle(np.exp(1j * (th[0] - th[1])))) < 1e-6 and y[0] == pytest.approx(y[1], abs=1e-9)
    with pytest.raises(DomainError):
        stacked.curve([1.5])


def test_smallest_odd_above():
    assert [smallest_odd_above(x) for x in (0.2, 2.5, 3.0, 4.0, 23.97)] == [1, 3, 5, 5, 25]


def test_stack_cap():
    with pytest.raises(BudgetError):
        build_cylinder_with_norm(delta0=1e-5, depth=3)
    with pytest.raises(DomainError):
        build_cylinder_with_norm(delta0=0.0)
    with pytest.raises(DomainError):
        build_cylinder((1.0, 1.0), (0.0, 1.0))


def test_theorem_schedule():
    s = TheoremSchedule.uniform((0.5, 2.0), 3, 2, 0.2)
    assert s.breakpoints == (0.5, 1.0, 1.5, 2.0)
    assert s.delta == pytest.approx((0.05, 0.05, 0.05))
    assert [s.band_of(t) for t in (0.5, 0.99, 1.0, 2.0)] == [0, 0, 1, 2]
    with pytest.raises(DomainError):
        s.band_of(2.5)
    with pytest.raises(DomainError):
        TheoremSchedule((0.0, 1.0), (2,), (0.1,))
    with pytest.raises(DomainError):
        TheoremSchedule((1.0, 0.5), (2,), (0.1,))
    with pytest.raises(DomainError):
        TheoremSchedule((0.5, 1.0), (2, 2), (0.1,))


class _Circle:
    """A stand-in embedding whose radius is the constant t."""

    def __init__(self, t):
        self.t = t

    def radius(self, theta, order=0):
        out = np.zeros((order + 1, np.size(theta)))
        out[0] = self.t
        return out


def test_curvature_of_circle():
    assert np.allclose(curvature(_Circle(0.7), 64), 1 / 0.7)


def test_curvature_against_discrete_geometry():
    th = build_planar(TheoremSchedule.uniform((0.5, 2.0), 3, 2, 0.2), depth=3)
    e = th.embedding(1.23)
    grid = 4096
    theta = np.linspace(0.0, 2 * math.pi, grid, endpoint=False)
    x, y = e.beta(theta)
    h = 2 * math.pi / grid
    dx = (np.roll(x, -1) - np.roll(x, 1)) / (2 * h)
    dy = (np.roll(y, -1) - np.roll(y, 1)) / (2 * h)
    ddx = (np.roll(x, -1) - 2 * x + np.roll(x, 1)) / h ** 2
    ddy = (np.roll(y, -1) - 2 * y + np.roll(y, 1)) / h ** 2
    discrete = (dx * ddy - dy * ddx) / (dx * dx + dy * dy) ** 1.5
    assert np.allclose(curvature(e, grid), discrete, rtol=1e-3, atol=1e-3)
    r = curvature_check(e)
    assert r["ok"]
    assert e.min_pairwise_distance(256) > 0


def test_planar_assembly():
    th = build_planar(TheoremSchedule.uniform((0.5, 2.0), 3, 2, 0.2), depth=3)
    assert th.band_continuity() < 1e-12
    assert [b.n for b in th.bands] == [25, 25, 25]
    # each band starts where the previous one ended
    rot = [b.rotation for b in th.bands]
    assert rot[1] == pytest.approx(math.pi) and rot[2] == pytest.approx(0.0, abs=1e-12)
    r = proximity_check(th, per_band=5)
    assert r["ok"] and all(row["chain_ok"] for row in r["rows"])
    x, y = th.curve([0.5, 1.0, 2.0])
    assert np.allclose(np.hypot(x, y), [0.5, 1.0, 2.0])
    dx, dy = th.field(np.array([0.3]), np.array([1.2]))
    assert np.isfinite(dx[0]) and np.isfinite(dy[0])
    with pytest.raises(DomainError):
        build_planar(TheoremSchedule.uniform((0.5, 2.0), 3, 2, 0.2), window=(0.1, 1.0))


def test_difference_norm_chain_rule():
    th = build_planar(TheoremSchedule.uniform((0.5, 2.0), 3, 2, 0.2), depth=3)
    e = PlanarEmbedding(0.9, th.band_for(0.9), 2, 0.2)
    bn, fn = e.difference_norm(2)
    assert bn <= 4 * fn
    # the k = 0 beta norm is exactly the radial gap
    b0, f0 = e.difference_norm(0)
    assert b0 == pytest.approx(f0, rel=1e-12)
    assert polar(0.0, 2.0) == (2.0, 0.0)
