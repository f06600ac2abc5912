"""Cylinder curves, the stacked cylinder with C^k control, and the planar assembly.

Everything on the cylinder T x [c, d] is derived from one *base cylinder* on
T x [0, 1] built from two lunes over a periodic flat-ended ramp ``g``:

* ``L_1 = L(0, g)`` over [0, 2pi] is filled during the first third of time,
* the graph of ``g`` is walked from 2pi back to pi during the middle third,
* ``L_2 = L(g, 1)`` over [pi, 3pi] is filled during the last third.

Both lunes are rescaled to [0, 1] by ``theta = 2 pi u`` (resp. ``pi + 2 pi u``),
so their subdivision families live in the unit square.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy import ndimage

from . import smoothfn as sf
from .cantor import CantorIndex
from .ceiling_field import ceiling_values, psi_descent
from .errors import BudgetError, DomainError
from .lune import Lune
from .peano import CurveApprox, diameter_bound, eval_many
from .subdivision import EpsilonSchedule, LuneFamily, build_family

TWO_PI = sf.TWO_PI
C_SAMPLES = 257
MAX_STACK = 10_001
THIRD = Fraction(1, 3)
TWO_THIRDS = Fraction(2, 3)


def periodic_ramp() -> sf.SmoothFn:
    """``g(theta)``: S(theta/pi) on [0, pi], mirrored on [pi, 2pi]; flat at 0 and pi."""
    th = sf.identity()
    return (sf.sigmoid(th * (1.0 / math.pi)) + sf.sigmoid(2.0 - th * (1.0 / math.pi)) - 1.0).periodize(0.0, TWO_PI)


def _ramp_series(theta: np.ndarray, order: int) -> np.ndarray:
    """Series of the periodic ramp in theta."""
    return periodic_ramp().series(np.mod(theta, TWO_PI), order)


def cylinder_lunes() -> tuple:
    """The two unit-square lunes of the base cylinder."""
    u = sf.identity((0.0, 1.0))
    zero = sf.constant(0.0, (0.0, 1.0))
    one = sf.constant(1.0, (0.0, 1.0))
    g1 = sf.sigmoid(2.0 * u) + sf.sigmoid(2.0 - 2.0 * u) - 1.0
    f2 = sf.sigmoid(1.0 - 2.0 * u) + sf.sigmoid(2.0 * u - 1.0)
    L1 = Lune(zero, g1, (0.0, 1.0), (0.0, 1.0), g1)
    L2 = Lune(f2, one, (0.0, 1.0), (0.0, 1.0), 1.0 - f2)
    return L1, L2


def _scale_theta(series: np.ndarray, factor: float) -> np.ndarray:
    """Series in u -> series in theta when ``theta = factor * u + const``."""
    k = np.arange(series.shape[0], dtype=float)
    return series / factor ** k[:, None]


def _as_fraction(t) -> Fraction:
    return t if isinstance(t, Fraction) else Fraction(t)


@dataclass(eq=False)
class BaseCylinder:
    """The Prop-3.1 curve on T x [0, 1] over the parameter interval [0, 1]."""

    fam1: LuneFamily
    fam2: LuneFamily
    idx1: CantorIndex
    idx2: CantorIndex
    depth: int

    @property
    def curve1(self) -> CurveApprox:
        return CurveApprox(self.fam1, self.idx1, self.depth)

    @property
    def curve2(self) -> CurveApprox:
        return CurveApprox(self.fam2, self.idx2, self.depth)

    def tail(self) -> float:
        return 2.0 * max(self.fam1.eps.tail(self.depth), self.fam2.eps.tail(self.depth))

    def curve(self, ss) -> tuple:
        """``(theta, y)`` with theta in [0, 2pi)."""
        ss = [_as_fraction(s) for s in ss]
        th = np.zeros(len(ss))
        y = np.zeros(len(ss))
        first = [i for i, s in enumerate(ss) if s <= THIRD]
        last = [i for i, s in enumerate(ss) if s > TWO_THIRDS]
        mid = [i for i, s in enumerate(ss) if THIRD < s <= TWO_THIRDS]
        if first:
            x, yy = eval_many(self.curve1, [3 * ss[i] for i in first])
            th[first], y[first] = TWO_PI * x, yy
        if mid:
            tm = np.array([float(3 * (1 - ss[i])) for i in mid]) * math.pi
            th[mid], y[mid] = tm, _ramp_series(tm, 0)[0]
        if last:
            x, yy = eval_many(self.curve2, [3 * ss[i] - 2 for i in last])
            th[last], y[last] = math.pi + TWO_PI * x, yy
        return np.mod(th, TWO_PI), y

    def ceiling_series(self, s, theta: np.ndarray, order: int) -> np.ndarray:
        """Series in theta of the ceiling at parameter s."""
        s = _as_fraction(s)
        theta = np.asarray(theta, dtype=float)
        if s <= THIRD:
            u = np.mod(theta, TWO_PI) / TWO_PI
            ser = ceiling_values(self.fam1, self.idx1, [3 * s] * u.size, u, order)
            return _scale_theta(ser / sf._FACT[: order + 1, None], TWO_PI)
        if s <= TWO_THIRDS:
            return _ramp_series(theta, order)
        u = np.mod(theta - math.pi, TWO_PI) / TWO_PI
        ser = ceiling_values(self.fam2, self.idx2, [3 * s - 2] * u.size, u, order)
        return _scale_theta(ser / sf._FACT[: order + 1, None], TWO_PI)

    def ceiling(self, s, theta, order: int = 0) -> np.ndarray:
        """Derivatives ``out[k, i]`` of the ceiling at ``theta[i]``."""
        return self.ceiling_series(s, theta, order) * sf._FACT[: order + 1, None]

    def psi(self, theta, y) -> np.ndarray:
        theta = np.mod(np.atleast_1d(np.asarray(theta, dtype=float)), TWO_PI)
        y = np.atleast_1d(np.asarray(y, dtype=float))
        g = _ramp_series(theta, 0)[0]
        out = np.zeros(theta.size)
        low = y <= g
        if low.any():
            out[low] = psi_descent(self.fam1, theta[low] / TWO_PI, y[low])[0] / TWO_PI
        if (~low).any():
            u = np.mod(theta[~low] - math.pi, TWO_PI) / TWO_PI
            out[~low] = psi_descent(self.fam2, u, y[~low])[0] / TWO_PI
        return out

    def ck_sup(self, k: int, samples: int = C_SAMPLES, grid: int = 1025,
               safety_factor: float = sf.SAFETY_FACTOR) -> float:
        """Safety-factored ``sup_s ||F_s||_k`` over ``samples`` parameters."""
        theta = np.linspace(0.0, TWO_PI, grid)
        best = 0.0
        for i in range(samples):
            s = Fraction(i, samples - 1)
            best = max(best, float(np.max(np.abs(self.ceiling(s, theta, k)))))
        return safety_factor * best

    def diameter_bound(self) -> float:
        return max(diameter_bound(self.fam1, self.depth), diameter_bound(self.fam2, self.depth))


@lru_cache(maxsize=8)
def base_cylinder(depth: int = 3, eps_base: float = 0.5, eps_scale: float = 1.0) -> BaseCylinder:
    eps = EpsilonSchedule(eps_base, eps_scale)
    L1, L2 = cylinder_lunes()
    fam1 = build_family(L1, eps, depth)
    fam2 = build_family(L2, eps, depth)
    return BaseCylinder(fam1, fam2, CantorIndex.from_family(fam1), CantorIndex.from_family(fam2), depth)


@dataclass(eq=False)
class CylinderCurve:
    """A (possibly stacked and rotated) copy of the base cylinder.

    For parameter t, ``sigma = (t - t0) / (t1 - t0)``, stack ``j = floor(n sigma)``
    and local time ``s = n sigma - j``; the ceiling is
    ``c + (d - c) (j + F^_s(theta - j pi - rotation)) / n``.
    """

    base: BaseCylinder
    t_range: tuple
    y_range: tuple
    n: int = 1
    rotation: float = 0.0
    C: float | None = None
    k0: int | None = None
    delta0: float | None = None

    def _split(self, t):
        t0, t1 = (Fraction(v) for v in self.t_range)
        sigma = (_as_fraction(t) - t0) / (t1 - t0)
        if not 0 <= sigma <= 1:
            raise DomainError(f"t={float(t)} outside {self.t_range}")
        j = min(math.floor(sigma * self.n), self.n - 1)
        return j, sigma * self.n - j, sigma

    def curve(self, ts) -> tuple:
        parts = [self._split(t) for t in ts]
        th, y = self.base.curve([p[1] for p in parts])
        js = np.array([p[0] for p in parts], dtype=float)
        c, d = self.y_range
        theta = np.mod(th + js * math.pi + self.rotation, TWO_PI)
        return theta, c + (d - c) * (js + y) / self.n

    def ceiling(self, t, theta, order: int = 0) -> np.ndarray:
        j, s, _ = self._split(t)
        theta = np.asarray(theta, dtype=float)
        c, d = self.y_range
        out = self.base.ceiling(s, theta - j * math.pi - self.rotation, order) * ((d - c) / self.n)
        out[0] += c + (d - c) * j / self.n
        return out

    def affine_level(self, t) -> float:
        _, _, sigma = self._split(t)
        c, d = self.y_range
        return c + (d - c) * float(sigma)

    def psi(self, theta, y) -> np.ndarray:
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        y = np.atleast_1d(np.asarray(y, dtype=float))
        c, d = self.y_range
        z = (y - c) / (d - c) * self.n
        j = np.clip(np.floor(z), 0, self.n - 1)
        yy = np.clip(z - j, 0.0, 1.0)
        return self.base.psi(theta - j * math.pi - self.rotation, yy) * (d - c) / self.n

    def endpoints(self) -> tuple:
        th, y = self.curve([Fraction(self.t_range[0]), Fraction(self.t_range[1])])
        return (float(th[0]), float(y[0])), (float(th[1]), float(y[1]))

    def end_rotation(self) -> float:
        """Angle of the end point, ``rotation + n pi`` reduced mod 2pi."""
        return math.fmod(self.rotation + self.n * math.pi, TWO_PI)


def _check_ranges(t_range, y_range):
    if not t_range[0] < t_range[1]:
        raise DomainError(f"empty parameter range {t_range}")
    if not y_range[0] < y_range[1]:
        raise DomainError(f"empty level range {y_range}")


def build_cylinder(t_range=(0.0, 1.0), y_range=(0.0, 1.0), depth: int = 3) -> CylinderCurve:
    _check_ranges(t_range, y_range)
    return CylinderCurve(base_cylinder(depth), tuple(t_range), tuple(y_range))


def smallest_odd_above(x: float) -> int:
    n = math.floor(x) + 1
    return n if n % 2 == 1 else n + 1


def build_cylinder_with_norm(t_range=(0.0, 1.0), y_range=(0.0, 1.0), k0: int = 2,
                             delta0: float = 0.1, depth: int = 3, rotation: float = 0.0,
                             max_stack: int = MAX_STACK, C: float | None = None) -> CylinderCurve:
    """Stack n copies of the base cylinder so that ``||F_t - c_t||_k0 < delta0``.

    In unit coordinates the requirement is ``(C + 1) / n < delta0 / (d - c)``.
    """
    _check_ranges(t_range, y_range)
    if delta0 <= 0:
        raise DomainError("delta0 must be positive")
    base = base_cylinder(depth)
    if C is None:
        C = _cached_C(depth, k0)
    unit_delta = delta0 / (y_range[1] - y_range[0])
    n = smallest_odd_above((C + 1.0) / unit_delta)
    if n > max_stack:
        raise BudgetError(f"stack of {n} cylinders exceeds the cap {max_stack}")
    return CylinderCurve(base, tuple(t_range), tuple(y_range), n, rotation, C, k0, delta0)


@lru_cache(maxsize=32)
def _cached_C(depth: int, k0: int) -> float:
    return base_cylinder(depth).ck_sup(k0)


def ceiling_deviation(cyl: CylinderCurve, t, k: int, grid: int = 1025) -> float:
    """``||F_t - c_t||_k`` on the circle."""
    theta = np.linspace(0.0, TWO_PI, grid)
    d = cyl.ceiling(t, theta, k)
    d[0] -= cyl.affine_level(t)
    return float(np.max(np.abs(d)))


def stacked_bound_check(cyl: CylinderCurve, samples: int = 100, seed: int = 0) -> dict:
    """``||F_t - c_t||_k0 < delta0`` at sampled t plus the per-stack bound ``C/n < delta/(d-c) - 1/n``."""
    rng = np.random.default_rng(seed)
    t0, t1 = cyl.t_range
    ts = t0 + (t1 - t0) * rng.random(samples)
    devs = [ceiling_deviation(cyl, t, cyl.k0) for t in ts]
    unit_delta = cyl.delta0 / (cyl.y_range[1] - cyl.y_range[0])
    per_stack = cyl.C / cyl.n < unit_delta - 1.0 / cyl.n
    worst = max(devs)
    return {"n": cyl.n, "C": cyl.C, "odd": cyl.n % 2 == 1,
            "n_ok": cyl.n > (cyl.C + 1.0) / unit_delta, "per_stack_ok": per_stack,
            "max_deviation": worst, "delta0": cyl.delta0,
            "ok": bool(worst < cyl.delta0 and per_stack and cyl.n % 2 == 1)}


def cylinder_property_check(cyl: CylinderCurve, grid: int = 257) -> dict:
    """Boundary ceilings constant c and d; endpoints; seam agreement with the ramp."""
    theta = np.linspace(0.0, TWO_PI, grid)
    c, d = cyl.y_range
    t0, t1 = cyl.t_range
    F0 = cyl.ceiling(Fraction(t0), theta, 2)
    F1 = cyl.ceiling(Fraction(t1), theta, 2)
    start, end = cyl.endpoints()
    err0 = float(max(np.max(np.abs(F0[0] - c)), np.max(np.abs(F0[1:]))))
    err1 = float(max(np.max(np.abs(F1[0] - d)), np.max(np.abs(F1[1:]))))
    base = cyl.base
    seam = 0.0
    ramp = base.ceiling(TWO_THIRDS, theta, 4)
    for s in (THIRD, TWO_THIRDS):
        seam = max(seam, float(np.max(np.abs(base.ceiling(s, theta, 4) - ramp))))
    return {"F_t0_error": err0, "F_t1_error": err1, "start": start, "end": end,
            "seam_error": seam,
            "ok": err0 <= 1e-12 and err1 <= 1e-12 and seam <= 1e-12}


def cylinder_footprint_check(cyl: CylinderCurve, t, raster: int = 256, samples: int = 100_000,
                             seed: int = 0) -> dict:
    """Raster Hausdorff distance between gamma([t0, t]) and ``{c <= y <= F_t}`` on the cylinder."""
    rng = np.random.default_rng(seed)
    t0 = cyl.t_range[0]
    c, d = cyl.y_range
    ts = np.concatenate([np.linspace(t0, t, samples // 2), rng.uniform(t0, t, samples - samples // 2)])
    th, y = cyl.curve(ts.tolist())
    px = TWO_PI / (raster - 1)
    py = (d - c) / (raster - 1)
    img = np.zeros((raster, raster), dtype=bool)
    img[np.clip(np.rint((y - c) / py).astype(int), 0, raster - 1),
        np.clip(np.rint(th / px).astype(int), 0, raster - 1)] = True
    thetas = np.linspace(0.0, TWO_PI, raster)
    F = cyl.ceiling(t, thetas, 0)[0]
    ys = np.linspace(c, d, raster)
    reg = ys[:, None] <= F[None, :] + 1e-12
    to_reg = ndimage.distance_transform_edt(~reg, sampling=(py, px))
    to_img = ndimage.distance_transform_edt(~img, sampling=(py, px))
    dist = max(float(to_reg[img].max()), float(to_img[reg].max()))
    scale = max(TWO_PI, d - c) / cyl.n
    bound = scale * math.sqrt(cyl.base.diameter_bound()) + 2.0 * max(px, py)
    return {"t": float(t), "hausdorff": dist, "bound": bound, "ok": dist <= bound}


# --------------------------------------------------------------------------
# planar assembly


@dataclass(frozen=True)
class TheoremSchedule:
    """Piecewise-constant k(t), eps(t) on bands ``[t_n, t_{n+1}]``."""

    breakpoints: tuple
    k: tuple
    eps: tuple

    def __post_init__(self):
        bp = self.breakpoints
        if len(bp) < 2 or len(self.k) != len(bp) - 1 or len(self.eps) != len(bp) - 1:
            raise DomainError("need len(k) == len(eps) == len(breakpoints) - 1")
        if any(b <= a for a, b in zip(bp, bp[1:])) or bp[0] <= 0:
            raise DomainError("breakpoints must be positive and increasing")
        if any(e <= 0 for e in self.eps) or any(k < 0 for k in self.k):
            raise DomainError("eps must be positive and k non-negative")

    @property
    def delta(self) -> tuple:
        return tuple(e / 2 ** k for e, k in zip(self.eps, self.k))

    @classmethod
    def uniform(cls, window=(0.5, 2.0), bands: int = 3, k: int = 2, eps: float = 0.2):
        bp = tuple(np.linspace(window[0], window[1], bands + 1).tolist())
        return cls(bp, (k,) * bands, (eps,) * bands)

    def band_of(self, t: float) -> int:
        bp = self.breakpoints
        if not bp[0] <= t <= bp[-1]:
            raise DomainError(f"t={t} outside the schedule window")
        return min(int(np.searchsorted(bp, t, side="right")) - 1, len(bp) - 2)


def polar(theta, r) -> tuple:
    return r * np.cos(theta), r * np.sin(theta)


@dataclass(eq=False)
class PlanarEmbedding:
    """``beta_t = P(theta, F_t(theta))`` next to the circle ``alpha_t`` of radius t."""

    t: float
    band: CylinderCurve
    k: int
    eps: float

    def radius(self, theta, order: int = 0) -> np.ndarray:
        return self.band.ceiling(self.t, theta, order)

    def beta(self, theta) -> tuple:
        theta = np.asarray(theta, dtype=float)
        return polar(theta, self.radius(theta)[0])

    def alpha(self, theta) -> tuple:
        theta = np.asarray(theta, dtype=float)
        return polar(theta, np.full(theta.shape, self.t))

    def difference_norm(self, k: int | None = None, grid: int = 1025) -> tuple:
        """``(||beta_t - alpha_t||_k, ||F_t - t||_k)`` with the max over both components."""
        k = self.k if k is None else k
        theta = np.linspace(0.0, TWO_PI, grid)
        r = self.radius(theta, k) / sf._FACT[: k + 1, None]
        r[0] -= self.t
        idx = np.arange(k + 1)[:, None]
        cos = np.cos(theta[None, :] + idx * math.pi / 2) / sf._FACT[: k + 1, None]
        sin = np.sin(theta[None, :] + idx * math.pi / 2) / sf._FACT[: k + 1, None]
        bx = sf._mul(r, cos) * sf._FACT[: k + 1, None]
        by = sf._mul(r, sin) * sf._FACT[: k + 1, None]
        beta_norm = float(max(np.max(np.abs(bx)), np.max(np.abs(by))))
        f_norm = float(np.max(np.abs(r * sf._FACT[: k + 1, None])))
        return beta_norm, f_norm

    def min_pairwise_distance(self, grid: int = 1024) -> float:
        theta = np.linspace(0.0, TWO_PI, grid, endpoint=False)
        x, y = self.beta(theta)
        d = np.hypot(x[:, None] - x[None, :], y[:, None] - y[None, :])
        d[np.diag_indices(grid)] = np.inf
        return float(d.min())


@dataclass(eq=False)
class PlanarTheorem:
    schedule: TheoremSchedule
    window: tuple
    bands: list = field(default_factory=list)

    def band_for(self, t: float) -> CylinderCurve:
        return self.bands[self.schedule.band_of(t)]

    def embedding(self, t: float) -> PlanarEmbedding:
        i = self.schedule.band_of(t)
        return PlanarEmbedding(float(t), self.bands[i], self.schedule.k[i], self.schedule.eps[i])

    def curve(self, ts) -> tuple:
        """Planar points ``P(gamma*(t))``."""
        ts = list(ts)
        x = np.zeros(len(ts))
        y = np.zeros(len(ts))
        for i, band in enumerate(self.bands):
            sel = [j for j, t in enumerate(ts) if self.schedule.band_of(float(t)) == i]
            if sel:
                th, r = band.curve([ts[j] for j in sel])
                x[sel], y[sel] = polar(th, r)
        return x, y

    def field(self, theta, r) -> tuple:
        """Direction of the line field at ``P(theta, r)``: ``P_*(d/dtheta + psi d/dr)``."""
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        r = np.atleast_1d(np.asarray(r, dtype=float))
        slope = np.zeros(theta.size)
        for i, band in enumerate(self.bands):
            lo, hi = band.y_range
            sel = (r >= lo) & (r <= hi) if i == 0 else (r > lo) & (r <= hi)
            if sel.any():
                slope[sel] = band.psi(theta[sel], r[sel])
        dx = -r * np.sin(theta) + slope * np.cos(theta)
        dy = r * np.cos(theta) + slope * np.sin(theta)
        return dx, dy

    def band_continuity(self) -> float:
        """Largest jump of the curve between consecutive bands."""
        worst = 0.0
        for a, b in zip(self.bands, self.bands[1:]):
            (_, _), (th_end, y_end) = a.endpoints()
            (th_start, y_start), _ = b.endpoints()
            dth = abs(math.remainder(th_end - th_start, TWO_PI))
            worst = max(worst, dth, abs(y_end - y_start))
        return worst


def build_planar(schedule: TheoremSchedule, window: Sequence[float] | None = None,
                 depth: int = 3) -> PlanarTheorem:
    """One stacked cylinder per band, each rotated so it starts where the last one ended."""
    bp = schedule.breakpoints
    window = tuple(window) if window is not None else (bp[0], bp[-1])
    if window[0] <= 0 or window[0] < bp[0] or window[1] > bp[-1]:
        raise DomainError("window must lie inside the schedule and away from 0")
    out = PlanarTheorem(schedule, window)
    rotation = 0.0
    for i in range(len(bp) - 1):
        lo, hi = bp[i], bp[i + 1]
        band = build_cylinder_with_norm((lo, hi), (lo, hi), schedule.k[i], schedule.delta[i],
                                        depth, rotation)
        out.bands.append(band)
        rotation = band.end_rotation()
    return out


def proximity_check(theorem: PlanarTheorem, per_band: int = 200, seed: int = 0,
                    grid: int = 1025) -> dict:
    """``||beta_t - alpha_t||_k < eps`` and ``||beta_t - alpha_t||_k <= 2^k ||F_t - t||_k``."""
    rng = np.random.default_rng(seed)
    rows = []
    ok = True
    for i, band in enumerate(theorem.bands):
        lo, hi = band.t_range
        ts = lo + (hi - lo) * rng.random(per_band)
        k, eps = theorem.schedule.k[i], theorem.schedule.eps[i]
        worst = 0.0
        chain_ok = True
        for t in ts:
            e = PlanarEmbedding(float(t), band, k, eps)
            bn, fn = e.difference_norm(k, grid)
            worst = max(worst, bn)
            chain_ok &= bn <= 2 ** k * fn * (1 + 1e-12)
        band_ok = worst < eps and chain_ok
        rows.append({"band": i, "n": band.n, "k": k, "eps": eps, "max_norm": worst,
                     "margin": eps - worst, "chain_ok": bool(chain_ok), "ok": bool(band_ok)})
        ok &= band_ok
    return {"rows": rows, "ok": bool(ok)}


def curvature(e: PlanarEmbedding, grid: int = 1024) -> np.ndarray:
    """Signed curvature of the polar curve ``r = F_t(theta)``."""
    theta = np.linspace(0.0, TWO_PI, grid, endpoint=False)
    r, r1, r2 = e.radius(theta, 2)
    return (r * r + 2 * r1 * r1 - r * r2) / (r * r + r1 * r1) ** 1.5


def curvature_check(e: PlanarEmbedding, grid: int = 1024) -> dict:
    kappa = curvature(e, grid)
    norm2, _ = e.difference_norm(2)
    return {"t": e.t, "min_curvature": float(np.min(np.abs(kappa))),
            "min_signed": float(kappa.min()), "beta_alpha_c2": norm2,
            "small": norm2 < e.t / 4, "ok": bool(kappa.min() > 0)}
