"""Lunes L(f, g) and the two subdivision primitives: n-slicing and bipartition."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DomainError, SupportError
from .smoothfn import (
    DEFAULT_GRID,
    BumpPhi,
    CkNormEstimate,
    SmoothFn,
    ck_norm,
    constant,
    flat,
    identity,
    make_phi,
    phi_rescaled,
)

SUPPORT_THRESHOLD = 1e-12
SUPPORT_BISECTION_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class Lune:
    """The region between a floor ``f`` and a ceiling ``g`` over ``domain``.

    ``support`` may be supplied when it is known analytically (as it is for
    every lune produced by the subdivision primitives); otherwise it is
    detected numerically on demand.  ``gap``, when present, is a DAG equal to
    ``g - f`` that avoids cancellation for very thin lunes.
    """

    f: SmoothFn
    g: SmoothFn
    domain: tuple = (0.0, 1.0)
    support: Optional[tuple] = None
    gap: Optional[SmoothFn] = field(default=None, repr=False)

    def difference(self) -> SmoothFn:
        return self.gap if self.gap is not None else self.g - self.f

    def support_interval(self, grid: int = DEFAULT_GRID) -> tuple:
        """The single support interval; raises SupportError if not simple."""
        if self.support is not None:
            return self.support
        s = support_of(self, grid)
        if len(s.intervals) != 1:
            raise SupportError(f"lune is not simple: support {s.intervals}")
        return s.intervals[0]

    def norm_window(self) -> tuple:
        return self.support if self.support is not None else self.domain

    def check(self, grid: int = 1025, order: int = 4, tol: float = 1e-9) -> None:
        """Sampled check of f <= g and of matching jets at both ends."""
        xs = np.linspace(*self.domain, grid)
        d = self.difference().derivatives(xs, 0)[0]
        if d.min() < -1e-12:
            raise DomainError(f"floor above ceiling by {-d.min():.3g}")
        ends = np.array(self.domain)
        jf = self.f.derivatives(ends, order)
        jg = self.g.derivatives(ends, order)
        if np.max(np.abs(jf - jg)) > tol * max(1.0, np.max(np.abs(jf))):
            raise DomainError("floor and ceiling jets differ at the domain ends")


@dataclass(frozen=True)
class Support:
    intervals: list

    @property
    def simple(self) -> bool:
        return len(self.intervals) == 1


@dataclass(frozen=True)
class EssentialLune:
    base: Lune
    clipped_domain: tuple

    def as_lune(self) -> Lune:
        c, d = self.clipped_domain
        return Lune(self.base.f.restrict(c, d), self.base.g.restrict(c, d), (c, d),
                    (c, d), None if self.base.gap is None else self.base.gap.restrict(c, d))

    def contains(self, x, y, tol: float = 1e-9) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        y = np.atleast_1d(np.asarray(y, dtype=float))
        c, d = self.clipped_domain
        inside = (x >= c - tol) & (x <= d + tol)
        xc = np.clip(x, c, d)
        lo = self.base.f.derivatives(xc, 0)[0]
        hi = self.base.g.derivatives(xc, 0)[0]
        return inside & (y >= lo - tol) & (y <= hi + tol)


def lune_norm(L: Lune, k: int, grid_size: int = DEFAULT_GRID,
              safety_factor: float = 1.0) -> CkNormEstimate:
    """``||g - f||_k`` sampled on the support closure (or the domain)."""
    return ck_norm(L.difference(), k, grid_size, safety_factor, interval=L.norm_window())


def slice_piece(L: Lune, n: int, i: int) -> Lune:
    """The i-th lune (1-based) of the n-slicing of ``L``."""
    if n < 1:
        raise DomainError("slicing needs n >= 1")
    if not 1 <= i <= n:
        raise DomainError(f"slice index {i} outside 1..{n}")
    lo = _slice_line(L, n, i - 1)
    hi = _slice_line(L, n, i)
    gap = None if L.gap is None else (1.0 / n) * L.gap
    return Lune(lo, hi, L.domain, L.support, gap)


def _slice_line(L: Lune, n: int, j: int) -> SmoothFn:
    if j == 0:
        return L.f
    if j == n:
        return L.g
    return (1.0 - j / n) * L.f + (j / n) * L.g


def slice_lune(L: Lune, n: int) -> list:
    """The n-slicing ``L(h_0, h_1), ..., L(h_{n-1}, h_n)`` with ``h_j = f + (j/n)(g - f)``."""
    if n < 1:
        raise DomainError("slicing needs n >= 1")
    lines = [_slice_line(L, n, j) for j in range(n + 1)]
    gap = None if L.gap is None else (1.0 / n) * L.gap
    return [Lune(lines[i], lines[i + 1], L.domain, L.support, gap) for i in range(n)]


def bipartition(L: Lune, phi: BumpPhi | None = None) -> tuple:
    """Split ``L`` along ``h = (1 - phi_ab) g + phi_ab f`` where ``(a, b)`` is its support."""
    phi = phi or make_phi()
    try:
        a, b = L.support_interval()
    except SupportError:
        raise
    p = phi_rescaled(phi, a, b)
    q = 1.0 - p
    h = q * L.g + p * L.f
    gap = L.gap
    low = Lune(L.f, h, L.domain, (a, (a + 2 * b) / 3),
               None if gap is None else q * gap)
    high = Lune(h, L.g, L.domain, ((2 * a + b) / 3, b),
                None if gap is None else p * gap)
    return low, high


def support_of(L: Lune, grid: int = DEFAULT_GRID) -> Support:
    """Numerical support: sign pattern on a grid, boundaries refined by bisection."""
    if grid < 3:
        raise ValueError("grid must be >= 3")
    lo, hi = L.domain
    xs = np.linspace(lo, hi, grid)
    diff = L.difference()
    d = diff.derivatives(xs, 0)[0]
    pos = d > SUPPORT_THRESHOLD
    if not np.any(pos):
        return Support([])

    def positive(x: float) -> bool:
        return float(diff(x)) > 0.0

    def refine(left: float, right: float, left_in: bool) -> float:
        # invariant: positive(left) == left_in, positive(right) != left_in
        while right - left > SUPPORT_BISECTION_TOL:
            mid = 0.5 * (left + right)
            if positive(mid) == left_in:
                left = mid
            else:
                right = mid
        return 0.5 * (left + right)

    idx = np.flatnonzero(pos)
    runs = np.split(idx, np.flatnonzero(np.diff(idx) > 1) + 1)
    spans = []
    for run in runs:
        i0, i1 = int(run[0]), int(run[-1])
        # runs are found above the noise threshold; their ends are where g - f > 0 stops
        while i0 > 0 and d[i0 - 1] > 0.0:
            i0 -= 1
        while i1 < grid - 1 and d[i1 + 1] > 0.0:
            i1 += 1
        if spans and i0 <= spans[-1][1]:
            spans[-1] = (spans[-1][0], max(i1, spans[-1][1]))
        else:
            spans.append((i0, i1))
    intervals = []
    for i0, i1 in spans:
        c = lo if i0 == 0 else refine(xs[i0 - 1], xs[i0], False)
        e = hi if i1 == grid - 1 else refine(xs[i1], xs[i1 + 1], True)
        intervals.append((float(c), float(e)))
    return Support(intervals)


def essential(L: Lune) -> EssentialLune:
    """The lune clipped to the closure of its (single) support interval."""
    if isinstance(L, EssentialLune):
        return L
    c, d = L.support_interval()
    return EssentialLune(L, (c, d))


def normalize(L: Lune) -> tuple:
    """Affinely conjugate a simple lune to domain ``[0, 1]`` with full support.

    Returns ``(normalized_lune, (shift, scale))`` where the original abscissa
    is ``shift + scale * x``.
    """
    c, d = L.support_interval()
    scale = d - c
    f = L.f.rescaled(-c / scale, 1.0 / scale, domain=(0.0, 1.0))
    g = L.g.rescaled(-c / scale, 1.0 / scale, domain=(0.0, 1.0))
    gap = None if L.gap is None else L.gap.rescaled(-c / scale, 1.0 / scale, domain=(0.0, 1.0))
    return Lune(f, g, (0.0, 1.0), (0.0, 1.0), gap), (c, scale)


DEFAULT_AMPLITUDE = 0.09


def hump(amplitude: float = 1.0) -> SmoothFn:
    """``amplitude * e**4 * B(x) B(1 - x)``: flat at 0 and 1, peak ``amplitude`` at 1/2."""
    x = identity((0.0, 1.0))
    return (amplitude * np.e ** 4) * (flat(x) * flat(1.0 - x))


def default_lune(amplitude: float = DEFAULT_AMPLITUDE) -> Lune:
    """``L(0, hump)`` on [0, 1].

    The default amplitude keeps the safety-factored C^1 norm below 1/2.
    """
    if amplitude <= 0:
        raise DomainError("amplitude must be positive")
    g = hump(amplitude)
    return Lune(constant(0.0, (0.0, 1.0)), g, (0.0, 1.0), (0.0, 1.0), g)
