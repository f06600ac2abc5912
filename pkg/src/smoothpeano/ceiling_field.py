"""Ceiling functions F_t, the slope function psi and the line field (1, psi)."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import smoothfn as sf
from .cantor import G_KIND, J_KIND, CantorIndex, GapLocation, LocateBatch
from .errors import DomainError, OutOfLuneError
from .subdivision import LuneFamily

PSI_TOL = 1e-9


def tail_bound(fam: LuneFamily, depth: int) -> float:
    """``2 * sum_{j >= depth} eps_j``."""
    return 2.0 * fam.eps.tail(depth)


@dataclass(frozen=True, eq=False)
class CeilingApprox:
    """Depth-N stand-in for F_t.

    ``kind`` is J_KIND when t has a depth-N defining prefix ending at
    ``word`` (then the approximant is ``f_word``) and G_KIND when t lies in
    the gap G_word (then F_t is exactly ``g_word``).  The ends of J_word are
    exact too: F_t is ``f_word`` at the left end and ``g_word`` at the right
    end, and those carry a zero tail.
    """

    t: Fraction
    kind: int
    word: tuple
    tail_bound: float
    fam: LuneFamily
    edge: int = 0

    @property
    def uses_top(self) -> bool:
        return self.kind == G_KIND or self.edge == 1

    @property
    def fn(self) -> sf.SmoothFn:
        L = self.fam.node(self.word)
        return L.g if self.uses_top else L.f

    def derivatives(self, xs, order: int = 0) -> np.ndarray:
        return self.fam.eval_word(self.word, xs, order, "g" if self.uses_top else "f")

    def __call__(self, xs) -> np.ndarray:
        return self.derivatives(xs, 0)[0]


def ceiling(t, fam: LuneFamily, idx: CantorIndex) -> CeilingApprox:
    loc = idx.locate(t)
    if isinstance(loc, GapLocation):
        return CeilingApprox(Fraction(t), G_KIND, loc.word, 0.0, fam)
    tail = 0.0 if loc.edge else tail_bound(fam, idx.depth)
    return CeilingApprox(loc.t, J_KIND, loc.word, tail, fam, loc.edge)


def resolved_series(fam: LuneFamily, batch: LocateBatch, xs: np.ndarray, order: int):
    """Series of the ceiling approximant for each located parameter at ``xs[i]``.

    Returns ``(F, a, b)`` where ``(a, b)`` is the support of the resolved word
    and ``F`` has shape ``(order + 1, S)``.
    """
    xs = np.asarray(xs, dtype=float)
    S = len(batch)
    F = np.zeros((order + 1, S))
    a = np.zeros(S)
    b = np.zeros(S)
    top = (batch.kind == G_KIND) | (batch.edge == 1)
    for key in set(zip(batch.kind.tolist(), batch.level.tolist())):
        kind, level = key
        sel = (batch.kind == kind) & (batch.level == level)
        f, gap, aa, bb = fam.path_series(batch.words[sel, :level], xs[sel], order)
        F[:, sel] = np.where(top[sel], f + gap, f)
        a[sel], b[sel] = aa, bb
    return F, a, b


def ceiling_values(fam: LuneFamily, idx: CantorIndex, ts, xs, order: int = 0) -> np.ndarray:
    """Derivatives of the ceiling approximants: ``out[k, i] = F_{t_i}^(k)(x_i)``."""
    batch = idx.locate_many(ts)
    F, _, _ = resolved_series(fam, batch, np.asarray(xs, dtype=float), order)
    return F * sf._FACT[: order + 1, None]


def _tails(fam, idx, batch: LocateBatch) -> np.ndarray:
    exact = (batch.kind == G_KIND) | (batch.edge != 0)
    return np.where(exact, 0.0, tail_bound(fam, idx.depth))


def ceiling_monotone_check(fam: LuneFamily, idx: CantorIndex, pairs: Sequence, grid: int = 513) -> dict:
    """``F_t <= F_s + 2 (tail_t + tail_s)`` on a grid for each pair ``t <= s``."""
    xs = np.linspace(*fam.root.domain, grid)
    worst = np.inf
    worst_raw = np.inf
    for t, s in pairs:
        if t > s:
            raise DomainError(f"pair ({t}, {s}) is not ordered")
        bt = idx.locate_many([t] * grid)
        bs = idx.locate_many([s] * grid)
        Ft = resolved_series(fam, bt, xs, 0)[0][0]
        Fs = resolved_series(fam, bs, xs, 0)[0][0]
        slack = 2.0 * (_tails(fam, idx, bt)[0] + _tails(fam, idx, bs)[0])
        worst_raw = min(worst_raw, float(np.min(Fs - Ft)))
        worst = min(worst, float(np.min(Fs - Ft + slack)))
    return {"pairs": len(pairs), "worst_margin": worst, "worst_raw": worst_raw,
            "ok": worst >= 0.0}


def gap_flatness_check(fam: LuneFamily, idx: CantorIndex, per_gap: int = 5, grid: int = 257,
                       seed: int = 0, gaps: int = 20) -> dict:
    """Ceilings of parameters in the same gap are bit-identical functions."""
    rng = np.random.default_rng(seed)
    xs = np.linspace(*fam.root.domain, grid)
    checked = 0
    ok = True
    for _ in range(gaps):
        k = int(rng.integers(2, idx.depth + 1))
        w = (1,) + tuple(int(rng.integers(1, mj + 1)) for mj in fam.m[1:k])
        if w[-1] == fam.m[k - 1]:
            w = w[:-1] + (w[-1] - 1,)
        if w[-1] < 1:
            continue
        alpha, beta = idx.gap_endpoints(w)
        ts = [alpha + Fraction(int(v), 1 << 20) * (beta - alpha)
              for v in rng.integers(1, 1 << 20, size=per_gap)]
        ref = None
        for t in ts:
            c = ceiling(t, fam, idx)
            if c.kind != G_KIND or c.word != w:
                ok = False
                continue
            vals = c.derivatives(xs, 2)
            if ref is None:
                ref = vals
            elif not np.array_equal(ref, vals):
                ok = False
            checked += 1
    return {"checked": checked, "ok": ok}


# --------------------------------------------------------------------------
# psi


def psi_descent(fam: LuneFamily, xs, ys, depth: int | None = None, prefer: str = "lower",
                tol: float = PSI_TOL):
    """Descend to the depth-N lune containing each ``(x, y)``.

    Returns ``(slope, words)`` where ``slope[i] = f'_{w_i}(x_i)``.
    ``prefer`` picks the lower or upper candidate on shared boundaries.
    """
    depth = fam.depth if depth is None else depth
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    ys = np.atleast_1d(np.asarray(ys, dtype=float))
    S = xs.size
    f = fam.root.f.series(xs, 1)
    gap = fam.root.difference().series(xs, 1)
    lo_ok = ys >= f[0] - tol
    hi_ok = ys <= f[0] + gap[0] + tol
    if not np.all(lo_ok & hi_ok):
        i = int(np.flatnonzero(~(lo_ok & hi_ok))[0])
        raise OutOfLuneError(f"({xs[i]}, {ys[i]}) lies outside the root lune")
    a = np.zeros(S)
    b = np.ones(S)
    words = np.ones((S, depth), dtype=np.int64)
    lower_pref = prefer == "lower"
    for k in range(2, depth + 1):
        n = fam.n[k - 1]
        D0 = gap[0]
        pos = D0 > 0
        r = np.where(pos, n * (ys - f[0]) / np.where(pos, D0, 1.0), 0.0)
        j = np.ceil(r) if lower_pref else np.floor(r) + 1
        j = np.clip(j, 1, n).astype(np.int64)
        fs = f + ((j - 1) / n) * gap
        p, q = fam._phi_parts(a, b, xs, 1)
        qgap = sf._mul(q, gap) / n
        pgap = sf._mul(p, gap) / n
        h = fs[0] + qgap[0]
        upper = (ys > h) & pos if lower_pref else ys >= h
        f = np.where(upper, fs + qgap, fs)
        gap = np.where(upper, pgap, qgap)
        words[:, k - 1] = 2 * j - 1 + upper
        a, b = np.where(upper, (2 * a + b) / 3, a), np.where(upper, b, (a + 2 * b) / 3)
    return f[1], words


def psi(x, y, fam: LuneFamily, idx: CantorIndex | None = None, prefer: str = "lower"):
    """``psi(x, y) = F_t'(x)`` for any ceiling through ``(x, y)``."""
    depth = fam.depth if idx is None else idx.depth
    slope, _ = psi_descent(fam, x, y, depth, prefer)
    return float(slope[0]) if np.ndim(x) == 0 else slope


def tangency_check(fam: LuneFamily, idx: CantorIndex, ts: Sequence, grid: int = 512) -> dict:
    """``|F_t'(x) - psi(x, F_t(x))|`` over a grid for each t."""
    xs = np.linspace(*fam.root.domain, grid)
    worst = 0.0
    per_t = []
    for t in ts:
        batch = idx.locate_many([t] * grid)
        F, _, _ = resolved_series(fam, batch, xs, 1)
        y = np.clip(F[0], fam.root.f(xs), fam.root.g(xs))
        s = psi_descent(fam, xs, y, idx.depth)[0]
        d = float(np.max(np.abs(F[1] - s)))
        per_t.append(d)
        worst = max(worst, d)
    bound = 4.0 * tail_bound(fam, idx.depth)
    # the absolute figure 2^(2-N) quoted for the default schedule
    absolute = 2.0 ** (2 - idx.depth)
    return {"max_discrepancy": worst, "bound": bound, "absolute_bound": absolute, "per_t": per_t,
            "ok": worst <= bound and worst <= absolute}


def continuity_check(fam: LuneFamily, idx: CantorIndex, pairs: int = 20, grid: int = 257,
                     seed: int = 0) -> dict:
    """Parameters sharing a depth-k interval have ceilings within ``4 sum_{j>=k} eps_j`` in C^k.

    ``k = N - 1`` so that the depth-N approximants of the two parameters differ.
    """
    rng = np.random.default_rng(seed)
    xs = np.linspace(*fam.root.domain, grid)
    k = max(1, idx.depth - 1)
    bound = 4.0 * fam.eps.tail(k)
    order = min(k, sf.MAX_ORDER)
    worst = 0.0
    for _ in range(pairs):
        w = (1,) + tuple(int(rng.integers(1, mj + 1)) for mj in fam.m[1:k])
        ts = [idx.word_parameter(w, float(u)) for u in rng.random(2)]
        vals = [ceiling(t, fam, idx).derivatives(xs, order) for t in ts]
        worst = max(worst, float(np.max(np.abs(vals[0] - vals[1]))))
    return {"max_difference": worst, "bound": bound, "ok": worst <= bound}


def tiebreak_check(fam: LuneFamily, samples: int = 200, seed: int = 0) -> dict:
    """On slice boundaries, lower- and upper-preferring descents give the same slope."""
    rng = np.random.default_rng(seed)
    n2 = fam.n[1] if fam.depth > 1 else 1
    xs = rng.uniform(*fam.root.domain, samples)
    js = rng.integers(1, n2, size=samples)
    f = fam.root.f(xs)
    g = fam.root.g(xs)
    ys = f + (js / n2) * (g - f)
    lo = psi_descent(fam, xs, ys, prefer="lower")[0]
    hi = psi_descent(fam, xs, ys, prefer="upper")[0]
    bound = 2.0 * tail_bound(fam, fam.depth)
    d = float(np.max(np.abs(lo - hi)))
    return {"max_difference": d, "bound": bound, "ok": d <= bound}


@dataclass(frozen=True)
class FieldSample:
    x: float
    y: float
    slope: float


def field_samples(fam: LuneFamily, nx: int = 33, ny: int = 9) -> list:
    """psi on a grid of the lune: ``nx`` abscissae, ``ny`` levels between floor and ceiling."""
    xs = np.linspace(*fam.root.domain, nx)
    ss = np.linspace(0.0, 1.0, ny)
    X = np.repeat(xs, ny)
    f = fam.root.f(X)
    g = fam.root.g(X)
    Y = f + np.tile(ss, nx) * (g - f)
    slopes = psi_descent(fam, X, Y)[0]
    return [FieldSample(float(x), float(y), float(s)) for x, y, s in zip(X, Y, slopes)]
