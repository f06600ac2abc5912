"""The approximating curves gamma_N, their footprints and convergence diagnostics.

``gamma_N`` traverses the graph of ``f_w`` across the support of ``L_w`` on
every depth-N interval J_w, and the graph of ``g_w`` from ``b_w`` back to
``a_{w+}`` on every gap G_w of depth at most N.  Gap pieces of depth k < N
are the frozen pieces of gamma_k.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from . import smoothfn as sf
from .cantor import G_KIND, J_KIND, CantorIndex
from .ceiling_field import CeilingApprox, ceiling, tail_bound
from .errors import BudgetError, DepthError, DomainError
from .subdivision import LuneFamily

DIAMETER_POINTS = 64
JUNCTION_TOL = 1e-10


def supports_of_words(words: np.ndarray) -> tuple:
    """Vectorized support endpoints from the parity pattern of each word row."""
    words = np.atleast_2d(words)
    a = np.zeros(words.shape[0])
    b = np.ones(words.shape[0])
    for col in range(1, words.shape[1]):
        upper = words[:, col] % 2 == 0
        a, b = np.where(upper, (2 * a + b) / 3, a), np.where(upper, b, (a + 2 * b) / 3)
    return a, b


def piece_count(m, depth: int) -> int:
    """``prod m_j`` J-pieces plus ``prod_{j<k} m_j (m_k - 1)`` gap pieces per depth k."""
    total = math.prod(m[:depth])
    for k in range(2, depth + 1):
        total += math.prod(m[: k - 1]) * (m[k - 1] - 1)
    return total


@dataclass(frozen=True)
class Piece:
    kind: str          # "J" or "G"
    word: tuple
    t_range: tuple     # exact endpoints
    x_range: tuple     # start and end abscissa of the traversal


@dataclass(eq=False)
class CurveApprox:
    fam: LuneFamily
    idx: CantorIndex
    depth: int
    junction_error: float = 0.0

    @property
    def piece_count(self) -> int:
        return piece_count(self.fam.m, self.depth)

    def pieces(self, limit: int = 100_000) -> Iterator[Piece]:
        """Pieces in parameter order; refuses to enumerate more than ``limit``."""
        if self.piece_count > limit:
            raise BudgetError(f"{self.piece_count} pieces exceed the limit {limit}")
        yield from self._walk((1,))

    def _walk(self, w):
        if len(w) == self.depth:
            a, b = supports_of_words(np.array([w]))
            yield Piece("J", w, self.idx.interval_of(w), (float(a[0]), float(b[0])))
            return
        for kind, child in self.idx.children(w):
            if kind == "J":
                yield from self._walk(child)
            else:
                yield Piece("G", child, self.idx.gap_endpoints(child), self._gap_x(child))

    def _gap_x(self, w):
        succ = w[:-1] + (w[-1] + 1,)
        _, b = supports_of_words(np.array([w]))
        a, _ = supports_of_words(np.array([succ]))
        return (float(b[0]), float(a[0]))

    def eval(self, ts) -> tuple:
        return eval_many(self, ts)


def eval_many(c: CurveApprox, ts) -> tuple:
    """``(x, y)`` arrays of gamma_N at the parameters ``ts`` (floats or Fractions)."""
    batch = c.idx.locate_many(ts, c.depth)
    S = len(batch)
    x = np.zeros(S)
    y = np.zeros(S)
    s = sf.sigmoid_values(batch.u) if S else np.zeros(0)
    for key in set(zip(batch.kind.tolist(), batch.level.tolist())):
        kind, level = key
        sel = (batch.kind == kind) & (batch.level == level)
        words = batch.words[sel, :level]
        a, b = supports_of_words(words)
        if kind == J_KIND:
            xs = a + (b - a) * s[sel]
            f, _, _, _ = c.fam.path_series(words, xs, 0)
            y[sel] = f[0]
        else:
            succ = words.copy()
            succ[:, -1] += 1
            a_next, _ = supports_of_words(succ)
            xs = b + (a_next - b) * s[sel]
            f, gap, _, _ = c.fam.path_series(words, xs, 0)
            y[sel] = f[0] + gap[0]
        x[sel] = xs
    return x, y


def eval_curve(c: CurveApprox, t) -> tuple:
    x, y = eval_many(c, [t])
    return float(x[0]), float(y[0])


def _junction_errors(c: CurveApprox, gaps: list) -> float:
    """Mismatch between the J pieces and the gap piece at both ends of each gap."""
    if not gaps:
        return 0.0
    worst = 0.0
    for w in gaps:
        alpha, beta = c.idx.gap_endpoints(w)
        # gap start/end values straight from the gap formula
        xs = np.array(c._gap_x(w))
        f, gap, _, _ = c.fam.path_series(np.array([w, w]), xs, 0)
        gx, gy = xs, f[0] + gap[0]
        jx, jy = eval_many(c, [alpha, beta])
        worst = max(worst, float(np.max(np.hypot(jx - gx, jy - gy))))
    return worst


def build_curve(fam: LuneFamily, idx: CantorIndex, depth: int | None = None,
                junctions: int = 200, seed: int = 0) -> CurveApprox:
    """gamma_N with continuity verified at a sample of gap junctions of every depth."""
    depth = idx.depth if depth is None else depth
    if not 1 <= depth <= min(fam.depth, idx.depth):
        raise DepthError(f"depth {depth} outside 1..{min(fam.depth, idx.depth)}")
    c = CurveApprox(fam, idx.truncated(depth), depth)
    rng = np.random.default_rng(seed)
    gaps = []
    for k in range(2, depth + 1):
        if fam.m[k - 1] < 2:
            continue
        for _ in range(max(1, junctions // max(1, depth - 1))):
            w = (1,) + tuple(int(rng.integers(1, mj + 1)) for mj in fam.m[1:k - 1])
            w = w + (int(rng.integers(1, fam.m[k - 1])),)
            gaps.append(w)
    c.junction_error = _junction_errors(c, gaps)
    if c.junction_error > JUNCTION_TOL:
        raise DomainError(f"curve pieces disagree at a junction by {c.junction_error:.3g}")
    return c


# --------------------------------------------------------------------------
# footprints


@dataclass(frozen=True, eq=False)
class FootprintRegion:
    t: float
    ceiling: CeilingApprox
    clipped_domain: tuple

    @property
    def floor(self) -> sf.SmoothFn:
        return self.ceiling.fam.root.f

    def contains(self, x, y, tol: float = 1e-12) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        y = np.atleast_1d(np.asarray(y, dtype=float))
        c, d = self.clipped_domain
        xc = np.clip(x, c, d)
        lo = self.floor(xc)
        hi = self.ceiling(xc)
        return (x >= c - tol) & (x <= d + tol) & (y >= lo - tol) & (y <= hi + tol)


def footprint(c: CurveApprox, t, grid: int = sf.DEFAULT_GRID) -> FootprintRegion:
    """``L(f, F_t)`` clipped to the closure of ``{f < F_t}``."""
    if t == 0:
        raise DomainError("the footprint of [0, 0] is a single point")
    cap = ceiling(t, c.fam, c.idx)
    lo, hi = c.fam.root.domain
    xs = np.linspace(lo, hi, grid)
    diff = cap(xs) - c.fam.root.f(xs)
    pos = np.flatnonzero(diff > 0)
    if pos.size == 0:
        raise DomainError(f"footprint at t={t} has empty interior at this depth")

    def positive(x):
        return float(cap(np.array([x]))[0] - c.fam.root.f(x)) > 0

    def refine(left, right, left_in):
        while right - left > 1e-12:
            mid = 0.5 * (left + right)
            if positive(mid) == left_in:
                left = mid
            else:
                right = mid
        return 0.5 * (left + right)

    i0, i1 = pos[0], pos[-1]
    cc = lo if i0 == 0 else refine(xs[i0 - 1], xs[i0], False)
    dd = hi if i1 == grid - 1 else refine(xs[i1], xs[i1 + 1], True)
    return FootprintRegion(float(t), cap, (cc, dd))


def _bounding_box(fam: LuneFamily, grid: int = 2049) -> tuple:
    lo, hi = fam.root.domain
    xs = np.linspace(lo, hi, grid)
    return lo, hi, float(fam.root.f(xs).min()), float(fam.root.g(xs).max())


def hausdorff_check(c: CurveApprox, t: float, raster: int = 512, samples: int = 200_000,
                    seed: int = 0) -> dict:
    """Two-sided raster Hausdorff distance between gamma_N([0, t]) and the footprint region."""
    rng = np.random.default_rng(seed)
    x0, x1, y0, y1 = _bounding_box(c.fam)
    px = (x1 - x0) / (raster - 1)
    py = (y1 - y0) / (raster - 1)
    us = np.concatenate([np.linspace(0.0, t, samples // 2), rng.uniform(0.0, t, samples - samples // 2)])
    gx, gy = eval_many(c, us)
    img = np.zeros((raster, raster), dtype=bool)
    ci = np.clip(np.rint((gx - x0) / px).astype(int), 0, raster - 1)
    ri = np.clip(np.rint((gy - y0) / py).astype(int), 0, raster - 1)
    img[ri, ci] = True

    region = footprint(c, t)
    X, Y = np.meshgrid(np.linspace(x0, x1, raster), np.linspace(y0, y1, raster))
    reg = region.contains(X.ravel(), Y.ravel()).reshape(raster, raster)
    # thin regions can miss every pixel centre; keep the boundary curve itself
    bx = np.linspace(*region.clipped_domain, 4 * raster)
    by = region.ceiling(bx)
    reg[np.clip(np.rint((by - y0) / py).astype(int), 0, raster - 1),
        np.clip(np.rint((bx - x0) / px).astype(int), 0, raster - 1)] = True

    to_reg = ndimage.distance_transform_edt(~reg, sampling=(py, px))
    to_img = ndimage.distance_transform_edt(~img, sampling=(py, px))
    d = max(float(to_reg[img].max()), float(to_img[reg].max()))
    bound = math.sqrt(diameter_bound(c.fam, c.depth)) + 2.0 * max(px, py)
    return {"t": float(t), "hausdorff": d, "bound": bound, "ok": d <= bound,
            "pitch": (px, py)}


# --------------------------------------------------------------------------
# diameters and Cauchy bounds


@dataclass(frozen=True)
class DiameterBound:
    n: int
    D_n: float
    M: float
    D_n_printed: float


def extreme_words(fam: LuneFamily, k: int) -> np.ndarray:
    """Words of length k whose letters are 1, 2, m-1 or m.

    For a fixed parity pattern, ``f_w`` is affine in the slice offsets
    ``(j_i - 1) / n_i``, so any convex functional of the node geometry is
    maximized at one of these words.
    """
    choices = [sorted({1, 2, fam.m[i] - 1, fam.m[i]} & set(range(1, fam.m[i] + 1)))
               for i in range(1, k)]
    rows = [(1,) + combo for combo in itertools.product(*choices)]
    return np.array(rows, dtype=np.int64).reshape(len(rows), k)


def sup_floor_c1(fam: LuneFamily, depth: int | None = None, grid: int = 1025) -> float:
    """Exact-over-words sampled ``max ||f_w||_1`` for ``|w| = depth``."""
    depth = fam.depth if depth is None else depth
    words = extreme_words(fam, depth)
    xs = np.linspace(*fam.root.domain, grid)
    best = 0.0
    for w in words:
        d = fam.eval_word(tuple(w), xs, 1)
        best = max(best, float(np.max(np.abs(d))))
    return best


def estimate_M(fam: LuneFamily, depth: int | None = None) -> float:
    """Safety-factored sup of ``||f_w||_1`` at depth N plus the ceiling tail."""
    depth = fam.depth if depth is None else depth
    return fam.safety_factor * sup_floor_c1(fam, depth) + tail_bound(fam, depth)


def diameter_formula(n: int, eps_n: float, M: float, width0: float = 1.0) -> float:
    """``w^2 + (eps_n + M w)^2`` with ``w = (2/3)^(n-1)`` the depth-n support width."""
    w = width0 * (2.0 / 3.0) ** (n - 1)
    return w * w + (eps_n + M * w) ** 2


def diameter_formula_printed(n: int, eps_n: float, M: float) -> float:
    """Variant with ``(2/3)^n`` in place of the depth-n support width."""
    w = (2.0 / 3.0) ** n
    return w * w + (eps_n + M * w) ** 2


_M_CACHE: dict = {}


def _cached_M(fam: LuneFamily, depth: int) -> float:
    key = (id(fam), depth)
    if key not in _M_CACHE:
        _M_CACHE[key] = estimate_M(fam, depth)
    return _M_CACHE[key]


def diameter_bound(fam: LuneFamily, n: int) -> float:
    return diameter_formula(n, fam.eps(n), _cached_M(fam, fam.depth))


def node_diameters(fam: LuneFamily, words: np.ndarray, points: int = DIAMETER_POINTS) -> np.ndarray:
    """Diameters of essential lunes from corners plus ``points`` boundary samples per side."""
    words = np.atleast_2d(words)
    W, k = words.shape
    a, b = supports_of_words(words)
    s = np.linspace(0.0, 1.0, points)
    X = a[:, None] + (b - a)[:, None] * s[None, :]
    rep = np.repeat(words, points, axis=0)
    f, gap, _, _ = fam.path_series(rep, X.ravel(), 0)
    F = f[0].reshape(W, points)
    G = F + gap[0].reshape(W, points)
    PX = np.concatenate([X, X], axis=1)
    PY = np.concatenate([F, G], axis=1)
    dx = PX[:, :, None] - PX[:, None, :]
    dy = PY[:, :, None] - PY[:, None, :]
    return np.sqrt(np.max(dx * dx + dy * dy, axis=(1, 2)))


def diameter_table(fam: LuneFamily, up_to: int | None = None, all_words_limit: int = 20_000,
                   chunk: int = 512) -> dict:
    """D_1..D_up_to and the per-node check ``D_w^2 <= D_|w|``.

    Levels with at most ``all_words_limit`` nodes are checked node by node;
    deeper levels use :func:`extreme_words`, which bound every node.
    """
    up_to = fam.depth if up_to is None else up_to
    M = _cached_M(fam, fam.depth)
    rows = []
    ok = True
    for n in range(1, up_to + 1):
        Dn = diameter_formula(n, fam.eps(n), M)
        Dp = diameter_formula_printed(n, fam.eps(n), M)
        if fam.count(n) <= all_words_limit:
            words = np.array(list(fam.words(n)), dtype=np.int64).reshape(-1, n)
            mode = "all"
        else:
            words = extreme_words(fam, n)
            mode = "extreme"
        worst = 0.0
        for s in range(0, len(words), chunk):
            worst = max(worst, float(np.max(node_diameters(fam, words[s:s + chunk]))))
        sq = worst * worst
        rows.append({"n": n, "D_n": Dn, "D_n_printed": Dp, "max_diameter_sq": sq,
                     "nodes_checked": int(len(words)), "mode": mode,
                     "ok": sq <= Dn, "printed_ok": sq <= Dp})
        ok &= sq <= Dn
    return {"M": M, "rows": rows, "ok": bool(ok),
            "bounds": [DiameterBound(r["n"], r["D_n"], M, r["D_n_printed"]) for r in rows]}


# frozen points take different float paths at the two depths
FROZEN_ROUNDOFF = 1e-14


def cauchy_check(fam: LuneFamily, idx: CantorIndex, n_low: int, n_high: int,
                 samples: int = 10_000, seed: int = 0) -> dict:
    """``|gamma_high(t) - gamma_low(t)| <= sqrt(D_low)`` on sampled t; equal up to roundoff on frozen gaps."""
    if n_low > n_high:
        raise DomainError("need n_low <= n_high")
    rng = np.random.default_rng(seed)
    ts = rng.random(samples)
    lo = CurveApprox(fam, idx.truncated(n_low), n_low)
    hi = CurveApprox(fam, idx.truncated(n_high), n_high)
    xl, yl = eval_many(lo, ts)
    xh, yh = eval_many(hi, ts)
    diff = np.hypot(xh - xl, yh - yl)
    bound = math.sqrt(diameter_bound(fam, n_low))
    batch = idx.locate_many(ts, n_low)
    frozen = batch.kind == G_KIND
    return {
        "n_low": n_low, "n_high": n_high, "samples": samples,
        "max_difference": float(diff.max()), "bound": bound,
        "max_ratio": float(diff.max() / bound),
        "printed_bound": math.sqrt(diameter_formula_printed(n_low, fam.eps(n_low), _cached_M(fam, fam.depth))),
        "frozen_samples": int(frozen.sum()),
        "frozen_max": float(diff[frozen].max()) if frozen.any() else 0.0,
        "ok": bool(diff.max() <= bound and (not frozen.any() or diff[frozen].max() <= FROZEN_ROUNDOFF)),
    }


# --------------------------------------------------------------------------
# structural checks


def _random_word(fam, k, rng):
    return (1,) + tuple(int(rng.integers(1, mj + 1)) for mj in fam.m[1:k])


def containment_check(c: CurveApprox, words_per_depth: int = 20, params: int = 64,
                      seed: int = 0, tol: float = 1e-9) -> dict:
    """gamma_N(J_w) lies in the essential lune of L_w for sampled words of every depth."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for k in range(1, c.depth + 1):
        for _ in range(words_per_depth):
            w = _random_word(c.fam, k, rng)
            lo, hi = c.idx.interval_of(w)
            ts = [lo + Fraction(int(v), 1 << 30) * (hi - lo) for v in
                  np.linspace(0, 1 << 30, params).astype(np.int64)]
            x, y = eval_many(c, ts)
            a, b = supports_of_words(np.array([w]))
            rep = np.tile(np.array(w), (x.size, 1))
            f, gap, _, _ = c.fam.path_series(rep, np.clip(x, a[0], b[0]), 0)
            out = np.maximum.reduce([a[0] - x, x - b[0], f[0] - y, y - f[0] - gap[0]])
            worst = max(worst, float(out.max()))
    return {"worst_excess": worst, "ok": worst <= tol}


def surjectivity_check(c: CurveApprox, words: int = 20, params: int = 256, seed: int = 0) -> dict:
    """Points of each sampled depth-N lune are within sqrt(D_N) of gamma_N(J_w)."""
    rng = np.random.default_rng(seed)
    bound = math.sqrt(diameter_bound(c.fam, c.depth))
    worst = 0.0
    for _ in range(words):
        w = _random_word(c.fam, c.depth, rng)
        lo, hi = c.idx.interval_of(w)
        ts = [lo + Fraction(i, params - 1) * (hi - lo) for i in range(params)]
        x, y = eval_many(c, ts)
        a, b = supports_of_words(np.array([w]))
        gx = np.repeat(np.linspace(a[0], b[0], 16), 5)
        rep = np.tile(np.array(w), (gx.size, 1))
        f, gap, _, _ = c.fam.path_series(rep, gx, 0)
        gy = f[0] + np.tile(np.linspace(0, 1, 5), 16) * gap[0]
        d = np.hypot(gx[:, None] - x[None, :], gy[:, None] - y[None, :]).min(axis=1)
        worst = max(worst, float(d.max()))
    return {"worst_distance": worst, "bound": bound, "ok": worst <= bound}


def k_sufficiency_check(c: CurveApprox, gaps: int = 40, candidates: int = 20_000,
                        seed: int = 0) -> dict:
    """For gap parameters t, some depth-N K-prefix parameter s < t has gamma_N(s) within sqrt(D_N)."""
    rng = np.random.default_rng(seed)
    bound = math.sqrt(diameter_bound(c.fam, c.depth))
    ts = rng.random(8 * gaps)
    batch = c.idx.locate_many(ts, c.depth)
    worst = 0.0
    count = 0
    for i in np.flatnonzero(batch.kind == G_KIND)[:gaps]:
        w = tuple(int(v) for v in batch.words[i, : batch.level[i]])
        alpha, _ = c.idx.gap_endpoints(w)
        ss = np.concatenate([np.linspace(0.0, 1.0, candidates // 2),
                             rng.random(candidates - candidates // 2)]) * float(alpha)
        ss = [min(v, alpha) for v in ss.tolist()] + [alpha]
        inK = c.idx.locate_many(ss, c.depth).kind == J_KIND
        x, y = eval_many(c, [v for v, k in zip(ss, inK) if k])
        tx, ty = eval_many(c, [ts[i]])
        d, _ = cKDTree(np.column_stack([x, y])).query([tx[0], ty[0]])
        worst = max(worst, float(d))
        count += 1
    return {"gap_samples": count, "worst_distance": worst, "bound": bound, "ok": worst <= bound}


def footprint_monotone_check(c: CurveApprox, ts, grid: int = 257) -> dict:
    """Region(t) is contained in region(s) for t <= s, tested on boundary points of region(t)."""
    ts = sorted(ts)
    ok = True
    for t, s in zip(ts, ts[1:]):
        if t == 0:
            continue
        rt = footprint(c, t)
        rs = footprint(c, s)
        xs = np.linspace(*rt.clipped_domain, grid)
        ok &= bool(np.all(rs.contains(xs, rt.ceiling(xs), tol=2 * tail_bound(c.fam, c.depth))))
    return {"ok": ok, "pairs": max(0, len(ts) - 1)}
