"""The parameter Cantor set: intervals J_w, gaps G_w and point location.

A parent interval is cut into ``2 m_k - 1`` equal parts which alternate
J, G, J, ..., J.  All positions are kept as exact rationals, since depth-4
intervals of realistic families are far below float resolution relative to 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import DepthError, DomainError, InvalidWordError, NoSuccessorError
from .subdivision import has_successor, validate

J_KIND = 0
G_KIND = 1


@dataclass(frozen=True)
class DefiningSequence:
    """Depth-N prefix ``w_1 = (1), ..., w_N`` of a point of K; ``u`` is the local coordinate in J_{w_N}."""

    words: tuple
    t: Fraction
    u: float
    edge: int = 0   # -1 / +1 when t is exactly the left / right end of J_{w_N}

    @property
    def word(self) -> tuple:
        return self.words[-1]


@dataclass(frozen=True)
class GapLocation:
    word: tuple
    alpha: Fraction
    beta: Fraction
    u: float


@dataclass
class LocateBatch:
    """Vectorized locate results.

    ``kind[i]`` is J_KIND or G_KIND, ``level[i]`` the length of the resolved
    word, ``words[i, :level[i]]`` its letters (zero padded) and ``u[i]`` the
    local coordinate in the resolved J or G interval.  ``edge[i]`` is -1 or
    +1 when a J-resolved parameter is exactly the left or right end of its
    interval, 0 otherwise.
    """

    kind: np.ndarray
    level: np.ndarray
    words: np.ndarray
    u: np.ndarray
    edge: np.ndarray

    def __len__(self):
        return self.kind.size


def _as_ratio(t) -> tuple:
    if isinstance(t, Fraction):
        return t.numerator, t.denominator
    if isinstance(t, tuple):
        return int(t[0]), int(t[1])
    return float(t).as_integer_ratio()


class CantorIndex:
    def __init__(self, m: Sequence[int], depth: int | None = None):
        self.m = tuple(int(v) for v in m)
        if not self.m or self.m[0] != 1 or min(self.m) < 1:
            raise InvalidWordError("m must start with m_1 = 1 and be positive")
        self.depth = len(self.m) if depth is None else int(depth)
        if not 1 <= self.depth <= len(self.m):
            raise DepthError(f"depth {self.depth} outside 1..{len(self.m)}")
        self.radix = (1,) + tuple(2 * mk - 1 for mk in self.m[1:])

    @classmethod
    def from_family(cls, fam, depth: int | None = None) -> "CantorIndex":
        return cls(fam.m, depth)

    def truncated(self, depth: int) -> "CantorIndex":
        return CantorIndex(self.m, depth)

    # -- intervals ------------------------------------------------------

    def length(self, k: int) -> Fraction:
        """Common length of every depth-k interval."""
        return Fraction(1, math.prod(self.radix[:k]))

    def interval_of(self, w) -> tuple:
        w = validate(w, self.m[: self.depth])
        lo = Fraction(0)
        width = Fraction(1)
        for k in range(1, len(w)):
            width /= self.radix[k]
            lo += (2 * w[k] - 2) * width
        return lo, lo + width

    def gap_endpoints(self, w) -> tuple:
        """``G_w = (alpha, beta)``: from the right end of J_w to the left end of J_{w+}."""
        w = validate(w, self.m[: self.depth])
        if len(w) == 1 or not has_successor(w, self.m):
            raise NoSuccessorError(f"{w} has no successor, so G_w is undefined")
        lo, hi = self.interval_of(w)
        return hi, hi + (hi - lo)

    def children(self, w) -> list:
        """Ordered child pieces ``('J', w*(l))`` and ``('G', w*(l))`` tiling J_w."""
        w = validate(w, self.m[: self.depth])
        k = len(w)
        if k >= self.depth:
            return []
        out = []
        for l in range(1, self.m[k] + 1):
            out.append(("J", w + (l,)))
            if l < self.m[k]:
                out.append(("G", w + (l,)))
        return out

    # -- location -------------------------------------------------------

    def locate(self, t, depth: int | None = None):
        """Depth-N defining prefix of t, or the gap that contains it.

        Shared endpoints belong to the closed J intervals.
        """
        depth = self.depth if depth is None else depth
        p, q = _as_ratio(t)
        if p < 0 or p > q:
            raise DomainError(f"t={t} outside [0, 1]")
        words = [(1,)]
        lo = Fraction(0)
        width = Fraction(1)
        for k in range(1, depth):
            R = self.radix[k]
            s = p * R
            d, rem = divmod(s, q)
            if d == R:
                d, rem = R - 1, q
            width /= R
            if d % 2 == 0:
                letter = d // 2 + 1
                p = rem
            elif rem == 0:
                letter, p = (d + 1) // 2, q
                d -= 1
            else:
                w = words[-1] + ((d + 1) // 2,)
                alpha = lo + d * width
                return GapLocation(w, alpha, alpha + width, rem / q)
            lo += d * width
            words.append(words[-1] + (letter,))
        edge = -1 if p == 0 else (1 if p == q else 0)
        return DefiningSequence(tuple(words), Fraction(*_as_ratio(t)), p / q, edge)

    def locate_many(self, ts, depth: int | None = None) -> LocateBatch:
        depth = self.depth if depth is None else depth
        ts = list(ts) if not isinstance(ts, np.ndarray) else ts.tolist()
        S = len(ts)
        kind = np.zeros(S, dtype=np.int8)
        level = np.full(S, depth, dtype=np.int64)
        words = np.zeros((S, depth), dtype=np.int64)
        u = np.zeros(S)
        edge = np.zeros(S, dtype=np.int8)
        radix = self.radix
        for i, t in enumerate(ts):
            p, q = _as_ratio(t)
            if p < 0 or p > q:
                raise DomainError(f"t={t} outside [0, 1]")
            row = words[i]
            row[0] = 1
            for k in range(1, depth):
                R = radix[k]
                d, rem = divmod(p * R, q)
                if d == R:
                    d, rem = R - 1, q
                if d % 2 == 0:
                    row[k] = d // 2 + 1
                    p = rem
                elif rem == 0:
                    row[k] = (d + 1) // 2
                    p = q
                else:
                    row[k] = (d + 1) // 2
                    kind[i] = G_KIND
                    level[i] = k + 1
                    p = rem
                    break
            u[i] = p / q
            if kind[i] == J_KIND:
                edge[i] = -1 if p == 0 else (1 if p == q else 0)
        return LocateBatch(kind, level, words, u, edge)

    def word_parameter(self, w, u: float = 0.0) -> Fraction:
        """The parameter at local coordinate u of J_w (exact for rational u)."""
        lo, hi = self.interval_of(w)
        return lo + Fraction(u) * (hi - lo)

    def export(self, max_depth: int = 3, limit: int = 20_000) -> dict:
        """Interval tree as plain data (endpoints as floats and exact strings)."""
        levels = []
        frontier = [(1,)]
        for k in range(1, min(max_depth, self.depth) + 1):
            if len(frontier) > limit:
                break
            rows = []
            for w in frontier:
                lo, hi = self.interval_of(w)
                rows.append({"word": list(w), "kind": "J", "lo": float(lo), "hi": float(hi),
                             "exact": [str(lo), str(hi)]})
                if len(w) > 1 and has_successor(w, self.m):
                    a, b = self.gap_endpoints(w)
                    rows.append({"word": list(w), "kind": "G", "lo": float(a), "hi": float(b),
                                 "exact": [str(a), str(b)]})
            levels.append(rows)
            if k < self.depth:
                if len(frontier) * self.m[k] > limit:
                    break
                frontier = [w + (l,) for w in frontier for l in range(1, self.m[k] + 1)]
        return {"m": list(self.m[: self.depth]), "levels": levels}
