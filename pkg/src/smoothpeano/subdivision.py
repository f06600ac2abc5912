"""Word combinatorics and the recursive lune family {L_w}.

A word is a tuple of positive letters ``(1, i_2, ..., i_n)``.  At depth ``k``
each lune is ``n_k``-sliced and every slice is bipartitioned, so a child
``w * (l)`` comes from slice ``ceil(l / 2)`` and is the lower (odd ``l``) or
upper (even ``l``) half of that slice's bipartition.

The thickness ``g_w - f_w`` of a node only depends on the parity pattern of
its letters: slicing divides the thickness by ``n_k`` and bipartition
multiplies it by ``1 - phi_ab`` or ``phi_ab``.  The family therefore keeps one
:class:`NodeClass` per parity pattern (2**(k-1) of them at depth k), which is
all that is needed to choose the ``n_k``, while individual lunes are built
lazily from their word.  Full trees are astronomically large beyond depth 2.
"""

from __future__ import annotations

import itertools
import math
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from . import smoothfn as sf
from .errors import BudgetError, DepthError, DomainError, InvalidWordError, NoSuccessorError
from .lune import Lune, bipartition, lune_norm, slice_piece, support_of
from .smoothfn import BumpPhi, SmoothFn, ck_norm, make_phi, phi_rescaled

Word = tuple

DEFAULT_DEPTH = 4
DEFAULT_BUDGET = 2_000_000


# --------------------------------------------------------------------------
# words


def validate(w: Sequence[int], m: Sequence[int]) -> Word:
    w = tuple(int(i) for i in w)
    if not w:
        raise InvalidWordError("empty word")
    if len(w) > len(m):
        raise InvalidWordError(f"word {w} longer than the sequence m")
    for j, (i, mj) in enumerate(zip(w, m), start=1):
        if not 1 <= i <= mj:
            raise InvalidWordError(f"letter {j} of {w} outside 1..{mj}")
    return w


def concat(w0: Sequence[int], w1: Sequence[int]) -> Word:
    return tuple(w0) + tuple(w1)


def has_successor(w: Sequence[int], m: Sequence[int]) -> bool:
    return w[-1] < m[len(w) - 1]


def successor(w: Sequence[int], m: Sequence[int]) -> Word:
    """``(i_1, ..., i_n + 1)``; only defined when ``i_n < m_n``."""
    w = validate(w, m)
    if not has_successor(w, m):
        raise NoSuccessorError(f"{w} has no successor (last letter is m_{len(w)})")
    return w[:-1] + (w[-1] + 1,)


def parity(w: Sequence[int]) -> tuple:
    """True for every even letter after the first."""
    return tuple(i % 2 == 0 for i in w[1:])


def support_from_parity(par: Sequence[bool], root=(0.0, 1.0)) -> tuple:
    a, b = root
    for upper in par:
        if upper:
            a = (2 * a + b) / 3
        else:
            b = (a + 2 * b) / 3
    return (a, b)


# --------------------------------------------------------------------------
# epsilon schedule


@dataclass(frozen=True)
class EpsilonSchedule:
    """``eps_n = scale * base**n``; the default is ``2**-n``."""

    base: float = 0.5
    scale: float = 1.0

    def __post_init__(self):
        if not (0 < self.base < 1 and self.scale > 0):
            raise DomainError("need 0 < base < 1 and scale > 0 for a summable schedule")

    def __call__(self, n: int) -> float:
        return self.scale * self.base ** n

    def tail(self, N: int) -> float:
        """``sum_{j >= N} eps_j`` in closed form."""
        return self.scale * self.base ** N / (1.0 - self.base)

    def partial_sums(self, N: int) -> list:
        return list(itertools.accumulate(self(n) for n in range(1, N + 1)))


# --------------------------------------------------------------------------
# choice of n_w


def choose_n_omega(L: Lune, k: int, eps: EpsilonSchedule, phi: BumpPhi | None = None,
                   grid: int = sf.DEFAULT_GRID,
                   safety_factor: float = sf.SAFETY_FACTOR) -> int:
    """Smallest n with ``||L||_k / n < eps_k / (2**k ||phi_ab||_k)``."""
    phi = phi or make_phi()
    a, b = L.support_interval()
    lhs = lune_norm(L, k, grid, safety_factor).value
    if lhs == 0.0:
        return 1
    phi_norm = ck_norm(phi_rescaled(phi, a, b), k, grid, 1.0, interval=(a, b)).value
    threshold = eps(k) / (2 ** k * phi_norm)
    return max(1, math.floor(lhs / threshold) + 1)


# --------------------------------------------------------------------------
# the family


@dataclass(frozen=True, eq=False)
class NodeClass:
    depth: int
    parity: tuple
    support: tuple
    gap: SmoothFn = field(repr=False)
    norm: float          # safety-factored ||gap||_depth
    raw_norm: float
    n_next: int | None   # n_w chosen for the children, None at the last depth

    def count(self, n_seq: Sequence[int]) -> int:
        """Number of nodes in this class: one per choice of slice indices."""
        return math.prod(n_seq[j] for j in range(1, self.depth))


class LuneFamily:
    """The lunes {L_w : |w| <= depth} with their sequences m_k and n_k.

    ``m[k-1]`` is ``m_k`` (so ``m[0] == 1``) and ``n[k-1]`` is ``n_k`` with
    ``n[0] = 1`` as a placeholder.
    """

    def __init__(self, root: Lune, phi: BumpPhi, eps: EpsilonSchedule, depth: int,
                 m: Sequence[int], n: Sequence[int], classes: dict, grid: int,
                 safety_factor: float, budget: int = DEFAULT_BUDGET,
                 cache_size: int = 100_000):
        self.root = root
        self.phi = phi
        self.eps = eps
        self.depth = depth
        self.m = tuple(m)
        self.n = tuple(n)
        self.classes = classes
        self.grid = grid
        self.safety_factor = safety_factor
        self.budget = budget
        self._cache: OrderedDict = OrderedDict()
        self._cache_size = cache_size

    # -- structure ------------------------------------------------------

    def count(self, k: int) -> int:
        return math.prod(self.m[:k])

    def words(self, k: int) -> Iterator[Word]:
        if not 1 <= k <= self.depth:
            raise DepthError(f"depth {k} outside 1..{self.depth}")
        if self.count(k) > self.budget:
            raise BudgetError(f"{self.count(k)} nodes at depth {k} exceed the budget {self.budget}")
        return itertools.product(*(range(1, mj + 1) for mj in self.m[:k]))

    def validate(self, w) -> Word:
        return validate(w, self.m)

    def class_of(self, w) -> NodeClass:
        w = self.validate(w)
        return self.classes[parity(w)]

    def support(self, w) -> tuple:
        return support_from_parity(parity(w))

    def children(self, w) -> list:
        w = self.validate(w)
        if len(w) >= self.depth:
            return []
        return [w + (l,) for l in range(1, self.m[len(w)] + 1)]

    # -- lazily materialized lunes ---------------------------------------

    def node(self, w) -> Lune:
        """L_w built through its chain of slicings and bipartitions."""
        w = self.validate(w)
        hit = self._cache.get(w)
        if hit is not None:
            self._cache.move_to_end(w)
            return hit
        if len(w) == 1:
            L = self.root
        else:
            parent = self.node(w[:-1])
            k = len(w)
            letter = w[-1]
            piece = slice_piece(parent, self.n[k - 1], (letter + 1) // 2)
            L = bipartition(piece, self.phi)[1 - letter % 2]
        self._cache[w] = L
        if len(self._cache) > self._cache_size:
            self._cache.popitem(last=False)
        return L

    # -- vectorized evaluation along words --------------------------------

    def path_series(self, words: np.ndarray, xs: np.ndarray, order: int):
        """Series of ``f_w`` and ``g_w - f_w`` at ``xs[i]`` for the word ``words[i]``.

        ``words`` is an integer array of shape ``(S, k)``.  Returns
        ``(f, gap, a, b)``: two ``(order + 1, S)`` series arrays and the
        support endpoints of each word.
        """
        words = np.atleast_2d(np.asarray(words, dtype=np.int64))
        xs = np.asarray(xs, dtype=float).ravel()
        S, k = words.shape
        if k > self.depth:
            raise DepthError(f"words of length {k} exceed depth {self.depth}")
        f = self.root.f.series(xs, order)
        gap = self.root.difference().series(xs, order)
        a = np.zeros(S)
        b = np.ones(S)
        for depth in range(2, k + 1):
            f, gap, a, b = self._descend(f, gap, a, b, words[:, depth - 1], depth, xs)
        return f, gap, a, b

    def _phi_parts(self, a, b, xs, order):
        w = b - a
        t = np.zeros((order + 1, xs.size))
        t[0] = 3.0 * (xs - a) / w - 1.0
        if order >= 1:
            t[1] = 3.0 / w
        p = sf._rho_series(t)
        q = -p
        q[0] += 1.0
        return p, q

    def _descend(self, f, gap, a, b, letters, depth, xs):
        order = f.shape[0] - 1
        n = self.n[depth - 1]
        j = (letters + 1) // 2
        upper = letters % 2 == 0
        p, q = self._phi_parts(a, b, xs, order)
        qgap = sf._mul(q, gap) / n
        pgap = sf._mul(p, gap) / n
        f_new = f + ((j - 1) / n) * gap + np.where(upper, qgap, 0.0)
        gap_new = np.where(upper, pgap, qgap)
        a_new = np.where(upper, (2 * a + b) / 3, a)
        b_new = np.where(upper, b, (a + 2 * b) / 3)
        return f_new, gap_new, a_new, b_new

    def eval_word(self, w, xs, order: int = 0, which: str = "f") -> np.ndarray:
        """Derivatives of ``f_w`` (or ``g_w``) at the points ``xs``."""
        w = self.validate(w)
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        words = np.tile(np.array(w, dtype=np.int64), (xs.size, 1))
        f, gap, _, _ = self.path_series(words, xs, order)
        s = f if which == "f" else f + gap
        return s * sf._FACT[: order + 1, None]

    # -- export ---------------------------------------------------------

    def summary(self) -> dict:
        return {
            "depth": self.depth,
            "m": list(self.m),
            "n": list(self.n[1:]),
            "eps": [self.eps(k) for k in range(1, self.depth + 1)],
            "node_counts": [self.count(k) for k in range(1, self.depth + 1)],
        }


def _ensure_normal_form(L: Lune) -> Lune:
    if tuple(L.domain) != (0.0, 1.0):
        raise DomainError("the family builder needs domain [0, 1]; use lune.normalize first")
    if L.support is None:
        s = support_of(L)
        if not s.simple:
            raise DomainError("root lune is not simple")
        c, d = s.intervals[0]
        # flat ends are only resolved to about 1e-3 numerically
        if c > 1e-2 or d < 1 - 1e-2:
            raise DomainError(f"support {s.intervals[0]} is not all of (0, 1); normalize first")
        L = Lune(L.f, L.g, L.domain, (0.0, 1.0), L.gap)
    elif tuple(L.support) != (0.0, 1.0):
        raise DomainError("the family builder needs support (0, 1); use lune.normalize first")
    if L.gap is None:
        L = Lune(L.f, L.g, L.domain, L.support, L.g - L.f)
    return L


def build_family(L: Lune, eps: EpsilonSchedule | None = None, depth: int = DEFAULT_DEPTH,
                 phi: BumpPhi | None = None, grid: int = sf.DEFAULT_GRID,
                 safety_factor: float = sf.SAFETY_FACTOR,
                 budget: int = DEFAULT_BUDGET) -> LuneFamily:
    """Run the recursion to ``depth``: choose n_k, set m_k = 2 n_k, subdivide."""
    if depth < 1:
        raise DepthError("depth must be >= 1")
    eps = eps or EpsilonSchedule()
    phi = phi or make_phi()
    root = _ensure_normal_form(L)
    raw = lune_norm(root, 1, grid).raw
    classes: dict = {}
    level = [NodeClass(1, (), (0.0, 1.0), root.gap, safety_factor * raw, raw, None)]
    m, n = [1], [1]
    for k in range(2, depth + 1):
        chosen = []
        for c in level:
            rep = Lune(sf.constant(0.0, (0.0, 1.0)), c.gap, (0.0, 1.0), c.support, c.gap)
            chosen.append(choose_n_omega(rep, k, eps, phi, grid, safety_factor))
        nk = max(chosen)
        n.append(nk)
        m.append(2 * nk)
        nxt = []
        for c, n_w in zip(level, chosen):
            classes[c.parity] = _replace_next(c, n_w)
            a, b = c.support
            p = phi_rescaled(phi, a, b)
            for upper in (False, True):
                g = ((p if upper else 1.0 - p) * c.gap) * (1.0 / nk)
                sup = support_from_parity((upper,), c.support)
                r = lune_norm(Lune(g, g, (0.0, 1.0), sup, g), k, grid).raw
                nxt.append(NodeClass(k, c.parity + (upper,), sup, g, safety_factor * r, r, None))
        level = nxt
    for c in level:
        classes[c.parity] = c
    # the norms of the final level were taken at order `depth`, the others at their own depth
    fam = LuneFamily(root, phi, eps, depth, m, n, classes, grid, safety_factor, budget)
    if math.prod(m) > 10 ** 300:
        raise BudgetError("tree size overflows")
    return fam


def _replace_next(c: NodeClass, n_w: int) -> NodeClass:
    return NodeClass(c.depth, c.parity, c.support, c.gap, c.norm, c.raw_norm, n_w)


# --------------------------------------------------------------------------
# checks


def check_step5(fam: LuneFamily, eps: EpsilonSchedule | None = None,
                depths: Sequence[int] | None = None) -> dict:
    """``||L_w||_|w| <= eps_|w|`` for every node, one norm per parity class.

    Every node of a class has the same thickness function, so the class norm
    is the norm of each of its ``count`` nodes.
    """
    eps = eps or fam.eps
    depths = depths or range(1, fam.depth + 1)
    rows = []
    for k in depths:
        for par, c in sorted(fam.classes.items()):
            if c.depth != k:
                continue
            bound = eps(k)
            rows.append({
                "depth": k, "parity": [int(p) for p in par], "nodes": c.count(fam.n),
                "norm": c.norm, "eps": bound, "ratio": c.norm / bound, "ok": c.norm <= bound,
            })
    covered = {k: sum(r["nodes"] for r in rows if r["depth"] == k) for k in depths}
    ok = all(r["ok"] for r in rows) and all(covered[k] == fam.count(k) for k in depths)
    return {"rows": rows, "covered": covered, "ok": ok,
            "max_ratio": max((r["ratio"] for r in rows), default=0.0)}


def family_check_lemma29(fam: LuneFamily, interior_samples: int = 64, seed: int = 0) -> dict:
    """``||f_{w*(l)} - f_w||_n < eps_{n+1} + eps_n`` for all ``|w| = n`` and all l.

    ``f_{w*(l)} - f_w = alpha D_w + [l even] E_w`` with ``alpha = (j-1)/n_k``,
    ``j = ceil(l/2)`` and ``E_w = (1 - phi_ab) D_w / n_k``.  For fixed x and
    derivative order the modulus is convex in alpha, so the maximum over all
    letters is attained at ``j = 1`` or ``j = n_k``; those are evaluated
    exactly and a random sample of interior letters is evaluated as a check
    of that reduction.
    """
    rng = np.random.default_rng(seed)
    rows = []
    for par, c in sorted(fam.classes.items()):
        n_len = c.depth
        if n_len >= fam.depth:
            continue
        nk = fam.n[n_len]
        a, b = c.support
        xs = np.linspace(a, b, fam.grid)
        D = c.gap.derivatives(xs, n_len)
        p = phi_rescaled(fam.phi, a, b)
        E = ((1.0 - p) * c.gap).derivatives(xs, n_len) / nk

        def even_norm(j):
            return float(np.max(np.abs(((j - 1) / nk) * D + E)))

        dmax = float(np.max(np.abs(D)))
        odd = (nk - 1) / nk * dmax
        even = max(even_norm(1), even_norm(nk))
        inner = rng.integers(1, nk + 1, size=min(interior_samples, nk))
        inner_max = max((even_norm(int(j)) for j in inner), default=0.0)
        lhs = fam.safety_factor * max(odd, even)
        bound = fam.eps(n_len + 1) + fam.eps(n_len)
        rows.append({
            "depth": n_len, "parity": [int(q) for q in par], "letters": 2 * nk,
            "max_lhs": lhs, "bound": bound, "slack": bound - lhs, "ok": lhs < bound,
            "odd_max": fam.safety_factor * odd, "odd_bound": fam.eps(n_len),
            "odd_ok": fam.safety_factor * odd < fam.eps(n_len),
            "interior_consistent": inner_max <= even * (1 + 1e-12),
        })
    ok = all(r["ok"] and r["odd_ok"] and r["interior_consistent"] for r in rows)
    return {"rows": rows, "ok": ok, "min_slack": min((r["slack"] for r in rows), default=math.inf)}


def family_export(fam: LuneFamily, node_limit: int = 20_000) -> dict:
    """Structured tree: sequences, class norm tables and (small levels) nodes."""
    out = fam.summary()
    classes = []
    for par, c in sorted(fam.classes.items()):
        classes.append({
            "depth": c.depth, "parity": [int(p) for p in par],
            "support": [c.support[0], c.support[1]], "nodes": c.count(fam.n),
            "norm": c.norm, "n_next": c.n_next,
        })
    out["classes"] = classes
    nodes = []
    for k in range(1, fam.depth + 1):
        if fam.count(k) > node_limit:
            break
        for w in fam.words(k):
            c = fam.class_of(w)
            nodes.append({"word": list(w), "support": list(c.support), "norm": c.norm})
    out["nodes"] = nodes
    return out
