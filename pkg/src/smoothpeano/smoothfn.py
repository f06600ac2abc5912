"""C^oo functions as immutable expression DAGs with exact high-order jets.

Every node evaluates to truncated Taylor series at a vector of points.  The
series are stored as arrays of shape ``(order + 1, npoints)`` holding
*normalized* coefficients ``f^(k)(x) / k!``; multiplication is then a plain
Cauchy product and composition with ``exp`` or a reciprocal has the usual
one-line recurrences.  Derivatives are recovered by multiplying by ``k!`` at
the very end.

The flat building block is ``B(t) = exp(-1/t)`` for ``t > 0`` and ``0``
otherwise.  Points within ``CREASE`` of the crease are evaluated on the flat
side, which keeps flat regions exactly flat and avoids overflowing ``1/t``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import DomainError, OrderError, SingularQuotientError

MAX_ORDER = 8
CREASE = 1e-12
SAFETY_FACTOR = 1.25
DEFAULT_GRID = 4097
TWO_PI = 2.0 * math.pi

_FACT = np.array([math.factorial(k) for k in range(64)], dtype=float)


# --------------------------------------------------------------------------
# truncated series arithmetic on (K+1, n) arrays


def _mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    K = a.shape[0] - 1
    out = np.empty_like(a)
    for k in range(K + 1):
        acc = a[0] * b[k]
        for i in range(1, k + 1):
            acc = acc + a[i] * b[k - i]
        out[k] = acc
    return out


def _recip(a: np.ndarray) -> np.ndarray:
    K = a.shape[0] - 1
    out = np.empty_like(a)
    out[0] = 1.0 / a[0]
    for k in range(1, K + 1):
        acc = a[1] * out[k - 1]
        for i in range(2, k + 1):
            acc = acc + a[i] * out[k - i]
        out[k] = -acc * out[0]
    return out


def _exp(a: np.ndarray) -> np.ndarray:
    K = a.shape[0] - 1
    out = np.empty_like(a)
    out[0] = np.exp(a[0])
    for k in range(1, K + 1):
        acc = a[1] * out[k - 1]
        for i in range(2, k + 1):
            acc = acc + i * a[i] * out[k - i]
        out[k] = acc / k
    return out


def _compose(outer: np.ndarray, inner: np.ndarray) -> np.ndarray:
    """Series of u(y(x)) given the series of u about y(x0) and of y about x0."""
    K = inner.shape[0] - 1
    delta = inner.copy()
    delta[0] = 0.0
    out = np.zeros_like(inner)
    out[0] = outer[0]
    power = delta
    for j in range(1, K + 1):
        out += outer[j] * power
        if j < K:
            power = _mul(power, delta)
    return out


def _const_series(c, K: int, n: int) -> np.ndarray:
    out = np.zeros((K + 1, n))
    out[0] = c
    return out


def _flat_series(t: np.ndarray) -> np.ndarray:
    """Series of B(t(x)); entries with t0 <= CREASE are exactly zero."""
    live = t[0] > CREASE
    out = np.zeros_like(t)
    if np.any(live):
        tl = t[:, live]
        out[:, live] = _exp(-_recip(tl))
    return out


def _logistic_half(t: np.ndarray) -> np.ndarray:
    # rho(t) = E / (1 + E), E = B(t)/B(1-t) = exp(1/(1-t) - 1/t); valid for t0 <= 1/2
    one_minus = -t
    one_minus[0] += 1.0
    w = _recip(one_minus) - _recip(t)
    e = _exp(w)
    one_plus = e.copy()
    one_plus[0] += 1.0
    return _mul(e, _recip(one_plus))


def _rho_series(t: np.ndarray) -> np.ndarray:
    """Series of rho(t) = B(t) / (B(t) + B(1-t)), exactly 0 / 1 off (0, 1)."""
    t0 = t[0]
    out = np.zeros_like(t)
    high = t0 >= 1.0 - CREASE
    out[0, high] = 1.0
    lower = (t0 > CREASE) & (t0 <= 0.5)
    upper = (t0 > 0.5) & ~high
    if np.any(lower):
        out[:, lower] = _logistic_half(t[:, lower])
    if np.any(upper):
        mirrored = -t[:, upper]
        mirrored[0] += 1.0
        r = -_logistic_half(mirrored)
        r[0] += 1.0
        out[:, upper] = r
    return out


# --------------------------------------------------------------------------
# the bump integral S(u) = int_0^u B(s)B(1-s) ds / int_0^1 B(s)B(1-s) ds

_GL_X, _GL_W = np.polynomial.legendre.leggauss(24)
_GL_PANELS = 24


def _bb(s: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        v = np.exp(-1.0 / s - 1.0 / (1.0 - s))
    return np.where((s > 0) & (s < 1), v, 0.0)


def _half_integral(v: np.ndarray) -> np.ndarray:
    """int_0^v B(s)B(1-s) ds for 0 <= v <= 1/2, composite Gauss-Legendre."""
    v = np.asarray(v, dtype=float)
    edges = np.linspace(0.0, 1.0, _GL_PANELS + 1)
    total = np.zeros_like(v)
    for lo, hi in zip(edges[:-1], edges[1:]):
        a = lo * v
        h = (hi - lo) * v
        s = a[..., None] + 0.5 * h[..., None] * (_GL_X + 1.0)
        total += 0.5 * h * (_bb(s) @ _GL_W)
    return total


_HALF_MASS = float(_half_integral(np.array(0.5)))
_SIGMOID_Z = 2.0 * _HALF_MASS


def _sigmoid_values(u: np.ndarray) -> np.ndarray:
    u = np.clip(u, 0.0, 1.0)
    low = u <= 0.5
    out = np.empty_like(u)
    out[low] = _half_integral(u[low]) / _SIGMOID_Z
    out[~low] = 1.0 - _half_integral(1.0 - u[~low]) / _SIGMOID_Z
    return out


def _sigmoid_series(u: np.ndarray) -> np.ndarray:
    K = u.shape[0] - 1
    u0 = u[0]
    out = np.zeros_like(u)
    out[0, u0 >= 1.0 - CREASE] = 1.0
    live = (u0 > CREASE) & (u0 < 1.0 - CREASE)
    if not np.any(live):
        return out
    ul = u0[live]
    outer = np.zeros((K + 1, ul.size))
    outer[0] = _sigmoid_values(ul)
    if K >= 1:
        s = np.zeros((K, ul.size))
        s[0] = ul
        if K >= 2:
            s[1] = 1.0
        one_minus = -s
        one_minus[0] += 1.0
        w = _mul(_flat_series(s), _flat_series(one_minus)) / _SIGMOID_Z
        for k in range(1, K + 1):
            outer[k] = w[k - 1] / k
    out[:, live] = _compose(outer, u[:, live])
    return out


# --------------------------------------------------------------------------
# expression nodes


class _Node:
    __slots__ = ("__weakref__",)

    def series(self, xs: np.ndarray, K: int, memo: dict) -> np.ndarray:
        key = id(self)
        hit = memo.get(key)
        if hit is not None:
            return hit[1]
        val = self._series(xs, K, memo)
        memo[key] = (self, val)
        return val

    def _series(self, xs, K, memo):  # pragma: no cover - abstract
        raise NotImplementedError


class _Const(_Node):
    __slots__ = ("c",)

    def __init__(self, c: float):
        self.c = float(c)

    def _series(self, xs, K, memo):
        return _const_series(self.c, K, xs.size)


class _Identity(_Node):
    __slots__ = ()

    def _series(self, xs, K, memo):
        out = np.zeros((K + 1, xs.size))
        out[0] = xs
        if K >= 1:
            out[1] = 1.0
        return out


class _Affine(_Node):
    __slots__ = ("terms", "const")

    def __init__(self, terms: tuple, const: float):
        self.terms = terms
        self.const = float(const)

    def _series(self, xs, K, memo):
        out = _const_series(self.const, K, xs.size)
        for coef, node in self.terms:
            out += coef * node.series(xs, K, memo)
        return out


class _Product(_Node):
    __slots__ = ("a", "b")

    def __init__(self, a, b):
        self.a, self.b = a, b

    def _series(self, xs, K, memo):
        return _mul(self.a.series(xs, K, memo), self.b.series(xs, K, memo))


class _Quotient(_Node):
    __slots__ = ("a", "b")

    def __init__(self, a, b):
        self.a, self.b = a, b

    def _series(self, xs, K, memo):
        return _mul(self.a.series(xs, K, memo), _recip(self.b.series(xs, K, memo)))


class _Unary(_Node):
    __slots__ = ("a", "fn")

    def __init__(self, a, fn: Callable[[np.ndarray], np.ndarray]):
        self.a, self.fn = a, fn

    def _series(self, xs, K, memo):
        return self.fn(self.a.series(xs, K, memo))


def _bump_of(inner: np.ndarray) -> np.ndarray:
    t = 3.0 * inner
    t[0] -= 1.0
    return _rho_series(t)


class _Rescale(_Node):
    """x -> child((x - shift) / scale)."""

    __slots__ = ("child", "shift", "scale")

    def __init__(self, child, shift: float, scale: float):
        self.child, self.shift, self.scale = child, float(shift), float(scale)

    def _series(self, xs, K, memo):
        inner = (xs - self.shift) / self.scale
        # the child sees a different grid, so it gets its own memo
        s = self.child.series(inner, K, {})
        factors = self.scale ** -np.arange(K + 1, dtype=float)
        return s * factors[:, None]


class _Periodic(_Node):
    """x -> child(x0 + ((x - x0) mod period))."""

    __slots__ = ("child", "origin", "period")

    def __init__(self, child, origin: float, period: float):
        self.child, self.origin, self.period = child, float(origin), float(period)

    def _series(self, xs, K, memo):
        inner = self.origin + np.mod(xs - self.origin, self.period)
        return self.child.series(inner, K, {})


# --------------------------------------------------------------------------
# public types


@dataclass(frozen=True)
class Jet:
    """Value and derivatives ``(f(x), f'(x), ..., f^(order)(x))`` at a point."""

    order: int
    coeffs: tuple

    def __post_init__(self):
        if len(self.coeffs) != self.order + 1:
            raise ValueError("a Jet of order k needs k+1 entries")
        if not all(math.isfinite(c) for c in self.coeffs):
            raise ValueError("non-finite jet entry")

    def __getitem__(self, i):
        return self.coeffs[i]

    def __len__(self):
        return len(self.coeffs)

    def __iter__(self):
        return iter(self.coeffs)


class SeriesMemo:
    """Shared evaluation cache for many functions on one grid and order.

    Lunes deep in the subdivision tree share most of their sub-DAG with their
    siblings; passing one memo to consecutive evaluations avoids recomputing
    the shared part.
    """

    def __init__(self, xs, order: int):
        self.xs = np.ascontiguousarray(np.asarray(xs, dtype=float).ravel())
        self.order = order
        self.table: dict = {}

    def clear(self):
        self.table.clear()


class SmoothFn:
    """An immutable C^oo function on an interval, on the line, or on the circle.

    ``domain`` is ``(lo, hi)`` for an interval, ``None`` for the whole line;
    ``periodic`` marks functions on T = R / 2piZ, whose domain is one period.
    """

    __slots__ = ("node", "domain", "periodic")

    def __init__(self, node: _Node, domain=None, periodic: bool = False):
        self.node = node
        self.domain = None if domain is None else (float(domain[0]), float(domain[1]))
        self.periodic = periodic
        if self.domain is not None and not self.domain[0] < self.domain[1]:
            raise DomainError(f"empty domain {self.domain}")

    # -- evaluation -----------------------------------------------------

    def _check(self, xs: np.ndarray, order: int, max_order: int):
        if order < 0 or order > max_order:
            raise OrderError(f"order {order} outside [0, {max_order}]")
        if self.domain is not None and not self.periodic:
            lo, hi = self.domain
            tol = 1e-12 * max(1.0, abs(lo), abs(hi))
            if xs.size and (xs.min() < lo - tol or xs.max() > hi + tol):
                raise DomainError(f"points outside [{lo}, {hi}]")

    def series(self, xs, order: int, memo: SeriesMemo | None = None,
               max_order: int = MAX_ORDER) -> np.ndarray:
        """Normalized Taylor coefficients, shape ``(order + 1, len(xs))``."""
        if memo is not None:
            if memo.order != order:
                raise OrderError("memo was built for a different order")
            arr, table = memo.xs, memo.table
        else:
            arr, table = np.ascontiguousarray(np.asarray(xs, dtype=float).ravel()), {}
        self._check(arr, order, max_order)
        return self.node.series(arr, order, table)

    def derivatives(self, xs, order: int, memo: SeriesMemo | None = None,
                    max_order: int = MAX_ORDER) -> np.ndarray:
        """``out[k, i] = f^(k)(xs[i])`` for ``k <= order``."""
        return self.series(xs, order, memo, max_order) * _FACT[: order + 1, None]

    def __call__(self, x):
        scalar = np.ndim(x) == 0
        vals = self.derivatives(np.atleast_1d(x), 0)[0]
        return float(vals[0]) if scalar else vals

    def grid(self, size: int) -> np.ndarray:
        lo, hi = self.domain_or_default()
        return np.linspace(lo, hi, size)

    def domain_or_default(self):
        if self.domain is not None:
            return self.domain
        return (0.0, 1.0)

    # -- construction ---------------------------------------------------

    def _wrap(self, node: _Node, other=None) -> "SmoothFn":
        domain, periodic = self.domain, self.periodic
        if isinstance(other, SmoothFn):
            domain = _meet(domain, other.domain)
            periodic = periodic or other.periodic
        return SmoothFn(node, domain, periodic)

    def __add__(self, other):
        if isinstance(other, SmoothFn):
            return self._wrap(_Affine(((1.0, self.node), (1.0, other.node)), 0.0), other)
        return self._wrap(_Affine(((1.0, self.node),), float(other)))

    __radd__ = __add__

    def __neg__(self):
        return self._wrap(_Affine(((-1.0, self.node),), 0.0))

    def __sub__(self, other):
        if isinstance(other, SmoothFn):
            return self._wrap(_Affine(((1.0, self.node), (-1.0, other.node)), 0.0), other)
        return self._wrap(_Affine(((1.0, self.node),), -float(other)))

    def __rsub__(self, other):
        return self._wrap(_Affine(((-1.0, self.node),), float(other)))

    def __mul__(self, other):
        if isinstance(other, SmoothFn):
            return self._wrap(_Product(self.node, other.node), other)
        return self._wrap(_Affine(((float(other), self.node),), 0.0))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, SmoothFn):
            _require_nonvanishing(other, self)
            return self._wrap(_Quotient(self.node, other.node), other)
        return self * (1.0 / float(other))

    def __rtruediv__(self, other):
        return constant(other, self.domain) / self

    def restrict(self, lo: float, hi: float) -> "SmoothFn":
        if self.domain is not None and not self.periodic:
            a, b = self.domain
            if lo < a - 1e-12 or hi > b + 1e-12:
                raise DomainError(f"[{lo}, {hi}] not inside {self.domain}")
        return SmoothFn(self.node, (lo, hi), False)

    def rescaled(self, shift: float, scale: float, domain=None) -> "SmoothFn":
        """``x -> self((x - shift) / scale)``."""
        if scale == 0:
            raise DomainError("zero scale")
        if domain is None and self.domain is not None:
            lo, hi = (shift + scale * d for d in self.domain)
            domain = (min(lo, hi), max(lo, hi))
        return SmoothFn(_Rescale(self.node, shift, scale), domain, self.periodic)

    def periodize(self, origin: float = 0.0, period: float = TWO_PI) -> "SmoothFn":
        """View a function on ``[origin, origin + period]`` as a function on the circle."""
        return SmoothFn(_Periodic(self.node, origin, period), (origin, origin + period), True)


def _meet(d1, d2):
    if d1 is None:
        return d2
    if d2 is None:
        return d1
    lo, hi = max(d1[0], d2[0]), min(d1[1], d2[1])
    if not lo < hi:
        raise DomainError(f"domains {d1} and {d2} do not overlap")
    return (lo, hi)


def _require_nonvanishing(den: SmoothFn, num: SmoothFn, samples: int = 1025):
    domain = _meet(den.domain, num.domain) or (-1.0, 1.0)
    xs = np.linspace(domain[0], domain[1], samples)
    vals = den.derivatives(xs, 0)[0]
    scale = max(1.0, float(np.max(np.abs(vals))))
    if np.any(np.abs(vals) <= 1e-12 * scale) or (vals.min() < 0 < vals.max()):
        raise SingularQuotientError("denominator is not bounded away from zero")


def constant(c: float, domain=None) -> SmoothFn:
    return SmoothFn(_Const(c), domain)


def identity(domain=None) -> SmoothFn:
    return SmoothFn(_Identity(), domain)


def affine_combination(terms: Iterable[tuple], const: float = 0.0) -> SmoothFn:
    """``const + sum(c * f for c, f in terms)`` as a single DAG node."""
    terms = [(float(c), f) for c, f in terms]
    if not terms:
        return constant(const)
    domain = None
    periodic = False
    for _, f in terms:
        domain = _meet(domain, f.domain)
        periodic = periodic or f.periodic
    return SmoothFn(_Affine(tuple((c, f.node) for c, f in terms), const), domain, periodic)


def exp(f: SmoothFn) -> SmoothFn:
    return SmoothFn(_Unary(f.node, _exp), f.domain, f.periodic)


def flat(f: SmoothFn) -> SmoothFn:
    """``B(f(x))`` with ``B(t) = exp(-1/t)`` for t > 0 and 0 otherwise."""
    return SmoothFn(_Unary(f.node, _flat_series), f.domain, f.periodic)


def bump(f: SmoothFn) -> SmoothFn:
    """``phi(f(x))`` for the canonical step phi (0 below 1/3, 1 above 2/3)."""
    return SmoothFn(_Unary(f.node, _bump_of), f.domain, f.periodic)


def sigmoid(f: SmoothFn) -> SmoothFn:
    """``S(f(x))`` with S the normalized antiderivative of ``B(s)B(1-s)``."""
    return SmoothFn(_Unary(f.node, _sigmoid_series), f.domain, f.periodic)


def jet_eval(f: SmoothFn, x: float, order: int, max_order: int = MAX_ORDER) -> Jet:
    d = f.derivatives(np.array([float(x)]), order, max_order=max_order)[:, 0]
    return Jet(order, tuple(float(v) for v in d))


# --------------------------------------------------------------------------
# the step phi, its rescalings and the transition maps


class BumpPhi(SmoothFn):
    """The fixed step function phi(x) = rho(3x - 1), rho(t) = B(t)/(B(t)+B(1-t))."""

    __slots__ = ()


_PHI = BumpPhi(bump(identity()).node, None)


def make_phi() -> BumpPhi:
    return _PHI


def phi_pointwise(x: float) -> float:
    """Direct closed-form value of phi, independent of the jet engine."""
    t = 3.0 * x - 1.0
    if t <= 0.0:
        return 0.0
    if t >= 1.0:
        return 1.0
    bt, bs = math.exp(-1.0 / t), math.exp(-1.0 / (1.0 - t))
    return bt / (bt + bs)


@lru_cache(maxsize=4096)
def _phi_ab(a: float, b: float) -> SmoothFn:
    return SmoothFn(_Rescale(_PHI.node, a, b - a), None)


def phi_rescaled(phi: BumpPhi, a: float, b: float) -> SmoothFn:
    """``phi_{a,b}(x) = phi((x - a) / (b - a))``; 0 up to (2a+b)/3, 1 from (a+2b)/3."""
    if not a < b:
        raise DomainError(f"phi_rescaled needs a < b, got {a}, {b}")
    if phi is _PHI:
        return _phi_ab(float(a), float(b))
    return SmoothFn(_Rescale(phi.node, a, b - a), None)


def transition_map(interval: Sequence[float], a: float, b: float) -> SmoothFn:
    """Flat-ended strictly monotone map of ``[alpha, beta]`` onto ``[a, b]``."""
    alpha, beta = map(float, interval)
    if not alpha < beta:
        raise DomainError(f"empty interval [{alpha}, {beta}]")
    if a == b:
        raise DomainError("transition map needs a != b")
    u = identity().rescaled(alpha, beta - alpha)
    return (a + (b - a) * sigmoid(u)).restrict(alpha, beta)


def sigmoid_values(u) -> np.ndarray:
    """Pointwise S(u) for plain arrays (no jets)."""
    return _sigmoid_values(np.atleast_1d(np.asarray(u, dtype=float)))


# --------------------------------------------------------------------------
# C^k norms


@dataclass(frozen=True)
class CkNormEstimate:
    k: int
    value: float
    samples: int
    safety_factor: float
    raw: float

    def __float__(self):
        return self.value


def ck_norm(f: SmoothFn, k: int, grid_size: int = DEFAULT_GRID,
            safety_factor: float = 1.0, interval=None,
            memo: SeriesMemo | None = None) -> CkNormEstimate:
    """Sampled ``max_{i<=k} sup |f^(i)|`` on a uniform grid including both ends.

    ``value = safety_factor * raw``.  ``interval`` overrides the sampling
    window (needed for functions on the whole line).
    """
    if grid_size < 2:
        raise ValueError("grid_size must be >= 2")
    if safety_factor < 1:
        raise ValueError("safety_factor must be >= 1")
    if memo is not None:
        xs = memo.xs
    else:
        lo, hi = interval if interval is not None else f.domain_or_default()
        xs = np.linspace(lo, hi, grid_size)
    d = f.derivatives(xs, k, memo)
    raw = float(np.max(np.abs(d))) if d.size else 0.0
    return CkNormEstimate(k, safety_factor * raw, int(xs.size), float(safety_factor), raw)


def sup_table(f: SmoothFn, k: int, xs, memo: SeriesMemo | None = None) -> np.ndarray:
    """``[sup |f|, sup |f'|, ..., sup |f^(k)|]`` over the points ``xs``."""
    d = f.derivatives(xs, k, memo)
    return np.max(np.abs(d), axis=1)
