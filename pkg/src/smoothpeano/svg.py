"""A small deterministic SVG writer and the figure renderers.

Coordinates are data coordinates; the canvas maps a data box onto a fixed
pixel frame with y pointing up.  Numbers are printed with a fixed number of
decimals so equal inputs give byte-identical files.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

# colour per depth for interval and subdivision drawings
DEPTH_COLORS = ("#1b1b1b", "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")
LUNE_FILL = "#dde8f3"
CURVE_COLOR = "#c0392b"
FIELD_COLOR = "#555555"


def _fmt(v: float) -> str:
    s = f"{v:.3f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


@dataclass
class Canvas:
    box: tuple                 # (x0, x1, y0, y1) in data coordinates
    width: int = 800
    height: int = 500
    margin: int = 20
    items: list = field(default_factory=list)

    def _map(self, x, y):
        x0, x1, y0, y1 = self.box
        sx = (self.width - 2 * self.margin) / (x1 - x0 or 1.0)
        sy = (self.height - 2 * self.margin) / (y1 - y0 or 1.0)
        px = self.margin + (np.asarray(x, dtype=float) - x0) * sx
        py = self.height - self.margin - (np.asarray(y, dtype=float) - y0) * sy
        return px, py

    def _points(self, x, y) -> str:
        px, py = self._map(x, y)
        return " ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in zip(np.ravel(px), np.ravel(py)))

    def polyline(self, x, y, stroke="#000", width=1.0, opacity=1.0):
        self.items.append(f'<polyline fill="none" stroke="{stroke}" stroke-width="{_fmt(width)}" '
                          f'stroke-opacity="{_fmt(opacity)}" points="{self._points(x, y)}"/>')

    def polygon(self, x, y, fill="#ccc", stroke="none", opacity=1.0):
        self.items.append(f'<polygon fill="{fill}" fill-opacity="{_fmt(opacity)}" stroke="{stroke}" '
                          f'points="{self._points(x, y)}"/>')

    def line(self, x0, y0, x1, y1, stroke="#000", width=1.0):
        (a, c), (b, d) = self._map([x0, x1], [y0, y1])
        self.items.append(f'<line x1="{_fmt(a)}" y1="{_fmt(b)}" x2="{_fmt(c)}" y2="{_fmt(d)}" '
                          f'stroke="{stroke}" stroke-width="{_fmt(width)}"/>')

    def rect(self, x0, y0, x1, y1, fill="#000"):
        (a, c), (b, d) = self._map([x0, x1], [y0, y1])
        self.items.append(f'<rect x="{_fmt(min(a, c))}" y="{_fmt(min(b, d))}" width="{_fmt(abs(c - a))}" '
                          f'height="{_fmt(abs(d - b))}" fill="{fill}"/>')

    def circle(self, x, y, r=3.0, fill="#000"):
        px, py = self._map(x, y)
        self.items.append(f'<circle cx="{_fmt(float(px))}" cy="{_fmt(float(py))}" r="{_fmt(r)}" fill="{fill}"/>')

    def text(self, x, y, s, size=12):
        px, py = self._map(x, y)
        self.items.append(f'<text x="{_fmt(float(px))}" y="{_fmt(float(py))}" font-size="{size}" '
                          f'font-family="sans-serif">{s}</text>')

    def to_string(self) -> str:
        head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" height="{self.height}" '
                f'viewBox="0 0 {self.width} {self.height}">')
        bg = f'<rect width="{self.width}" height="{self.height}" fill="#ffffff"/>'
        return "\n".join([head, bg, *self.items, "</svg>"]) + "\n"

    def save(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.to_string())


def _lune_outline(canvas: Canvas, fam, samples=400, fill=LUNE_FILL):
    xs = np.linspace(*fam.root.domain, samples)
    f = fam.root.f(xs)
    g = fam.root.g(xs)
    canvas.polygon(np.concatenate([xs, xs[::-1]]), np.concatenate([f, g[::-1]]), fill=fill)
    canvas.polyline(xs, f, width=1.2)
    canvas.polyline(xs, g, width=1.2)


def _lune_box(fam, pad=0.05):
    xs = np.linspace(*fam.root.domain, 801)
    lo = float(fam.root.f(xs).min())
    hi = float(fam.root.g(xs).max())
    h = hi - lo or 1.0
    x0, x1 = fam.root.domain
    return (x0, x1, lo - pad * h, hi + pad * h)


def render_subdivision(fam, max_children: int = 24, samples: int = 300) -> Canvas:
    """Root lune with a subsample of its depth-2 children's floors."""
    cv = Canvas(_lune_box(fam))
    _lune_outline(cv, fam, samples)
    if fam.depth >= 2:
        m2 = fam.m[1]
        step = max(1, math.ceil(m2 / max_children))
        xs = np.linspace(*fam.root.domain, samples)
        for letter in range(1, m2 + 1, step):
            y = fam.eval_word((1, letter), xs, 0)[0]
            cv.polyline(xs, y, stroke=DEPTH_COLORS[2 if letter % 2 else 1], width=0.6)
    cv.text(fam.root.domain[0], cv.box[3], f"m = {list(fam.m)}", 11)
    return cv


def render_cantor(idx, depth: int | None = None, max_intervals: int = 4000) -> Canvas:
    """One row per depth; J intervals drawn as bars in the depth colour."""
    depth = idx.depth if depth is None else min(depth, idx.depth)
    cv = Canvas((0.0, 1.0, 0.0, float(depth)), height=60 + 40 * depth)
    frontier = [(1,)]
    for k in range(1, depth + 1):
        row = depth - k
        for w in frontier[:max_intervals]:
            lo, hi = idx.interval_of(w)
            cv.rect(float(lo), row + 0.25, float(hi), row + 0.75, DEPTH_COLORS[k % len(DEPTH_COLORS)])
        if k < depth:
            # evenly thinned so that wide radices still show the whole row
            per = max(1, max_intervals // len(frontier))
            step = max(1, -(-idx.m[k] // per))
            frontier = [w + (l,) for w in frontier for l in range(1, idx.m[k] + 1, step)][:max_intervals]
    return cv


def render_curve(curve, samples: int = 20000) -> Canvas:
    cv = Canvas(_lune_box(curve.fam))
    _lune_outline(cv, curve.fam)
    ts = [Fraction(i, samples - 1) for i in range(samples)]
    x, y = curve.eval(ts)
    cv.polyline(x, y, stroke=CURVE_COLOR, width=0.4, opacity=0.8)
    return cv


def render_footprint(curve, region, samples: int = 400) -> Canvas:
    fam = curve.fam
    cv = Canvas(_lune_box(fam))
    _lune_outline(cv, fam, fill="#f4f4f4")
    c, d = region.clipped_domain
    xs = np.linspace(c, d, samples)
    f = fam.root.f(xs)
    F = region.ceiling(xs)
    cv.polygon(np.concatenate([xs, xs[::-1]]), np.concatenate([f, F[::-1]]), fill=LUNE_FILL)
    cv.polyline(xs, F, stroke=CURVE_COLOR, width=1.6)
    x, y = curve.eval([region.t])
    cv.circle(x[0], y[0], 4.0, fill=CURVE_COLOR)
    return cv


def render_field(fam, samples: list, length: float = 0.02) -> Canvas:
    cv = Canvas(_lune_box(fam))
    _lune_outline(cv, fam)
    x0, x1, y0, y1 = cv.box
    # equal on-screen length regardless of the aspect of the data box
    aspect = ((y1 - y0) / (cv.height - 2 * cv.margin)) / ((x1 - x0) / (cv.width - 2 * cv.margin))
    for s in samples:
        dx = 1.0
        dy = s.slope
        screen = math.hypot(dx, dy / aspect)
        ux, uy = dx / screen * length, dy / screen * length
        cv.line(s.x - ux, s.y - uy, s.x + ux, s.y + uy, stroke=FIELD_COLOR, width=0.8)
    return cv


def render_theorem(theorem, ts: list, curve_samples: int = 4000, quiver: int = 24) -> Canvas:
    hi = theorem.window[1] * 1.15
    cv = Canvas((-hi, hi, -hi, hi), width=700, height=700)
    theta = np.linspace(0.0, 2 * math.pi, 721)
    for t in ts:
        e = theorem.embedding(t)
        bx, by = e.beta(theta)
        ax, ay = e.alpha(theta)
        cv.polyline(ax, ay, stroke="#bbbbbb", width=0.6)
        cv.polyline(bx, by, stroke=DEPTH_COLORS[1], width=1.0)
    lo_t, hi_t = theorem.window
    ts_curve = np.linspace(lo_t, hi_t, curve_samples).tolist()
    x, y = theorem.curve(ts_curve)
    cv.polyline(x, y, stroke=CURVE_COLOR, width=0.3, opacity=0.6)
    th = np.repeat(np.linspace(0, 2 * math.pi, quiver, endpoint=False), 3)
    r = np.tile(np.linspace(lo_t, hi_t, 5)[1:4], quiver)
    dx, dy = theorem.field(th, r)
    n = np.hypot(dx, dy)
    px, py = r * np.cos(th), r * np.sin(th)
    L = 0.04 * hi
    for a, b, u, v, s in zip(px, py, dx, dy, n):
        cv.line(a - L * u / s, b - L * v / s, a + L * u / s, b + L * v / s, stroke=FIELD_COLOR, width=0.8)
    return cv


def render_ceiling(fam, xs, values: dict) -> Canvas:
    """The root lune with one ceiling polyline per entry of ``values`` (label -> F_t(xs))."""
    cv = Canvas(_lune_box(fam))
    _lune_outline(cv, fam)
    for i, (label, F) in enumerate(values.items()):
        cv.polyline(xs, F, stroke=DEPTH_COLORS[1 + i % (len(DEPTH_COLORS) - 1)], width=1.4)
    return cv


def render_cylinder(theta, y, y_range) -> Canvas:
    """The curve on the unrolled cylinder ``[0, 2pi] x [c, d]``; wrap-around jumps are split."""
    c, d = y_range
    cv = Canvas((0.0, 2 * math.pi, c, d))
    cv.rect(0.0, c, 2 * math.pi, d, fill="#f4f4f4")
    theta = np.asarray(theta)
    y = np.asarray(y)
    breaks = np.flatnonzero(np.abs(np.diff(theta)) > math.pi) + 1
    for seg_t, seg_y in zip(np.split(theta, breaks), np.split(y, breaks)):
        if seg_t.size > 1:
            cv.polyline(seg_t, seg_y, stroke=CURVE_COLOR, width=0.5)
    return cv
