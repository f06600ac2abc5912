"""The verification harness: every quantitative check, run from one RunConfig."""

from __future__ import annotations

import math
from functools import cached_property
from typing import Callable

import numpy as np

from . import assembly, ceiling_field, peano
from . import smoothfn as sf
from .cantor import CantorIndex
from .config import ALL_CHECKS, RunConfig
from .lune import Lune, bipartition, lune_norm, slice_lune
from .subdivision import LuneFamily, build_family, check_step5, family_check_lemma29

FD_STEP = 1e-5


# --------------------------------------------------------------------------
# random inputs


def random_lune(rng: np.random.Generator) -> Lune:
    """A simple lune on [0, 1] whose support is a random sub-interval of width >= 0.2."""
    x = sf.identity((0.0, 1.0))
    s0 = float(rng.uniform(0.0, 0.8))
    s1 = float(rng.uniform(s0 + 0.2, 1.0))
    w = s1 - s0
    # peak value ~1 at the midpoint of the support
    bump = math.exp(4.0 / w) * sf.flat(x - s0) * sf.flat(s1 - x)
    base = math.e ** 4 * sf.flat(x) * sf.flat(1.0 - x)
    c = rng.normal(size=3)
    f = 0.3 * base * (c[0] + c[1] * x + c[2] * x * x)
    gap = rng.uniform(0.1, 2.0) * bump * (1.0 + rng.uniform(-0.5, 0.5) * x)
    return Lune(f, f + gap, (0.0, 1.0), (s0, s1), gap)


def random_dag(rng: np.random.Generator, depth: int = 3) -> sf.SmoothFn:
    """A random expression over the primitive constructors, defined on [0, 1]."""
    x = sf.identity((0.0, 1.0))
    leaves = [x, sf.constant(float(rng.normal()), (0.0, 1.0)), sf.make_phi().restrict(0.0, 1.0),
              sf.sigmoid(x), sf.flat(x)]
    f = leaves[int(rng.integers(len(leaves)))]
    for _ in range(depth):
        g = leaves[int(rng.integers(len(leaves)))]
        op = int(rng.integers(4))
        if op == 0:
            f = f + float(rng.normal()) * g
        elif op == 1:
            f = f * g
        elif op == 2:
            f = sf.exp(0.3 * f)
        else:
            f = f / (2.0 + g * g)
    return f


def jet_primitives() -> dict:
    x = sf.identity()
    phi = sf.make_phi()
    return {
        "constant": sf.constant(2.5),
        "identity": x,
        "affine": sf.affine_combination([(2.0, x), (-0.5, x * x)], 1.0),
        "product": sf.sigmoid(x) * sf.flat(x),
        "quotient": (x * x + 1.0) / (x + 2.0),
        "exp": sf.exp(x * x),
        "flat": sf.flat(x),
        "bump": phi,
        "sigmoid": sf.sigmoid(x),
        "rescale": sf.phi_rescaled(phi, 0.2, 0.5),
        "periodic": assembly.periodic_ramp(),
    }


# --------------------------------------------------------------------------
# checks


def check_jets(cfg: RunConfig, points: int = 100, order: int = 4) -> dict:
    """k-th jet entry against the central difference of the (k-1)-th entry."""
    rng = np.random.default_rng(cfg.seed)
    rows = {}
    ok = True
    for name, f in jet_primitives().items():
        lo, hi = (0.0, 2 * math.pi) if name == "periodic" else (0.01, 0.99)
        xs = rng.uniform(lo, hi, points)
        d = f.derivatives(xs, order)
        worst = 0.0
        for k in range(1, order + 1):
            fd = (f.derivatives(xs + FD_STEP, k - 1)[k - 1] - f.derivatives(xs - FD_STEP, k - 1)[k - 1]) / (2 * FD_STEP)
            tol = np.maximum(1e-6, 1e-4 * np.abs(d[k]))
            worst = max(worst, float(np.max(np.abs(fd - d[k]) / tol)))
        rows[name] = worst
        ok &= worst <= 1.0
    return {"worst_ratio": rows, "ok": bool(ok)}


def check_slicing(cfg: RunConfig, lunes: int = 20) -> dict:
    rng = np.random.default_rng(cfg.seed)
    worst = 0.0
    for _ in range(lunes):
        L = random_lune(rng)
        for n in (2, 3, 5):
            pieces = slice_lune(L, n)
            for k in (0, 1, 2):
                ref = lune_norm(L, k, cfg.grid).value
                for P in pieces:
                    got = lune_norm(P, k, cfg.grid).value
                    worst = max(worst, abs(got - ref / n) / ref)
    return {"max_relative_error": worst, "ok": worst <= 1e-9}


def _support_error(part: Lune, c: float, d: float, grid: int) -> float:
    """How far the gap of ``part`` strays outside ``[c, d]`` or vanishes well inside it."""
    xs = np.linspace(*part.domain, grid)
    gap = part.difference()(xs)
    outside = (xs < c) | (xs > d)
    margin = 0.05 * (d - c)
    inside = (xs > c + margin) & (xs < d - margin)
    leak = float(np.max(np.abs(gap[outside]), initial=0.0))
    hole = float(np.sum(gap[inside] <= 0))
    return leak + hole


def check_bipartition(cfg: RunConfig, lunes: int = 20) -> dict:
    """``||L_i||_k <= 2^k ||phi_ab||_k ||L||_k`` for both halves, plus their supports."""
    rng = np.random.default_rng(cfg.seed + 1)
    phi = sf.make_phi()
    worst = 0.0
    support_err = 0.0
    for _ in range(lunes):
        L = random_lune(rng)
        a, b = L.support_interval()
        low, high = bipartition(L, phi)
        support_err = max(support_err, _support_error(low, a, (a + 2 * b) / 3, 2049),
                          _support_error(high, (2 * a + b) / 3, b, 2049))
        pab = sf.phi_rescaled(phi, a, b)
        for k in range(4):
            rhs = 2 ** k * sf.ck_norm(pab, k, cfg.grid, cfg.safety_factor, interval=(a, b)).value \
                * lune_norm(L, k, cfg.grid, cfg.safety_factor).value
            lhs = max(lune_norm(low, k, cfg.grid).value, lune_norm(high, k, cfg.grid).value)
            worst = max(worst, lhs / rhs)
    return {"max_ratio": worst, "support_error": support_err,
            "ok": worst <= 1.0 and support_err == 0.0}


class Context:
    """Lazily built family, index and curve shared by the checks of one run."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg

    @cached_property
    def fam(self) -> LuneFamily:
        return build_family(self.cfg.build_lune(), self.cfg.schedule(), self.cfg.depth,
                            grid=self.cfg.grid, safety_factor=self.cfg.safety_factor,
                            budget=self.cfg.budget)

    @cached_property
    def idx(self) -> CantorIndex:
        return CantorIndex.from_family(self.fam)

    @cached_property
    def curve(self) -> peano.CurveApprox:
        return peano.build_curve(self.fam, self.idx, seed=self.cfg.seed)

    def rng(self, offset: int = 0) -> np.random.Generator:
        return np.random.default_rng(self.cfg.seed + offset)


def _step5(ctx: Context) -> dict:
    depths = range(1, min(3, ctx.fam.depth) + 1)
    r = check_step5(ctx.fam, ctx.cfg.verification_schedule(), depths)
    return {"max_ratio": r["max_ratio"], "covered": r["covered"], "ok": r["ok"]}


def _lemma29(ctx: Context) -> dict:
    fam = ctx.fam
    if ctx.cfg.check_eps is not None:
        fam = LuneFamily(fam.root, fam.phi, ctx.cfg.verification_schedule(), fam.depth, fam.m,
                         fam.n, fam.classes, fam.grid, fam.safety_factor, fam.budget)
    r = family_check_lemma29(fam)
    return {"min_slack": r["min_slack"], "ok": r["ok"]}


def _monotone(ctx: Context) -> dict:
    rng = ctx.rng(2)
    pairs = [tuple(sorted(rng.random(2))) for _ in range(ctx.cfg.sample("monotone_pairs", 100))]
    return ceiling_field.ceiling_monotone_check(ctx.fam, ctx.idx, pairs)


def _tangency(ctx: Context) -> dict:
    ts = list(ctx.rng(3).random(ctx.cfg.sample("tangency_t", 20)))
    r = ceiling_field.tangency_check(ctx.fam, ctx.idx, ts, 512)
    r.pop("per_t")
    return r


def _cauchy(ctx: Context) -> dict:
    hi = ctx.fam.depth
    lo = min(2, hi)
    return peano.cauchy_check(ctx.fam, ctx.idx, lo, hi, ctx.cfg.sample("cauchy", 10_000), ctx.cfg.seed)


def _diameter(ctx: Context) -> dict:
    r = peano.diameter_table(ctx.fam, min(3, ctx.fam.depth))
    r.pop("bounds")
    return r


def _footprint(ctx: Context) -> dict:
    c = ctx.curve
    ts = ctx.rng(4).uniform(0.05, 1.0, ctx.cfg.sample("footprint_t", 3))
    rows = [peano.hausdorff_check(c, float(t), 512, ctx.cfg.sample("footprint_points", 100_000), ctx.cfg.seed)
            for t in ts]
    return {"rows": rows, "ok": all(r["ok"] for r in rows)}


def _cylinder(ctx: Context) -> dict:
    depth = ctx.cfg.theorem.depth
    cyl = assembly.build_cylinder((0.0, 1.0), (0.0, 1.0), depth)
    r = assembly.cylinder_property_check(cyl)
    fp = assembly.cylinder_footprint_check(cyl, 0.55, samples=ctx.cfg.sample("cylinder_points", 50_000))
    r["footprint"] = fp
    r["ok"] = r["ok"] and fp["ok"]
    return r


def _stacked(ctx: Context) -> dict:
    cyl = assembly.build_cylinder_with_norm((0.0, 1.0), (0.0, 1.0), 2, 0.1, ctx.cfg.theorem.depth)
    return assembly.stacked_bound_check(cyl, ctx.cfg.sample("stacked_t", 100), ctx.cfg.seed)


def _theorem(ctx: Context, eps_override=None) -> assembly.PlanarTheorem:
    th = ctx.cfg.theorem
    eps = th.eps if eps_override is None else [eps_override] * len(th.k)
    sched = assembly.TheoremSchedule(tuple(th.breakpoints), tuple(th.k), tuple(eps))
    return assembly.build_planar(sched, th.window, th.depth)


def _proximity(ctx: Context) -> dict:
    return assembly.proximity_check(_theorem(ctx), ctx.cfg.sample("proximity_per_band", 200), ctx.cfg.seed)


def _curvature(ctx: Context) -> dict:
    th = ctx.cfg.theorem
    # eps tightened so that ||beta - alpha||_2 < t/4 is forced by the proximity bound
    tight = min(min(th.eps), th.breakpoints[0] / 4)
    theorem = _theorem(ctx, tight)
    lo, hi = theorem.window
    rows = []
    for t in ctx.rng(5).uniform(lo, hi, ctx.cfg.sample("curvature_t", 20)):
        e = theorem.embedding(float(t))
        r = assembly.curvature_check(e)
        r["injective_gap"] = e.min_pairwise_distance()
        rows.append(r)
    ok = all(r["ok"] and r["small"] and r["injective_gap"] > 0 for r in rows)
    return {"eps": tight, "min_curvature": min(r["min_curvature"] for r in rows), "ok": ok}


CHECKS: dict[str, Callable] = {
    "jets": lambda ctx: check_jets(ctx.cfg),
    "slicing": lambda ctx: check_slicing(ctx.cfg),
    "bipartition": lambda ctx: check_bipartition(ctx.cfg),
    "step5": _step5,
    "lemma29": _lemma29,
    "monotone": _monotone,
    "gap_flatness": lambda ctx: ceiling_field.gap_flatness_check(ctx.fam, ctx.idx, seed=ctx.cfg.seed),
    "tangency": _tangency,
    "continuity": lambda ctx: ceiling_field.continuity_check(ctx.fam, ctx.idx, seed=ctx.cfg.seed),
    "tiebreak": lambda ctx: ceiling_field.tiebreak_check(ctx.fam, seed=ctx.cfg.seed),
    "cauchy": _cauchy,
    "diameter": _diameter,
    "footprint": _footprint,
    "containment": lambda ctx: peano.containment_check(ctx.curve, seed=ctx.cfg.seed),
    "surjectivity": lambda ctx: peano.surjectivity_check(ctx.curve, seed=ctx.cfg.seed),
    "k_sufficiency": lambda ctx: peano.k_sufficiency_check(ctx.curve, seed=ctx.cfg.seed),
    "cylinder": _cylinder,
    "stacked": _stacked,
    "proximity": _proximity,
    "curvature": _curvature,
}
assert set(CHECKS) == set(ALL_CHECKS)


def _plain(obj):
    """Reduce a report to JSON-friendly builtins."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    return obj


def run_checks(cfg: RunConfig, names=None) -> dict:
    """Run the named checks (default: ``cfg.checks``) and collect their reports."""
    names = cfg.checks if names is None else names
    ctx = Context(cfg)
    results = {}
    for name in names:
        results[name] = _plain(CHECKS[name](ctx))
    return {"checks": results, "ok": all(r["ok"] for r in results.values())}
