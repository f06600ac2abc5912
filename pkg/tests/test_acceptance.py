"""The twelve acceptance criteria at their stated tolerances and sample sizes.

Each test prints one ``criterion N: PASS|FAIL`` line (visible without -s)
before asserting.
"""

import math
import time
from pathlib import Path

import numpy as np
import pytest

from smoothpeano import assembly, cli, peano
from smoothpeano.ceiling_field import ceiling_monotone_check, gap_flatness_check, tangency_check
from smoothpeano.config import RunConfig
from smoothpeano.subdivision import check_step5, family_check_lemma29
from smoothpeano.verify import check_bipartition, check_jets, check_slicing

SEED = 20240601


@pytest.fixture
def report(capsys):
    def emit(n: int, title: str, ok: bool, detail: str, elapsed: float, limit: float | None = None):
        in_time = limit is None or elapsed < limit
        status = "PASS" if ok and in_time else "FAIL"
        budget = "" if limit is None else f" (limit {limit:.0f}s)"
        with capsys.disabled():
            print(f"\ncriterion {n:2d}: {status}  {title}: {detail}; {elapsed:.1f}s{budget}")
        assert ok, detail
        assert in_time, f"took {elapsed:.1f}s, limit {limit}s"
    return emit


def test_criterion_01_slicing_norm_identity(report):
    t0 = time.perf_counter()
    r = check_slicing(RunConfig(seed=SEED), lunes=20)
    report(1, "slicing norm identity", r["ok"],
           f"max relative error {r['max_relative_error']:.2e} (tol 1e-9)", time.perf_counter() - t0, 10)


def test_criterion_02_bipartition_bound(report):
    t0 = time.perf_counter()
    r = check_bipartition(RunConfig(seed=SEED), lunes=20)
    report(2, "bipartition norm bound", r["ok"],
           f"max lhs/rhs {r['max_ratio']:.3f} over k <= 3", time.perf_counter() - t0, 30)


def test_criterion_03_step5_and_lemma(report, fam):
    t0 = time.perf_counter()
    s5 = check_step5(fam, depths=[1, 2, 3])
    full = all(s5["covered"][k] == fam.count(k) for k in (1, 2, 3))
    lem = family_check_lemma29(fam)
    ok = s5["ok"] and full and lem["ok"]
    report(3, "step-5 invariant and parent/child bound", ok,
           f"nodes {sum(s5['covered'].values())} covered, max norm/eps {s5['max_ratio']:.3f}, "
           f"min lemma slack {lem['min_slack']:.3f}", time.perf_counter() - t0, 120)


def test_criterion_04_monotone_and_gap_flatness(report, fam, idx):
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED)
    pairs = [tuple(sorted(rng.random(2))) for _ in range(100)]
    mono = ceiling_monotone_check(fam, idx, pairs)
    flat = gap_flatness_check(fam, idx, seed=SEED)
    report(4, "ceiling monotonicity and gap flatness", mono["ok"] and flat["ok"],
           f"worst tail-adjusted margin {mono['worst_margin']:.3g}, {flat['checked']} gap ceilings identical",
           time.perf_counter() - t0, 60)


def test_criterion_05_tangency(report, fam, idx):
    t0 = time.perf_counter()
    ts = list(np.random.default_rng(SEED).random(20))
    r = tangency_check(fam, idx, ts, grid=512)
    tail = 2 * fam.eps.tail(idx.depth)
    ok = r["ok"] and r["max_discrepancy"] <= 4 * tail and r["max_discrepancy"] <= 2.0 ** (2 - idx.depth)
    report(5, "tangency F_t' = psi(x, F_t)", ok,
           f"max discrepancy {r['max_discrepancy']:.2e} <= 4*tail {4 * tail:.3g} and <= {2.0 ** (2 - idx.depth)}",
           time.perf_counter() - t0, 120)


def test_criterion_06_footprint_hausdorff(report, curve):
    t0 = time.perf_counter()
    ts = np.random.default_rng(SEED).uniform(0.0, 1.0, 10)
    rows = [peano.hausdorff_check(curve, float(t), raster=512, samples=200_000, seed=SEED) for t in ts]
    worst = max(rows, key=lambda r: r["hausdorff"] / r["bound"])
    report(6, "footprint identity (raster Hausdorff)", all(r["ok"] for r in rows),
           f"worst {worst['hausdorff']:.4f} vs bound {worst['bound']:.4f} over 10 t",
           time.perf_counter() - t0, 300)


def test_criterion_07_cauchy_and_diameters(report, fam, idx):
    t0 = time.perf_counter()
    c = peano.cauchy_check(fam, idx, 2, 4, samples=10_000, seed=SEED)
    d = peano.diameter_table(fam, fam.depth)
    worst = max(r["max_diameter_sq"] / r["D_n"] for r in d["rows"])
    report(7, "uniform Cauchy bound", c["ok"] and d["ok"],
           f"max |g4 - g2| {c['max_difference']:.4f} <= sqrt(D_2) {c['bound']:.4f}; "
           f"max diam^2 / D_n {worst:.3f}", time.perf_counter() - t0, 300)


def test_criterion_08_cylinder(report):
    t0 = time.perf_counter()
    cyl = assembly.build_cylinder((0.0, 1.0), (0.0, 1.0), 3)
    prop = assembly.cylinder_property_check(cyl)
    exact_ends = prop["start"] == (0.0, 0.0) and prop["end"] == (math.pi, 1.0)
    stacked = assembly.build_cylinder_with_norm((0.0, 1.0), (0.0, 1.0), k0=2, delta0=0.1, depth=3)
    st = assembly.stacked_bound_check(stacked, samples=100, seed=SEED)
    ok = prop["ok"] and exact_ends and st["ok"] and st["n_ok"] and st["odd"]
    report(8, "cylinder boundary ceilings and stacked C^2 bound", ok,
           f"F_t0/F_t1 errors {prop['F_t0_error']:.1e}/{prop['F_t1_error']:.1e}, ends {prop['start']}->{prop['end']}, "
           f"n={st['n']} (C={st['C']:.3f}), max ||F_t - c_t||_2 {st['max_deviation']:.4f} < 0.1",
           time.perf_counter() - t0, 600)


def _theorem(eps: float):
    sched = assembly.TheoremSchedule.uniform((0.5, 2.0), 3, 2, eps)
    return assembly.build_planar(sched, (0.5, 2.0), depth=3)


def test_criterion_09_proximity(report):
    t0 = time.perf_counter()
    r = assembly.proximity_check(_theorem(0.2), per_band=200, seed=SEED)
    margins = ", ".join(f"{row['margin']:.4f}" for row in r["rows"])
    report(9, "planar proximity ||beta_t - alpha_t||_2 < eps", r["ok"],
           f"margins per band {margins}; chain bound holds at every sample", time.perf_counter() - t0, 900)


def test_criterion_10_positive_curvature(report):
    t0 = time.perf_counter()
    eps = 0.2
    while True:
        th = _theorem(eps)
        ts = np.random.default_rng(SEED).uniform(0.5, 2.0, 20)
        rows = [assembly.curvature_check(th.embedding(float(t))) for t in ts]
        if all(r["small"] for r in rows) or eps < 1e-3:
            break
        eps /= 2
    ok = all(r["small"] and r["ok"] for r in rows)
    report(10, "positive curvature of beta_t", ok,
           f"eps tightened to {eps}, min kappa {min(r['min_curvature'] for r in rows):.4f}",
           time.perf_counter() - t0, 300)


def test_criterion_11_jets(report):
    t0 = time.perf_counter()
    r = check_jets(RunConfig(seed=SEED), points=100, order=4)
    name, worst = max(r["worst_ratio"].items(), key=lambda kv: kv[1])
    report(11, "jet derivatives vs central differences", r["ok"],
           f"worst error/tolerance {worst:.3f} ({name}) over {len(r['worst_ratio'])} primitives",
           time.perf_counter() - t0, 30)


def _tree(root: Path) -> dict:
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_criterion_12_determinism(report, tmp_path):
    t0 = time.perf_counter()
    codes = []
    for run in ("a", "b"):
        out = tmp_path / run
        codes.append(cli.main(["verify", "--out", str(out)]))
        codes.append(cli.main(["render", "--out", str(out)]))
    a, b = _tree(tmp_path / "a"), _tree(tmp_path / "b")
    ok = a == b and codes == [0, 0, 0, 0] and len(a) == 7
    report(12, "byte-identical verify and render outputs", ok,
           f"{len(a)} files compared, exit codes {codes}", time.perf_counter() - t0)
