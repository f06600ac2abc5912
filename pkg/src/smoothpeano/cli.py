"""Command line front end.

Every subcommand reads an optional JSON config, writes one artifact
``<out>/<command>.<format>`` and prints a one-line summary.  Exit codes:
0 success, 2 bad config or arguments, 3 a verification failed, 4 the node
budget was exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import assembly, peano, svg, verify
from .cantor import CantorIndex
from .ceiling_field import ceiling, field_samples
from .config import ALL_CHECKS, RunConfig
from .errors import BudgetError, ConfigError, PeanoError
from .subdivision import build_family, family_export

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_VERIFY = 3
EXIT_BUDGET = 4

COMMANDS = ("subdivide", "cantor", "ceiling", "curve", "footprint", "field",
            "cylinder", "theorem", "verify", "render")


class VerificationFailed(Exception):
    pass


# --------------------------------------------------------------------------
# output helpers


def dumps_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"


def dumps_csv(header: list, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def write(out: Path, name: str, fmt: str, text: str) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{name}.{fmt}"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path


def parse_t(text: str) -> Fraction:
    """Parameters are exact: ``0.37`` and ``37/100`` both mean 37/100."""
    try:
        t = Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"bad parameter {text!r}") from exc
    if not 0 <= t <= 1:
        raise ConfigError(f"parameter {text} outside [0, 1]")
    return t


# --------------------------------------------------------------------------
# context


class Session:
    def __init__(self, args):
        self.args = args
        cfg = RunConfig.load(args.config) if args.config else RunConfig()
        if args.depth is not None:
            cfg.depth = args.depth
        if args.grid is not None:
            cfg.grid = args.grid
        cfg.validate()
        self.cfg = cfg
        self.out = Path(args.out if args.out is not None else cfg.out)
        self._fam = None

    @property
    def fam(self):
        if self._fam is None:
            c = self.cfg
            self._fam = build_family(c.build_lune(), c.schedule(), c.depth, grid=c.grid,
                                     safety_factor=c.safety_factor, budget=c.budget)
        return self._fam

    @property
    def idx(self) -> CantorIndex:
        return CantorIndex.from_family(self.fam)

    def curve(self) -> peano.CurveApprox:
        return peano.build_curve(self.fam, self.idx, seed=self.cfg.seed)

    def theorem(self) -> assembly.PlanarTheorem:
        th = self.cfg.theorem
        sched = assembly.TheoremSchedule(tuple(th.breakpoints), tuple(th.k), tuple(th.eps))
        return assembly.build_planar(sched, th.window, th.depth)

    def ts(self, default: list) -> list:
        return [parse_t(s) for s in self.args.t] if self.args.t else default


# --------------------------------------------------------------------------
# subcommands; each returns (text, summary line)


def cmd_subdivide(s: Session, fmt: str):
    fam = s.fam
    if fmt == "svg":
        return svg.render_subdivision(fam).to_string(), f"m = {list(fam.m)}"
    data = family_export(fam)
    if fmt == "json":
        return dumps_json(data), f"m = {list(fam.m)}"
    rows = [(c["depth"], "".join(map(str, c["parity"])), c["support"][0], c["support"][1],
             c["nodes"], c["norm"], c["n_next"]) for c in data["classes"]]
    return dumps_csv(["depth", "parity", "support_lo", "support_hi", "nodes", "norm", "n_next"], rows), \
        f"{len(rows)} parity classes"


def cmd_cantor(s: Session, fmt: str):
    idx = s.idx
    depth = min(3, idx.depth)
    if fmt == "svg":
        return svg.render_cantor(idx, depth).to_string(), f"radices {list(idx.m[:depth])}"
    data = idx.export(depth)
    if fmt == "json":
        return dumps_json(data), f"{sum(len(r) for r in data['levels'])} intervals"
    rows = [(k + 1, r["kind"], ".".join(map(str, r["word"])), r["lo"], r["hi"], r["exact"][0], r["exact"][1])
            for k, level in enumerate(data["levels"]) for r in level]
    return dumps_csv(["depth", "kind", "word", "lo", "hi", "lo_exact", "hi_exact"], rows), \
        f"{len(rows)} intervals"


def cmd_ceiling(s: Session, fmt: str):
    fam, idx = s.fam, s.idx
    ts = s.ts([Fraction(1, 4), Fraction(1, 2), Fraction(3, 4)])
    xs = np.linspace(*fam.root.domain, s.cfg.sample("ceiling_x", 257))
    caps = {str(t): ceiling(t, fam, idx) for t in ts}
    vals = {k: c.derivatives(xs, 1) for k, c in caps.items()}
    if fmt == "svg":
        return svg.render_ceiling(fam, xs, {k: v[0] for k, v in vals.items()}).to_string(), f"{len(ts)} ceilings"
    if fmt == "json":
        data = {k: {"word": list(caps[k].word), "kind": caps[k].kind, "tail_bound": caps[k].tail_bound,
                    "x": xs.tolist(), "F": v[0].tolist(), "dF": v[1].tolist()} for k, v in vals.items()}
        return dumps_json(data), f"{len(ts)} ceilings"
    rows = [(k, x, v[0][i], v[1][i]) for k, v in vals.items() for i, x in enumerate(xs)]
    return dumps_csv(["t", "x", "F", "dF"], rows), f"{len(ts)} ceilings"


def cmd_curve(s: Session, fmt: str):
    c = s.curve()
    n = s.args.samples or s.cfg.sample("curve_points", 2001)
    if fmt == "svg":
        return svg.render_curve(c, n).to_string(), f"{c.piece_count} pieces"
    ts = [Fraction(i, n - 1) for i in range(n)]
    x, y = c.eval(ts)
    if fmt == "json":
        return dumps_json({"depth": c.depth, "pieces": c.piece_count, "t": [float(t) for t in ts],
                           "x": x.tolist(), "y": y.tolist()}), f"{n} points"
    return dumps_csv(["t", "x", "y"], zip([float(t) for t in ts], x, y)), f"{n} points"


def cmd_footprint(s: Session, fmt: str):
    c = s.curve()
    t = s.ts([Fraction(37, 100)])[0]
    region = peano.footprint(c, t)
    if fmt == "svg":
        return svg.render_footprint(c, region).to_string(), f"t = {t}"
    if fmt == "json":
        r = peano.hausdorff_check(c, float(t), 512, s.args.samples or 100_000, s.cfg.seed)
        r["clipped_domain"] = list(region.clipped_domain)
        return dumps_json(verify._plain(r)), f"hausdorff {r['hausdorff']:.3g} <= {r['bound']:.3g}"
    lo, hi = region.clipped_domain
    xs = np.linspace(lo, hi, 257)
    return dumps_csv(["x", "floor", "ceiling"], zip(xs, region.floor(xs), region.ceiling(xs))), f"t = {t}"


def cmd_field(s: Session, fmt: str):
    samples = field_samples(s.fam)
    if fmt == "svg":
        return svg.render_field(s.fam, samples).to_string(), f"{len(samples)} samples"
    if fmt == "json":
        return dumps_json([vars(p) for p in samples]), f"{len(samples)} samples"
    return dumps_csv(["x", "y", "slope"], [(p.x, p.y, p.slope) for p in samples]), f"{len(samples)} samples"


def cmd_cylinder(s: Session, fmt: str):
    cyl = assembly.build_cylinder_with_norm((0.0, 1.0), (0.0, 1.0), 2, 0.1, s.cfg.theorem.depth)
    n = s.args.samples or s.cfg.sample("cylinder_curve", 4001)
    ts = [Fraction(i, n - 1) for i in range(n)]
    th, y = cyl.curve(ts)
    line = f"n = {cyl.n}"
    if fmt == "svg":
        return svg.render_cylinder(th, y, cyl.y_range).to_string(), line
    if fmt == "json":
        start, end = cyl.endpoints()
        return dumps_json({"n": cyl.n, "C": cyl.C, "k0": cyl.k0, "delta0": cyl.delta0,
                           "start": list(start), "end": list(end),
                           "t": [float(t) for t in ts], "theta": th.tolist(), "y": y.tolist()}), line
    return dumps_csv(["t", "theta", "y"], zip([float(t) for t in ts], th, y)), line


def cmd_theorem(s: Session, fmt: str):
    th = s.theorem()
    lo, hi = th.window
    line = f"{len(th.bands)} bands, n = {[b.n for b in th.bands]}"
    if fmt == "svg":
        return svg.render_theorem(th, list(np.linspace(lo, hi, 5))).to_string(), line
    n = s.args.samples or s.cfg.sample("theorem_curve", 2001)
    ts = np.linspace(lo, hi, n)
    x, y = th.curve(ts.tolist())
    if fmt == "json":
        bands = [{"t_range": list(b.t_range), "n": b.n, "C": b.C, "k": k, "eps": e, "rotation": b.rotation}
                 for b, k, e in zip(th.bands, th.schedule.k, th.schedule.eps)]
        return dumps_json({"window": list(th.window), "bands": bands, "band_continuity": th.band_continuity(),
                           "t": ts.tolist(), "x": x.tolist(), "y": y.tolist()}), line
    return dumps_csv(["t", "x", "y"], zip(ts, x, y)), line


def cmd_verify(s: Session, fmt: str):
    names = s.args.checks.split(",") if s.args.checks else s.cfg.checks
    unknown = set(names) - set(ALL_CHECKS)
    if unknown:
        raise ConfigError(f"unknown checks {sorted(unknown)}")
    report = verify.run_checks(s.cfg, names)
    for name, r in report["checks"].items():
        print(f"{'PASS' if r['ok'] else 'FAIL'} {name}")
    if fmt == "csv":
        text = dumps_csv(["check", "ok"], [(k, int(r["ok"])) for k, r in report["checks"].items()])
    elif fmt == "json":
        text = dumps_json(report)
    else:
        raise ConfigError("verify writes csv or json")
    failed = [k for k, r in report["checks"].items() if not r["ok"]]
    if failed:
        s.pending_failure = failed
    return text, f"{len(report['checks']) - len(failed)}/{len(report['checks'])} checks passed"


FIGURES = {
    "subdivision": lambda s: svg.render_subdivision(s.fam),
    "cantor": lambda s: svg.render_cantor(s.idx, min(3, s.idx.depth)),
    "curve": lambda s: svg.render_curve(s.curve(), s.args.samples or 20000),
    "footprint": lambda s: (lambda c: svg.render_footprint(c, peano.footprint(c, s.ts([Fraction(37, 100)])[0])))(s.curve()),
    "field": lambda s: svg.render_field(s.fam, field_samples(s.fam)),
    "theorem": lambda s: (lambda th: svg.render_theorem(th, list(np.linspace(*th.window, 5))))(s.theorem()),
}


def cmd_render(s: Session, fmt: str):
    if fmt != "svg":
        raise ConfigError("render only writes svg")
    what = s.args.what.split(",") if s.args.what else list(FIGURES)
    unknown = set(what) - set(FIGURES)
    if unknown:
        raise ConfigError(f"unknown figures {sorted(unknown)}")
    for name in what:
        write(s.out, name, "svg", FIGURES[name](s).to_string())
    return None, f"{len(what)} figures in {s.out}"


HANDLERS = {name: globals()[f"cmd_{name}"] for name in COMMANDS}
DEFAULT_FORMAT = {"verify": "json", "render": "svg"}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="smoothpeano", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON run configuration")
        sp.add_argument("--depth", type=int, help="subdivision depth N")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--grid", type=int, help="sampling grid for norm estimates")
        sp.add_argument("--format", choices=("csv", "json", "svg"), default=DEFAULT_FORMAT.get(name, "json"))
        sp.add_argument("--samples", type=int, help="number of curve or raster samples")
        if name in ("ceiling", "footprint", "render"):
            sp.add_argument("--t", action="append", help="curve parameter in [0, 1] (repeatable)")
        if name == "verify":
            sp.add_argument("--checks", help="comma separated subset of checks")
        if name == "render":
            sp.add_argument("--what", help=f"comma separated subset of {','.join(FIGURES)}")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    for attr in ("t", "checks", "what"):
        if not hasattr(args, attr):
            setattr(args, attr, None)
    try:
        s = Session(args)
        s.pending_failure = None
        text, line = HANDLERS[args.command](s, args.format)
        if text is not None:
            path = write(s.out, args.command, args.format, text)
            line = f"{line}; wrote {path}"
        print(line)
        if s.pending_failure:
            raise VerificationFailed(", ".join(s.pending_failure))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BudgetError as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except VerificationFailed as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except PeanoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
