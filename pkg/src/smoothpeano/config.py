"""Run configuration: a JSON document validated against a shipped schema."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import smoothfn as sf
from .errors import ConfigError
from .lune import DEFAULT_AMPLITUDE, Lune, default_lune, hump
from .subdivision import DEFAULT_BUDGET, EpsilonSchedule

ALL_CHECKS = (
    "jets", "slicing", "bipartition", "step5", "lemma29", "monotone", "gap_flatness",
    "tangency", "continuity", "tiebreak", "cauchy", "diameter", "footprint",
    "containment", "surjectivity", "k_sufficiency", "cylinder", "stacked",
    "proximity", "curvature",
)


def load_schema() -> dict:
    text = resources.files("smoothpeano").joinpath("config.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


@dataclass
class TheoremConfig:
    breakpoints: list = field(default_factory=lambda: [0.5, 1.0, 1.5, 2.0])
    k: list = field(default_factory=lambda: [2, 2, 2])
    eps: list = field(default_factory=lambda: [0.2, 0.2, 0.2])
    window: list | None = None
    depth: int = 3


@dataclass
class RunConfig:
    lune: dict = field(default_factory=lambda: {"preset": "hump", "amplitude": DEFAULT_AMPLITUDE})
    eps: dict = field(default_factory=lambda: {"base": 0.5, "scale": 1.0})
    check_eps: dict | None = None
    depth: int = 4
    grid: int = sf.DEFAULT_GRID
    safety_factor: float = sf.SAFETY_FACTOR
    max_order: int = sf.MAX_ORDER
    budget: int = DEFAULT_BUDGET
    seed: int = 0
    samples: dict = field(default_factory=dict)
    checks: list = field(default_factory=lambda: list(ALL_CHECKS))
    theorem: TheoremConfig = field(default_factory=TheoremConfig)
    out: str = "out"

    # -- construction ---------------------------------------------------

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        try:
            jsonschema.validate(data, load_schema())
        except jsonschema.ValidationError as exc:
            raise ConfigError(f"invalid config: {exc.message}") from exc
        data = dict(data)
        theorem = TheoremConfig(**data.pop("theorem", {}))
        cfg = cls(**data, theorem=theorem)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return asdict(self)

    def validate(self) -> None:
        if self.max_order > sf.MAX_ORDER:
            raise ConfigError(f"max_order is capped at {sf.MAX_ORDER}")
        if self.depth > self.max_order:
            raise ConfigError("depth needs jets of order depth <= max_order")
        th = self.theorem
        if not (len(th.k) == len(th.eps) == len(th.breakpoints) - 1):
            raise ConfigError("theorem: need len(k) == len(eps) == len(breakpoints) - 1")
        unknown = set(self.checks) - set(ALL_CHECKS)
        if unknown:
            raise ConfigError(f"unknown checks {sorted(unknown)}")

    # -- derived objects --------------------------------------------------

    def schedule(self) -> EpsilonSchedule:
        return EpsilonSchedule(self.eps["base"], self.eps["scale"])

    def verification_schedule(self) -> EpsilonSchedule:
        e = self.check_eps or self.eps
        return EpsilonSchedule(e["base"], e["scale"])

    def sample(self, name: str, default: int) -> int:
        return int(self.samples.get(name, default))

    def build_lune(self) -> Lune:
        spec = self.lune
        preset = spec.get("preset", "hump")
        if preset == "hump":
            return default_lune(spec.get("amplitude", DEFAULT_AMPLITUDE))
        if preset == "weighted-hump":
            coeffs = spec["coefficients"]
            x = sf.identity((0.0, 1.0))
            weight = sf.constant(0.0, (0.0, 1.0))
            for i, c in enumerate(coeffs):
                term = sf.constant(1.0, (0.0, 1.0))
                for _ in range(i):
                    term = term * x
                weight = weight + c * term
            probe = weight(np.linspace(0.0, 1.0, 1025))
            if probe.min() <= 0:
                raise ConfigError("weighted-hump weight must be positive on [0, 1]")
            g = hump(spec.get("amplitude", DEFAULT_AMPLITUDE)) * weight
            return Lune(sf.constant(0.0, (0.0, 1.0)), g, (0.0, 1.0), (0.0, 1.0), g)
        raise ConfigError(f"unknown lune preset {preset!r}")
