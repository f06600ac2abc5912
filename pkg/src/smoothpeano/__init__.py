"""Smooth lune subdivision, Cantor-indexed ceilings and the Peano curve they define."""

from .cantor import CantorIndex
from .ceiling_field import ceiling, psi
from .errors import (
    BudgetError,
    ConfigError,
    DomainError,
    PeanoError,
)
from .lune import Lune, bipartition, default_lune, slice_lune
from .peano import build_curve, footprint
from .smoothfn import SmoothFn
from .subdivision import EpsilonSchedule, LuneFamily, build_family

__version__ = "0.1.0"

__all__ = [
    "BudgetError", "CantorIndex", "ConfigError", "DomainError", "EpsilonSchedule", "Lune",
    "LuneFamily", "PeanoError", "SmoothFn", "bipartition", "build_curve", "build_family",
    "ceiling", "default_lune", "footprint", "psi", "slice_lune",
]
