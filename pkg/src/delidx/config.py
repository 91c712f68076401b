"""Numerical settings shared by the index and growth computations."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

from .profile import DEFAULT_SAMPLES, solve_profile
from .spectrum import MAX_REFINEMENTS, NODES_PER_PERIOD, ZERO_BAND_CONST


@dataclass(frozen=True)
class Settings:
    samples: int = DEFAULT_SAMPLES
    nodes_per_period: int = NODES_PER_PERIOD
    max_refinements: int = MAX_REFINEMENTS
    zero_band_const: float = ZERO_BAND_CONST

    def nodes_for(self, length, period):
        return max(64, int(math.ceil(self.nodes_per_period * length / period)) + 1)


DEFAULT = Settings()


@lru_cache(maxsize=128)
def delaunay_geometry(family, samples=DEFAULT_SAMPLES):
    """Cached :class:`~delidx.geometry.DelaunayGeometry` of a family."""
    from .geometry import DelaunayGeometry

    return DelaunayGeometry(solve_profile(family, samples))


@lru_cache(maxsize=128)
def cut_points(family, samples=DEFAULT_SAMPLES):
    from .profile import neumann_cut_points

    return neumann_cut_points(delaunay_geometry(family, samples).curve)
