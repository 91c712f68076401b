"""Morse index of Delaunay unduloids in Euclidean and hyperbolic space."""

from .config import DEFAULT, Settings, delaunay_geometry
from .errors import ConsistencyError, DelidxError, DomainError, NumericError
from .growth import bracketing_check, multi_end_growth, perturbed_index_stability, run_growth, slab_index
from .index import BlockSpec, IndexReport, block_index, sphere_multiplicity
from .profile import DelaunayFamily, period, solve_profile, turning_radii
from .spectrum import ModeProblem, count_negative, inertia

__version__ = "0.1.0"

__all__ = [
    "DEFAULT",
    "BlockSpec",
    "ConsistencyError",
    "DelaunayFamily",
    "DelidxError",
    "DomainError",
    "IndexReport",
    "ModeProblem",
    "NumericError",
    "Settings",
    "block_index",
    "bracketing_check",
    "count_negative",
    "delaunay_geometry",
    "inertia",
    "multi_end_growth",
    "period",
    "perturbed_index_stability",
    "run_growth",
    "slab_index",
    "solve_profile",
    "sphere_multiplicity",
    "turning_radii",
]
