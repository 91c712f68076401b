"""Morse index of Dirichlet blocks, Neumann blocks and slabs of unduloids.

The total index of a piece is assembled from the one-dimensional mode
problems, each negative eigenvalue of mode ``k`` counting with the
multiplicity of the ``k``-th eigenvalue of the round ``(n-1)``-sphere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import DEFAULT, cut_points, delaunay_geometry
from .errors import DomainError
from .geometry import JacobiField, _grid_zeros
from .spectrum import (
    DIRICHLET,
    NEUMANN,
    ModeProblem,
    bc_code,
    count_negative,
    parse_bc,
    smallest_eigenvalues,
)

DIRICHLET_BLOCK = "B"
NEUMANN_BLOCK = "C"
SLAB = "slab"
KINDS = (DIRICHLET_BLOCK, NEUMANN_BLOCK, SLAB)

PASS, FAIL, SKIP = "pass", "fail", "skip"


def sphere_multiplicity(n, k):
    """Multiplicity of the eigenvalue ``k(k+n-2)`` of the Laplacian on ``S^(n-1)``."""
    if n < 2 or k < 0:
        raise DomainError("need n >= 2 and k >= 0")
    if k == 0:
        return 1
    return (2 * k + n - 2) * math.factorial(k + n - 3) // (math.factorial(k) * math.factorial(n - 2))


def mode_cutoff(geom):
    """Smallest ``k`` with ``k(k+n-2) >= sup B**2 V``; higher modes are positive."""
    sup = float(np.max(geom.B2V))
    k = 0
    while k * (k + geom.n - 2) < sup * (1.0 - 1e-12):
        k += 1
    return k


@dataclass(frozen=True)
class BlockSpec:
    """A piece of an unduloid: ``B_l``, ``C_l`` or a slab ``[0, X]``.

    ``shifted`` moves a Dirichlet block by half a period so that it starts at
    a bulge instead of a neck.
    """

    family: object
    kind: str
    ell: int = 1
    length: float | None = None
    bc: tuple | None = None
    shifted: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"block kind must be one of {KINDS}, got {self.kind!r}")
        if self.kind == SLAB:
            if self.length is None or not self.length > 0:
                raise DomainError("a slab needs a positive length")
        elif int(self.ell) != self.ell or self.ell < 1:
            raise DomainError(f"block length ell must be an integer >= 1, got {self.ell}")
        default = (NEUMANN, NEUMANN) if self.kind == NEUMANN_BLOCK else (DIRICHLET, DIRICHLET)
        object.__setattr__(self, "bc", default if self.bc is None else parse_bc(self.bc))

    @classmethod
    def dirichlet(cls, family, ell, **kw):
        return cls(family, DIRICHLET_BLOCK, ell, **kw)

    @classmethod
    def neumann(cls, family, ell, **kw):
        return cls(family, NEUMANN_BLOCK, ell, **kw)

    @classmethod
    def slab(cls, family, length, bc="dd"):
        return cls(family, SLAB, 1, float(length), bc)

    def interval(self, settings=DEFAULT):
        geom = delaunay_geometry(self.family, settings.samples)
        P = geom.period
        if self.kind == DIRICHLET_BLOCK:
            lo = 0.5 * P if self.shifted else 0.0
            return lo, lo + 0.5 * self.ell * P
        if self.kind == NEUMANN_BLOCK:
            z1, _ = cut_points(self.family, settings.samples)
            return z1, z1 + self.ell * P
        return 0.0, self.length


@dataclass(frozen=True)
class ModeResult:
    k: int
    mult: int
    neg: int
    zeros: int
    lambda_min: float | None
    nodes: int
    refinements: int
    zero_band: float


@dataclass
class IndexReport:
    block: BlockSpec
    interval: tuple
    k_max: int
    per_mode: list
    total_index: int
    checks: dict = field(default_factory=dict)
    excess: int | None = None
    upper_bound: int | None = None

    @property
    def passed(self):
        return all(v != FAIL for v in self.checks.values())

    def mode(self, k):
        return next(m for m in self.per_mode if m.k == k)

    def to_dict(self):
        fam = self.block.family
        return {
            "space": fam.space,
            "n": fam.n,
            "H": fam.H,
            "mu": fam.mu,
            "block": {
                "kind": self.block.kind,
                "ell": self.block.ell,
                "interval": [float(self.interval[0]), float(self.interval[1])],
                "bc": bc_code(self.block.bc),
            },
            "k_max": self.k_max,
            "per_mode": [
                {
                    "k": m.k,
                    "mult": m.mult,
                    "neg": m.neg,
                    "lambda_min": m.lambda_min,
                    "zeros": m.zeros,
                }
                for m in self.per_mode
            ],
            "total_index": self.total_index,
            "bounds": {"upper": self.upper_bound, "excess_over_2l": self.excess},
            "checks": dict(self.checks),
            "grid": {
                "nodes": [m.nodes for m in self.per_mode],
                "refinements": [m.refinements for m in self.per_mode],
                "zero_band": [m.zero_band for m in self.per_mode],
            },
        }


def mode_problem(block, k, settings=DEFAULT):
    geom = delaunay_geometry(block.family, settings.samples)
    return ModeProblem(geom, k, block.interval(settings), block.bc)


def solve_mode(problem, settings=DEFAULT, eigenvalue=True):
    geom = problem.geometry
    nodes = settings.nodes_for(problem.length, geom.period)
    spec = count_negative(
        problem,
        nodes=nodes,
        max_refinements=settings.max_refinements,
        zero_band_const=settings.zero_band_const,
    )
    lam = None
    if eigenvalue:
        lam = smallest_eigenvalues(problem, 1, nodes=spec.grid_nodes)[0]
    return spec, lam


def block_cutoff(block, settings=DEFAULT):
    geom = delaunay_geometry(block.family, settings.samples)
    lo, hi = block.interval(settings)
    x = np.linspace(lo, hi, settings.nodes_for(hi - lo, geom.period))
    return mode_cutoff(geom(x))


def mode_sum(geometry, interval, bc, settings=DEFAULT, eigenvalues=True, k_max=None):
    """Solve modes ``k = 0 .. k_max`` of ``geometry`` on ``interval``.

    ``k_max`` defaults to the cutoff of the sampled geometry; the cutoff mode
    itself is always solved so its (zero) count is on record.
    """
    lo, hi = interval
    if k_max is None:
        x = np.linspace(lo, hi, settings.nodes_for(hi - lo, geometry.period))
        k_max = mode_cutoff(geometry(x))
    per_mode = []
    for k in range(k_max + 1):
        spec, lam = solve_mode(ModeProblem(geometry, k, interval, bc), settings, eigenvalues)
        per_mode.append(
            ModeResult(
                k,
                sphere_multiplicity(geometry.n, k),
                spec.neg_count,
                spec.zero_modes,
                lam,
                spec.grid_nodes,
                spec.refinements,
                spec.zero_band,
            )
        )
    return k_max, per_mode


def block_index(block, settings=DEFAULT, eigenvalues=True):
    """Index report of a block, with the expected index statements recorded as checks.

    Check failures are recorded in ``report.checks``; they never raise.
    """
    fam = block.family
    interval = block.interval(settings)
    geom = delaunay_geometry(fam, settings.samples)
    k_max, per_mode = mode_sum(geom, interval, block.bc, settings, eigenvalues)
    total = sum(m.mult * m.neg for m in per_mode)
    report = IndexReport(block, interval, k_max, per_mode, total)

    checks = {"prop42": SKIP, "prop43": SKIP, "cap": SKIP, "nodal": SKIP}
    checks["cutoff"] = PASS if per_mode[-1].neg == 0 else FAIL
    ell = block.ell
    if block.kind == DIRICHLET_BLOCK and block.bc == (DIRICHLET, DIRICHLET):
        checks["prop42"] = PASS if total == ell - 1 else FAIL
    if block.kind == NEUMANN_BLOCK and block.bc == (NEUMANN, NEUMANN):
        upper = 2 * ell + 2 * sum(m.mult for m in per_mode[1:k_max])
        report.upper_bound = upper
        report.excess = total - 2 * ell
        ok = 2 * ell <= total <= upper and per_mode[0].neg == 2 * ell
        checks["prop43"] = PASS if ok else FAIL
        checks["cap"] = PASS if all(m.neg <= 2 for m in per_mode[1:]) else FAIL
    if block.kind in (DIRICHLET_BLOCK, NEUMANN_BLOCK) and not fam.is_cylinder:
        expected = ell if block.kind == DIRICHLET_BLOCK else 2 * ell + 1
        checks["nodal"] = PASS if nodal_count(axis_field_on(block, settings=settings)) == expected else FAIL
    report.checks = checks
    return report


def mode_neumann_cap_check(family, ell, settings=DEFAULT):
    """True iff every mode ``1 <= k < k_max`` has at most 2 negative Neumann eigenvalues."""
    block = BlockSpec.neumann(family, ell)
    k_max = block_cutoff(block, settings)
    for k in range(1, k_max):
        spec, _ = solve_mode(mode_problem(block, k, settings), settings, eigenvalue=False)
        if spec.neg_count > 2:
            return False
    return True


def axis_field_on(block, samples_per_period=400, settings=DEFAULT):
    """The axis Jacobi field sampled on the block's interval."""
    geom = delaunay_geometry(block.family, settings.samples)
    lo, hi = block.interval(settings)
    m = max(64, int(math.ceil(samples_per_period * (hi - lo) / geom.period)))
    x = np.linspace(lo, hi, m + 1)
    vals = geom.axis_field(x)
    scale = float(np.max(np.abs(vals))) if len(vals) else 0.0
    zeros = _grid_zeros(x, vals, scale) if scale > 0 else []
    return JacobiField(x, vals, 0, zeros)


def nodal_count(field, block=None, rel_tol=1e-9):
    """Number of nodal domains of a sampled field.

    Samples with ``|value| <= rel_tol * max|value|`` are treated as zeros;
    a field that is zero everywhere cannot be resolved.
    """
    vals = np.asarray(field.values, dtype=float)
    scale = float(np.max(np.abs(vals))) if vals.size else 0.0
    if scale == 0.0:
        raise DomainError("field vanishes on the whole grid; nodal domains are not resolved")
    signs = np.sign(vals[np.abs(vals) > rel_tol * scale])
    if signs.size == 0:
        raise DomainError("field vanishes on the whole grid; nodal domains are not resolved")
    return int(1 + np.count_nonzero(signs[1:] != signs[:-1]))
