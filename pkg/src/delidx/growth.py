"""Linear index growth along unduloid ends.

Each end is modelled by a coordinate slab ``[0, X]`` along its axis.  The
radius of an unduloid is bounded, so a slab and the intersection with a
ball of radius ``X`` differ by a bounded region, which shifts the index by a
bounded amount and leaves the growth rate unchanged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import DEFAULT, delaunay_geometry
from .errors import DomainError
from .geometry import PerturbedRotationGeometry
from .index import BlockSpec, block_index, mode_cutoff, mode_sum, sphere_multiplicity
from .profile import EUCLIDEAN
from .spectrum import DIRICHLET, ModeProblem, discretize, inertia, parse_bc

FIT_FRACTION = 0.6


def slab_index(family, X, bc="dd", settings=DEFAULT):
    """Multiplicity-weighted index of the piece over ``[0, X]``."""
    if not X > 0:
        raise DomainError(f"slab length must be positive, got {X}")
    return block_index(BlockSpec.slab(family, X, bc), settings, eigenvalues=False).total_index


@dataclass
class GrowthExperiment:
    family: object
    lengths: list
    bc: tuple = (DIRICHLET, DIRICHLET)
    results: list = field(default_factory=list)
    fitted_slope: float | None = None
    num_ends: int = 1
    ends: tuple = ()

    @property
    def period(self):
        return delaunay_geometry(self.family).period

    @property
    def target_slope(self):
        if self.ends:
            return sum(2.0 / delaunay_geometry(f).period for f in self.ends)
        return self.num_ends * 2.0 / self.period

    @property
    def rel_err(self):
        if self.fitted_slope is None:
            return None
        return abs(self.fitted_slope - self.target_slope) / self.target_slope

    def summary(self):
        return {
            "target_slope": self.target_slope,
            "fitted_slope": self.fitted_slope,
            "rel_err": self.rel_err,
            "lengths": [float(x) for x in self.lengths],
            "num_ends": self.num_ends,
        }


def run_growth(family, lengths, bc="dd", settings=DEFAULT, min_periods=20.0):
    """Slab indexes for increasing lengths, followed by a slope fit."""
    exp = GrowthExperiment(family, sorted(float(x) for x in lengths), parse_bc(bc))
    exp.results = [(X, slab_index(family, X, exp.bc, settings)) for X in exp.lengths]
    slope_fit(exp, min_periods=min_periods)
    return exp


def growth_lengths(family, periods, per_period=3):
    """Slab lengths ``j P / per_period`` up to ``periods`` periods.

    With an odd ``per_period`` the samples meet the index staircase (one
    step per half period) at evenly spread phases, and the fitted slope
    error falls off like ``periods**-2``.
    """
    P = delaunay_geometry(family).period
    count = int(round(periods * per_period))
    return list(P * np.arange(1, count + 1) / per_period)


def slope_fit(exp, min_periods=20.0, up_to=None):
    """Least-squares slope of index against length over the longest 60% of slabs.

    ``up_to`` restricts the fit to slabs no longer than that many periods,
    which monitors convergence on a single sweep.
    """
    rows = exp.results
    if up_to is not None:
        rows = [r for r in rows if r[0] <= up_to * exp.period * (1 + 1e-9)]
    if len(rows) < 5:
        raise DomainError("slope fit needs at least 5 slab lengths")
    X = np.array([r[0] for r in rows])
    idx = np.array([r[1] for r in rows], dtype=float)
    if X.max() < min_periods * exp.period * (1 - 1e-9):
        raise DomainError(f"slab lengths must span at least {min_periods} periods")
    start = int(math.floor((1.0 - FIT_FRACTION) * len(X)))
    X, idx = X[start:], idx[start:]
    slope = float(np.polyfit(X, idx, 1)[0])
    exp.fitted_slope = slope
    return slope


def monitor_slopes(exp, checkpoints=(10, 20, 30)):
    """Relative slope errors of fits truncated at each checkpoint (in periods)."""
    out = []
    for c in checkpoints:
        slope = slope_fit(exp, min_periods=c, up_to=c)
        out.append(abs(slope - exp.target_slope) / exp.target_slope)
    slope_fit(exp, min_periods=max(checkpoints), up_to=max(checkpoints))
    return out


# -- Dirichlet-Neumann bracketing -----------------------------------------


@dataclass
class BracketingResult:
    X: float
    split: float
    dirichlet: tuple  # (whole, left, right)
    neumann: tuple
    zero_band: float

    @property
    def dirichlet_superadditive(self):
        return self.dirichlet[0] >= self.dirichlet[1] + self.dirichlet[2]

    @property
    def neumann_subadditive(self):
        return self.neumann[0] <= self.neumann[1] + self.neumann[2]

    @property
    def ordered(self):
        return self.dirichlet[0] <= self.neumann[0]

    @property
    def ok(self):
        return self.dirichlet_superadditive and self.neumann_subadditive and self.ordered


def bracketing_counts(family, X, split, settings=DEFAULT):
    """Indexes of ``[0, X]``, ``[0, split]`` and ``[split, X]`` on one grid.

    The grid has a node at ``split`` and the same shift (zero band of the
    whole interval) is used for every count, so the discrete spaces nest
    exactly as the continuous form domains do.
    """
    if not 0 < split < X:
        raise DomainError(f"need 0 < split < X, got split={split}, X={X}")
    geom = delaunay_geometry(family, settings.samples)
    P = geom.period
    n_left = max(33, int(math.ceil(settings.nodes_per_period * split / P)) + 1)
    n_right = max(33, int(math.ceil(settings.nodes_per_period * (X - split) / P)) + 1)
    left = np.linspace(0.0, split, n_left)
    right = np.linspace(split, X, n_right)
    whole = np.concatenate([left, right[1:]])
    k_max = mode_cutoff(geom(whole))
    band = discretize(ModeProblem(geom, 0, (0.0, X), "nn"), whole).zero_band(settings.zero_band_const)

    def count(k, interval, grid, bc):
        disc = discretize(ModeProblem(geom, k, interval, bc), grid)
        return inertia(disc.stiffness, disc.mass, -band)

    D = [0, 0, 0]
    N = [0, 0, 0]
    pieces = [((0.0, X), whole), ((0.0, split), left), ((split, X), right)]
    for k in range(k_max + 1):
        m = sphere_multiplicity(family.n, k)
        for i, (interval, grid) in enumerate(pieces):
            D[i] += m * count(k, interval, grid, "dd")
            N[i] += m * count(k, interval, grid, "nn")
    return BracketingResult(X, split, tuple(D), tuple(N), band)


def bracketing_check(family, X, split, settings=DEFAULT):
    return bracketing_counts(family, X, split, settings).ok


# -- perturbed ends -------------------------------------------------------


def exponential_perturbation(eps, rate):
    def w(x):
        e = eps * np.exp(-rate * x)
        return e, -rate * e, rate * rate * e

    return w


def bump_perturbation(eps, support):
    """Smooth compactly supported bump ``eps * exp(1 - 1/(1 - s**2))``."""
    a, b = support
    c, r = 0.5 * (a + b), 0.5 * (b - a)

    def w(x):
        s = (np.asarray(x, dtype=float) - c) / r
        inside = np.abs(s) < 1
        out = [np.zeros_like(s) for _ in range(3)]
        si = s[inside]
        g = 1.0 / (1.0 - si * si)
        e = eps * np.exp(1.0 - g)
        dg = 2 * si * g * g
        ddg = 2 * g * g + 8 * si * si * g**3
        out[0][inside] = e
        out[1][inside] = -e * dg / r
        out[2][inside] = e * (dg * dg - ddg) / r**2
        return tuple(out)

    return w


@dataclass
class PerturbedEnd:
    """Radial graph ``f + w`` over ``[S, R]`` of a Euclidean unduloid."""

    base: object
    epsilon: float
    interval: tuple
    decay: str = "exponential"
    rate: float = 0.5
    support: tuple | None = None

    def __post_init__(self):
        if self.base.space != EUCLIDEAN:
            raise DomainError("perturbed ends are built for Euclidean unduloids")
        lo = delaunay_geometry(self.base).curve.turning_lo
        if not abs(self.epsilon) < lo / 10:
            raise DomainError(f"perturbation amplitude must be below a_-/10 = {lo / 10:.6g}")
        if self.decay not in ("exponential", "bump"):
            raise DomainError(f"unknown decay model {self.decay!r}")

    def perturbation(self):
        if self.decay == "exponential":
            return exponential_perturbation(self.epsilon, self.rate)
        return bump_perturbation(self.epsilon, self.support or self.interval)

    def geometry(self, settings=DEFAULT):
        curve = delaunay_geometry(self.base, settings.samples).curve
        return PerturbedRotationGeometry(curve, self.perturbation())

    def c2_distance(self, samples=4001):
        x = np.linspace(*self.interval, samples)
        return float(np.max(sum(np.abs(a) for a in self.perturbation()(x))))


@dataclass
class StabilityResult:
    index_base: int
    index_perturbed: int
    zero_modes_cap: int
    c2_distance: float

    @property
    def difference(self):
        return self.index_perturbed - self.index_base

    @property
    def ok(self):
        return 0 <= self.difference <= self.zero_modes_cap


def perturbed_index_stability(end, bc="dd", settings=DEFAULT):
    """Indexes of the unperturbed and perturbed pieces on the same interval."""
    bc = parse_bc(bc)
    curve = delaunay_geometry(end.base, settings.samples).curve
    base = PerturbedRotationGeometry(curve, exponential_perturbation(0.0, 0.0))
    pert = end.geometry(settings)
    lo, hi = end.interval
    x = np.linspace(lo, hi, settings.nodes_for(hi - lo, base.period))
    k_max = max(mode_cutoff(base(x)), mode_cutoff(pert(x)))
    _, modes_base = mode_sum(base, end.interval, bc, settings, False, k_max)
    _, modes_pert = mode_sum(pert, end.interval, bc, settings, False, k_max)
    ind_base = sum(m.mult * m.neg for m in modes_base)
    ind_pert = sum(m.mult * m.neg for m in modes_pert)
    cap = sum(m.mult * m.zeros for m in modes_base)
    return StabilityResult(ind_base, ind_pert, cap, end.c2_distance())


# -- several ends ---------------------------------------------------------


@dataclass
class MultiEndResult:
    X: float
    indexes: list
    slope: float
    target: float
    core_offset: int = 0

    @property
    def rel_err(self):
        return abs(self.slope - self.target) / self.target


def multi_end_growth(families, X, bc="dd", core_offset=0, settings=DEFAULT):
    """Index per unit length of ``N`` ends truncated at a common length ``X``.

    The compact core is an additive constant ``core_offset``.
    """
    if not families:
        raise DomainError("at least one end is required")
    idx = [slab_index(f, X, bc, settings) for f in families]
    target = sum(2.0 / delaunay_geometry(f, settings.samples).period for f in families)
    return MultiEndResult(X, idx, (core_offset + sum(idx)) / X, target, core_offset)


def write_growth_csv(rows, fh):
    """Rows of ``(X, index_dirichlet, index_neumann)``."""
    import csv

    w = csv.writer(fh, lineterminator="\n")
    w.writerow(("X", "index_dirichlet", "index_neumann"))
    for X, d, n in rows:
        w.writerow([f"{float(X):.17g}", int(d), int(n)])
