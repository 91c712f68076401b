"""Mode-by-mode Sturm-Liouville pencils and exact negative-eigenvalue counts.

Each spherical-harmonic sector ``k`` of the stability operator reduces to

    -(p u')' + q u = lam w u,   p = B**(n-1)/A,
                                q = A B**(n-3) (k(k+n-2) - B**2 V),
                                w = A B**(n-1),

on an interval, with a Dirichlet or Neumann condition at each end.  The
pencil is discretised with piecewise-linear elements; the number of negative
eigenvalues equals the number of negative pivots in an LDL^T factorisation
of ``K - s M`` for the shift ``s`` (Sylvester's law of inertia, ``M`` being
positive definite).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import DomainError, NumericError

DIRICHLET = "dirichlet"
NEUMANN = "neumann"

NODES_PER_PERIOD = 512
MAX_REFINEMENTS = 4
ZERO_BAND_CONST = 10.0

_GAUSS = (0.5 - 0.5 / math.sqrt(3.0), 0.5 + 0.5 / math.sqrt(3.0))


def parse_bc(code):
    """``"dn"`` -> ``(DIRICHLET, NEUMANN)``; tuples pass through."""
    if isinstance(code, str):
        table = {"d": DIRICHLET, "n": NEUMANN}
        if len(code) != 2 or any(c not in table for c in code.lower()):
            raise DomainError(f"boundary conditions must be one of dd, nn, dn, nd; got {code!r}")
        return table[code[0].lower()], table[code[1].lower()]
    lo, hi = code
    for b in (lo, hi):
        if b not in (DIRICHLET, NEUMANN):
            raise DomainError(f"unknown boundary condition {b!r}")
    return lo, hi


def bc_code(bc):
    return "".join(b[0] for b in bc)


@dataclass(frozen=True)
class ModeProblem:
    """Mode ``k`` of a reduced geometry on ``interval`` with boundary conditions.

    ``geometry`` is any callable returning a
    :class:`~delidx.geometry.ReducedGeometry` for an array of points and
    exposing ``n`` and ``period`` (the latter sets the default resolution).
    """

    geometry: object
    k: int
    interval: tuple
    bc: tuple = (DIRICHLET, DIRICHLET)

    def __post_init__(self):
        object.__setattr__(self, "bc", parse_bc(self.bc))
        lo, hi = self.interval
        if not hi > lo:
            raise DomainError(f"empty interval {self.interval}")
        if self.k < 0:
            raise DomainError("mode index k must be >= 0")

    @property
    def n(self):
        return self.geometry.n

    @property
    def lambda_k(self):
        return self.k * (self.k + self.n - 2)

    @property
    def length(self):
        return self.interval[1] - self.interval[0]

    def coefficients(self, x):
        return self.geometry(x).mode_coefficients(self.k)

    def default_nodes(self):
        P = getattr(self.geometry, "period", 1.0)
        return max(64, int(math.ceil(NODES_PER_PERIOD * self.length / P)) + 1)

    def grid(self, nodes):
        if np.ndim(nodes) == 0:
            if nodes < 32:
                raise DomainError(f"at least 32 nodes are required, got {nodes}")
            return np.linspace(self.interval[0], self.interval[1], int(nodes))
        return np.asarray(nodes, dtype=float)


@dataclass(frozen=True)
class SymTridiagonal:
    diag: np.ndarray
    off: np.ndarray

    def toarray(self):
        return np.diag(self.diag) + np.diag(self.off, 1) + np.diag(self.off, -1)

    def __len__(self):
        return len(self.diag)


@dataclass(frozen=True)
class Discretization:
    """Assembled pencil plus the data needed for the zero band."""

    stiffness: SymTridiagonal
    mass: SymTridiagonal
    x: np.ndarray
    h: float
    q_over_w: float  # sup |q| / inf w over the quadrature points
    q_w_min: float  # min q / w, a lower bound for the spectrum

    def zero_band(self, const=ZERO_BAND_CONST):
        return const * self.h**2 * (self.q_over_w + 1.0)


def _assemble_full(problem, x):
    h = np.diff(x)
    if np.any(h <= 0):
        raise DomainError("grid must be strictly increasing")
    xg = np.concatenate([x[:-1] + s * h for s in _GAUSS])
    p, q, w = problem.coefficients(xg)
    if np.any(p <= 0) or np.any(w <= 0):
        raise DomainError("p and w must be positive on the interval")
    m = len(h)
    p = p.reshape(2, m)
    q = q.reshape(2, m)
    w = w.reshape(2, m)
    half = 0.5 * h
    # basis values at the two Gauss points: left = 1 - s, right = s
    sl = np.array([1 - _GAUSS[0], 1 - _GAUSS[1]])[:, None]
    sr = np.array([_GAUSS[0], _GAUSS[1]])[:, None]
    kel = (p.sum(axis=0) * half) / h**2
    q_ll = (q * sl * sl).sum(axis=0) * half
    q_rr = (q * sr * sr).sum(axis=0) * half
    q_lr = (q * sl * sr).sum(axis=0) * half
    m_ll = (w * sl * sl).sum(axis=0) * half
    m_rr = (w * sr * sr).sum(axis=0) * half
    m_lr = (w * sl * sr).sum(axis=0) * half

    kd = np.zeros(m + 1)
    kd[:-1] += kel + q_ll
    kd[1:] += kel + q_rr
    ko = -kel + q_lr
    md = np.zeros(m + 1)
    md[:-1] += m_ll
    md[1:] += m_rr
    mo = m_lr
    stats = (float(np.max(np.abs(q)) / np.min(w)), float(np.min(q / w)))
    return (kd, ko, md, mo), float(np.max(h)), stats


def assemble(problem, nodes=None):
    """Stiffness and mass matrices of ``problem`` on a grid.

    ``nodes`` is a node count (uniform grid) or an explicit increasing array
    of node positions spanning the interval.  Dirichlet ends drop the
    boundary unknown; Neumann ends are natural.
    """
    disc = discretize(problem, nodes)
    return disc.stiffness, disc.mass


def discretize(problem, nodes=None):
    if nodes is None:
        nodes = problem.default_nodes()
    x = problem.grid(nodes)
    (kd, ko, md, mo), h, (qw, qmin) = _assemble_full(problem, x)
    lo = 1 if problem.bc[0] == DIRICHLET else 0
    hi = len(kd) - 1 if problem.bc[1] == DIRICHLET else len(kd)
    K = SymTridiagonal(kd[lo:hi].copy(), ko[lo : hi - 1].copy())
    M = SymTridiagonal(md[lo:hi].copy(), mo[lo : hi - 1].copy())
    return Discretization(K, M, x[lo:hi].copy(), h, qw, qmin)


def inertia(K, M, shift=0.0):
    """Number of negative eigenvalues of ``K - shift * M`` (pivot signs)."""
    d = (K.diag - shift * M.diag).tolist()
    e = (K.off - shift * M.off).tolist()
    tiny = 1e-300
    count = 0
    piv = d[0]
    if piv == 0.0:
        piv = tiny
    if piv < 0.0:
        count += 1
    for i in range(1, len(d)):
        b = e[i - 1]
        piv = d[i] - b * b / piv
        if piv == 0.0:
            piv = tiny
        if piv < 0.0:
            count += 1
    return count


def _counts(disc, const):
    band = disc.zero_band(const)
    below = inertia(disc.stiffness, disc.mass, -band)
    upto = inertia(disc.stiffness, disc.mass, band)
    return below, upto - below, band


@dataclass
class Spectrum:
    """Outcome of a refinement-checked count for one mode problem."""

    neg_count: int
    zero_modes: int
    grid_nodes: int
    refinement_agreement: bool
    zero_band: float
    refinements: int
    history: list = field(default_factory=list)
    smallest: list = field(default_factory=list)
    zeros_settled: bool = True


def count_negative(
    problem,
    nodes=None,
    max_refinements=MAX_REFINEMENTS,
    zero_band_const=ZERO_BAND_CONST,
    smallest=0,
):
    """Count negative eigenvalues of ``problem``, refining until stable.

    Eigenvalues inside the zero band ``(-eps, eps)`` are reported as
    ``zero_modes`` and excluded from ``neg_count``.  The grid is doubled
    until two successive grids give the same ``(neg_count, zero_modes)``.

    On long intervals the band can hold small positive eigenvalues that
    leave it one by one as ``h`` shrinks.  If the budget runs out while
    ``neg_count`` agrees on the last two grids and ``zero_modes`` never
    grew, nothing crossed zero and the count is accepted with
    ``zeros_settled=False``.
    """
    if nodes is None:
        nodes = problem.default_nodes()
    history = []
    prev = None
    for r in range(max_refinements + 1):
        cur_nodes = (nodes - 1) * 2**r + 1
        disc = discretize(problem, cur_nodes)
        neg, zero, band = _counts(disc, zero_band_const)
        history.append((cur_nodes, neg, zero, band))
        if prev is not None and (neg, zero) == prev:
            return _finish(problem, Spectrum(neg, zero, cur_nodes, True, band, r, history), smallest)
        prev = (neg, zero)
    negs = [h[1] for h in history]
    zeros = [h[2] for h in history]
    if len(history) > 1 and negs[-1] == negs[-2] and all(b <= a for a, b in zip(zeros, zeros[1:])):
        spec = Spectrum(neg, zero, cur_nodes, True, band, max_refinements, history, zeros_settled=False)
        return _finish(problem, spec, smallest)
    raise NumericError(
        f"negative count not refinement-stable for mode {problem.k} on {problem.interval}: "
        f"history (nodes, neg, zero, band) = {history}",
        residual=history,
    )


def _finish(problem, spec, smallest):
    if smallest:
        spec.smallest = smallest_eigenvalues(problem, smallest, nodes=spec.grid_nodes)
    return spec


def smallest_eigenvalues(problem, count, nodes=None, width=1e-10, disc=None):
    """The ``count`` algebraically smallest pencil eigenvalues (bisection on inertia)."""
    if count > 10:
        raise DomainError("at most 10 eigenvalues may be requested")
    if disc is None:
        disc = discretize(problem, nodes)
    K, M = disc.stiffness, disc.mass
    tol = width * (disc.q_over_w + 1.0)
    out = []
    lower = disc.q_w_min - 1.0
    for j in range(1, min(count, len(K)) + 1):
        a = lower
        step = 1.0
        b = a + step
        while inertia(K, M, b) < j:
            step *= 2.0
            b = a + step
        while b - a > tol:
            c = 0.5 * (a + b)
            if inertia(K, M, c) >= j:
                b = c
            else:
                a = c
        lam = 0.5 * (a + b)
        out.append(lam)
        lower = a
    return out


def dense_eigenvalues(problem, nodes):
    """All pencil eigenvalues from a dense generalized eigensolver (small grids)."""
    disc = discretize(problem, nodes)
    return scipy.linalg.eigh(disc.stiffness.toarray(), disc.mass.toarray(), eigvals_only=True)


def jacobi_residual(problem, nodes, field):
    """Relative residual ``|L u| / |u|`` of a sampled field at interior nodes.

    ``field(x)`` returns the field values.  The discrete operator is the
    stiffness matrix divided by the lumped mass, which is consistent to
    second order with ``w**-1 L_k``.
    """
    x = problem.grid(nodes)
    (kd, ko, md, mo), _, _ = _assemble_full(problem, x)
    u = np.asarray(field(x), dtype=float)
    Ku = kd * u
    Ku[:-1] += ko * u[1:]
    Ku[1:] += ko * u[:-1]
    lumped = md.copy()
    lumped[:-1] += mo
    lumped[1:] += mo
    r = (Ku / lumped)[1:-1]
    return float(np.linalg.norm(r) / np.linalg.norm(u[1:-1]))
