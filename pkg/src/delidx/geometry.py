"""Reduced coefficients ``(A, B, V)`` of warped-product pieces and Jacobi fields.

A rotation hypersurface carries the metric ``A(x)**2 dx**2 + B(x)**2 g_S``
over the round ``(n-1)``-sphere, and its stability operator is
``Delta - V``, where ``Delta`` is the non-negative Laplacian and ``V``
already includes the ambient curvature term (``V = |II|**2 + n c``).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import ConsistencyError, DomainError
from .profile import (
    EUCLIDEAN,
    DelaunayFamily,
    ProfileCurve,
    axis_field,
)

EXACT = "exact_delaunay"
PERTURBED = "perturbed_profile"


@dataclass(frozen=True)
class ReducedGeometry:
    """Samples of ``A``, ``B``, ``V`` on a grid ``x``."""

    x: np.ndarray
    A: np.ndarray
    B: np.ndarray
    V: np.ndarray
    n: int
    source: str = EXACT
    family: DelaunayFamily | None = None

    def __post_init__(self):
        if np.any(self.A < 1.0 - 1e-12) or np.any(self.B <= 0.0):
            raise ConsistencyError("reduced geometry requires A >= 1 and B > 0")

    @property
    def B2V(self):
        return self.B**2 * self.V

    def mode_coefficients(self, k):
        """Coefficients ``p, q, w`` of the mode-``k`` Sturm-Liouville pencil."""
        n = self.n
        lam = k * (k + n - 2)
        A, B = self.A, self.B
        p = B ** (n - 1) / A
        q = A * B ** (n - 3) * (lam - B * B * self.V)
        w = A * B ** (n - 1)
        return p, q, w


def _delaunay_triple(family, v, dv):
    n, mu = family.n, family.mu
    if family.space == EUCLIDEAN:
        A = np.sqrt(1.0 + dv * dv)
        B = v
        V = n * (1.0 + (n - 1) * mu**2 * v ** (-2 * n))
    else:
        A = np.sqrt(1.0 + dv * dv) / np.cos(v)
        B = np.tan(v)
        V = n * (family.H**2 - 1.0) + n * (n - 1) * mu**2 * B ** (-2 * n)
    return A, B, V


def delaunay_coefficients(curve):
    """``(A, B, V)`` of an exact unduloid on the curve's own grid."""
    fam = curve.family
    A, B, V = _delaunay_triple(fam, curve.value, curve.deriv)
    return ReducedGeometry(curve.x.copy(), A, B, V, fam.n, EXACT, fam)


def rotation_coefficients(x, r, dr, ddr, n, source=PERTURBED):
    """``(A, B, V)`` of an arbitrary Euclidean rotation hypersurface.

    Principal curvatures are taken with respect to the inward normal, so that
    an exact unduloid has ``kappa_1 + (n - 1) kappa_2 = n``.
    """
    x, r, dr, ddr = (np.asarray(a, dtype=float) for a in (x, r, dr, ddr))
    if np.any(r <= 0.0):
        raise DomainError("rotation profile must stay positive")
    s = 1.0 + dr * dr
    k1, k2 = principal_curvatures(r, dr, ddr)
    V = k1**2 + (n - 1) * k2**2
    return ReducedGeometry(x, np.sqrt(s), r, V, n, source)


def principal_curvatures(r, dr, ddr):
    """Meridian and parallel curvatures of a Euclidean rotation profile."""
    s = 1.0 + dr * dr
    return -ddr / s**1.5, 1.0 / (r * np.sqrt(s))


class DelaunayGeometry:
    """Evaluates the reduced coefficients of an exact unduloid anywhere.

    Wraps a :class:`ProfileCurve` and extends it periodically, so blocks may
    span several periods and start at any point of the profile.
    """

    source = EXACT

    def __init__(self, curve: ProfileCurve):
        self.curve = curve
        self.family = curve.family
        self.n = curve.family.n
        self.period = curve.period

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        v, dv, _ = self.curve.evaluate(x)
        A, B, V = _delaunay_triple(self.family, v, dv)
        return ReducedGeometry(x, A, B, V, self.n, EXACT, self.family)

    def axis_field(self, x):
        v, dv, _ = self.curve.evaluate(x)
        return axis_field(self.family, v, dv)


class PerturbedRotationGeometry:
    """Euclidean rotation hypersurface with radius ``f(x) + w(x)``.

    ``f`` is the profile of ``curve``; ``perturbation(x)`` returns
    ``(w, w', w'')``.
    """

    source = PERTURBED

    def __init__(self, curve, perturbation):
        if curve.family.space != EUCLIDEAN:
            raise DomainError("graph perturbations are only built for Euclidean unduloids")
        self.curve = curve
        self.family = curve.family
        self.n = curve.family.n
        self.period = curve.period
        self.perturbation = perturbation

    def radius(self, x):
        x = np.asarray(x, dtype=float)
        f, df, ddf = self.curve.evaluate(x)
        w, dw, ddw = self.perturbation(x)
        return f + w, df + dw, ddf + ddw

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return rotation_coefficients(x, *self.radius(x), self.n)


class PerturbedCoefficientGeometry:
    """Direct perturbation ``(A(1+d), B(1+d), V+v)`` of another geometry.

    Used for hyperbolic pieces, where no graph-curvature formula is wired in.
    ``delta(x)`` and ``dv(x)`` return arrays.
    """

    source = PERTURBED

    def __init__(self, base, delta, dv):
        self.base = base
        self.family = getattr(base, "family", None)
        self.n = base.n
        self.period = base.period
        self.delta = delta
        self.dv = dv

    def __call__(self, x):
        g = self.base(x)
        d = self.delta(g.x)
        return ReducedGeometry(
            g.x, g.A * (1 + d), g.B * (1 + d), g.V + self.dv(g.x), g.n, PERTURBED, g.family
        )


# -- Jacobi fields --------------------------------------------------------


@dataclass(frozen=True)
class JacobiField:
    x: np.ndarray
    values: np.ndarray
    mode_k: int
    zeros: list = field(default_factory=list)


def _grid_zeros(x, values, scale):
    """Locations of sign changes (linear interpolation) and exact zeros."""
    tol = 1e-12 * scale
    out = []
    for i in range(len(x) - 1):
        a, b = values[i], values[i + 1]
        if abs(a) <= tol:
            if not out or abs(out[-1] - x[i]) > 0.5 * (x[1] - x[0]):
                out.append(float(x[i]))
        elif a * b < 0 and abs(b) > tol:
            out.append(float(x[i] - a * (x[i + 1] - x[i]) / (b - a)))
    if abs(values[-1]) <= tol and (not out or out[-1] < x[-1] - 0.5 * (x[1] - x[0])):
        out.append(float(x[-1]))
    return out


def axis_jacobi_field(curve):
    """Normal component of the axial Killing field on the curve's grid (mode 0)."""
    vals = axis_field(curve.family, curve.value, curve.deriv)
    scale = max(float(np.max(np.abs(vals))), 1e-300)
    # the field is odd about every half period; the last sample duplicates x=0
    zeros = [] if curve.family.is_cylinder else _grid_zeros(curve.x[:-1], vals[:-1], scale)
    return JacobiField(curve.x.copy(), vals, 0, zeros)


def translation_field_values(family, x, v, dv):
    """Mode-1 Jacobi field from a Killing field transverse to the axis.

    Euclidean: ``(1 + f'**2)**(-1/2)``.  Hyperbolic (horizontal translation
    of the half-space model): ``g'(t) / (e**(2t) cos(phi) sqrt(1 + phi'**2))``
    with ``g = e**t cos(phi)``, which simplifies to the expression below.
    """
    s = np.sqrt(1.0 + dv * dv)
    if family.space == EUCLIDEAN:
        return 1.0 / s
    return np.exp(-x) * (np.cos(v) - dv * np.sin(v)) / (np.cos(v) * s)


def translation_jacobi_field(curve):
    fam = curve.family
    vals = translation_field_values(fam, curve.x, curve.value, curve.deriv)
    if np.min(vals) <= 0.0:
        raise ConsistencyError("translation Jacobi field is not positive")
    return JacobiField(curve.x.copy(), vals, 1, [])


def hyperbolic_gprime_factor(curve):
    """``cos(phi) - phi' sin(phi)``, the sign-carrying factor of ``g'(t)``."""
    return np.cos(curve.value) - curve.deriv * np.sin(curve.value)


# -- bounds ---------------------------------------------------------------


def potential_bounds(geom):
    """Supremum of ``B**2 V`` over the grid.

    For Euclidean unduloids this never exceeds ``n**2``.
    """
    value = float(np.max(geom.B2V))
    if geom.family is not None and geom.family.space == EUCLIDEAN:
        if value > geom.n**2 + 1e-9:
            raise ConsistencyError(f"sup B^2 V = {value} exceeds n^2 = {geom.n ** 2}")
    return value


def sup_B2V(family, curve=None):
    """Exact supremum of ``B**2 V`` for an unduloid.

    ``B**2 V`` is a function of the profile value alone that decreases then
    increases, so its maximum is attained at a turning radius.
    """
    from .profile import turning_radii

    lo, hi = turning_radii(family)
    vals = _delaunay_triple(family, np.array([lo, hi]), np.zeros(2))
    return float(np.max(vals[1] ** 2 * vals[2]))


def write_coefficients_csv(geom, fh):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(("x", "A", "B", "V"))
    for row in zip(geom.x, geom.A, geom.B, geom.V):
        w.writerow([f"{float(c):.17g}" for c in row])
