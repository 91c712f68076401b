"""Profile curves of Delaunay unduloids in Euclidean and hyperbolic space.

Euclidean unduloids are rotation hypersurfaces ``x -> (x, f(x) w)`` with
mean curvature 1, where the radius ``f`` obeys the first integral

    mu = f**(n-1) / sqrt(1 + f'**2) - f**n.

Hyperbolic unduloids (half-space model, axis ``t -> (0, e**t)``) are
described by the angle ``phi(t)`` between the axis and the ray to the
profile point, with

    mu = tan(phi)**(n-1) / (cos(phi) sqrt(1 + phi'**2)) - H tan(phi)**n.

Both first integrals are singular at the turning points, so curves are
computed from the second-order equations and the first integral is only
monitored.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import brentq

from .errors import DomainError, NumericError

log = logging.getLogger(__name__)

EUCLIDEAN = "euclidean"
HYPERBOLIC = "hyperbolic"
SPACES = (EUCLIDEAN, HYPERBOLIC)

MU_REJECT = 1e-5
MU_FLAG = 1e-3

DEFAULT_TOL = 1e-10
DEFAULT_SAMPLES = 4096


def euclidean_mu_max(n):
    return (1.0 / n) * ((n - 1.0) / n) ** (n - 1)


def hyperbolic_cylinder_angle(n, H):
    """Angle of the hyperbolic cylinder, i.e. the maximiser of ``G``.

    ``G'(phi) = 0`` reduces to ``sin**2 - n H sin + (n - 1) = 0``; the root
    below ``1`` is the admissible one.
    """
    s = 0.5 * (n * H - math.sqrt((n * H) ** 2 - 4.0 * (n - 1)))
    return math.asin(s)


def hyperbolic_G(phi, n, H):
    """Value of the hyperbolic first integral at zero slope."""
    t = np.tan(phi)
    return t ** (n - 1) / np.cos(phi) - H * t**n


def hyperbolic_mu_max(n, H):
    return float(hyperbolic_G(hyperbolic_cylinder_angle(n, H), n, H))


@dataclass(frozen=True)
class DelaunayFamily:
    """One Delaunay unduloid, identified by space form, dimension and weight.

    ``n`` is the dimension of the hypersurface (ambient dimension ``n + 1``).
    ``H`` is the mean curvature; it is fixed to 1 in Euclidean space and must
    exceed 1 in hyperbolic space.
    """

    space: str
    n: int
    mu: float
    H: float = 1.0

    def __post_init__(self):
        if self.space not in SPACES:
            raise DomainError(f"space must be one of {SPACES}, got {self.space!r}")
        if int(self.n) != self.n or self.n < 2:
            raise DomainError(f"n must be an integer >= 2, got {self.n}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "mu", float(self.mu))
        object.__setattr__(self, "H", float(self.H))
        if self.space == EUCLIDEAN and self.H != 1.0:
            raise DomainError("Euclidean unduloids are normalised to H = 1")
        if self.space == HYPERBOLIC and not self.H > 1.0:
            raise DomainError(f"H must exceed 1 in hyperbolic space, got H = {self.H}")
        mu_max = self.mu_max
        if not (MU_REJECT <= self.mu <= mu_max * (1 + 1e-12)):
            raise DomainError(
                f"mu must lie in [{MU_REJECT:g}, {mu_max:.17g}] "
                f"(valid interval (0, mu_max]; values below {MU_REJECT:g} are rejected), "
                f"got mu = {self.mu!r}"
            )
        if self.mu > mu_max:
            object.__setattr__(self, "mu", mu_max)
        if self.mu < MU_FLAG:
            log.warning("mu = %g is close to the sphere-chain limit", self.mu)

    @classmethod
    def euclidean(cls, n, mu):
        return cls(EUCLIDEAN, n, mu)

    @classmethod
    def hyperbolic(cls, n, H, mu):
        return cls(HYPERBOLIC, n, mu, H)

    @property
    def mu_max(self):
        if self.space == EUCLIDEAN:
            return euclidean_mu_max(self.n)
        return hyperbolic_mu_max(self.n, self.H)

    @property
    def is_cylinder(self):
        return abs(self.mu - self.mu_max) <= 1e-12 * self.mu_max

    @property
    def near_degenerate(self):
        return self.mu < MU_FLAG

    @property
    def curvature(self):
        """Sectional curvature ``c`` of the ambient space form."""
        return 0.0 if self.space == EUCLIDEAN else -1.0


# -- right-hand sides and first integrals ---------------------------------


def second_derivative(family, v, dv):
    """Second derivative of the profile from the second-order equation."""
    n = family.n
    s = 1.0 + dv * dv
    if family.space == EUCLIDEAN:
        return s * (n - 1) / v - n * s**1.5
    return s * ((n - 1) / np.tan(v) + n * np.tan(v)) - n * family.H * s**1.5 / np.cos(v)


def first_integral(family, v, dv):
    """The weight ``mu`` recomputed from a profile value and slope."""
    n = family.n
    if family.space == EUCLIDEAN:
        return v ** (n - 1) / np.sqrt(1.0 + dv * dv) - v**n
    t = np.tan(v)
    return t ** (n - 1) / (np.cos(v) * np.sqrt(1.0 + dv * dv)) - family.H * t**n


# -- turning radii and period ---------------------------------------------


def turning_radii(family, tol=DEFAULT_TOL):
    """Minimum and maximum of the profile (``a_-, a_+`` or ``alpha_-, alpha_+``)."""
    n, mu = family.n, family.mu
    xtol = min(tol, 1e-14)
    if family.space == EUCLIDEAN:
        mid = (n - 1.0) / n
        if family.is_cylinder:
            return mid, mid

        def P(X):
            return X**n - X ** (n - 1) + mu

        lo = brentq(P, mu ** (1.0 / (n - 1)), mid, xtol=xtol, rtol=1e-15)
        hi = brentq(P, mid, 1.0, xtol=xtol, rtol=1e-15)
        return lo, hi

    mid = hyperbolic_cylinder_angle(n, family.H)
    if family.is_cylinder:
        return mid, mid

    def G(phi):
        return hyperbolic_G(phi, n, family.H) - mu

    lo = brentq(G, 0.0, mid, xtol=xtol, rtol=1e-15)
    hi = brentq(G, mid, math.asin(1.0 / family.H), xtol=xtol, rtol=1e-15)
    return lo, hi


def cylinder_period(family):
    """Wavelength of the zero mode of the linearised cylinder equation."""
    n = family.n
    if family.space == EUCLIDEAN:
        return 2.0 * math.pi * math.sqrt(n - 1.0) / n
    phi = hyperbolic_cylinder_angle(n, family.H)
    omega2 = (
        (n - 1) / math.sin(phi) ** 2
        - n / math.cos(phi) ** 2
        + n * family.H * math.tan(phi) / math.cos(phi)
    )
    return 2.0 * math.pi / math.sqrt(omega2)


def _euclidean_half_period_integrand(family, lo, hi):
    n, mu = family.n, family.mu
    poly = np.zeros(n + 1)
    poly[0], poly[1], poly[-1] = 1.0, -1.0, mu
    # P(X) = (X - lo)(X - hi) Q(X); Q carries no root in [lo, hi]
    Q, _ = np.polydiv(poly, np.poly([lo, hi]))
    m, h = 0.5 * (hi + lo), 0.5 * (hi - lo)

    def g(theta):
        f = m + h * np.sin(theta)
        return (mu + f**n) / np.sqrt(np.polyval(Q, f) * (f ** (n - 1) + f**n + mu))

    return g


def _hyperbolic_G_second(phi, n, H):
    t, sec = np.tan(phi), 1.0 / np.cos(phi)
    return (
        (n - 1) * ((n - 2) * t ** max(n - 3, 0) * sec**5 + 3 * t ** (n - 1) * sec**3)
        + n * t ** (n - 1) * sec**3
        + t ** (n + 1) * sec
        - n * H * ((n - 1) * t ** (n - 2) * sec**4 + 2 * t**n * sec**2)
    )


def _simplex_rule(order=12):
    """Points and weights on the triangle ``{s, r >= 0, s + r <= 1}``."""
    x, w = np.polynomial.legendre.leggauss(order)
    x, w = 0.5 * (x + 1.0), 0.5 * w
    s = np.repeat(x, order)
    r = (1.0 - s) * np.tile(x, order)
    weights = np.outer(w, w).ravel() * (1.0 - s)
    return s, r, weights


_SIMPLEX = _simplex_rule()
NEAR_CYLINDER_WIDTH = 0.05


def _hyperbolic_half_period_integrand(family, lo, hi):
    n, mu, H = family.n, family.mu, family.H
    m, h = 0.5 * (hi + lo), 0.5 * (hi - lo)

    def ratio(phi, c):
        # (G(phi) - mu) / ((phi - lo)(hi - phi)); near the cylinder the
        # difference cancels, and minus the divided difference G[lo, phi, hi]
        # is evaluated instead as an integral of G'' over a simplex
        if h >= NEAR_CYLINDER_WIDTH:
            return (hyperbolic_G(phi, n, H) - mu) / (h * h * c * c)
        s, r, w = _SIMPLEX
        u = lo + s[None, :] * (phi[:, None] - lo) + r[None, :] * (hi - lo)
        return -(_hyperbolic_G_second(u, n, H) @ w)

    def g(theta):
        c = np.cos(theta)
        phi = m + h * np.sin(theta)
        t = np.tan(phi)
        S = t ** (n - 1) / np.cos(phi)
        return (mu + H * t**n) / np.sqrt(ratio(phi, c) * (S + mu + H * t**n))

    return g


def period(family, tol=DEFAULT_TOL, max_points=2**22):
    """Period of the profile (distance between consecutive necks).

    The half-period integral ``int dv / |v'|`` has inverse square root
    singularities at both turning points.  Substituting
    ``v = mid + half * sin(theta)`` removes them and turns the integral into
    one of a smooth periodic function, for which the midpoint trapezoid rule
    converges geometrically.  The number of nodes is doubled until two
    successive values agree to ``tol``.
    """
    if family.is_cylinder:
        return cylinder_period(family)
    lo, hi = turning_radii(family)
    if family.space == EUCLIDEAN:
        g = _euclidean_half_period_integrand(family, lo, hi)
    else:
        g = _hyperbolic_half_period_integrand(family, lo, hi)

    N, prev = 64, None
    while N <= max_points:
        theta = 2.0 * np.pi * (np.arange(N) + 0.5) / N
        value = 2.0 * np.pi / N * np.sum(g(theta))
        if prev is not None and abs(value - prev) < tol:
            return float(value)
        prev, N = value, 2 * N
    raise NumericError(
        f"period quadrature did not converge for {family}", residual=abs(value - prev)
    )


def ode_period(family, rtol=1e-13, atol=1e-13):
    """Period measured by integrating from one neck to the next.

    Independent of :func:`period`; used as a cross-check.
    """
    if family.is_cylinder:
        return cylinder_period(family)
    lo, _ = turning_radii(family)

    def rhs(x, y):
        return [y[1], second_derivative(family, y[0], y[1])]

    def slope(x, y):
        return y[1]

    slope.terminal = True
    x0, y0, found = 0.0, [lo, 0.0], []
    # neck -> bulge (slope turns negative), then bulge -> next neck
    for direction in (-1.0, 1.0):
        slope.direction = direction
        sol = solve_ivp(
            rhs, (x0, x0 + 1e3), y0, method="DOP853", rtol=rtol, atol=atol, events=slope
        )
        if not len(sol.t_events[0]):
            raise NumericError(f"no turning point found for {family}")
        x0, y0 = sol.t_events[0][0], sol.y_events[0][0]
        found.append(x0)
    return float(found[-1])


# -- sampled profile ------------------------------------------------------


@dataclass(frozen=True)
class ProfileCurve:
    """One period of a profile, sampled on a uniform grid ``x[0..M]``.

    ``value`` and ``deriv`` hold ``f, f'`` (Euclidean) or ``phi, phi'``
    (hyperbolic).  ``x`` is the axis coordinate (arc length ``t`` along the
    axis geodesic in the hyperbolic case).
    """

    family: DelaunayFamily
    x: np.ndarray
    value: np.ndarray
    deriv: np.ndarray
    period: float
    turning_lo: float
    turning_hi: float
    conservation_residual: float

    @property
    def samples(self):
        return len(self.x) - 1

    @cached_property
    def _splines(self):
        v, dv = self.value, self.deriv
        ddv = second_derivative(self.family, v, dv)
        return CubicHermiteSpline(self.x, v, dv), CubicHermiteSpline(self.x, dv, ddv)

    def evaluate(self, x):
        """Profile value, slope and second derivative at arbitrary ``x``.

        The curve is extended periodically; values between samples come from
        cubic Hermite interpolation.
        """
        x = np.asarray(x, dtype=float)
        if self.family.is_cylinder:
            v = np.full_like(x, self.turning_lo)
            zero = np.zeros_like(x)
            return v, zero, zero.copy()
        xr = np.mod(x, self.period)
        sv, sdv = self._splines
        v, dv = sv(xr), sdv(xr)
        return v, dv, second_derivative(self.family, v, dv)


def _rk4(family, y0, h, steps):
    out = np.empty((steps + 1, 2))
    out[0] = y0
    v, dv = y0

    def F(v, dv):
        return dv, second_derivative(family, v, dv)

    for i in range(steps):
        k1v, k1d = F(v, dv)
        k2v, k2d = F(v + 0.5 * h * k1v, dv + 0.5 * h * k1d)
        k3v, k3d = F(v + 0.5 * h * k2v, dv + 0.5 * h * k2d)
        k4v, k4d = F(v + h * k3v, dv + h * k3d)
        v = v + h / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
        dv = dv + h / 6.0 * (k1d + 2 * k2d + 2 * k3d + k4d)
        out[i + 1] = v, dv
    return out


def solve_profile(family, samples=DEFAULT_SAMPLES, tol=1e-8, check=True):
    """Integrate one period of the profile with fixed-step RK4.

    Starts at the neck (``value = turning_lo``, zero slope).  With
    ``check=True`` a first-integral drift above ``tol`` raises
    :class:`NumericError`, after retrying with up to 16 times the samples
    (needed as ``mu`` approaches the sphere-chain limit).
    """
    if samples < 64:
        raise DomainError(f"samples must be >= 64, got {samples}")
    lo, hi = turning_radii(family)
    P = period(family)
    cap = samples * 16
    while True:
        x = np.linspace(0.0, P, samples + 1)
        if family.is_cylinder:
            v = np.full(samples + 1, lo)
            dv = np.zeros(samples + 1)
        else:
            y = _rk4(family, (lo, 0.0), P / samples, samples)
            v, dv = y[:, 0], y[:, 1]
        residual = float(np.max(np.abs(first_integral(family, v, dv) - family.mu)))
        if not check or residual <= tol or samples >= cap:
            break
        samples *= 2
    if check and residual > tol:
        raise NumericError(
            f"first integral drifted by {residual:.3e} for {family}; increase samples",
            residual=residual,
        )
    return ProfileCurve(family, x, v, dv, P, lo, hi, residual)


# -- axis Jacobi field and Neumann cut points ------------------------------


def axis_field(family, v, dv):
    """Normal component of the axial Killing field (translation or dilation)."""
    s = np.sqrt(1.0 + dv * dv)
    if family.space == EUCLIDEAN:
        return dv / s
    return dv / (np.cos(v) * s)


def axis_field_derivative(family, v, dv, ddv):
    s2 = 1.0 + dv * dv
    if family.space == EUCLIDEAN:
        return ddv / s2**1.5
    c = np.cos(v)
    return ddv / (c * s2**1.5) + dv * dv * np.sin(v) / (c * c * np.sqrt(s2))


def neumann_cut_points(curve, xtol=1e-13):
    """Zeros ``zeta_1 < P/2 < zeta_2`` of the derivative of the axis field.

    For the cylinder the axis field is constant and the cut points are taken
    at quarter periods.
    """
    P = curve.period
    if curve.family.is_cylinder:
        return 0.25 * P, 0.75 * P
    fam = curve.family

    def da(x):
        v, dv, ddv = curve.evaluate(x)
        return float(axis_field_derivative(fam, v, dv, ddv))

    try:
        z1 = brentq(da, 1e-12 * P, 0.5 * P - 1e-12 * P, xtol=xtol)
        z2 = brentq(da, 0.5 * P + 1e-12 * P, P - 1e-12 * P, xtol=xtol)
    except ValueError as exc:
        raise NumericError(f"could not bracket the Neumann cut points for {fam}") from exc
    return z1, z2


def write_profile_csv(curve, fh):
    """Write ``x,f,fprime`` (Euclidean) or ``t,phi,phiprime`` (hyperbolic) rows."""
    header = ("x", "f", "fprime") if curve.family.space == EUCLIDEAN else ("t", "phi", "phiprime")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(header)
    for row in zip(curve.x, curve.value, curve.deriv):
        w.writerow([f"{float(c):.17g}" for c in row])
