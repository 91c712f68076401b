import io
import logging
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose
from scipy.optimize import minimize_scalar

from delidx.errors import DomainError
from delidx.profile import (
    DelaunayFamily,
    axis_field_derivative,
    cylinder_period,
    euclidean_mu_max,
    first_integral,
    hyperbolic_G,
    hyperbolic_cylinder_angle,
    hyperbolic_mu_max,
    neumann_cut_points,
    ode_period,
    period,
    solve_profile,
    turning_radii,
    write_profile_csv,
)


def euclid_roots_n2(mu):
    d = math.sqrt(1 - 4 * mu)
    return (1 - d) / 2, (1 + d) / 2


def hyperbolic_roots_n2(H, mu):
    # sin(phi) - H sin^2(phi) = mu cos^2(phi) is a quadratic in s = sin(phi)
    a = H - mu
    d = math.sqrt(1 - 4 * mu * a)
    return math.asin((1 - d) / (2 * a)), math.asin((1 + d) / (2 * a))


def test_euclidean_mu_max():
    assert euclidean_mu_max(2) == pytest.approx(0.25)
    assert euclidean_mu_max(3) == pytest.approx(4 / 27)


@pytest.mark.parametrize("n,H", [(2, 1.2), (2, 1.5), (3, 1.5), (4, 2.0)])
def test_hyperbolic_mu_max_matches_numerical_maximum(n, H):
    res = minimize_scalar(lambda p: -hyperbolic_G(p, n, H), bounds=(1e-6, math.pi / 2 - 1e-6),
                          method="bounded", options={"xatol": 1e-12})
    assert_allclose(hyperbolic_mu_max(n, H), -res.fun, rtol=1e-10)


def test_hyperbolic_cylinder_angle_n2():
    assert math.sin(hyperbolic_cylinder_angle(2, 1.2)) == pytest.approx((2.4 - math.sqrt(1.76)) / 2, abs=1e-12)
    assert math.sin(hyperbolic_cylinder_angle(2, 1.2)) == pytest.approx(0.5367, abs=1e-4)


def test_turning_radii_examples():
    assert_allclose(turning_radii(DelaunayFamily.euclidean(2, 0.15)), (0.18377, 0.81623), atol=1e-5)
    assert_allclose(turning_radii(DelaunayFamily.euclidean(2, 0.25)), (0.5, 0.5), atol=1e-12)
    fam = DelaunayFamily.hyperbolic(2, 1.2, hyperbolic_mu_max(2, 1.2))
    lo, hi = turning_radii(fam)
    assert lo == hi
    assert math.sin(lo) == pytest.approx(0.5367, abs=1e-4)


@settings(max_examples=40, deadline=None)
@given(st.floats(1e-4, 0.2499))
def test_turning_radii_quadratic_oracle(mu):
    assert_allclose(turning_radii(DelaunayFamily.euclidean(2, mu)), euclid_roots_n2(mu), atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.floats(1.05, 3.0), st.floats(0.01, 0.99))
def test_hyperbolic_turning_radii_quadratic_oracle(H, frac):
    mu = frac * hyperbolic_mu_max(2, H)
    fam = DelaunayFamily.hyperbolic(2, H, mu)
    lo, hi = turning_radii(fam)
    assert_allclose((lo, hi), hyperbolic_roots_n2(H, mu), atol=1e-10)
    assert_allclose([hyperbolic_G(lo, 2, H), hyperbolic_G(hi, 2, H)], mu, atol=1e-12)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_root_ordering_sweep(n):
    for mu in np.linspace(1e-3, 1.0, 20) * euclidean_mu_max(n):
        lo, hi = turning_radii(DelaunayFamily.euclidean(n, mu))
        P = lambda X: X**n - X ** (n - 1) + mu
        assert abs(P(lo)) < 1e-12 and abs(P(hi)) < 1e-12
        assert mu ** (1 / (n - 1)) - 1e-12 <= lo <= (n - 1) / n + 1e-9 <= hi + 2e-9 <= 1 + 2e-9


def test_cylinder_period_is_pi():
    assert period(DelaunayFamily.euclidean(2, 0.25)) == pytest.approx(math.pi, abs=1e-14)


def test_hyperbolic_period_tends_to_linearized_cylinder_period():
    n, H = 2, 1.2
    mu_max = hyperbolic_mu_max(n, H)
    phi = hyperbolic_cylinder_angle(n, H)
    w2 = (n - 1) / math.sin(phi) ** 2 - n / math.cos(phi) ** 2 + n * H * math.tan(phi) / math.cos(phi)
    P_lin = 2 * math.pi / math.sqrt(w2)
    assert cylinder_period(DelaunayFamily.hyperbolic(n, H, mu_max)) == pytest.approx(P_lin, rel=1e-12)
    near = [period(DelaunayFamily.hyperbolic(n, H, mu_max * (1 - r))) for r in (1e-4, 1e-6, 1e-8)]
    gaps = np.abs(np.array(near) - P_lin)
    # the gap closes linearly in the distance to mu_max
    assert_allclose(gaps[:-1] / gaps[1:], 100.0, rtol=0.05)
    assert gaps[-1] < 1e-7


@settings(max_examples=15, deadline=None)
@given(st.floats(0.005, 0.2499))
def test_period_bounds_and_ode_agreement(mu):
    fam = DelaunayFamily.euclidean(2, mu)
    T = period(fam)
    assert 2.0 <= T <= math.pi
    assert abs(T - ode_period(fam)) <= 1e-6


def test_hyperbolic_period_ode_agreement():
    fam = DelaunayFamily.hyperbolic(2, 1.2, 0.1)
    assert abs(period(fam) - ode_period(fam)) <= 1e-6


def test_cylinder_profile_is_constant():
    curve = solve_profile(DelaunayFamily.euclidean(2, 0.25), 128)
    assert np.all(curve.value == 0.5)
    assert np.all(curve.deriv == 0.0)


def test_profile_reaches_turning_hi_at_half_period():
    curve = solve_profile(DelaunayFamily.euclidean(2, 0.15), 2048)
    assert curve.value[1024] == pytest.approx(euclid_roots_n2(0.15)[1], abs=1e-6)
    # pinching
    assert curve.value.min() == pytest.approx(curve.turning_lo, abs=1e-6)
    assert curve.value.max() == pytest.approx(curve.turning_hi, abs=1e-6)


def test_conservation_n3():
    curve = solve_profile(DelaunayFamily.euclidean(3, 0.08), 2048)
    fam = curve.family
    assert np.max(np.abs(first_integral(fam, curve.value, curve.deriv) - fam.mu)) <= 1e-8


@pytest.mark.parametrize("fam", [DelaunayFamily.euclidean(2, 0.15), DelaunayFamily.hyperbolic(2, 1.2, 0.1)])
def test_conservation_order(fam):
    res = [solve_profile(fam, m, check=False).conservation_residual for m in (128, 256, 512)]
    orders = np.log2(np.array(res[:-1]) / np.array(res[1:]))
    assert np.all(orders >= 1.9)


@pytest.mark.parametrize("n,mu", [(2, 0.15), (2, 0.05), (3, 0.08), (4, 0.05)])
def test_euclidean_cut_points(n, mu):
    curve = solve_profile(DelaunayFamily.euclidean(n, mu))
    z1, z2 = neumann_cut_points(curve)
    P = curve.period
    assert 0 < z1 < P / 2 < z2 < P
    target = ((n - 1) * mu) ** (1 / n)
    f1 = curve.evaluate(np.array([z1, z2]))[0]
    assert_allclose(f1, target, atol=1e-8)
    assert z2 == pytest.approx(P - z1, abs=1e-8)


def test_euclidean_cut_point_value_n2():
    curve = solve_profile(DelaunayFamily.euclidean(2, 0.15))
    z1, _ = neumann_cut_points(curve)
    f = float(curve.evaluate(np.array([z1]))[0][0])
    assert f == pytest.approx(0.38730, abs=1e-5)
    assert 0.18377 < f < 0.81623


def test_hyperbolic_cut_points_against_sign_scan():
    fam = DelaunayFamily.hyperbolic(2, 1.2, 0.1)
    curve = solve_profile(fam)
    x = np.linspace(0, curve.period, 20001)[:-1]
    v, dv, _ = curve.evaluate(x)
    a = dv / (np.cos(v) * np.sqrt(1 + dv * dv))
    da = np.gradient(a, x)
    idx = np.nonzero(np.sign(da[1:]) != np.sign(da[:-1]))[0]
    assert len(idx) == 2
    scan = x[idx]
    assert_allclose(neumann_cut_points(curve), scan, atol=2 * (x[1] - x[0]))
    v, dv, ddv = curve.evaluate(np.array(neumann_cut_points(curve)))
    assert_allclose(axis_field_derivative(fam, v, dv, ddv), 0.0, atol=1e-9)


def test_cylinder_cut_points_quarter_period():
    curve = solve_profile(DelaunayFamily.euclidean(2, 0.25))
    assert_allclose(neumann_cut_points(curve), (math.pi / 4, 3 * math.pi / 4))


@pytest.mark.parametrize(
    "kwargs,match",
    [
        (dict(space="hyperbolic", n=2, mu=0.1, H=1.0), "H must exceed 1"),
        (dict(space="euclidean", n=2, mu=1e-6), "mu must lie in"),
        (dict(space="euclidean", n=2, mu=0.3), "mu must lie in"),
        (dict(space="euclidean", n=2, mu=-0.1), "mu must lie in"),
        (dict(space="euclidean", n=1, mu=0.1), "n must be"),
        (dict(space="spherical", n=2, mu=0.1), "space must be"),
    ],
)
def test_invalid_families(kwargs, match):
    with pytest.raises(DomainError, match=match):
        DelaunayFamily(**kwargs)


def test_small_mu_is_flagged(caplog):
    with caplog.at_level(logging.WARNING):
        fam = DelaunayFamily.euclidean(2, 5e-4)
    assert fam.near_degenerate
    assert "sphere-chain" in caplog.text


def test_mu_max_snaps_to_cylinder():
    fam = DelaunayFamily.euclidean(2, 0.25 * (1 + 1e-13))
    assert fam.is_cylinder and fam.mu == 0.25


def test_samples_lower_bound():
    with pytest.raises(DomainError):
        solve_profile(DelaunayFamily.euclidean(2, 0.15), 32)


@pytest.mark.parametrize("fam,header", [
    (DelaunayFamily.euclidean(2, 0.15), "x,f,fprime"),
    (DelaunayFamily.hyperbolic(2, 1.2, 0.1), "t,phi,phiprime"),
])
def test_profile_csv(fam, header):
    curve = solve_profile(fam, 64)
    buf = io.StringIO()
    write_profile_csv(curve, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == header
    assert len(lines) == len(curve.x) + 1
    row = [float(t) for t in lines[1].split(",")]
    assert row[1] == curve.value[0]
