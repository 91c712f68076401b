import io
import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from delidx.config import delaunay_geometry
from delidx.errors import DomainError
from delidx.growth import (
    GrowthExperiment,
    PerturbedEnd,
    bracketing_counts,
    bump_perturbation,
    exponential_perturbation,
    growth_lengths,
    monitor_slopes,
    multi_end_growth,
    perturbed_index_stability,
    run_growth,
    slab_index,
    slope_fit,
    write_growth_csv,
)
from delidx.profile import DelaunayFamily

CYL = DelaunayFamily.euclidean(2, 0.25)
E15 = DelaunayFamily.euclidean(2, 0.15)


def cyl_dirichlet(L):
    # eigenvalues (j pi / L)^2 - 4 of -u'' - 4u, j >= 1
    return math.ceil(2 * L / math.pi) - 1


def cyl_neumann(L):
    return math.ceil(2 * L / math.pi)


def test_cylinder_slab_index():
    assert slab_index(CYL, 10 * math.pi) == 19
    assert slab_index(CYL, 10.3 * math.pi) == 20
    assert slab_index(CYL, 10.3 * math.pi, "nn") == 21


@pytest.mark.parametrize("ell", [1, 2, 5])
def test_half_period_slabs(ell):
    P = delaunay_geometry(E15).period
    assert slab_index(E15, ell * P / 2) == ell - 1


def test_dirichlet_below_neumann():
    P = delaunay_geometry(E15).period
    for X in np.linspace(0.7, 4.3, 7) * P:
        assert slab_index(E15, X) <= slab_index(E15, X, "nn")


def test_index_monotone_in_length():
    lengths = growth_lengths(E15, 6)
    idx = [slab_index(E15, X) for X in lengths]
    assert all(b >= a for a, b in zip(idx, idx[1:]))


def test_slab_rejects_nonpositive_length():
    with pytest.raises(DomainError):
        slab_index(E15, 0.0)


def test_growth_lengths_step():
    P = delaunay_geometry(E15).period
    lengths = growth_lengths(E15, 4)
    assert len(lengths) == 12
    np.testing.assert_allclose(np.diff(lengths), P / 3)
    assert lengths[-1] == pytest.approx(4 * P)


def test_cylinder_slope_within_two_percent():
    exp = run_growth(CYL, growth_lengths(CYL, 20), min_periods=20)
    assert exp.target_slope == pytest.approx(2 / math.pi)
    assert exp.rel_err <= 0.02
    s = exp.summary()
    assert s["fitted_slope"] == exp.fitted_slope and s["num_ends"] == 1


def test_slope_errors_decrease():
    exp = run_growth(E15, growth_lengths(E15, 30), min_periods=30)
    errs = monitor_slopes(exp)
    assert errs[0] > errs[1] > errs[2]
    assert errs[-1] <= 0.05


def test_slope_fit_rejects_short_runs():
    exp = GrowthExperiment(E15, [1.0, 2.0])
    exp.results = [(1.0, 0), (2.0, 1)]
    with pytest.raises(DomainError, match="at least 5"):
        slope_fit(exp)
    P = delaunay_geometry(E15).period
    exp.results = [(j * P, 2 * j) for j in range(1, 8)]
    with pytest.raises(DomainError, match="span"):
        slope_fit(exp)
    assert slope_fit(exp, min_periods=7) == pytest.approx(2 / P)


def test_two_end_target():
    exp = GrowthExperiment(E15, [], ends=(E15, CYL))
    assert exp.target_slope == pytest.approx(2 / delaunay_geometry(E15).period + 2 / math.pi)
    assert exp.rel_err is None


def test_multi_end_two_cylinders():
    res = multi_end_growth([CYL, CYL], 20 * math.pi + 0.3)
    assert res.target == pytest.approx(4 / math.pi)
    assert res.indexes == [40, 40]
    assert res.rel_err < 0.02
    with pytest.raises(DomainError):
        multi_end_growth([], 1.0)


def test_multi_end_core_offset():
    a = multi_end_growth([E15], 10.0)
    b = multi_end_growth([E15], 10.0, core_offset=3)
    assert b.slope == pytest.approx(a.slope + 0.3)


def test_bracketing_example():
    P = delaunay_geometry(E15).period
    res = bracketing_counts(E15, 3.3 * P, 1.4 * P)
    assert res.ok
    assert res.dirichlet[0] >= res.dirichlet[1] + res.dirichlet[2]
    assert res.neumann[0] <= res.neumann[1] + res.neumann[2]
    with pytest.raises(DomainError):
        bracketing_counts(E15, 1.0, 1.5)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.5, 8.0), st.floats(0.05, 0.95))
def test_bracketing_cylinder_closed_form(X, frac):
    split = frac * X
    for L in (X, split, X - split):
        r = 2 * L / math.pi
        assume(abs(r - round(r)) > 0.02)
    res = bracketing_counts(CYL, X, split)
    assert res.dirichlet == (cyl_dirichlet(X), cyl_dirichlet(split), cyl_dirichlet(X - split))
    assert res.neumann == (cyl_neumann(X), cyl_neumann(split), cyl_neumann(X - split))
    assert res.ok


def test_perturbation_models():
    e, de, dde = exponential_perturbation(0.1, 2.0)(np.array([0.0, 1.0]))
    np.testing.assert_allclose(e, [0.1, 0.1 * math.exp(-2)])
    np.testing.assert_allclose(de, -2 * e)
    np.testing.assert_allclose(dde, 4 * e)
    x = np.linspace(-2, 2, 4001)
    w, dw, ddw = bump_perturbation(0.1, (-1.0, 1.0))(x)
    assert w.max() == pytest.approx(0.1)
    assert np.all(w[np.abs(x) >= 1] == 0)
    # derivatives against finite differences
    np.testing.assert_allclose(dw[1:-1], np.gradient(w, x)[1:-1], atol=1e-3)
    np.testing.assert_allclose(ddw[2:-2], np.gradient(dw, x)[2:-2], atol=1e-2)


def test_perturbed_end_validation():
    with pytest.raises(DomainError, match="a_-/10"):
        PerturbedEnd(E15, 0.05, (0.0, 5.0))
    with pytest.raises(DomainError):
        PerturbedEnd(DelaunayFamily.hyperbolic(2, 1.2, 0.1), 1e-4, (0.0, 5.0))
    with pytest.raises(DomainError):
        PerturbedEnd(E15, 1e-4, (0.0, 5.0), decay="gaussian")


def test_zero_perturbation_keeps_index():
    P = delaunay_geometry(E15).period
    res = perturbed_index_stability(PerturbedEnd(E15, 0.0, (0.0, 4 * P)))
    assert res.difference == 0 and res.c2_distance == 0.0
    assert res.index_base == 7


def test_small_perturbation_is_stable():
    P = delaunay_geometry(E15).period
    end = PerturbedEnd(E15, 1e-4, (0.0, 4.3 * P), decay="bump", support=(P, 3 * P))
    res = perturbed_index_stability(end)
    assert res.ok and res.difference == 0
    assert res.c2_distance > 0


def test_growth_csv():
    buf = io.StringIO()
    write_growth_csv([(1.5, 2, 3), (3.0, 4, 5)], buf)
    assert buf.getvalue().splitlines() == ["X,index_dirichlet,index_neumann", "1.5,2,3", "3,4,5"]
