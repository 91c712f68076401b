"""The acceptance suite: twelve numerical checks with their tolerances.

Each check returns a :class:`Criterion` holding the measured values next to
what was expected, so the CLI and the test-suite can print the same table.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .config import delaunay_geometry
from .errors import DomainError
from .geometry import (
    delaunay_coefficients,
    potential_bounds,
    translation_field_values,
)
from .growth import (
    PerturbedEnd,
    bracketing_counts,
    growth_lengths,
    monitor_slopes,
    multi_end_growth,
    perturbed_index_stability,
    run_growth,
)
from .index import PASS, BlockSpec, block_index, axis_field_on, nodal_count
from .profile import DelaunayFamily, euclidean_mu_max, hyperbolic_mu_max, ode_period, period
from .spectrum import ModeProblem, dense_eigenvalues, discretize, inertia, jacobi_residual, smallest_eigenvalues

EUCLIDEAN_SWEEP = ((2, (0.05, 0.15, 0.24)), (3, (0.02, 0.08, 0.14)))
HYPERBOLIC_H = 1.2
HYPERBOLIC_MUS = (0.05, 0.15, 0.25)
CHECKPOINTS = (10, 20, 30)


@dataclass
class Criterion:
    number: int
    name: str
    passed: bool
    measured: dict = field(default_factory=dict)
    expected: str = ""
    seconds: float = 0.0

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.number:2d} {self.name:<11s} {self.seconds:7.2f}s  {self.expected}"


def euclidean_families():
    return [DelaunayFamily.euclidean(n, mu) for n, mus in EUCLIDEAN_SWEEP for mu in mus]


def hyperbolic_families():
    return [DelaunayFamily.hyperbolic(2, HYPERBOLIC_H, mu) for mu in HYPERBOLIC_MUS]


def _label(fam):
    if fam.space == "euclidean":
        return f"E n={fam.n} mu={fam.mu:g}"
    return f"H n={fam.n} H={fam.H:g} mu={fam.mu:g}"


def _dirichlet_sweep(families, ells):
    bad = []
    for fam in families:
        for ell in ells:
            rep = block_index(BlockSpec.dirichlet(fam, ell), eigenvalues=False)
            if rep.total_index != ell - 1 or rep.checks["prop42"] != PASS:
                bad.append((_label(fam), ell, rep.total_index))
    return bad


def _neumann_sweep(families, ells):
    bad = []
    for fam in families:
        for ell in ells:
            rep = block_index(BlockSpec.neumann(fam, ell), eigenvalues=False)
            ok = rep.checks["prop43"] == PASS and rep.mode(0).neg == 2 * ell
            if fam.n == 2:
                ok = ok and rep.upper_bound <= 2 * ell + 4
            if not ok:
                bad.append((_label(fam), ell, rep.total_index, rep.upper_bound))
    return bad


def check_prop42():
    bad = _dirichlet_sweep(euclidean_families(), range(1, 7))
    return dict(failures=bad), not bad


def check_prop43():
    bad = _neumann_sweep(euclidean_families(), range(1, 5))
    return dict(failures=bad), not bad


def check_cylinder():
    cyl = DelaunayFamily.euclidean(2, 0.25)
    bad = []
    for ell in range(1, 9):
        d = block_index(BlockSpec.slab(cyl, ell * math.pi / 2, "dd"), eigenvalues=False).total_index
        nn = block_index(BlockSpec.slab(cyl, ell * math.pi, "nn"), eigenvalues=False).total_index
        if d != ell - 1 or nn != 2 * ell:
            bad.append((ell, d, nn))
    geom = delaunay_geometry(cyl)
    lam = smallest_eigenvalues(ModeProblem(geom, 0, (0.0, math.pi), "dd"), 1, nodes=4096)[0]
    ok = not bad and abs(lam + 3.0) <= 1e-4
    return dict(failures=bad, lambda_min=lam), ok


def _growth_errors(fam):
    exp = run_growth(fam, growth_lengths(fam, max(CHECKPOINTS)), "dd", min_periods=max(CHECKPOINTS))
    return monitor_slopes(exp, CHECKPOINTS), exp


def check_hyperbolic():
    fams = hyperbolic_families()
    bad_d = _dirichlet_sweep(fams, range(1, 7))
    bad_n = _neumann_sweep(fams, range(1, 5))
    errors = {}
    for fam in fams:
        errs, _ = _growth_errors(fam)
        errors[fam.mu] = errs
    slope_ok = all(e[-1] <= 0.05 for e in errors.values())
    return dict(dirichlet_failures=bad_d, neumann_failures=bad_n, slope_rel_err=errors), (
        not bad_d and not bad_n and slope_ok
    )


def check_slope():
    fam = DelaunayFamily.euclidean(2, 0.15)
    errs, exp = _growth_errors(fam)
    decreasing = all(b < a for a, b in zip(errs, errs[1:]))
    other = DelaunayFamily.euclidean(2, 0.24)
    X = 30 * max(delaunay_geometry(fam).period, delaunay_geometry(other).period)
    two = multi_end_growth([fam, other], X)
    ends_ok = two.rel_err <= 0.05 and 2 * 2 / math.pi <= two.slope <= 2
    ok = errs[-1] <= 0.05 and decreasing and ends_ok
    return dict(
        slope=exp.fitted_slope,
        target=exp.target_slope,
        rel_err=errs,
        two_end_slope=two.slope,
        two_end_target=two.target,
        two_end_rel_err=two.rel_err,
    ), ok


def check_bounds():
    worst = 0.0
    over = []
    for mu in np.linspace(0.0125, 0.25, 20):
        fam = DelaunayFamily.euclidean(2, float(mu))
        sup = potential_bounds(delaunay_coefficients(delaunay_geometry(fam).curve))
        worst = max(worst, abs(sup - 2 * (1 - 2 * mu)))
        if sup > 4:
            over.append(float(mu))
    for mu in np.linspace(0.005, 0.14, 20):
        fam = DelaunayFamily.euclidean(3, float(mu))
        if potential_bounds(delaunay_coefficients(delaunay_geometry(fam).curve)) > 9:
            over.append(float(mu))
    hyp = {}
    for mu in (1e-3, 0.01, 0.05, 0.15, 0.25):
        fam = DelaunayFamily.hyperbolic(2, HYPERBOLIC_H, mu)
        hyp[mu] = potential_bounds(delaunay_coefficients(delaunay_geometry(fam).curve))
    finite = all(np.isfinite(v) for v in hyp.values())
    neck = abs(hyp[1e-3] - 2.0) / 2.0
    ok = worst <= 1e-6 and not over and finite and neck <= 0.1
    return dict(euclidean_max_dev=worst, over_n2=over, hyperbolic=hyp, neck_rel_dev=neck), ok


def _order(residuals):
    r = np.asarray(residuals)
    return float(np.min(np.log2(r[:-1] / r[1:])))


def jacobi_orders(fam, levels=(257, 513, 1025)):
    geom = delaunay_geometry(fam)
    curve = geom.curve
    P = geom.period

    def translation(x):
        v, dv, _ = curve.evaluate(x)
        return translation_field_values(fam, x, v, dv)

    out = {}
    for k, fieldfn in ((0, geom.axis_field), (1, translation)):
        prob = ModeProblem(geom, k, (0.0, P), "nn")
        res = [jacobi_residual(prob, m, fieldfn) for m in levels]
        out[k] = _order(res)
    return out


def check_jacobi():
    fams = [
        DelaunayFamily.euclidean(2, 0.15),
        DelaunayFamily.euclidean(3, 0.08),
        DelaunayFamily.hyperbolic(2, HYPERBOLIC_H, 0.1),
        DelaunayFamily.hyperbolic(3, 1.5, 0.05),
    ]
    orders = {_label(f): jacobi_orders(f) for f in fams}
    ok = all(o >= 1.9 for d in orders.values() for o in d.values())
    return dict(orders=orders), ok


def check_period():
    mus = np.linspace(0.01, 0.25, 13)
    T = [period(DelaunayFamily.euclidean(2, float(m))) for m in mus]
    in_range = all(2 - 1e-12 <= t <= math.pi + 1e-12 for t in T)
    near = period(DelaunayFamily.euclidean(2, 0.2499))
    agree = max(
        abs(period(DelaunayFamily.euclidean(2, m)) - ode_period(DelaunayFamily.euclidean(2, m)))
        for m in (0.02, 0.08, 0.15, 0.22, 0.2499)
    )
    ok = in_range and abs(near - math.pi) <= 1e-3 and agree <= 1e-6
    return dict(T_min=min(T), T_max=max(T), T_02499=near, quad_vs_ode=agree), ok


def bracketing_trials(seed=0, trials=100):
    """Random ``(mu, X, split)`` bracketing checks; returns the failing trials."""
    rng = np.random.default_rng(seed)
    failures = []
    for _ in range(trials):
        mu = float(rng.uniform(0.02, 0.25))
        fam = DelaunayFamily.euclidean(2, mu)
        P = delaunay_geometry(fam).period
        X = float(rng.uniform(0.5, 6.0)) * P
        split = float(rng.uniform(0.05, 0.95)) * X
        res = bracketing_counts(fam, X, split)
        if not res.ok:
            failures.append((mu, X, split, res.dirichlet, res.neumann))
    return failures


def check_bracketing(seed=0, trials=100):
    failures = bracketing_trials(seed, trials)
    return dict(trials=trials, seed=seed, failures=failures), not failures


def random_problems(seed=0, count=50):
    """Seeded random mode problems with at most 200 nodes."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        if rng.random() < 0.5:
            n = int(rng.integers(2, 4))
            fam = DelaunayFamily.euclidean(n, float(rng.uniform(0.02, 0.95)) * euclidean_mu_max(n))
        else:
            H = float(rng.uniform(1.1, 2.0))
            fam = DelaunayFamily.hyperbolic(2, H, float(rng.uniform(0.05, 0.95)) * hyperbolic_mu_max(2, H))
        geom = delaunay_geometry(fam)
        P = geom.period
        lo = float(rng.uniform(0.0, P))
        hi = lo + float(rng.uniform(0.2, 3.0)) * P
        bc = "".join(rng.choice(["d", "n"], 2))
        k = int(rng.integers(0, 3))
        nodes = int(rng.integers(32, 201))
        out.append((ModeProblem(geom, k, (lo, hi), bc), nodes))
    return out


def check_oracle(seed=0):
    mismatches = []
    for prob, nodes in random_problems(seed):
        disc = discretize(prob, nodes)
        fast = inertia(disc.stiffness, disc.mass, 0.0)
        dense = int(np.count_nonzero(dense_eigenvalues(prob, nodes) < 0))
        if fast != dense:
            mismatches.append((prob.k, prob.interval, prob.bc, nodes, fast, dense))
    return dict(problems=50, mismatches=mismatches), not mismatches


def check_perturbed():
    fam = DelaunayFamily.euclidean(2, 0.15)
    T = delaunay_geometry(fam).period
    rows = {}
    ok = True
    for eps in (1e-3, 1e-4, 1e-5):
        res = perturbed_index_stability(PerturbedEnd(fam, eps, (0.0, 6 * T)), "dd")
        rows[eps] = (res.index_base, res.index_perturbed, res.zero_modes_cap)
        ok = ok and res.ok
    diffs = [p - b for b, p, _ in rows.values()]
    ok = ok and all(b <= a for a, b in zip(diffs, diffs[1:])) and diffs[-1] == 0
    return dict(base_perturbed_cap=rows), ok


def check_nodal():
    fams = [DelaunayFamily.euclidean(2, 0.15), DelaunayFamily.euclidean(3, 0.08), DelaunayFamily.hyperbolic(2, HYPERBOLIC_H, 0.1)]
    bad = []
    for fam in fams:
        for ell in range(1, 6):
            nb = nodal_count(axis_field_on(BlockSpec.dirichlet(fam, ell)))
            nc = nodal_count(axis_field_on(BlockSpec.neumann(fam, ell)))
            if nb != ell or nc != 2 * ell + 1:
                bad.append((_label(fam), ell, nb, nc))
    return dict(failures=bad), not bad


CRITERIA = {
    "prop42": (1, check_prop42, "Dirichlet B_l index = l-1, l=1..6, Euclidean sweeps"),
    "prop43": (2, check_prop43, "Neumann C_l index in [2l, 2l+2sum m], mode-0 = 2l, l=1..4"),
    "cylinder": (3, check_cylinder, "cylinder slabs l-1 / 2l; lambda_min = -3 within 1e-4"),
    "hyperbolic": (4, check_hyperbolic, "H=1.2 blocks as in 1-2; slope within 5% at 30 periods"),
    "slope": (5, check_slope, "slope within 5% at 30T, error decreasing; two ends within 5%"),
    "bounds": (6, check_bounds, "sup B^2V <= n^2, = 2(1-2mu) within 1e-6; hyperbolic -> 2 within 10%"),
    "jacobi": (7, check_jacobi, "Jacobi residual order >= 1.9, modes 0 and 1"),
    "period": (8, check_period, "2 <= T <= pi; T(0.2499) within 1e-3 of pi; quad vs ODE 1e-6"),
    "bracketing": (9, check_bracketing, "all bracketing inequalities on random trials"),
    "oracle": (10, check_oracle, "inertia count = dense count on 50 random problems"),
    "perturbed": (11, check_perturbed, "Ind(E) <= Ind(E~) <= Ind(E)+cap, difference -> 0"),
    "nodal": (12, check_nodal, "axis field: l domains on B_l, 2l+1 on C_l, l=1..5"),
}


def run_criterion(name, seed=0, trials=100):
    if name not in CRITERIA:
        raise DomainError(f"unknown criterion {name!r}; choose from {', '.join(CRITERIA)}")
    number, fn, expected = CRITERIA[name]
    kwargs = {}
    if name == "bracketing":
        kwargs = dict(seed=seed, trials=trials)
    elif name == "oracle":
        kwargs = dict(seed=seed)
    t0 = time.perf_counter()
    measured, ok = fn(**kwargs)
    return Criterion(number, name, bool(ok), measured, expected, time.perf_counter() - t0)


def run_all(only=None, seed=0, trials=100, jobs=1):
    names = list(CRITERIA) if not only else list(only)
    for name in names:
        if name not in CRITERIA:
            raise DomainError(f"unknown criterion {name!r}; choose from {', '.join(CRITERIA)}")
    if jobs > 1 and len(names) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(run_criterion, names, [seed] * len(names), [trials] * len(names)))
    return [run_criterion(name, seed, trials) for name in names]
