"""Command-line entry point: ``delidx {profile,index,growth,verify}``.

Exit codes: 0 success, 1 check failure (with ``--strict``) or failed
acceptance criteria, 2 invalid input, 3 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import io
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import Settings, cut_points, delaunay_geometry
from .errors import DelidxError, DomainError
from .geometry import sup_B2V
from .growth import GrowthExperiment, growth_lengths, slab_index, slope_fit, write_growth_csv
from .index import KINDS, BlockSpec, block_index
from .profile import EUCLIDEAN, HYPERBOLIC, DelaunayFamily, write_profile_csv
from .spectrum import MAX_REFINEMENTS, NODES_PER_PERIOD, ZERO_BAND_CONST, parse_bc

log = logging.getLogger("delidx")

EXIT_OK, EXIT_CHECK, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3


@dataclass(frozen=True)
class RunConfig:
    space: str
    n: int
    H: float
    mus: tuple
    block: str
    ell: int
    bc: str | None
    length: float | None
    periods: float
    per_period: int
    settings: Settings
    out: str | None
    fmt: str
    strict: bool
    seed: int
    trials: int
    jobs: int
    only: tuple

    def families(self):
        if self.space == EUCLIDEAN:
            return [DelaunayFamily.euclidean(self.n, mu) for mu in self.mus]
        return [DelaunayFamily.hyperbolic(self.n, self.H, mu) for mu in self.mus]


def _mu_list(text):
    try:
        mus = tuple(float(t) for t in str(text).split(",") if t.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"--mu expects numbers separated by commas, got {text!r}") from exc
    if not mus:
        raise argparse.ArgumentTypeError("--mu needs at least one value")
    return mus


def _bool(text):
    if isinstance(text, bool):
        return text
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def _common(p):
    p.add_argument("--config", help="key=value file; command-line flags take precedence")
    p.add_argument("--space", choices=(EUCLIDEAN, HYPERBOLIC), default=EUCLIDEAN)
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--H", type=float, default=None, help="mean curvature (hyperbolic only)")
    p.add_argument("--mu", type=_mu_list, default=(0.15,), help="one value or a comma list")
    p.add_argument("--block", choices=KINDS, default="B")
    p.add_argument("--l", dest="ell", type=int, default=1)
    p.add_argument("--bc", choices=("dd", "nn", "dn", "nd"), default=None)
    p.add_argument("--length", type=float, default=None, help="slab length X")
    p.add_argument("--periods", type=float, default=30.0, help="longest growth slab, in periods")
    p.add_argument("--per-period", type=int, default=3, help="growth slabs per period")
    p.add_argument("--samples", type=int, default=4096, help="profile samples per period")
    p.add_argument("--nodes-per-period", type=int, default=NODES_PER_PERIOD)
    p.add_argument("--max-refinements", type=int, default=MAX_REFINEMENTS)
    p.add_argument("--zero-band-const", type=float, default=ZERO_BAND_CONST)
    p.add_argument("--out", default=None)
    p.add_argument("--format", dest="fmt", choices=("csv", "json"), default="json")
    p.add_argument("--strict", type=_bool, nargs="?", const=True, default=False)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--only", default=None, help="comma list of acceptance criteria")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser():
    parser = argparse.ArgumentParser(prog="delidx", description="Morse index of Delaunay unduloids.")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "profile": "profile curve CSV and summary JSON",
        "index": "index report of a block or slab",
        "growth": "slab indexes against length and the fitted slope",
        "verify": "run the acceptance suite",
    }
    subs = {}
    for name, text in helps.items():
        subs[name] = sub.add_parser(name, help=text)
        _common(subs[name])
    return parser, subs


def read_config_file(path):
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise DomainError(f"cannot read config file {path}: {exc}") from exc
    for num, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DomainError(f"{path}:{num}: expected key = value")
        key, value = (t.strip() for t in line.split("=", 1))
        values[key.lstrip("-").replace("-", "_")] = value
    return values


_ALIASES = {"l": "ell", "format": "fmt"}


def parse_args(argv):
    parser, subs = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        values = read_config_file(args.config)
        sp = subs[args.command]
        known = {a.dest for a in sp._actions}
        defaults = {}
        for key, value in values.items():
            dest = _ALIASES.get(key, key)
            if dest not in known or dest in ("config", "help"):
                raise DomainError(f"unknown config key {key!r}")
            defaults[dest] = value
        sp.set_defaults(**defaults)
        args = parser.parse_args(argv)
    return args


def make_config(args):
    """Validate flags into a :class:`RunConfig` before any computation."""
    if args.n < 2:
        raise DomainError(f"--n must be >= 2, got {args.n}")
    if args.space == HYPERBOLIC:
        H = 1.0 if args.H is None else args.H
        if not H > 1.0:
            raise DomainError(f"H must exceed 1 in hyperbolic space, got H = {H}")
    else:
        if args.H not in (None, 1.0):
            raise DomainError("Euclidean unduloids are normalised to H = 1; drop --H")
        H = 1.0
    for name in ("samples", "nodes_per_period", "jobs", "per_period", "trials"):
        if getattr(args, name) < 1:
            raise DomainError(f"--{name.replace('_', '-')} must be positive")
    if args.samples < 64 or args.nodes_per_period < 32:
        raise DomainError("--samples must be >= 64 and --nodes-per-period >= 32")
    if args.max_refinements < 1:
        raise DomainError("--max-refinements must be >= 1 (two grids are compared)")
    if not args.zero_band_const > 0:
        raise DomainError("--zero-band-const must be positive")
    if args.ell < 1:
        raise DomainError(f"--l must be >= 1, got {args.ell}")
    if args.block == "slab" and args.command == "index" and args.length is None:
        raise DomainError("--block slab needs --length")
    if args.length is not None and not args.length > 0:
        raise DomainError("--length must be positive")
    if not args.periods > 0:
        raise DomainError("--periods must be positive")
    if args.bc is not None:
        parse_bc(args.bc)
    settings = Settings(args.samples, args.nodes_per_period, args.max_refinements, args.zero_band_const)
    only = tuple(t.strip() for t in args.only.split(",") if t.strip()) if args.only else ()
    cfg = RunConfig(
        args.space, args.n, H, tuple(args.mu), args.block, args.ell, args.bc, args.length,
        args.periods, args.per_period, settings, args.out, args.fmt, bool(args.strict),
        args.seed, args.trials, args.jobs, only,
    )
    cfg.families()  # domain checks on every mu
    return cfg


def _pmap(fn, items, jobs):
    """Ordered map, in a process pool when ``jobs > 1``."""
    items = list(items)
    if jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, items))
    return [fn(it) for it in items]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def dumps(obj):
    # float repr is the shortest string that round-trips, at most 17 digits
    return json.dumps(_jsonable(obj), indent=2) + "\n"


def _emit(text, path, suffix=None):
    if path is None:
        sys.stdout.write(text)
        return
    target = Path(path)
    if suffix:
        target = target.with_suffix(suffix)
    try:
        target.write_text(text)
    except OSError as exc:
        raise DomainError(f"cannot write {target}: {exc}") from exc


# -- profile --------------------------------------------------------------


def _profile_job(job):
    fam, samples = job
    geom = delaunay_geometry(fam, samples)
    curve = geom.curve
    z1, z2 = cut_points(fam, samples)
    summary = {
        "space": fam.space,
        "n": fam.n,
        "H": fam.H,
        "mu": fam.mu,
        "a_minus": curve.turning_lo,
        "a_plus": curve.turning_hi,
        "period": curve.period,
        "zeta1": z1,
        "zeta2": z2,
        "sup_B2V": sup_B2V(fam),
        "conservation_residual": curve.conservation_residual,
    }
    buf = io.StringIO()
    write_profile_csv(curve, buf)
    return summary, buf.getvalue()


def cmd_profile(cfg):
    jobs = [(f, cfg.settings.samples) for f in cfg.families()]
    results = _pmap(_profile_job, jobs, cfg.jobs)
    summaries = [r[0] for r in results]
    summary = summaries[0] if len(summaries) == 1 else summaries
    if cfg.fmt == "csv":
        if cfg.out is None:
            for _, text in results:
                sys.stdout.write(text)
        else:
            for i, (_, text) in enumerate(results):
                path = Path(cfg.out)
                if len(results) > 1:
                    path = path.with_name(f"{path.stem}_{i}{path.suffix}")
                _emit(text, str(path))
            _emit(dumps(summary), cfg.out, ".json")
    else:
        _emit(dumps(summary), cfg.out)
    return EXIT_OK


# -- index ----------------------------------------------------------------


def _block(cfg, fam):
    if cfg.block == "slab":
        return BlockSpec.slab(fam, cfg.length, cfg.bc or "dd")
    if cfg.block == "C":
        return BlockSpec.neumann(fam, cfg.ell, bc=cfg.bc)
    return BlockSpec.dirichlet(fam, cfg.ell, bc=cfg.bc)


def _index_job(job):
    block, settings = job
    return block_index(block, settings).to_dict()


def cmd_index(cfg):
    jobs = [(_block(cfg, f), cfg.settings) for f in cfg.families()]
    reports = _pmap(_index_job, jobs, cfg.jobs)
    if cfg.fmt == "csv":
        buf = io.StringIO()
        buf.write("mu,k,mult,neg,zeros,lambda_min\n")
        for rep in reports:
            for m in rep["per_mode"]:
                lam = "" if m["lambda_min"] is None else repr(float(m["lambda_min"]))
                buf.write(f"{rep['mu']!r},{m['k']},{m['mult']},{m['neg']},{m['zeros']},{lam}\n")
        _emit(buf.getvalue(), cfg.out)
    else:
        _emit(dumps(reports[0] if len(reports) == 1 else reports), cfg.out)
    failed = [r for r in reports if any(v == "fail" for v in r["checks"].values())]
    for r in failed:
        log.warning("checks failed for mu=%r: %s", r["mu"], r["checks"])
    return EXIT_CHECK if cfg.strict and failed else EXIT_OK


# -- growth ---------------------------------------------------------------


def _growth_job(job):
    fam, X, settings = job
    return slab_index(fam, X, "dd", settings), slab_index(fam, X, "nn", settings)


def cmd_growth(cfg):
    """Dirichlet and Neumann slab indexes, summed over the ends in ``--mu``."""
    fams = cfg.families()
    longest = max(fams, key=lambda f: delaunay_geometry(f, cfg.settings.samples).period)
    if cfg.length is not None:
        P = delaunay_geometry(longest, cfg.settings.samples).period
        periods = cfg.length / P
    else:
        periods = cfg.periods
    lengths = growth_lengths(longest, periods, cfg.per_period)
    jobs = [(f, X, cfg.settings) for X in lengths for f in fams]
    counts = _pmap(_growth_job, jobs, cfg.jobs)
    rows = []
    for i, X in enumerate(lengths):
        chunk = counts[i * len(fams) : (i + 1) * len(fams)]
        rows.append((X, sum(c[0] for c in chunk), sum(c[1] for c in chunk)))
    exp = GrowthExperiment(longest, lengths, num_ends=len(fams), ends=tuple(fams))
    exp.results = [(X, d) for X, d, _ in rows]
    slope_fit(exp, min_periods=min(20.0, periods))
    summary = exp.summary()
    if cfg.fmt == "csv":
        buf = io.StringIO()
        write_growth_csv(rows, buf)
        _emit(buf.getvalue(), cfg.out)
        if cfg.out is not None:
            _emit(dumps(summary), cfg.out, ".json")
    else:
        _emit(dumps(summary), cfg.out)
    return EXIT_OK


# -- verify ---------------------------------------------------------------


def cmd_verify(cfg):
    from .acceptance import run_all

    results = run_all(cfg.only or None, seed=cfg.seed, trials=cfg.trials, jobs=cfg.jobs)
    for r in results:
        print(r.line())
    failed = [r.name for r in results if not r.passed]
    if cfg.out is not None:
        payload = [
            {"number": r.number, "name": r.name, "passed": r.passed, "expected": r.expected, "measured": r.measured}
            for r in results
        ]
        _emit(dumps(payload), cfg.out)
    if failed:
        print(f"failed: {', '.join(failed)}")
        return EXIT_CHECK
    print(f"all {len(results)} criteria passed")
    return EXIT_OK


COMMANDS = {"profile": cmd_profile, "index": cmd_index, "growth": cmd_growth, "verify": cmd_verify}


def main(argv=None):
    try:
        args = parse_args(argv)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = make_config(args)
        return COMMANDS[args.command](cfg)
    except DelidxError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
