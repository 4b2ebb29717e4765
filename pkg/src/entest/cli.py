"""Command-line front end.

Subcommands: ``estimate`` (one estimator on a CSV of observations, JSON on
stdout), ``simulate`` (Monte Carlo sweep to a CSV file plus slope summary),
``regress`` (modal interval regression on a CSV of (x..., y) rows), and
``check-oracle`` (structural mass checks on a mixture model JSON).

Exit codes: 0 success, 1 oracle property failure, 2 I/O or malformed
input, 3 parameter violation, 4 desk-scale guard.  The environment
variable ENTEST_SEED overrides --seed when set.
"""

import argparse
import json
import math
import os
import sys
from dataclasses import replace

import numpy as np

from .errors import (
    EmptyDataError,
    EntestError,
    GridTooSmallError,
    InsufficientDataError,
    InvalidParamError,
    ProblemTooLargeError,
    UnreachableMassError,
)
from .estimators_1d import (
    Dataset1D,
    default_k1,
    default_k2,
    hybrid_1d,
    k_median_interval,
    lepski_modal_1d,
    modal_interval_1d,
    shorth_1d,
)
from .estimators_nd import (
    DatasetND,
    hybrid_nd,
    median_cuboid,
    modal_ball_efficient,
    shorth_efficient,
)
from .population import MixtureModel, check_lemma1_properties
from .regression import RegressionDataset, modal_regression
from .simgen import (
    ESTIMATOR_NAMES,
    EstimatorConfig,
    GeneratorSpec,
    SweepSpec,
    fit_loglog_slope,
    mean_center,
    median_center,
    run_sweep,
)

EXIT_OK = 0
EXIT_PROPERTY_FAIL = 1
EXIT_IO = 2
EXIT_PARAM = 3
EXIT_TOO_LARGE = 4

_EXAMPLE_FLAGS = {
    "iid": "iid",
    "quadratic": "quadratic",
    "alpha-mixture": "alpha_mixture",
    "modified-alpha-mixture": "modified_alpha_mixture",
    "high-exp": "high_exp",
    "two-scale": "two_scale",
    "elliptical": "elliptical",
}


def _read_matrix(path: str) -> np.ndarray:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            rows = [line.strip() for line in fh if line.strip()]
        if not rows:
            raise ValueError("file is empty")
        data = [[float(v) for v in line.split(",")] for line in rows]
        widths = {len(row) for row in data}
        if len(widths) != 1:
            raise ValueError("rows have inconsistent column counts")
        return np.asarray(data, dtype=float)
    except (OSError, ValueError) as exc:
        raise IOError(f"cannot read {path}: {exc}") from exc


def _effective_seed(seed: int) -> int:
    env = os.environ.get("ENTEST_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise InvalidParamError(f"ENTEST_SEED must be an integer, got {env!r}") from exc
    return seed


def _cmd_estimate(args) -> int:
    matrix = _read_matrix(args.input)
    n, d = matrix.shape
    name = args.estimator

    flags: list = []
    if name == "mean":
        center, radius, count = mean_center(_wrap(matrix)), 0.0, n
    elif name == "median":
        center, radius, count = median_center(_wrap(matrix)), 0.0, n
    elif d == 1:
        data = Dataset1D(matrix[:, 0])
        if name == "modal":
            est = modal_interval_1d(data, args.r if args.r is not None else 1.0)
        elif name == "shorth":
            est = shorth_1d(data, args.k if args.k is not None else default_k2(n, 1))
        elif name == "kmedian":
            interval = k_median_interval(
                data, args.k1 if args.k1 is not None else default_k1(n))
            est = None
            center = np.asarray([interval.midpoint])
            radius = 0.5 * (interval.hi - interval.lo)
            count = interval.hi_index - interval.lo_index + 1
        elif name == "hybrid":
            est = hybrid_1d(data,
                            args.k1 if args.k1 is not None else default_k1(n),
                            args.k2 if args.k2 is not None else default_k2(n, 1))
        elif name == "lepski":
            est = lepski_modal_1d(data, args.C if args.C is not None else 5.0)
        else:
            raise InvalidParamError(f"unknown estimator {name!r}")
        if name not in ("kmedian",):
            center = np.asarray([est.center])
            radius, count, flags = est.radius, est.count, sorted(est.flags)
    else:
        data = DatasetND(matrix)
        if name == "modal":
            est = modal_ball_efficient(
                data, args.r if args.r is not None else math.sqrt(d))
        elif name == "shorth":
            est = shorth_efficient(data, args.k if args.k is not None else default_k2(n, d))
        elif name == "kmedian":
            box = median_cuboid(data, args.k1 if args.k1 is not None else default_k1(n))
            est = None
            center = box.midpoint
            radius = 0.5 * box.diameter
            count = n
        elif name == "hybrid":
            est = hybrid_nd(data,
                            args.k1 if args.k1 is not None else default_k1(n),
                            args.k2 if args.k2 is not None else default_k2(n, d))
        elif name == "lepski":
            raise InvalidParamError("Lepski calibration is univariate only")
        else:
            raise InvalidParamError(f"unknown estimator {name!r}")
        if est is not None:
            center, radius, count, flags = est.center, est.radius, est.count, sorted(est.flags)

    payload = {
        "estimator": name,
        "center": [float(v) for v in np.atleast_1d(center)],
        "radius": float(radius),
        "count": int(count),
        "flags": list(flags),
    }
    print(json.dumps(payload))
    return EXIT_OK


def _wrap(matrix: np.ndarray):
    return Dataset1D(matrix[:, 0]) if matrix.shape[1] == 1 else DatasetND(matrix)


def _estimator_configs(args) -> tuple:
    configs = []
    for name in args.estimators.split(","):
        name = name.strip()
        if name not in ESTIMATOR_NAMES:
            raise InvalidParamError(f"unknown estimator {name!r}")
        configs.append(EstimatorConfig(name=name, r=args.r, k=args.k,
                                       k1=args.k1, k2=args.k2, C=args.C))
    return tuple(configs)


def _sweep_spec_from_json(path: str) -> SweepSpec:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise IOError(f"cannot read sweep spec {path}: {exc}") from exc
    gen = payload["generator"]
    generator = GeneratorSpec(
        example=gen["example"], n=int(gen.get("n", 1)), d=int(gen.get("d", 1)),
        seed=int(gen.get("seed", 0)),
        **{key: gen[key] for key in
           ("sigma", "c", "alpha", "c_log", "sigma_good", "q_n_factor",
            "p", "sigma1", "sigma2") if key in gen},
        axes=tuple(gen.get("axes", ())),
    )
    estimators = tuple(
        EstimatorConfig(name=e["name"], r=e.get("r"), k=e.get("k"), k1=e.get("k1"),
                        k2=e.get("k2"), C=e.get("C"), label=e.get("label"))
        for e in payload["estimators"]
    )
    return SweepSpec(generator=generator, n_grid=tuple(payload["n_grid"]),
                     trials=int(payload["trials"]), estimators=estimators,
                     master_seed=int(payload.get("master_seed", 0)))


def _cmd_simulate(args) -> int:
    if args.spec:
        spec = _sweep_spec_from_json(args.spec)
        spec = replace(spec, master_seed=_effective_seed(spec.master_seed))
    else:
        if args.example is None:
            raise InvalidParamError("either --spec or --example is required")
        generator = GeneratorSpec(
            example=_EXAMPLE_FLAGS[args.example], n=1, d=args.d,
            sigma=args.sigma, c=args.c, alpha=args.alpha, c_log=args.c_log,
            sigma_good=args.sigma_good, q_n_factor=args.q_n_factor, p=args.p,
            sigma1=args.sigma1, sigma2=args.sigma2,
            axes=tuple(float(v) for v in args.axes.split(",")) if args.axes else (),
        )
        n_grid = tuple(int(v) for v in args.n_grid.split(","))
        spec = SweepSpec(generator=generator, n_grid=n_grid, trials=args.trials,
                         estimators=_estimator_configs(args),
                         master_seed=_effective_seed(args.seed))

    result = run_sweep(spec, threads=args.threads)
    try:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(result.to_csv_text())
    except OSError as exc:
        raise IOError(f"cannot write {args.out}: {exc}") from exc

    for cfg in spec.estimators:
        try:
            slope, intercept = fit_loglog_slope(result, cfg.key)
            print(f"{cfg.key}: slope {slope:+.4f} intercept {intercept:+.4f}")
        except InsufficientDataError:
            print(f"{cfg.key}: slope n/a (needs >= 3 usable grid points)")
    print(f"wrote {args.out} ({len(result.rows)} rows)")
    return EXIT_OK


def _cmd_regress(args) -> int:
    matrix = _read_matrix(args.input)
    if matrix.shape[1] < 2:
        raise IOError(f"{args.input}: regression needs d+1 columns (x..., y)")
    data = RegressionDataset(xs=matrix[:, :-1], ys=matrix[:, -1])
    r = args.r
    if r is None:
        r = _default_band(data)
        print(f"using heuristic r = {r!r} (1.345 x median |LS residual|)", file=sys.stderr)
    est = modal_regression(data, r)
    payload = {
        "beta": [float(v) for v in est.beta],
        "count": int(est.count),
        "r": float(r),
        "flags": sorted(est.flags),
    }
    print(json.dumps(payload))
    return EXIT_OK


def _default_band(data: RegressionDataset) -> float:
    """Heuristic band half-width: 1.345 times the median absolute LS residual.

    This is a convenience outside the estimator's contract; the band is the
    caller's modelling choice and should be set explicitly when it matters.
    """
    beta, *_ = np.linalg.lstsq(data.xs, data.ys, rcond=None)
    resid = np.abs(data.ys - data.xs @ beta)
    mad = float(np.median(resid))
    if mad <= 0:
        mad = float(resid.max()) or 1e-9
    return 1.345 * mad


def _cmd_check_oracle(args) -> int:
    try:
        with open(args.model, "r", encoding="utf-8") as fh:
            model = MixtureModel.from_json(fh.read())
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        raise IOError(f"cannot read model {args.model}: {exc}") from exc
    grid = [float(v) for v in args.radius_grid.split(",")]
    x_grid = [float(v) for v in args.x_grid.split(",")] if args.x_grid else None
    report = check_lemma1_properties(model, grid, x_grid=x_grid)
    print(json.dumps(report.to_dict()))
    return EXIT_OK if report.all_passed else EXIT_PROPERTY_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="entest",
        description="Location estimators for entangled single-sample mixtures.")
    sub = parser.add_subparsers(dest="command", required=True)

    est = sub.add_parser("estimate", help="run one estimator on a CSV of observations")
    est.add_argument("--input", required=True, help="CSV with d columns, one row per observation")
    est.add_argument("--estimator", required=True, choices=list(ESTIMATOR_NAMES))
    est.add_argument("--r", type=float, default=None,
                     help="modal window half-width (default 1 or sqrt(d))")
    est.add_argument("--k", type=int, default=None, help="shorth k (default ceil(5 d ln n))")
    est.add_argument("--k1", type=int, default=None,
                     help="median screen size (default ceil(sqrt(n) ln n))")
    est.add_argument("--k2", type=int, default=None, help="hybrid shorth k (default as --k)")
    est.add_argument("--C", type=float, default=None, help="Lepski constant (default 5)")
    est.set_defaults(func=_cmd_estimate)

    sim = sub.add_parser("simulate", help="run a Monte Carlo sweep and write a CSV table")
    sim.add_argument("--spec", default=None, help="SweepSpec JSON file (overrides flags)")
    sim.add_argument("--example", choices=sorted(_EXAMPLE_FLAGS), default=None)
    sim.add_argument("--d", type=int, default=1)
    sim.add_argument("--sigma", type=float, default=1.0)
    sim.add_argument("--c", type=float, default=1.0)
    sim.add_argument("--alpha", type=float, default=1.3)
    sim.add_argument("--c-log", dest="c_log", type=float, default=10.0)
    sim.add_argument("--sigma-good", dest="sigma_good", type=float, default=0.02)
    sim.add_argument("--q-n-factor", dest="q_n_factor", type=float, default=10.0)
    sim.add_argument("--p", type=float, default=0.5)
    sim.add_argument("--sigma1", type=float, default=1.0)
    sim.add_argument("--sigma2", type=float, default=1.0)
    sim.add_argument("--axes", default=None, help="comma-separated axis scales (elliptical)")
    sim.add_argument("--n-grid", dest="n_grid", default="4096,8192,16384")
    sim.add_argument("--trials", type=int, default=20)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--estimators", default="mean,median,modal,shorth,hybrid")
    sim.add_argument("--r", type=float, default=None)
    sim.add_argument("--k", type=int, default=None)
    sim.add_argument("--k1", type=int, default=None)
    sim.add_argument("--k2", type=int, default=None)
    sim.add_argument("--C", type=float, default=None)
    sim.add_argument("--out", default="sweep.csv")
    sim.add_argument("--threads", type=int, default=0,
                     help="0 = auto; results do not depend on this setting")
    sim.set_defaults(func=_cmd_simulate)

    reg = sub.add_parser("regress", help="modal interval regression on (x..., y) CSV rows")
    reg.add_argument("--input", required=True)
    reg.add_argument("--r", type=float, default=None,
                     help="residual band half-width; heuristic when omitted")
    reg.set_defaults(func=_cmd_regress)

    chk = sub.add_parser("check-oracle", help="verify structural mass properties of a mixture")
    chk.add_argument("--model", required=True, help="MixtureModel JSON file")
    chk.add_argument("--radius-grid", dest="radius_grid", required=True,
                     help="comma-separated ascending radii")
    chk.add_argument("--x-grid", dest="x_grid", default=None,
                     help="comma-separated center offsets (defaults to the radius grid)")
    chk.set_defaults(func=_cmd_check_oracle)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARAM if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except IOError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ProblemTooLargeError as exc:
        print(f"error: {exc}\nreduce n or d, or subsample the data", file=sys.stderr)
        return EXIT_TOO_LARGE
    except (InvalidParamError, GridTooSmallError, UnreachableMassError,
            EmptyDataError, InsufficientDataError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARAM
    except EntestError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARAM


if __name__ == "__main__":
    sys.exit(main())
