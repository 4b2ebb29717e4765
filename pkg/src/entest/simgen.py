"""Dataset generators for the running example families and the sweep engine.

Generators are deterministic: the value of point ``i`` is a pure function
of (seed, i), drawn from counter-based SplitMix64 streams (see ``_rng``),
so generation order and threading cannot change a dataset.  The sweep
engine runs every configured estimator on the same per-trial dataset,
seeded by a hash of (master_seed, n, trial), and aggregates average errors
into a CSV-friendly table.
"""

import csv
import io
import math
import time
from dataclasses import dataclass, field, replace
from concurrent.futures import ThreadPoolExecutor
from typing import Optional, Sequence, Union

import numpy as np

from ._rng import derive_key, normal_block, uniform_block
from .errors import InsufficientDataError, InvalidParamError
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

EXAMPLES = ("iid", "quadratic", "alpha_mixture", "modified_alpha_mixture",
            "high_exp", "two_scale", "elliptical")

ESTIMATOR_NAMES = ("mean", "median", "modal", "shorth", "kmedian", "hybrid", "lepski")


@dataclass(frozen=True)
class GeneratorSpec:
    """Which example family to sample, with its parameters and a seed.

    Parameter roles by example:
      iid: sigma.  quadratic: c (point i has std dev c*i).
      alpha_mixture: alpha, c_log, sigma_good -- the first ceil(c_log ln n)
        points have std dev sigma_good, the rest n**alpha.
      modified_alpha_mixture: alpha, c_log -- iid draws from the two-uniform
        mixture with weight c_log ln n / n on U[-1, 1] and the rest on
        U[-n**alpha, n**alpha] (1-D only).
      high_exp: alpha, c_log, q_n_factor -- the first ceil(c_log ln n)
        points are U[-3i, 3i]; the rest follow the flat-inner / thin-outer
        density with inner height n**-alpha on [-1, 1] and outer height
        solved from the normalization on 1 < |x| <= q_n, q_n = q_n_factor*n
        (1-D only).
      two_scale: sigma1, sigma2, p -- ceil(n p) points at sigma2, rest sigma1.
      elliptical: axes -- N(0, diag(axes**2)), d = len(axes).
    """

    example: str
    n: int
    d: int = 1
    seed: int = 0
    sigma: float = 1.0
    c: float = 1.0
    alpha: float = 1.3
    c_log: float = 10.0
    sigma_good: float = 0.02
    q_n_factor: float = 10.0
    p: float = 0.5
    sigma1: float = 1.0
    sigma2: float = 1.0
    axes: tuple = ()

    def __post_init__(self):
        if self.example not in EXAMPLES:
            raise InvalidParamError(f"unknown example {self.example!r}")
        if self.n < 1 or self.d < 1:
            raise InvalidParamError("n and d must be >= 1")
        if self.alpha <= 0:
            raise InvalidParamError("alpha must be positive")
        if not 0.0 < self.p <= 1.0:
            raise InvalidParamError("p must be in (0, 1]")
        for name in ("sigma", "c", "sigma_good", "q_n_factor", "sigma1", "sigma2"):
            if getattr(self, name) <= 0:
                raise InvalidParamError(f"{name} must be positive")


def _low_noise_count(n: int, c_log: float) -> int:
    return min(n, math.ceil(c_log * math.log(n))) if n > 1 else 0


def generate(spec: GeneratorSpec) -> Union[Dataset1D, DatasetND]:
    """Sample the dataset described by spec (Dataset1D when d == 1)."""
    n, d = spec.n, spec.d
    key = derive_key(spec.seed)
    ex = spec.example

    if ex == "iid":
        values = spec.sigma * normal_block(key, n, d)
    elif ex == "quadratic":
        scales = spec.c * np.arange(1, n + 1, dtype=float)
        values = scales[:, None] * normal_block(key, n, d)
    elif ex == "alpha_mixture":
        k = _low_noise_count(n, spec.c_log)
        scales = np.full(n, float(n) ** spec.alpha)
        scales[:k] = spec.sigma_good
        values = scales[:, None] * normal_block(key, n, d)
    elif ex == "two_scale":
        k = min(n, math.ceil(n * spec.p))
        scales = np.full(n, spec.sigma1)
        scales[:k] = spec.sigma2
        values = scales[:, None] * normal_block(key, n, d)
    elif ex == "elliptical":
        axes = np.asarray(spec.axes, dtype=float)
        if axes.size != d or np.any(axes <= 0):
            raise InvalidParamError("elliptical needs positive axes of length d")
        values = axes[None, :] * normal_block(key, n, d)
    elif ex == "modified_alpha_mixture":
        if d != 1:
            raise InvalidParamError("modified_alpha_mixture is univariate")
        u = uniform_block(key, n, 2)
        w = min(1.0, spec.c_log * math.log(n) / n) if n > 1 else 1.0
        halfwidth = np.where(u[:, 0] < w, 1.0, float(n) ** spec.alpha)
        values = (halfwidth * (2.0 * u[:, 1] - 1.0))[:, None]
    elif ex == "high_exp":
        if d != 1:
            raise InvalidParamError("high_exp is univariate")
        values = _sample_high_exp(spec, key)[:, None]
    else:  # pragma: no cover
        raise InvalidParamError(f"unknown example {ex!r}")

    if d == 1:
        return Dataset1D(values[:, 0])
    return DatasetND(values)


def high_exp_outer_density(n: int, alpha: float, q_n: float) -> float:
    """Outer density solving 2 n^-alpha + 2 (q_n - 1) h = 1.

    Raises InvalidParamError when the solution violates 0 <= h <= n^-alpha/2
    (the flat-inner density must dominate the outer shelf).
    """
    if q_n <= 1.0:
        raise InvalidParamError("high_exp needs q_n > 1")
    inner = float(n) ** (-alpha)
    h = (1.0 - 2.0 * inner) / (2.0 * (q_n - 1.0))
    if h < 0 or h > inner / 2.0:
        raise InvalidParamError(
            f"outer density {h} outside [0, {inner / 2}]; adjust alpha or q_n_factor")
    return h


def _sample_high_exp(spec: GeneratorSpec, key: int) -> np.ndarray:
    n = spec.n
    q_n = spec.q_n_factor * n
    inner = float(n) ** (-spec.alpha)
    h = high_exp_outer_density(n, spec.alpha, q_n)
    k = _low_noise_count(n, spec.c_log)

    u = uniform_block(key, n, 2)
    sign = np.where(u[:, 0] < 0.5, -1.0, 1.0)
    v = 0.5 * u[:, 1]  # one-sided mass quantile in (0, 1/2)
    magnitude = np.where(v <= inner, v / inner, 1.0 + (v - inner) / h if h > 0 else 1.0)
    values = sign * magnitude

    idx = np.arange(1, k + 1, dtype=float)
    values[:k] = 3.0 * idx * (2.0 * u[:k, 1] - 1.0)
    return values


def mean_center(data) -> np.ndarray:
    if isinstance(data, Dataset1D):
        return np.asarray([data.values.mean()])
    return data.points.mean(axis=0)


def median_center(data) -> np.ndarray:
    """Coordinatewise sample median (middle order statistic for odd n)."""
    if isinstance(data, Dataset1D):
        return np.asarray([np.median(data.values)])
    return np.median(data.points, axis=0)


@dataclass(frozen=True)
class EstimatorConfig:
    """An estimator selection with optional parameter overrides.

    Unset parameters resolve at run time to the protocol defaults:
    modal r = 1 (d = 1) or sqrt(d); shorth k and hybrid k2 = ceil(5 d ln n);
    hybrid/kmedian k1 = ceil(sqrt(n) ln n); Lepski C = 5.
    """

    name: str
    r: Optional[float] = None
    k: Optional[int] = None
    k1: Optional[int] = None
    k2: Optional[int] = None
    C: Optional[float] = None
    label: Optional[str] = None

    def __post_init__(self):
        if self.name not in ESTIMATOR_NAMES:
            raise InvalidParamError(f"unknown estimator {self.name!r}")

    @property
    def key(self) -> str:
        return self.label or self.name


@dataclass(frozen=True)
class SweepSpec:
    """A Monte Carlo sweep: a generator template crossed with an n grid."""

    generator: GeneratorSpec
    n_grid: tuple
    trials: int
    estimators: tuple
    master_seed: int = 0

    def __post_init__(self):
        grid = tuple(int(v) for v in self.n_grid)
        ests = tuple(self.estimators)
        if not grid or not ests:
            raise InvalidParamError("n_grid and estimators must be nonempty")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise InvalidParamError("n_grid must be strictly ascending (no duplicates)")
        if self.trials < 1:
            raise InvalidParamError("trials must be >= 1")
        labels = [e.key for e in ests]
        if len(set(labels)) != len(labels):
            raise InvalidParamError("estimator labels must be unique")
        object.__setattr__(self, "n_grid", grid)
        object.__setattr__(self, "estimators", ests)


@dataclass(frozen=True)
class SweepRow:
    example: str
    d: int
    n: int
    estimator: str
    trials: int
    avg_error: float
    std_error: float
    p95_error: float
    elapsed_ms: int

    @property
    def skipped(self) -> bool:
        return self.trials == 0


CSV_HEADER = "example,d,n,estimator,T,avg_error,std_error,p95_error,elapsed_ms"


@dataclass(frozen=True)
class SweepResult:
    rows: tuple

    def __iter__(self):
        return iter(self.rows)

    def for_estimator(self, estimator: str):
        return [row for row in self.rows if row.estimator == estimator]

    def cell(self, n: int, estimator: str) -> SweepRow:
        for row in self.rows:
            if row.n == n and row.estimator == estimator:
                return row
        raise KeyError((n, estimator))

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        buf.write(CSV_HEADER + "\n")
        for row in self.rows:
            fields = [row.example, str(row.d), str(row.n), row.estimator,
                      str(row.trials), repr(row.avg_error), repr(row.std_error),
                      repr(row.p95_error), str(row.elapsed_ms)]
            buf.write(",".join(fields) + "\n")
        return buf.getvalue()

    @classmethod
    def from_csv_text(cls, text: str) -> "SweepResult":
        reader = csv.DictReader(io.StringIO(text))
        rows = []
        for rec in reader:
            rows.append(SweepRow(
                example=rec["example"], d=int(rec["d"]), n=int(rec["n"]),
                estimator=rec["estimator"], trials=int(rec["T"]),
                avg_error=float(rec["avg_error"]), std_error=float(rec["std_error"]),
                p95_error=float(rec["p95_error"]), elapsed_ms=int(rec["elapsed_ms"])))
        return cls(rows=tuple(rows))


def _resolve_and_run(cfg: EstimatorConfig, data, n: int, d: int) -> np.ndarray:
    """Run one estimator, returning its center as a length-d vector."""
    name = cfg.name
    if name == "mean":
        return mean_center(data)
    if name == "median":
        return median_center(data)

    def pick(value, default):
        return default if value is None else value

    if d == 1:
        if name == "modal":
            return np.asarray([modal_interval_1d(data, pick(cfg.r, 1.0)).center])
        if name == "shorth":
            return np.asarray([shorth_1d(data, pick(cfg.k, default_k2(n, 1))).center])
        if name == "kmedian":
            return np.asarray(
                [k_median_interval(data, pick(cfg.k1, default_k1(n))).midpoint])
        if name == "hybrid":
            k1 = pick(cfg.k1, default_k1(n))
            k2 = pick(cfg.k2, default_k2(n, 1))
            return np.asarray([hybrid_1d(data, k1, k2).center])
        if name == "lepski":
            return np.asarray([lepski_modal_1d(data, pick(cfg.C, 5.0)).center])
    else:
        if name == "modal":
            return modal_ball_efficient(data, pick(cfg.r, math.sqrt(d))).center
        if name == "shorth":
            return shorth_efficient(data, pick(cfg.k, default_k2(n, d))).center
        if name == "kmedian":
            return median_cuboid(data, pick(cfg.k1, default_k1(n))).midpoint
        if name == "hybrid":
            k1 = pick(cfg.k1, default_k1(n))
            k2 = pick(cfg.k2, default_k2(n, d))
            return hybrid_nd(data, k1, k2).center
        if name == "lepski":
            raise InvalidParamError("Lepski calibration is univariate only")
    raise InvalidParamError(f"unknown estimator {name!r}")  # pragma: no cover


def run_sweep(spec: SweepSpec, threads: int = 1) -> SweepResult:
    """Run the sweep and aggregate per-(n, estimator) error statistics.

    Every estimator sees the same dataset within a trial; trial datasets are
    seeded by derive_key(master_seed, n, trial).  Estimators whose
    parameters are invalid for some n produce a skipped row (T = 0, NaN
    statistics) rather than failing the sweep.  Results are independent of
    the thread count: trials are independent work items and aggregation
    happens in sorted (n, trial) order.
    """
    gen = spec.generator
    tasks = [(n, t) for n in spec.n_grid for t in range(spec.trials)]

    def run_task(task):
        n, t = task
        data = generate(replace(gen, n=n, seed=derive_key(spec.master_seed, n, t)))
        out = {}
        for cfg in spec.estimators:
            start = time.perf_counter()
            try:
                center = _resolve_and_run(cfg, data, n, gen.d)
            except InvalidParamError as exc:
                out[cfg.key] = (None, 0.0, str(exc))
                continue
            elapsed = time.perf_counter() - start
            out[cfg.key] = (float(np.linalg.norm(center)), elapsed, None)
        return task, out

    if threads == 1:
        raw = dict(map(run_task, tasks))
    else:
        workers = threads if threads > 0 else None
        with ThreadPoolExecutor(max_workers=workers) as pool:
            raw = dict(pool.map(run_task, tasks))

    rows = []
    for n in spec.n_grid:
        for cfg in spec.estimators:
            errors = []
            elapsed = 0.0
            skipped = False
            for t in range(spec.trials):
                err, dt, problem = raw[(n, t)][cfg.key]
                if problem is not None:
                    skipped = True
                    break
                errors.append(err)
                elapsed += dt
            if skipped or not errors:
                rows.append(SweepRow(gen.example, gen.d, n, cfg.key, 0,
                                     float("nan"), float("nan"), float("nan"), 0))
                continue
            arr = np.asarray(errors)
            T = arr.size
            std_err = float(arr.std(ddof=1) / math.sqrt(T)) if T > 1 else 0.0
            rows.append(SweepRow(gen.example, gen.d, n, cfg.key, T,
                                 float(arr.mean()), std_err,
                                 float(np.percentile(arr, 95.0)),
                                 int(round(elapsed * 1000.0))))
    return SweepResult(rows=tuple(rows))


def fit_loglog_slope(result: SweepResult, estimator: str):
    """OLS slope and intercept of ln(avg_error) against ln(n).

    Needs at least three non-skipped grid points with positive error.
    """
    pts = [(row.n, row.avg_error) for row in result.for_estimator(estimator)
           if row.trials > 0 and row.avg_error > 0]
    if len(pts) < 3:
        raise InsufficientDataError(
            f"estimator {estimator!r} has {len(pts)} usable points; need >= 3")
    ln_n = np.log([p[0] for p in pts])
    ln_e = np.log([p[1] for p in pts])
    slope, intercept = np.polyfit(ln_n, ln_e, 1)
    return float(slope), float(intercept)
