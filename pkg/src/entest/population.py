"""Population-level quantities for symmetric unimodal mixtures.

A mixture here is the average of ``n`` component distributions sharing a
common center: the object every estimator in this package is trying to
locate from one draw per component.  This module computes interval and
ball masses, quantile radii, and numeric verifications of the structural
monotonicity properties those masses satisfy.

Normal CDF values use ``Phi(x) = (1 + erf(x / sqrt(2))) / 2`` with the C
library ``erf``, which is accurate to about one ulp (relative error below
1e-15), so interval masses carry absolute error well under 1e-12.
"""

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ._rng import derive_key, normal_block
from .errors import (
    DimensionError,
    GridTooSmallError,
    InvalidParamError,
    UnreachableMassError,
)

_KINDS_1D = ("gaussian", "uniform", "piecewise_uniform")
_KINDS_ND = ("isotropic_gaussian_nd", "elliptical_gaussian_nd")


def _norm_cdf(z: float) -> float:
    return 0.5 * (1.0 + math.erf(z / math.sqrt(2.0)))


@dataclass(frozen=True)
class ComponentDist:
    """One mixture component, symmetric and unimodal about 0.

    Use the classmethod constructors; they validate the shape constraints.
    Piecewise-uniform components are described on [0, inf) and mirrored, so
    ``densities[j]`` applies to both ``[b_j, b_{j+1}]`` and its reflection,
    and the full-line integral is ``2 * sum(d_j * (b_{j+1} - b_j)) = 1``.
    """

    kind: str
    sigma: float = 0.0
    halfwidth: float = 0.0
    breakpoints: tuple = ()
    densities: tuple = ()
    dim: int = 1
    scale: float = 0.0
    axes: tuple = ()

    @classmethod
    def gaussian(cls, sigma: float) -> "ComponentDist":
        if not sigma > 0:
            raise InvalidParamError("gaussian sigma must be positive")
        return cls(kind="gaussian", sigma=float(sigma))

    @classmethod
    def uniform(cls, halfwidth: float) -> "ComponentDist":
        if not halfwidth > 0:
            raise InvalidParamError("uniform halfwidth must be positive")
        return cls(kind="uniform", halfwidth=float(halfwidth))

    @classmethod
    def piecewise_uniform(cls, breakpoints: Sequence[float],
                          densities: Sequence[float]) -> "ComponentDist":
        b = tuple(float(v) for v in breakpoints)
        d = tuple(float(v) for v in densities)
        if len(b) != len(d) + 1 or len(d) < 1:
            raise InvalidParamError("need len(breakpoints) == len(densities) + 1")
        if b[0] != 0.0:
            raise InvalidParamError("mirrored representation starts at 0")
        if any(b[j + 1] <= b[j] for j in range(len(d))):
            raise InvalidParamError("breakpoints must be strictly ascending")
        if any(v < 0 for v in d):
            raise InvalidParamError("densities must be nonnegative")
        if any(d[j + 1] > d[j] for j in range(len(d) - 1)):
            raise InvalidParamError("densities must be nonincreasing in |x|")
        total = 2.0 * sum(dj * (b[j + 1] - b[j]) for j, dj in enumerate(d))
        if abs(total - 1.0) > 1e-9:
            raise InvalidParamError(f"density integrates to {total}, not 1")
        return cls(kind="piecewise_uniform", breakpoints=b, densities=d)

    @classmethod
    def isotropic_gaussian(cls, sigma: float, dim: int) -> "ComponentDist":
        if not sigma > 0:
            raise InvalidParamError("sigma must be positive")
        if dim < 1:
            raise InvalidParamError("dim must be >= 1")
        return cls(kind="isotropic_gaussian_nd", sigma=float(sigma), dim=int(dim))

    @classmethod
    def elliptical_gaussian(cls, scale: float, axes: Sequence[float]) -> "ComponentDist":
        ax = tuple(float(a) for a in axes)
        if not scale > 0 or any(a <= 0 for a in ax):
            raise InvalidParamError("scale and axes must be positive")
        return cls(kind="elliptical_gaussian_nd", scale=float(scale),
                   dim=len(ax), axes=ax)

    @property
    def ndim(self) -> int:
        return self.dim if self.kind in _KINDS_ND else 1

    def support_bound(self) -> float:
        """Outer edge of the support, or inf for Gaussian kinds."""
        if self.kind == "uniform":
            return self.halfwidth
        if self.kind == "piecewise_uniform":
            return self.breakpoints[-1]
        return math.inf

    def scale_hint(self) -> float:
        """A finite magnitude comparable to the component's spread."""
        if self.kind in ("gaussian", "isotropic_gaussian_nd"):
            return self.sigma
        if self.kind == "elliptical_gaussian_nd":
            return self.scale * max(self.axes)
        return self.support_bound()

    def cdf(self, t: float) -> float:
        """CDF at t of the component centered at 0 (1-D kinds only)."""
        if self.kind == "gaussian":
            return _norm_cdf(t / self.sigma)
        if self.kind == "uniform":
            h = self.halfwidth
            return min(1.0, max(0.0, (t + h) / (2.0 * h)))
        if self.kind == "piecewise_uniform":
            return 0.5 + math.copysign(self._half_mass(abs(t)), t)
        raise DimensionError(f"{self.kind} has no univariate CDF")

    def _half_mass(self, t: float) -> float:
        b, d = self.breakpoints, self.densities
        acc = 0.0
        for j, dj in enumerate(d):
            if t <= b[j]:
                break
            acc += dj * (min(t, b[j + 1]) - b[j])
        return acc

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        if self.kind == "gaussian":
            out["sigma"] = self.sigma
        elif self.kind == "uniform":
            out["halfwidth"] = self.halfwidth
        elif self.kind == "piecewise_uniform":
            out["breakpoints"] = list(self.breakpoints)
            out["densities"] = list(self.densities)
        elif self.kind == "isotropic_gaussian_nd":
            out["sigma"] = self.sigma
            out["dim"] = self.dim
        else:
            out["scale"] = self.scale
            out["axes"] = list(self.axes)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ComponentDist":
        kind = data["kind"]
        if kind == "gaussian":
            return cls.gaussian(data["sigma"])
        if kind == "uniform":
            return cls.uniform(data["halfwidth"])
        if kind == "piecewise_uniform":
            return cls.piecewise_uniform(data["breakpoints"], data["densities"])
        if kind == "isotropic_gaussian_nd":
            return cls.isotropic_gaussian(data["sigma"], data["dim"])
        if kind == "elliptical_gaussian_nd":
            return cls.elliptical_gaussian(data["scale"], data["axes"])
        raise InvalidParamError(f"unknown component kind {kind!r}")


@dataclass(frozen=True)
class MixtureModel:
    """The population mixture: components with multiplicities and a common center.

    ``n`` is the implied sample size, i.e. the sum of multiplicities; the
    mixture weight of a component is multiplicity / n.
    """

    center: tuple
    components: tuple  # of (ComponentDist, multiplicity)

    def __post_init__(self):
        center = tuple(float(c) for c in np.atleast_1d(self.center))
        comps = tuple((c, int(m)) for c, m in self.components)
        if not comps:
            raise InvalidParamError("mixture needs at least one component")
        if any(m < 1 for _, m in comps):
            raise InvalidParamError("multiplicities must be positive integers")
        d = comps[0][0].ndim
        if any(c.ndim != d for c, _ in comps):
            raise DimensionError("components disagree on dimension")
        if len(center) != d:
            raise DimensionError(f"center has length {len(center)}, components are {d}-D")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "components", comps)

    @property
    def n(self) -> int:
        return sum(m for _, m in self.components)

    @property
    def ndim(self) -> int:
        return self.components[0][0].ndim

    def to_json(self) -> str:
        payload = {
            "center": list(self.center),
            "components": [dict(c.to_dict(), mult=m) for c, m in self.components],
        }
        return json.dumps(payload)

    @classmethod
    def from_json(cls, text) -> "MixtureModel":
        data = json.loads(text) if isinstance(text, str) else text
        comps = tuple(
            (ComponentDist.from_dict(entry), entry.get("mult", 1))
            for entry in data["components"]
        )
        return cls(center=tuple(data["center"]), components=comps)


def interval_mass(model: MixtureModel, x: float, r: float) -> float:
    """Mixture mass of the interval [x - r, x + r] (1-D models).

    Exact per component: Gaussians through the normal CDF, uniform and
    piecewise pieces in closed form.
    """
    if model.ndim != 1:
        raise DimensionError("interval_mass needs a 1-D model")
    if r < 0:
        raise InvalidParamError("radius must be nonnegative")
    mu = model.center[0]
    a, b = x - r - mu, x + r - mu
    n = model.n
    acc = 0.0
    for comp, mult in model.components:
        acc += mult * (comp.cdf(b) - comp.cdf(a))
    return acc / n


def radius_for_mass(model: MixtureModel, target_mass: float, tol: float = 1e-10) -> float:
    """Radius r with |mass of [center - r, center + r] - target_mass| <= tol.

    Bisection on the continuous nondecreasing mass function.  The initial
    bracket is [0, max(10 * largest scale, largest support bound)], doubled
    until it covers the target.  The quantile radius r_k of a size-n mixture
    is ``radius_for_mass(model, k / n)``.
    """
    if not target_mass > 0:
        raise InvalidParamError("target_mass must be positive")
    if not tol > 0:
        raise InvalidParamError("tol must be positive")
    center = model.center[0]

    def mass(r):
        return interval_mass(model, center, r)

    support = max(c.support_bound() for c, _ in model.components)
    if target_mass >= 1.0 and (math.isinf(support) or target_mass > 1.0):
        raise UnreachableMassError(f"target mass {target_mass} is not attainable")

    hi = max(10.0 * max(c.scale_hint() for c, _ in model.components),
             0.0 if math.isinf(support) else support)
    if hi <= 0:
        hi = 1.0
    doublings = 0
    while mass(hi) < target_mass:
        if not math.isinf(support) and hi >= support:
            raise UnreachableMassError(
                f"bounded mixture holds {mass(hi)} < requested {target_mass}")
        hi *= 2.0
        doublings += 1
        if doublings > 200:
            raise UnreachableMassError(f"target mass {target_mass} is not attainable")

    lo = 0.0
    value = mass(hi)
    mid = hi
    for _ in range(500):
        mid = 0.5 * (lo + hi)
        value = mass(mid)
        if abs(value - target_mass) <= tol:
            return mid
        if value < target_mass:
            lo = mid
        else:
            hi = mid
    return mid


@dataclass(frozen=True)
class BallMassEstimate:
    mass: float
    std_error: float
    samples: int

    def __iter__(self):
        return iter((self.mass, self.std_error))


def ball_mass_nd(model: MixtureModel, center: Sequence[float], r: float,
                 mc_samples: int = 100_000, seed: int = 0) -> BallMassEstimate:
    """Monte Carlo estimate of the mixture mass of the ball B(center, r).

    Deterministic given ``seed``.  Sample counts are allocated to components
    exactly in proportion to their multiplicities (largest-remainder), so the
    estimate is stratified over the mixture.
    """
    d = model.ndim
    if d < 2:
        raise DimensionError("ball_mass_nd needs a model with d > 1")
    center = np.asarray(center, dtype=float)
    if center.shape != (d,):
        raise DimensionError(f"center must have length {d}")
    if mc_samples < 10_000:
        raise InvalidParamError("mc_samples must be at least 10^4")
    if r < 0:
        raise InvalidParamError("radius must be nonnegative")

    n = model.n
    raw = [mc_samples * m / n for _, m in model.components]
    counts = [int(v) for v in raw]
    remainders = sorted(range(len(raw)), key=lambda i: (raw[i] - counts[i], -i),
                        reverse=True)
    for i in remainders[: mc_samples - sum(counts)]:
        counts[i] += 1

    mu = np.asarray(model.center, dtype=float)
    r2 = r * r
    hits = 0
    for idx, ((comp, _), cnt) in enumerate(zip(model.components, counts)):
        if cnt == 0:
            continue
        z = normal_block(derive_key(seed, idx), cnt, d)
        if comp.kind == "isotropic_gaussian_nd":
            pts = mu + comp.sigma * z
        elif comp.kind == "elliptical_gaussian_nd":
            pts = mu + comp.scale * np.asarray(comp.axes) * z
        else:
            raise DimensionError(f"component kind {comp.kind} is not multivariate")
        delta = pts - center
        hits += int(np.count_nonzero(np.einsum("ij,ij->i", delta, delta) <= r2))

    p = hits / mc_samples
    return BallMassEstimate(mass=p, std_error=math.sqrt(p * (1.0 - p) / mc_samples),
                            samples=mc_samples)


@dataclass(frozen=True)
class PropertyCheck:
    name: str
    passed: bool
    witness: Optional[dict] = None

    def to_dict(self) -> dict:
        out = {"name": self.name, "passed": self.passed}
        if self.witness is not None:
            out["witness"] = self.witness
        return out


@dataclass(frozen=True)
class PropertyReport:
    checks: tuple

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __iter__(self):
        return iter(self.checks)

    def to_dict(self) -> dict:
        return {"all_passed": self.all_passed,
                "checks": [c.to_dict() for c in self.checks]}


def check_lemma1_properties(model: MixtureModel, radius_grid: Sequence[float],
                            x_grid: Optional[Sequence[float]] = None) -> PropertyReport:
    """Numerically verify the structural mass inequalities on a radius grid.

    Checks, with the first failing witness recorded:
      * ``ratio_strictly_decreasing``: r -> mass([-r, r]) / r strictly
        decreases along the grid.
      * ``annulus_mass_bound``: the window of half-width r centered at
        distance r' holds strictly less than (r / r') of the central
        r'-window mass, for every grid pair r < r'.
      * ``offcenter_nonincreasing``: for each grid radius, the window mass
        does not increase as the center moves away from the mixture center
        (offsets default to {0} united with the radius grid).
    """
    grid = [float(r) for r in radius_grid]
    if len(grid) < 2:
        raise GridTooSmallError("radius grid needs at least 2 points")
    if any(r <= 0 for r in grid) or any(b <= a for a, b in zip(grid, grid[1:])):
        raise InvalidParamError("radius grid must be ascending and positive")
    mu = model.center[0]
    offsets = sorted({0.0} | {abs(float(x)) for x in (x_grid if x_grid is not None else grid)})

    central = {r: interval_mass(model, mu, r) for r in grid}

    checks = []

    witness = None
    for a, b in zip(grid, grid[1:]):
        if not central[a] / a > central[b] / b:
            witness = {"r": a, "r_prime": b,
                       "ratio_r": central[a] / a, "ratio_r_prime": central[b] / b}
            break
    checks.append(PropertyCheck("ratio_strictly_decreasing", witness is None, witness))

    witness = None
    for i, r in enumerate(grid):
        for rp in grid[i + 1:]:
            lhs = interval_mass(model, mu + rp, r)
            rhs = (r / rp) * central[rp]
            if not lhs < rhs:
                witness = {"r": r, "r_prime": rp, "lhs": lhs, "rhs": rhs}
                break
        if witness:
            break
    checks.append(PropertyCheck("annulus_mass_bound", witness is None, witness))

    witness = None
    for r in grid:
        masses = [interval_mass(model, mu + x, r) for x in offsets]
        for (x1, m1), (x2, m2) in zip(zip(offsets, masses), zip(offsets[1:], masses[1:])):
            if m2 > m1 + 1e-12:
                witness = {"r": r, "x": x1, "x_prime": x2, "mass_x": m1, "mass_x_prime": m2}
                break
        if witness:
            break
    checks.append(PropertyCheck("offcenter_nonincreasing", witness is None, witness))

    return PropertyReport(checks=tuple(checks))
