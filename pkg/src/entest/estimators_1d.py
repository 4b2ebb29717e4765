"""Univariate location estimators for entangled mixtures.

All estimators operate on a sorted copy of the data and are pure: identical
inputs give bit-identical outputs.  Window membership is always closed
(``[x - r, x + r]``), and ties are broken deterministically (smallest
point-span first where it applies, then leftmost window).
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import EmptyDataError, InvalidParamError

TIE_BROKEN = "TIE_BROKEN"
CLAMPED = "CLAMPED"
LEPSKI_FALLBACK = "LEPSKI_FALLBACK"


@dataclass(frozen=True)
class Dataset1D:
    """A batch of univariate observations, sorted ascending on construction."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.sort(np.asarray(self.values, dtype=float).ravel(), kind="stable")
        if arr.size == 0:
            raise EmptyDataError("dataset is empty")
        if not np.all(np.isfinite(arr)):
            raise InvalidParamError("dataset contains non-finite values")
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    def __len__(self) -> int:
        return self.values.size

    @property
    def n(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class LocationEstimate:
    """Estimator output: a center with its window half-width and window count."""

    center: float
    radius: float
    count: int
    flags: frozenset = field(default_factory=frozenset)

    def has_flag(self, name: str) -> bool:
        return name in self.flags


@dataclass(frozen=True)
class MedianInterval:
    """The interval spanned by the centermost k order statistics (1-based ranks)."""

    lo: float
    hi: float
    lo_index: int
    hi_index: int

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def contains(self, x: float) -> bool:
        return self.lo <= x <= self.hi


def _count_within(xs: np.ndarray, lo: float, hi: float) -> int:
    return int(np.searchsorted(xs, hi, side="right") - np.searchsorted(xs, lo, side="left"))


def modal_interval_1d(data: Dataset1D, r: float) -> LocationEstimate:
    """Center of the most populated closed window of half-width r.

    The count objective is piecewise constant with maxima attained by windows
    whose left edge sits at a data point, so the sweep over those n windows is
    exact.  Among maximizing windows the smallest point-span wins, remaining
    ties go to the leftmost window (flagged TIE_BROKEN).  The returned center
    is the midpoint of the extreme data points inside the chosen window.
    """
    if not r > 0:
        raise InvalidParamError("r must be positive")
    xs = data.values
    n = xs.size
    hi_idx = np.searchsorted(xs, xs + 2.0 * r, side="right") - 1
    counts = hi_idx - np.arange(n) + 1
    best = int(counts.max())
    spans = xs[hi_idx] - xs
    cand = counts == best
    min_span = spans[cand].min()
    winners = cand & (spans == min_span)
    i = int(np.argmax(winners))
    j = int(hi_idx[i])
    flags = frozenset([TIE_BROKEN]) if int(winners.sum()) > 1 else frozenset()
    return LocationEstimate(center=0.5 * (xs[i] + xs[j]), radius=float(r),
                            count=best, flags=flags)


def shorth_1d(data: Dataset1D, k: int) -> LocationEstimate:
    """Center of the shortest closed interval containing at least k points.

    The radius is half the smallest span ``x[i+k-1] - x[i]``; ties go to the
    smallest i (flagged TIE_BROKEN).  The count recounts every point inside
    the winning span, so it can exceed k when endpoints repeat.
    """
    xs = data.values
    n = xs.size
    if k < 2 or k > n:
        raise InvalidParamError(f"k must be in [2, {n}], got {k}")
    spans = xs[k - 1:] - xs[: n - k + 1]
    i = int(np.argmin(spans))
    min_span = spans[i]
    flags = frozenset([TIE_BROKEN]) if int((spans == min_span).sum()) > 1 else frozenset()
    lo, hi = xs[i], xs[i + k - 1]
    return LocationEstimate(center=0.5 * (lo + hi), radius=0.5 * (hi - lo),
                            count=_count_within(xs, lo, hi), flags=flags)


def k_median_interval(data: Dataset1D, k: int) -> MedianInterval:
    """Interval of the centermost k order statistics.

    Realizes the sign-sum definition: the upper endpoint is the smallest
    theta where the mean of sign(theta - X_i) reaches k/n, which is the
    order statistic of rank ceil((n + k) / 2); the lower endpoint is its
    rank-symmetric mirror.
    """
    xs = data.values
    n = xs.size
    if k < 1 or k > n:
        raise InvalidParamError(f"k must be in [1, {n}], got {k}")
    hi_index = (n + k + 1) // 2
    lo_index = n + 1 - hi_index
    return MedianInterval(lo=float(xs[lo_index - 1]), hi=float(xs[hi_index - 1]),
                          lo_index=lo_index, hi_index=hi_index)


def hybrid_1d(data: Dataset1D, k1: int, k2: int) -> LocationEstimate:
    """Shorth estimate clamped into the k1-median interval.

    Runs the k2-shorth and the k1-median screen separately; if the shorth
    center falls outside the median interval it is moved to the nearest
    endpoint (flagged CLAMPED).  Radius and count are carried over from the
    shorth estimate, so they describe the pre-clamp window.
    """
    shorth = shorth_1d(data, k2)
    interval = k_median_interval(data, k1)
    s = shorth.center
    clamped = min(max(s, interval.lo), interval.hi)
    flags = shorth.flags | ({CLAMPED} if clamped != s else set())
    return LocationEstimate(center=clamped, radius=shorth.radius,
                            count=shorth.count, flags=frozenset(flags))


def default_k1(n: int) -> int:
    """Median screen size ceil(sqrt(n) * ln n), clamped to [1, n]."""
    return max(1, min(n, math.ceil(math.sqrt(n) * math.log(n)))) if n > 1 else 1


def default_k2(n: int, d: int = 1) -> int:
    """Shorth size ceil(5 d ln n), clamped to [2, n]."""
    return max(2, min(n, math.ceil(5.0 * d * math.log(n)))) if n > 1 else 2


def lepski_modal_1d(data: Dataset1D, C: float = 5.0, tie_tol: float = 0.0,
                    dilation: float = 2.0, threshold_factor: float = 4.0) -> LocationEstimate:
    """Modal interval with the radius selected by pairwise-consistency comparisons.

    Shorth radii at k = max(2, ceil(C ln n / 2)) and k = ceil(2 C ln n)
    bracket the radius; the grid dilates the lower bracket geometrically up
    to twice the upper one.  The selected index is the smallest j whose
    modal estimate stays within ``threshold_factor * n * r_i / (C ln n)``
    (plus ``tie_tol``) of every estimate at larger grid radii.  If no index
    qualifies, the largest-radius estimate is returned flagged
    LEPSKI_FALLBACK.  A zero lower bracket (k duplicated points) returns the
    degenerate shorth center directly with radius 0.
    """
    xs = data.values
    n = xs.size
    if n < 8:
        raise InvalidParamError("Lepski calibration needs n >= 8")
    if not C > 0:
        raise InvalidParamError("C must be positive")
    if tie_tol < 0:
        raise InvalidParamError("tie_tol must be nonnegative")
    if dilation <= 1 or threshold_factor <= 0:
        raise InvalidParamError("dilation must exceed 1 and threshold_factor be positive")

    log_term = C * math.log(n)
    k_lo = max(2, math.ceil(log_term / 2.0))
    k_hi = min(n, math.ceil(2.0 * log_term))
    if k_lo > n:
        raise InvalidParamError(f"C ln n / 2 exceeds n = {n}")
    r_min = shorth_1d(data, k_lo).radius
    r_max = shorth_1d(data, k_hi).radius

    if r_min == 0.0:
        center = shorth_1d(data, k_lo).center
        return LocationEstimate(center=center, radius=0.0,
                                count=_count_within(xs, center, center),
                                flags=frozenset())

    grid = []
    r = r_min
    while r < 2.0 * r_max:
        grid.append(r)
        r *= dilation

    estimates = [modal_interval_1d(data, rj) for rj in grid]
    centers = [e.center for e in estimates]

    for j in range(len(grid)):
        ok = all(
            abs(centers[i] - centers[j]) <= threshold_factor * n * grid[i] / log_term + tie_tol
            for i in range(j + 1, len(grid))
        )
        if ok:
            return estimates[j]
    last = estimates[-1]
    return LocationEstimate(center=last.center, radius=last.radius, count=last.count,
                            flags=last.flags | {LEPSKI_FALLBACK})
