"""Multivariate estimators in their data-point-centered (efficient) form.

The modal ball and shorth search only over balls centered at data points,
which keeps the cost at O(n^2 d) worst case while preserving the error
rates of the free-center versions up to a factor of two in the radius.
The scans below prune candidate pairs through a sort on the first
coordinate (|dx0| > r already rules a pair out), which changes nothing
about the result, only the work; no spatial index is built.  Internally
all comparisons use squared distances, with exact ties resolved by the
smallest original row index.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import EmptyDataError, InvalidParamError
from .estimators_1d import CLAMPED, TIE_BROKEN, k_median_interval, Dataset1D

_BLOCK_CELLS = 4_000_000


@dataclass(frozen=True)
class DatasetND:
    """An n x d batch of observations."""

    points: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.points, dtype=float)
        if arr.ndim != 2:
            raise InvalidParamError("points must be a 2-D array")
        if arr.shape[0] == 0:
            raise EmptyDataError("dataset is empty")
        if not np.all(np.isfinite(arr)):
            raise InvalidParamError("dataset contains non-finite values")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "points", arr)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.n


@dataclass(frozen=True)
class LocationEstimateND:
    center: np.ndarray
    radius: float
    count: int
    center_index: Optional[int] = None
    flags: frozenset = field(default_factory=frozenset)

    def has_flag(self, name: str) -> bool:
        return name in self.flags


@dataclass(frozen=True)
class Cuboid:
    """Axis-aligned box; lo <= hi componentwise."""

    lo: np.ndarray
    hi: np.ndarray

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lo) and np.all(x <= self.hi))

    def clamp(self, x) -> np.ndarray:
        return np.clip(np.asarray(x, dtype=float), self.lo, self.hi)

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(self.hi - self.lo))

    @property
    def midpoint(self) -> np.ndarray:
        return 0.5 * (self.lo + self.hi)


def _sorted_by_first_coord(pts: np.ndarray):
    order = np.argsort(pts[:, 0], kind="stable")
    return order, pts[order]


def _dist_sq(block: np.ndarray, cand: np.ndarray) -> np.ndarray:
    """Squared distances between every row of block and every row of cand."""
    bn = np.einsum("ij,ij->i", block, block)
    cn = np.einsum("ij,ij->i", cand, cand)
    d2 = bn[:, None] + cn[None, :] - 2.0 * (block @ cand.T)
    np.maximum(d2, 0.0, out=d2)
    return d2


def _ball_counts(pts: np.ndarray, r: float) -> np.ndarray:
    """Number of points within closed distance r of every point (self included)."""
    n = pts.shape[0]
    order, sp = _sorted_by_first_coord(pts)
    x0 = sp[:, 0]
    lo = np.searchsorted(x0, x0 - r, side="left")
    hi = np.searchsorted(x0, x0 + r, side="right")
    r2 = r * r
    counts_sorted = np.empty(n, dtype=np.int64)
    a = 0
    while a < n:
        b = min(n, a + 2048)
        while b - a > 1 and (b - a) * (hi[b - 1] - lo[a]) > _BLOCK_CELLS:
            b = a + max(1, (b - a) // 2)
        s0, s1 = int(lo[a]), int(hi[b - 1])
        d2 = _dist_sq(sp[a:b], sp[s0:s1])
        counts_sorted[a:b] = np.count_nonzero(d2 <= r2, axis=1)
        a = b
    counts = np.empty(n, dtype=np.int64)
    counts[order] = counts_sorted
    return counts


def modal_ball_efficient(data: DatasetND, r: float) -> LocationEstimateND:
    """Data point whose closed r-ball holds the most points.

    Exhaustive over all n candidate centers; ties go to the smallest row
    index (flagged TIE_BROKEN).
    """
    if not r > 0:
        raise InvalidParamError("r must be positive")
    pts = data.points
    counts = _ball_counts(pts, float(r))
    best = int(counts.max())
    i = int(np.argmax(counts))
    ties = int(np.count_nonzero(counts == best)) > 1
    return LocationEstimateND(center=pts[i].copy(), radius=float(r), count=best,
                              center_index=i,
                              flags=frozenset([TIE_BROKEN]) if ties else frozenset())


def _kth_ball_sq_full(pts: np.ndarray, k: int) -> np.ndarray:
    """Squared distance from every point to its k-th nearest (self is 1st)."""
    n = pts.shape[0]
    out = np.empty(n)
    block = max(1, _BLOCK_CELLS // n)
    for a in range(0, n, block):
        b = min(n, a + block)
        d2 = _dist_sq(pts[a:b], pts)
        out[a:b] = np.partition(d2, k - 1, axis=1)[:, k - 1]
    return out


def _coord_kth_neighbor(x0: np.ndarray, k: int) -> np.ndarray:
    """k-th smallest |x0_j - x0_i| per sorted position (self counts, distance 0)."""
    n = x0.size
    best = np.full(n, np.inf)
    idx = np.arange(n)
    for w in range(k):
        left = idx - (k - 1) + w
        right = idx + w
        valid = (left >= 0) & (right <= n - 1)
        span = np.full(n, np.inf)
        l = left[valid]
        rr = right[valid]
        span[valid] = np.maximum(x0[idx[valid]] - x0[l], x0[rr] - x0[idx[valid]])
        np.minimum(best, span, out=best)
    return best


def shorth_efficient(data: DatasetND, k: int) -> LocationEstimateND:
    """Data point whose k-point ball has the smallest radius.

    For each candidate center the radius is the distance to its k-th nearest
    point, the center itself counting as the first.  Ties go to the smallest
    row index.  Large inputs are pruned through first-coordinate lower
    bounds; small ones take the plain O(n^2 d) scan.
    """
    pts = data.points
    n = pts.shape[0]
    if k < 2 or k > n:
        raise InvalidParamError(f"k must be in [2, {n}], got {k}")

    if n <= 4096 or k > 512:
        kth_sq = _kth_ball_sq_full(pts, k)
        best_sq = kth_sq.min()
        i = int(np.argmin(kth_sq))
        ties = int(np.count_nonzero(kth_sq == best_sq)) > 1
    else:
        i, best_sq, ties = _shorth_pruned(pts, k)

    radius = float(np.sqrt(best_sq))
    delta = pts - pts[i]
    count = int(np.count_nonzero(np.einsum("ij,ij->i", delta, delta) <= best_sq))
    return LocationEstimateND(center=pts[i].copy(), radius=radius, count=count,
                              center_index=i,
                              flags=frozenset([TIE_BROKEN]) if ties else frozenset())


def _shorth_pruned(pts: np.ndarray, k: int):
    n = pts.shape[0]
    order, sp = _sorted_by_first_coord(pts)
    x0 = sp[:, 0]
    lower = _coord_kth_neighbor(x0, k)

    seeds = np.argsort(lower, kind="stable")[: min(8, n)]
    bound_sq = np.inf
    results = []
    for p in seeds:
        d2 = _dist_sq(sp[p: p + 1], sp)[0]
        val = float(np.partition(d2, k - 1)[k - 1])
        bound_sq = min(bound_sq, val)
        results.append((val, int(order[p])))

    cand = np.flatnonzero(lower * lower <= bound_sq)
    bd = float(np.sqrt(bound_sq))
    lo = np.searchsorted(x0, x0[cand] - bd, side="left")
    hi = np.searchsorted(x0, x0[cand] + bd, side="right")
    wide_enough = (hi - lo) >= k  # narrower windows cannot beat the bound
    cand, lo, hi = cand[wide_enough], lo[wide_enough], hi[wide_enough]

    a = 0
    m = cand.size
    while a < m:
        b = min(m, a + 2048)
        while b - a > 1 and (b - a) * (hi[b - 1] - lo[a]) > _BLOCK_CELLS:
            b = a + max(1, (b - a) // 2)
        s0, s1 = int(lo[a]), int(hi[b - 1])
        d2 = _dist_sq(sp[cand[a:b]], sp[s0:s1])
        cols = np.arange(s0, s1)
        outside = (cols[None, :] < lo[a:b, None]) | (cols[None, :] >= hi[a:b, None])
        d2[outside] = np.inf
        kth = np.partition(d2, k - 1, axis=1)[:, k - 1]
        results.extend(
            (float(v), int(order[p])) for v, p in zip(kth, cand[a:b]) if np.isfinite(v))
        a = b

    best_sq = min(v for v, _ in results)
    winners = sorted({idx for v, idx in results if v == best_sq})
    return winners[0], best_sq, len(winners) > 1


def median_cuboid(data: DatasetND, k: int) -> Cuboid:
    """Product of the per-coordinate k-median intervals."""
    pts = data.points
    n, d = pts.shape
    if k < 1 or k > n:
        raise InvalidParamError(f"k must be in [1, {n}], got {k}")
    hi_index = (n + k + 1) // 2
    lo_index = n + 1 - hi_index
    cols = np.sort(pts, axis=0)
    return Cuboid(lo=cols[lo_index - 1].copy(), hi=cols[hi_index - 1].copy())


def hybrid_nd(data: DatasetND, k1: int, k2: int) -> LocationEstimateND:
    """Efficient shorth projected onto the k1-median cuboid.

    The l2 projection onto an axis-aligned box is the componentwise clamp;
    CLAMPED is flagged whenever any coordinate moves.  Radius and count are
    carried over from the shorth estimate.
    """
    shorth = shorth_efficient(data, k2)
    box = median_cuboid(data, k1)
    projected = box.clamp(shorth.center)
    moved = bool(np.any(projected != shorth.center))
    flags = shorth.flags | ({CLAMPED} if moved else set())
    return LocationEstimateND(center=projected, radius=shorth.radius,
                              count=shorth.count,
                              center_index=None if moved else shorth.center_index,
                              flags=frozenset(flags))
