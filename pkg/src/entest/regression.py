"""Modal interval linear regression.

The estimator maximizes the number of residuals inside a closed band of
half-width r.  That count objective is piecewise constant over the
arrangement of the 2n hyperplanes ``y_i = x_i^T beta +/- r`` and upper
semicontinuous, so its maximum is attained at a vertex of the arrangement;
enumerating all d-subsets of hyperplanes and solving the nonsingular ones
is therefore exact.  The enumeration is guarded to desk scale.
"""

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import EmptyDataError, InvalidParamError, ProblemTooLargeError
from .estimators_1d import TIE_BROKEN

DEGENERATE_FALLBACK = "DEGENERATE_FALLBACK"

_MAX_CANDIDATES = 10_000_000
_SINGULAR_RTOL = 1e-10
_CHUNK = 2048


@dataclass(frozen=True)
class RegressionDataset:
    """Design matrix xs (n x d) with responses ys (n,)."""

    xs: np.ndarray
    ys: np.ndarray

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        if xs.ndim == 1:
            xs = xs[:, None]
        ys = np.asarray(self.ys, dtype=float).ravel()
        if xs.ndim != 2 or xs.shape[0] != ys.shape[0]:
            raise InvalidParamError("xs must be n x d with matching ys")
        if xs.shape[0] == 0:
            raise EmptyDataError("regression dataset is empty")
        if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
            raise InvalidParamError("dataset contains non-finite values")
        xs = xs.copy()
        ys = ys.copy()
        xs.flags.writeable = False
        ys.flags.writeable = False
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)

    @property
    def n(self) -> int:
        return self.xs.shape[0]

    @property
    def d(self) -> int:
        return self.xs.shape[1]


@dataclass(frozen=True)
class RegressionEstimate:
    beta: np.ndarray
    count: int
    candidate_id: tuple
    flags: frozenset = field(default_factory=frozenset)

    def has_flag(self, name: str) -> bool:
        return name in self.flags


def regression_objective(data: RegressionDataset, beta, r: float) -> int:
    """Exact number of observations with |y_i - x_i^T beta| <= r."""
    beta = np.asarray(beta, dtype=float).ravel()
    if beta.shape[0] != data.d:
        raise InvalidParamError(f"beta must have length {data.d}")
    resid = np.abs(data.ys - data.xs @ beta)
    return int(np.count_nonzero(resid <= r))


def modal_regression(data: RegressionDataset, r: float) -> RegressionEstimate:
    """Maximize the residual-band count by hyperplane-vertex enumeration.

    Hyperplanes are indexed 0..2n-1: index i is ``x_i^T beta = y_i - r``
    (the +r band edge), index n + i is ``x_i^T beta = y_i + r``.  Every
    size-d subset is solved in lexicographic order; subsets whose
    determinant magnitude is below 1e-10 times max-row-norm^d are skipped
    as singular.  The best count wins, ties keeping the lexicographically
    first subset (flagged TIE_BROKEN).  Candidate counts allow a slack of
    1e-9 * (1 + |y_i|) per observation so vertices retain the boundary
    points that define them despite solver round-off.

    Raises ProblemTooLargeError when C(2n, d) exceeds 10^7.
    """
    if not r > 0:
        raise InvalidParamError("r must be positive")
    n, d = data.n, data.d
    n_candidates = math.comb(2 * n, d)
    if n_candidates > _MAX_CANDIDATES:
        raise ProblemTooLargeError(
            f"C(2n, d) = {n_candidates} exceeds the desk-scale guard {_MAX_CANDIDATES}")

    rows = np.vstack([data.xs, data.xs])
    rhs = np.concatenate([data.ys - r, data.ys + r])
    row_norms = np.linalg.norm(rows, axis=1)
    slack = 1e-9 * (1.0 + np.abs(data.ys))
    limit = data.ys + r + slack  # |resid| <= r + slack, evaluated as bands
    lower = data.ys - r - slack

    best_count = -1
    best_beta = None
    best_subset = None
    tie_seen = False

    chunk_len = max(1, min(_CHUNK, _MAX_CANDIDATES // max(1, n)))
    combos = itertools.combinations(range(2 * n), d)
    while True:
        block = list(itertools.islice(combos, chunk_len))
        if not block:
            break
        idx = np.array(block, dtype=np.intp)
        mats = rows[idx]                      # (m, d, d)
        scale = row_norms[idx].max(axis=1)    # (m,)
        dets = np.linalg.det(mats)
        ok = np.abs(dets) > _SINGULAR_RTOL * np.power(scale, d)
        if not ok.any():
            continue
        betas = np.linalg.solve(mats[ok], rhs[idx[ok]][..., None])[..., 0]
        fitted = data.xs @ betas.T            # (n, m_ok)
        counts = np.count_nonzero(
            (fitted >= lower[:, None]) & (fitted <= limit[:, None]), axis=0)
        order = np.flatnonzero(ok)
        for pos, count in zip(order, counts):
            count = int(count)
            if count > best_count:
                best_count = count
                best_beta = betas[np.searchsorted(order, pos)]
                best_subset = block[pos]
                tie_seen = False
            elif count == best_count:
                tie_seen = True

    if best_beta is None:
        beta = np.zeros(d)
        resid = np.abs(data.ys - data.xs @ beta)
        count = int(np.count_nonzero(resid <= r + slack))
        return RegressionEstimate(beta=beta, count=count, candidate_id=(),
                                  flags=frozenset([DEGENERATE_FALLBACK]))

    flags = frozenset([TIE_BROKEN]) if tie_seen else frozenset()
    return RegressionEstimate(beta=np.asarray(best_beta, dtype=float),
                              count=best_count, candidate_id=tuple(best_subset),
                              flags=flags)
