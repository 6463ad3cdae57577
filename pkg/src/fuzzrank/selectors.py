"""Filter feature scorers: one relevance score per feature, higher is better.

All reductions that mix samples go through ``math.fsum`` or integer counts,
so every scorer gives bit-identical output when the rows are shuffled.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.spatial.distance import cdist

from .dataset import Dataset

FISHER_EPS = 1e-12


class Method(str, Enum):
    CFS_SU = "cfs"
    RELIEFF = "relieff"
    MI = "mi"
    FISHER = "fisher"


ALL_METHODS = (Method.CFS_SU, Method.RELIEFF, Method.MI, Method.FISHER)


@dataclass(frozen=True)
class SelectorConfig:
    relieff_k: int = 10
    n_bins: int = 10


@dataclass(frozen=True)
class ScoreVector:
    scores: np.ndarray
    method_id: Method

    def __post_init__(self):
        if not np.all(np.isfinite(self.scores)):
            raise ValueError(f"{self.method_id.value}: non-finite feature score")


def parse_method(value) -> Method:
    try:
        return Method(value.lower() if isinstance(value, str) else value)
    except ValueError:
        choices = ", ".join(m.value for m in Method)
        raise ValueError(f"unknown method {value!r} (choose from {choices})") from None


def _fsum_columns(matrix: np.ndarray) -> np.ndarray:
    return np.array([math.fsum(matrix[:, f]) for f in range(matrix.shape[1])])


# ---------------------------------------------------------------------------
# ReliefF
# ---------------------------------------------------------------------------

def _fixed_point_bits(n_features: int) -> int:
    # cityblock sums of n_features terms below 2**bits stay exact in float64
    return min(44, 52 - int(math.ceil(math.log2(n_features + 1))))


def _neighbour_diff_means(q, anchors, pool, k, same_class, dist):
    """Mean |q_anchor - q_neighbour| over the k nearest of ``pool``, per feature.

    Candidates tied at the k-th distance (up to the snapping error) share the
    remaining slots equally, so the result depends only on the set of rows,
    never on their order.
    Integer sums keep the reduction exact.
    """
    block = dist[np.ix_(anchors, pool)]
    if same_class:
        np.fill_diagonal(block, np.inf)
    kth = np.partition(block, k - 1, axis=1)[:, k - 1 : k]
    # snapping moves each distance by at most one unit per feature
    slack = q.shape[1]
    less = block < kth - slack
    tied = ~less & (block <= kth + slack)
    n_less = less.sum(axis=1)
    share = (k - n_less) / tied.sum(axis=1)

    sums = []
    for mask in (less, tied):
        rows, cols = np.nonzero(mask)
        diffs = np.abs(q[anchors[rows]] - q[pool[cols]])
        total = np.zeros((len(anchors), q.shape[1]), dtype=np.int64)
        np.add.at(total, rows, diffs)
        sums.append(total.astype(float))
    return (sums[0] + share[:, None] * sums[1]) / k


def score_relieff(dataset: Dataset, k_neighbors: int = 10) -> ScoreVector:
    """ReliefF weights with k nearest hits and misses for every sample.

    Features are min-max scaled to [0, 1] and snapped to a fine fixed-point
    grid, so Manhattan distances are exact and independent of column order.
    Neighbours tied at the k-th distance are averaged fractionally.
    """
    if k_neighbors < 1:
        raise ValueError("k_neighbors must be >= 1")
    X = dataset.features
    y = dataset.labels
    n_samples, n_features = X.shape

    lo = X.min(axis=0)
    span = X.max(axis=0) - lo
    safe = np.where(span > 0, span, 1.0)
    scaled = np.where(span > 0, (X - lo) / safe, 0.0)
    unit = float(2 ** _fixed_point_bits(n_features))
    q = np.rint(scaled * unit).astype(np.int64)

    dist = cdist(q.astype(float), q.astype(float), "cityblock")

    members = [np.flatnonzero(y == c) for c in (0, 1)]
    sizes = np.array([len(m) for m in members])
    priors = sizes / n_samples
    if np.any(sizes <= k_neighbors):
        warnings.warn(
            f"a class has <= {k_neighbors} samples; k reduced for that class",
            stacklevel=2,
        )

    contrib = np.zeros((n_samples, n_features))
    for a in (0, 1):
        anchors = members[a]
        for b in (0, 1):
            pool = members[b]
            k = min(k_neighbors, len(pool) - 1) if a == b else min(k_neighbors, len(pool))
            if k == 0:
                continue
            diffs = _neighbour_diff_means(q, anchors, pool, k, a == b, dist) / unit
            if a == b:
                contrib[anchors] -= diffs
            else:
                contrib[anchors] += priors[b] / (1.0 - priors[a]) * diffs
    return ScoreVector(_fsum_columns(contrib) / n_samples, Method.RELIEFF)


# ---------------------------------------------------------------------------
# information-theoretic scorers
# ---------------------------------------------------------------------------

def equal_width_bins(column: np.ndarray, n_bins: int) -> np.ndarray:
    """Bin index per value; a constant column lands entirely in bin 0."""
    lo, hi = column.min(), column.max()
    if hi == lo:
        return np.zeros(column.shape, dtype=np.int64)
    idx = np.floor((column - lo) / (hi - lo) * n_bins).astype(np.int64)
    return np.minimum(idx, n_bins - 1)


def _entropy(counts: np.ndarray, total: int) -> float:
    counts = counts[counts > 0]
    return -math.fsum((c / total) * math.log2(c / total) for c in counts)


def _mutual_information(x: np.ndarray, y: np.ndarray) -> float:
    total = len(x)
    joint = np.zeros((x.max() + 1, 2), dtype=np.int64)
    np.add.at(joint, (x, y), 1)
    nx = joint.sum(axis=1)
    ny = joint.sum(axis=0)
    terms = []
    for i, j in zip(*np.nonzero(joint)):
        nxy = int(joint[i, j])
        terms.append(nxy / total * math.log2(nxy * total / (int(nx[i]) * int(ny[j]))))
    return max(0.0, math.fsum(terms))


def _check_bins(n_bins: int):
    if n_bins < 2:
        raise ValueError("n_bins must be >= 2")


def score_mutual_information(dataset: Dataset, n_bins: int = 10) -> ScoreVector:
    """I(binned feature; class) in bits."""
    _check_bins(n_bins)
    y = dataset.labels
    scores = [
        _mutual_information(equal_width_bins(dataset.features[:, f], n_bins), y)
        for f in range(dataset.n_features)
    ]
    return ScoreVector(np.array(scores), Method.MI)


def score_correlation_su(dataset: Dataset, n_bins: int = 10) -> ScoreVector:
    """Symmetrical uncertainty between each binned feature and the class."""
    _check_bins(n_bins)
    y = dataset.labels
    total = dataset.n_samples
    h_y = _entropy(np.bincount(y, minlength=2), total)
    scores = []
    for f in range(dataset.n_features):
        x = equal_width_bins(dataset.features[:, f], n_bins)
        denom = _entropy(np.bincount(x), total) + h_y
        if denom == 0:
            scores.append(0.0)
            continue
        scores.append(min(1.0, 2.0 * _mutual_information(x, y) / denom))
    return ScoreVector(np.array(scores), Method.CFS_SU)


# ---------------------------------------------------------------------------
# Fisher score
# ---------------------------------------------------------------------------

def score_fisher(dataset: Dataset) -> ScoreVector:
    """Between-class over within-class scatter, floored denominator."""
    scores = np.zeros(dataset.n_features)
    classes = [np.flatnonzero(dataset.labels == c) for c in (0, 1)]
    for f in range(dataset.n_features):
        col = dataset.features[:, f]
        if col.min() == col.max():
            continue
        mean = math.fsum(col) / len(col)
        between, within = [], []
        for idx in classes:
            values = col[idx]
            n_c = len(values)
            mean_c = math.fsum(values) / n_c
            var_c = math.fsum((values - mean_c) ** 2) / n_c
            between.append(n_c * (mean_c - mean) ** 2)
            within.append(n_c * var_c)
        scores[f] = math.fsum(between) / (math.fsum(within) + FISHER_EPS)
    return ScoreVector(scores, Method.FISHER)


def score(dataset: Dataset, method, config: SelectorConfig = SelectorConfig()) -> ScoreVector:
    """Dispatch to the scorer registered under ``method``."""
    method = parse_method(method)
    if method is Method.RELIEFF:
        return score_relieff(dataset, config.relieff_k)
    if method is Method.MI:
        return score_mutual_information(dataset, config.n_bins)
    if method is Method.CFS_SU:
        return score_correlation_su(dataset, config.n_bins)
    return score_fisher(dataset)
