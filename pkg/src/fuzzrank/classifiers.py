"""Gaussian naive Bayes and a CART random forest for scoring feature rankings.

Both break ties towards class 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from ._seeding import derive_rng
from .dataset import Dataset

VAR_SMOOTHING = 1e-9
DEFAULT_TREES = 100


class ClassifierKind(str, Enum):
    NB = "nb"
    RF = "rf"


def _check_columns(samples: np.ndarray, n_columns: int) -> np.ndarray:
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 2 or samples.shape[1] != n_columns:
        raise ValueError(f"expected a matrix with {n_columns} columns, got shape {samples.shape}")
    return samples


# ---------------------------------------------------------------------------
# naive Bayes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NaiveBayesModel:
    feature_subset: tuple[int, ...]
    log_priors: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    kind: ClassifierKind = ClassifierKind.NB


def nb_fit(train: Dataset, feature_subset: Sequence[int]) -> NaiveBayesModel:
    """Class priors plus a per-class Gaussian for each feature.

    Variances are floored at 1e-9 times the largest feature variance.  An
    empty feature subset gives a prior-only model.
    """
    subset = tuple(int(i) for i in feature_subset)
    X = train.features[:, list(subset)]
    counts = train.class_counts()
    log_priors = np.log(counts / counts.sum())
    means = np.zeros((2, len(subset)))
    variances = np.ones((2, len(subset)))
    if subset:
        largest = X.var(axis=0).max()
        floor = VAR_SMOOTHING * largest if largest > 0 else VAR_SMOOTHING
        for c in (0, 1):
            rows = X[train.labels == c]
            means[c] = rows.mean(axis=0)
            variances[c] = np.maximum(rows.var(axis=0), floor)
    return NaiveBayesModel(subset, log_priors, means, variances)


def nb_log_posteriors(model: NaiveBayesModel, samples) -> np.ndarray:
    X = _check_columns(samples, len(model.feature_subset))
    out = np.tile(model.log_priors, (X.shape[0], 1))
    for c in (0, 1):
        var = model.variances[c]
        log_density = -0.5 * (np.log(2 * np.pi * var) + (X - model.means[c]) ** 2 / var)
        out[:, c] += log_density.sum(axis=1)
    return out


def nb_predict(model: NaiveBayesModel, samples) -> np.ndarray:
    """``samples`` holds only the columns in ``model.feature_subset``."""
    post = nb_log_posteriors(model, samples)
    return (post[:, 1] > post[:, 0]).astype(np.int64)


# ---------------------------------------------------------------------------
# random forest
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DecisionTree:
    """Array-encoded binary tree; ``feature == -1`` marks a leaf.

    ``feature`` indexes the columns of the model's feature subset.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray

    def predict(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=np.int64)
        active = self.feature[node] >= 0
        while active.any():
            rows = np.flatnonzero(active)
            n = node[rows]
            go_left = X[rows, self.feature[n]] <= self.threshold[n]
            node[rows] = np.where(go_left, self.left[n], self.right[n])
            active = self.feature[node] >= 0
        leaf = self.counts[node]
        return (leaf[:, 1] > leaf[:, 0]).astype(np.int64)

    @property
    def n_nodes(self) -> int:
        return len(self.feature)


def _best_split(x: np.ndarray, y: np.ndarray):
    """Lowest weighted Gini split of one feature: (impurity, threshold) or None."""
    order = np.argsort(x, kind="stable")
    xs, ys = x[order], y[order]
    n = len(xs)
    valid = xs[:-1] < xs[1:]
    if not valid.any():
        return None
    n_left = np.arange(1, n)
    ones_left = np.cumsum(ys)[:-1]
    ones_right = ys.sum() - ones_left
    n_right = n - n_left
    p_left = ones_left / n_left
    p_right = ones_right / n_right
    gini_left = 2.0 * p_left * (1.0 - p_left)
    gini_right = 2.0 * p_right * (1.0 - p_right)
    weighted = (n_left * gini_left + n_right * gini_right) / n
    weighted = np.where(valid, weighted, np.inf)
    i = int(np.argmin(weighted))
    lo, hi = xs[i], xs[i + 1]
    threshold = lo + (hi - lo) / 2.0
    if not lo <= threshold < hi:
        threshold = lo
    return weighted[i], threshold


def build_tree(X: np.ndarray, y: np.ndarray, n_candidates: int, rng: np.random.Generator) -> DecisionTree:
    """Grow a CART tree until leaves are pure or hold fewer than 2 samples.

    At each node ``n_candidates`` features are tried in random order; if none
    of them can split the node, the remaining features are tried as well.
    """
    feature, threshold, left, right, counts = [], [], [], [], []

    def new_node(idx):
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        counts.append(np.bincount(y[idx], minlength=2))
        return len(feature) - 1

    root = new_node(np.arange(len(y)))
    stack = [(root, np.arange(len(y)))]
    n_features = X.shape[1]
    while stack:
        node, idx = stack.pop()
        c = counts[node]
        if len(idx) < 2 or c[0] == 0 or c[1] == 0:
            continue
        order = rng.permutation(n_features)
        best = None
        for rank, f in enumerate(order):
            if rank >= n_candidates and best is not None:
                break
            found = _best_split(X[idx, f], y[idx])
            if found is not None and (best is None or found[0] < best[0]):
                best = (found[0], found[1], f)
        if best is None:
            continue
        _, thr, f = best
        mask = X[idx, f] <= thr
        li, ri = idx[mask], idx[~mask]
        feature[node], threshold[node] = int(f), thr
        left[node] = new_node(li)
        right[node] = new_node(ri)
        stack.append((right[node], ri))
        stack.append((left[node], li))
    return DecisionTree(
        np.array(feature, dtype=np.int64),
        np.array(threshold),
        np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64),
        np.array(counts, dtype=np.int64).reshape(-1, 2),
    )


@dataclass(frozen=True)
class RandomForestModel:
    feature_subset: tuple[int, ...]
    trees: tuple[DecisionTree, ...]
    majority: int
    kind: ClassifierKind = ClassifierKind.RF

    @property
    def n_trees(self) -> int:
        return len(self.trees)


def rf_fit(train: Dataset, feature_subset: Sequence[int], n_trees: int = DEFAULT_TREES, seed: int = 0) -> RandomForestModel:
    """Bagged CART trees with ceil(sqrt(d)) candidate features per node."""
    if n_trees < 1:
        raise ValueError("n_trees must be >= 1")
    subset = tuple(int(i) for i in feature_subset)
    counts = train.class_counts()
    majority = int(counts[1] > counts[0])
    if not subset:
        return RandomForestModel(subset, (), majority)
    X = train.features[:, list(subset)]
    y = train.labels
    n = len(y)
    n_candidates = math.ceil(math.sqrt(len(subset)))
    trees = []
    for t in range(n_trees):
        rng = derive_rng(seed, "tree", t)
        idx = rng.integers(0, n, size=n)
        trees.append(build_tree(X[idx], y[idx], n_candidates, rng))
    return RandomForestModel(subset, tuple(trees), majority)


def rf_predict(model: RandomForestModel, samples) -> np.ndarray:
    """Majority vote over the trees."""
    X = _check_columns(samples, len(model.feature_subset))
    if not model.trees:
        return np.full(X.shape[0], model.majority, dtype=np.int64)
    votes = np.sum([tree.predict(X) for tree in model.trees], axis=0)
    return (2 * votes > len(model.trees)).astype(np.int64)


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

def fit(kind, train: Dataset, feature_subset: Sequence[int], n_trees: int = DEFAULT_TREES, seed: int = 0):
    kind = ClassifierKind(kind)
    if kind is ClassifierKind.NB:
        return nb_fit(train, feature_subset)
    return rf_fit(train, feature_subset, n_trees, seed)


def predict(model, samples) -> np.ndarray:
    if model.kind is ClassifierKind.NB:
        return nb_predict(model, samples)
    return rf_predict(model, samples)


def accuracy(model, test: Dataset) -> float:
    predicted = predict(model, test.features[:, list(model.feature_subset)])
    return float(np.mean(predicted == test.labels))
