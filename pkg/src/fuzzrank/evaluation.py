"""Cross-validated accuracy curves and feature-score stability measures."""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from functools import partial
from typing import Callable, Sequence

import numpy as np

from . import classifiers
from ._parallel import parallel_map
from ._seeding import derive_seed
from .classifiers import ClassifierKind
from .dataset import Dataset, FoldSplit, subsample
from .fuzzy_ensemble import (
    ALL_SCHEMES,
    DEFAULT_RATIO,
    DEFAULT_SUBSETS,
    Normalization,
    RankingResult,
    Scheme,
    collect_score_samples,
    normalize_scores,
    parse_scheme,
    ranking_from_scores,
    scores_from_samples,
    standard_deviation,
)
from .selectors import ALL_METHODS, Method, SelectorConfig, parse_method, score

DEFAULT_P_GRID = (0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3)
DEFAULT_REPEATS = 5


@dataclass(frozen=True)
class EnsembleConfig:
    """Which base scorers and combination schemes to evaluate, and how."""

    methods: tuple[Method, ...] = ALL_METHODS
    schemes: tuple[Scheme, ...] = ALL_SCHEMES
    n_subsets: int = DEFAULT_SUBSETS
    ratio: float = DEFAULT_RATIO
    seed: int = 0
    selector: SelectorConfig = field(default_factory=SelectorConfig)
    sd_ddof: int = 0
    normalization: Normalization = Normalization.FEATURES
    include_base: bool = True

    def __post_init__(self):
        object.__setattr__(self, "methods", tuple(parse_method(m) for m in self.methods))
        object.__setattr__(self, "schemes", tuple(parse_scheme(s) for s in self.schemes))
        object.__setattr__(self, "normalization", Normalization(self.normalization))

    @property
    def labels(self) -> list[str]:
        base = [m.value for m in self.methods] if self.include_base else []
        return base + [s.value for s in self.schemes]


def score_all(dataset: Dataset, config: EnsembleConfig, jobs: int = 1) -> dict[str, np.ndarray]:
    """Feature scores of every base method and every scheme on ``dataset``.

    Base scores are min-max normalised across features so that they live on
    the same [0, 1] scale as the defuzzified scheme scores.
    """
    out = {}
    if config.include_base:
        for m in config.methods:
            out[m.value] = normalize_scores(score(dataset, m, config.selector).scores)
    if config.schemes:
        steps = collect_score_samples(
            dataset,
            config.methods,
            config.n_subsets,
            config.ratio,
            config.seed,
            config.selector,
            config.normalization,
            jobs,
        )
        for s in config.schemes:
            out[s.value] = scores_from_samples(steps, s, config.sd_ddof)
    return out


def _score_training_fold(fold: int, dataset: Dataset, folds: FoldSplit, config: EnsembleConfig):
    train, _ = folds.train_test(fold)
    return score_all(dataset.take(train), config)


def fold_scores(dataset: Dataset, folds: FoldSplit, config: EnsembleConfig, jobs: int = 1) -> dict[str, np.ndarray]:
    """K x N score matrix per label; fold k is scored on its training rows only."""
    worker = partial(_score_training_fold, dataset=dataset, folds=folds, config=config)
    per_fold = parallel_map(worker, range(folds.k), jobs)
    return {label: np.array([f[label] for f in per_fold]) for label in config.labels}


# ---------------------------------------------------------------------------
# accuracy curves
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CurvePoint:
    n_features: int
    mean_accuracy: float
    per_fold: tuple[float, ...]


@dataclass(frozen=True)
class AccuracyCurve:
    label: str
    classifier: ClassifierKind
    points: tuple[CurvePoint, ...]

    @property
    def best(self) -> CurvePoint:
        # fewest features wins among equal means
        return max(self.points, key=lambda p: (p.mean_accuracy, -p.n_features))

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "classifier": self.classifier.value,
            "points": [
                {"n_features": p.n_features, "mean_accuracy": p.mean_accuracy, "per_fold": list(p.per_fold)}
                for p in self.points
            ],
        }


def _as_ranking(result) -> np.ndarray:
    if isinstance(result, RankingResult):
        return np.asarray(result.ranking)
    return np.asarray(result, dtype=np.int64)


class _AccuracyCache:
    """Fold accuracy per (fold, classifier, feature set); rankings sharing a prefix reuse fits."""

    def __init__(self, dataset: Dataset, folds: FoldSplit, n_trees: int, seed: int):
        self.dataset = dataset
        self.folds = folds
        self.n_trees = n_trees
        self.seed = seed
        self._cache: dict = {}

    def __call__(self, fold: int, kind: ClassifierKind, features) -> float:
        key = (fold, kind, tuple(sorted(int(f) for f in features)))
        if key not in self._cache:
            train, test = self.folds.train_test(fold)
            model = classifiers.fit(
                kind,
                self.dataset.take(train),
                key[2],
                n_trees=self.n_trees,
                seed=derive_seed(self.seed, "classifier", fold),
            )
            self._cache[key] = classifiers.accuracy(model, self.dataset.take(test))
        return self._cache[key]


def curve_from_rankings(
    dataset: Dataset,
    folds: FoldSplit,
    rankings: Sequence,
    classifier,
    label: str = "",
    n_trees: int = classifiers.DEFAULT_TREES,
    seed: int = 0,
    cache: _AccuracyCache | None = None,
) -> AccuracyCurve:
    """Accuracy for keeping the top k features, k = N down to 1.

    ``rankings[f]`` must have been computed from fold f's training rows.
    """
    kind = ClassifierKind(classifier)
    if len(rankings) != folds.k:
        raise ValueError(f"need one ranking per fold ({folds.k}), got {len(rankings)}")
    cache = cache or _AccuracyCache(dataset, folds, n_trees, seed)
    rankings = [_as_ranking(r) for r in rankings]
    points = []
    for k in range(dataset.n_features, 0, -1):
        per_fold = tuple(cache(f, kind, rankings[f][:k]) for f in range(folds.k))
        points.append(CurvePoint(k, math.fsum(per_fold) / len(per_fold), per_fold))
    return AccuracyCurve(label, kind, tuple(points))


def accuracy_curve(
    dataset: Dataset,
    ranker: Callable[[Dataset], object],
    classifier,
    folds: FoldSplit,
    label: str = "",
    n_trees: int = classifiers.DEFAULT_TREES,
    seed: int = 0,
) -> AccuracyCurve:
    """Rank each training fold with ``ranker`` and trace the accuracy curve.

    ``ranker`` only ever sees training rows; it returns a RankingResult or a
    sequence of feature indices, most significant first.
    """
    rankings = [ranker(dataset.take(train)) for train, _ in folds]
    return curve_from_rankings(dataset, folds, rankings, classifier, label, n_trees, seed)


def compare_accuracy(
    dataset: Dataset,
    folds: FoldSplit,
    scores: dict[str, np.ndarray],
    classifier,
    n_trees: int = classifiers.DEFAULT_TREES,
    seed: int = 0,
) -> dict[str, AccuracyCurve]:
    """Accuracy curve for each label from precomputed fold scores (see ``fold_scores``)."""
    cache = _AccuracyCache(dataset, folds, n_trees, seed)
    return {
        label: curve_from_rankings(
            dataset,
            folds,
            [ranking_from_scores(row) for row in matrix],
            classifier,
            label,
            cache=cache,
        )
        for label, matrix in scores.items()
    }


# ---------------------------------------------------------------------------
# stability across folds
# ---------------------------------------------------------------------------

def pearson(x, y) -> float | None:
    """Pearson correlation, or None when either vector is constant."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("pearson needs two 1-D vectors of equal length")
    dx = x - math.fsum(x) / x.size
    dy = y - math.fsum(y) / y.size
    sxx = math.fsum(dx * dx)
    syy = math.fsum(dy * dy)
    if sxx == 0 or syy == 0:
        return None
    # a single sqrt keeps r exactly +-1 for identical or negated vectors
    r = math.fsum(dx * dy) / math.sqrt(sxx * syy)
    return min(1.0, max(-1.0, r))


def _pearson_or_zero(x, y, context: str) -> float:
    r = pearson(x, y)
    if r is None:
        warnings.warn(f"constant score vector in {context}; correlation counted as 0", stacklevel=3)
        return 0.0
    return r


def _check_folds(fold_scores) -> np.ndarray:
    fold_scores = np.asarray(fold_scores, dtype=float)
    if fold_scores.ndim != 2:
        raise ValueError("fold scores must be a K x N matrix")
    if fold_scores.shape[0] < 2:
        raise ValueError("need scores from at least 2 folds")
    return fold_scores


def per_feature_sd(fold_scores, ddof: int = 0) -> np.ndarray:
    fold_scores = _check_folds(fold_scores)
    return np.array([standard_deviation(fold_scores[:, i], ddof) for i in range(fold_scores.shape[1])])


def compute_asd(fold_scores, ddof: int = 0) -> float:
    """Mean over features of each feature's SD across folds."""
    sds = per_feature_sd(fold_scores, ddof)
    return math.fsum(sds) / sds.size


def compute_apc(fold_scores) -> float:
    """Mean Pearson correlation over all unordered pairs of folds."""
    fold_scores = _check_folds(fold_scores)
    pairs = list(itertools.combinations(range(fold_scores.shape[0]), 2))
    values = [_pearson_or_zero(fold_scores[a], fold_scores[b], f"folds {a} and {b}") for a, b in pairs]
    return math.fsum(values) / len(values)


@dataclass(frozen=True)
class StabilityReport:
    asd: float
    apc: float
    per_feature_sd: np.ndarray
    fold_scores: np.ndarray

    def to_dict(self) -> dict:
        return {
            "asd": self.asd,
            "apc": self.apc,
            "per_feature_sd": [float(v) for v in self.per_feature_sd],
            "fold_scores": [[float(v) for v in row] for row in self.fold_scores],
        }


def stability_report(fold_scores, ddof: int = 0) -> StabilityReport:
    fold_scores = _check_folds(fold_scores)
    sds = per_feature_sd(fold_scores, ddof)
    return StabilityReport(math.fsum(sds) / sds.size, compute_apc(fold_scores), sds, fold_scores)


# ---------------------------------------------------------------------------
# stability under subsampling
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SubsamplePoint:
    p: float
    mean_pearson: float
    per_repeat: tuple[float, ...]


@dataclass(frozen=True)
class SubsampleCurve:
    label: str
    points: tuple[SubsamplePoint, ...]

    def at(self, p: float) -> SubsamplePoint:
        for point in self.points:
            if math.isclose(point.p, p):
                return point
        raise KeyError(p)

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "points": [
                {"p": pt.p, "mean_pearson": pt.mean_pearson, "per_repeat": list(pt.per_repeat)}
                for pt in self.points
            ],
        }


def _check_grid(p_grid, repeats):
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    p_grid = tuple(float(p) for p in p_grid)
    if not p_grid:
        raise ValueError("empty proportion grid")
    return p_grid


def _cells(p_grid, repeats):
    return [(p, r) for p in p_grid for r in range(repeats)]


def _curves_from_cells(labels, reference, cells, cell_scores, p_grid, repeats) -> dict[str, SubsampleCurve]:
    curves = {}
    for label in labels:
        values = {
            cell: _pearson_or_zero(reference[label], scores[label], f"{label} at p={cell[0]}")
            for cell, scores in zip(cells, cell_scores)
        }
        points = []
        for p in p_grid:
            per_repeat = tuple(values[(p, r)] for r in range(repeats))
            points.append(SubsamplePoint(p, math.fsum(per_repeat) / repeats, per_repeat))
        curves[label] = SubsampleCurve(label, tuple(points))
    return curves


def subsample_stability(
    dataset: Dataset,
    ranker: Callable[[Dataset], object],
    p_grid: Sequence[float] = DEFAULT_P_GRID,
    repeats: int = DEFAULT_REPEATS,
    seed: int = 0,
    label: str = "",
) -> SubsampleCurve:
    """Pearson between full-data scores and scores on random proportions of the rows.

    ``ranker`` maps a Dataset to a score vector (or a RankingResult).
    """
    p_grid = _check_grid(p_grid, repeats)

    def scores_of(ds):
        result = ranker(ds)
        return {label: result.defuzzified_scores if isinstance(result, RankingResult) else np.asarray(result)}

    cells = _cells(p_grid, repeats)
    reference = scores_of(dataset)
    cell_scores = [scores_of(subsample(dataset, p, derive_seed(seed, "subsample", p, r))) for p, r in cells]
    return _curves_from_cells([label], reference, cells, cell_scores, p_grid, repeats)[label]


def _score_cell(cell, dataset: Dataset, config: EnsembleConfig, seed: int):
    p, r = cell
    return score_all(subsample(dataset, p, derive_seed(seed, "subsample", p, r)), config)


def compare_subsample_stability(
    dataset: Dataset,
    config: EnsembleConfig,
    p_grid: Sequence[float] = DEFAULT_P_GRID,
    repeats: int = DEFAULT_REPEATS,
    seed: int = 0,
    jobs: int = 1,
) -> dict[str, SubsampleCurve]:
    """Subsample curves for every label, sharing bootstrap scoring across schemes."""
    p_grid = _check_grid(p_grid, repeats)
    cells = _cells(p_grid, repeats)
    reference = score_all(dataset, config)
    worker = partial(_score_cell, dataset=dataset, config=config, seed=seed)
    cell_scores = parallel_map(worker, cells, jobs)
    return _curves_from_cells(config.labels, reference, cells, cell_scores, p_grid, repeats)
