"""Bootstrap fuzzy-set ensemble of filter feature scorers.

For each bootstrap subset and each base scorer the feature scores are
min-max normalised and snapped to the 101-point grid {0, 0.01, ..., 1}.
The L snapped scores of one feature under one scorer form a discrete
type-1 fuzzy set (membership = relative frequency).  The M sets of a
feature are merged by a weighted sum, and the centre of average of the
merged set is the feature's final score.

Grid points are handled internally as integer steps ``q`` with value
``q / 100``.  Reductions use ``math.fsum`` so results are exactly rounded
and independent of evaluation order.
"""

from __future__ import annotations

import csv
import io
import math
import statistics
import warnings
from dataclasses import dataclass, field
from enum import Enum
from functools import partial
from typing import Sequence

import numpy as np

from ._parallel import parallel_map
from ._seeding import derive_rng
from .dataset import Dataset, DatasetError, MAX_RESAMPLE_ATTEMPTS
from .selectors import ALL_METHODS, Method, SelectorConfig, parse_method, score

GRID_STEPS = 100
GRID_SIZE = GRID_STEPS + 1
GRID = np.arange(GRID_SIZE) / GRID_STEPS

RW_EPS = 1e-6

DEFAULT_SUBSETS = 100
DEFAULT_RATIO = 0.632


class Scheme(str, Enum):
    EW = "ew"
    RW = "rw"
    OW = "ow"
    MW = "mw"


ALL_SCHEMES = (Scheme.EW, Scheme.RW, Scheme.OW, Scheme.MW)


class Normalization(str, Enum):
    # min-max across the N features of one (subset, scorer) run
    FEATURES = "features"
    # min-max across the L subsets of one (feature, scorer) pair
    SUBSETS = "subsets"


def parse_scheme(value) -> Scheme:
    try:
        return Scheme(value.lower() if isinstance(value, str) else value)
    except ValueError:
        raise ValueError(f"unknown scheme {value!r} (choose from ew, rw, ow, mw)") from None


@dataclass(frozen=True)
class ScoreSamples:
    """The L grid values collected for one feature under one scorer."""

    values: np.ndarray
    feature_index: int = 0
    method_id: Method | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        steps = np.rint(values * GRID_STEPS)
        if values.ndim != 1 or values.size == 0:
            raise ValueError("score samples must be a non-empty 1-D list")
        if np.any(steps < 0) or np.any(steps > GRID_STEPS) or not np.array_equal(steps / GRID_STEPS, values):
            raise ValueError("score samples must lie on the 0.01 grid over [0, 1]")
        object.__setattr__(self, "values", values)

    @classmethod
    def from_steps(cls, steps, feature_index: int = 0, method_id=None) -> "ScoreSamples":
        return cls(np.asarray(steps) / GRID_STEPS, feature_index, method_id)

    @property
    def steps(self) -> np.ndarray:
        return np.rint(self.values * GRID_STEPS).astype(np.int64)

    def __len__(self):
        return self.values.size


@dataclass(frozen=True)
class FuzzySet:
    """Membership degree for each of the 101 grid points."""

    membership: np.ndarray

    def __post_init__(self):
        mu = np.asarray(self.membership, dtype=float)
        if mu.shape != (GRID_SIZE,):
            raise ValueError(f"membership must have {GRID_SIZE} entries")
        if np.any(mu < 0) or np.any(mu > 1):
            raise ValueError("membership degrees must lie in [0, 1]")
        object.__setattr__(self, "membership", mu)

    @property
    def mass(self) -> float:
        return math.fsum(self.membership)

    @property
    def support(self) -> np.ndarray:
        return GRID[self.membership > 0]

    def __eq__(self, other):
        if not isinstance(other, FuzzySet):
            return NotImplemented
        return np.array_equal(self.membership, other.membership)

    __hash__ = None


@dataclass(frozen=True)
class WeightVector:
    weights: np.ndarray
    scheme: Scheme
    feature_index: int = 0

    def __len__(self):
        return len(self.weights)


# ---------------------------------------------------------------------------
# fuzzy-set generation
# ---------------------------------------------------------------------------

def bootstrap_indices(labels: np.ndarray, n_subsets: int, ratio: float, seed: int) -> list[np.ndarray]:
    """Row indices of each bootstrap subset, ``ceil(ratio * S)`` draws with replacement.

    Subset ``l`` draws from its own stream keyed by ``(seed, l)``; a draw
    holding a single class is repeated from the same stream.
    """
    if n_subsets < 1:
        raise ValueError("number of subsets must be >= 1")
    if not 0 < ratio <= 1:
        raise ValueError(f"ratio must lie in (0, 1], got {ratio}")
    n = len(labels)
    size = int(math.ceil(ratio * n - 1e-9))
    subsets = []
    for l in range(n_subsets):
        rng = derive_rng(seed, "bootstrap", l)
        for _ in range(MAX_RESAMPLE_ATTEMPTS):
            idx = rng.integers(0, n, size=size)
            if np.unique(labels[idx]).size == 2:
                break
        else:
            raise DatasetError(
                f"bootstrap subset {l} drew a single class {MAX_RESAMPLE_ATTEMPTS} times"
            )
        subsets.append(idx)
    return subsets


def bootstrap_subsets(dataset: Dataset, n_subsets: int, ratio: float, seed: int) -> list[Dataset]:
    return [dataset.take(idx) for idx in bootstrap_indices(dataset.labels, n_subsets, ratio, seed)]


def normalize_scores(raw) -> np.ndarray:
    """Min-max map to [0, 1]; a constant vector maps to 0.5 everywhere."""
    raw = np.asarray(raw, dtype=float)
    if not np.all(np.isfinite(raw)):
        raise ValueError("scores must be finite")
    lo, hi = raw.min(), raw.max()
    if hi == lo:
        return np.full(raw.shape, 0.5)
    return (raw - lo) / (hi - lo)


def discretize_steps(values) -> np.ndarray:
    """Grid step (0..100) nearest to each value, exact halves rounding up."""
    values = np.asarray(values, dtype=float)
    if np.any(~(values >= 0)) or np.any(~(values <= 1)):
        raise ValueError("values to discretize must lie in [0, 1]")
    return np.floor(values * GRID_STEPS + 0.5).astype(np.int64)


def discretize(value: float) -> float:
    return float(discretize_steps(value)) / GRID_STEPS


def build_fuzzy_set(samples: ScoreSamples) -> FuzzySet:
    """Membership of x is its frequency among the L samples, divided by L."""
    counts = np.bincount(samples.steps, minlength=GRID_SIZE)
    return FuzzySet(counts / len(samples))


# ---------------------------------------------------------------------------
# weighting schemes
# ---------------------------------------------------------------------------

def standard_deviation(values, ddof: int = 0) -> float:
    """Population (ddof=0) or sample (ddof=1) SD, from exact rational sums."""
    values = [float(v) for v in np.asarray(values, dtype=float).ravel()]
    if len(values) - ddof < 1:
        raise ValueError(f"need more than {ddof} values for a standard deviation")
    return statistics.pstdev(values) if ddof == 0 else statistics.stdev(values)


def samples_sd(samples: ScoreSamples, ddof: int = 0) -> float:
    """SD of grid values from integer step sums, exact up to the final sqrt.

    Equal spreads at different locations therefore give identical SDs.
    """
    steps = [int(v) for v in samples.steps]
    n = len(steps)
    if n - ddof < 1:
        raise ValueError(f"need more than {ddof} values for a standard deviation")
    scatter = n * sum(v * v for v in steps) - sum(steps) ** 2
    return math.sqrt(scatter / (n * (n - ddof))) / GRID_STEPS


def _normalized(raw, scheme: Scheme, feature_index: int) -> WeightVector:
    raw = np.asarray(raw, dtype=float)
    return WeightVector(raw / math.fsum(raw), scheme, feature_index)


def _feature_of(samples_per_method: Sequence[ScoreSamples]) -> int:
    return samples_per_method[0].feature_index if samples_per_method else 0


def weights_equal(n_methods: int, feature_index: int = 0) -> WeightVector:
    if n_methods < 1:
        raise ValueError("need at least one method")
    return _normalized(np.ones(n_methods), Scheme.EW, feature_index)


def weights_reciprocal_sd(samples_per_method: Sequence[ScoreSamples], ddof: int = 0) -> WeightVector:
    """Weight proportional to 1 / SD, with the SD floored at 1e-6."""
    if not samples_per_method:
        raise ValueError("need at least one method")
    raw = [1.0 / max(samples_sd(s, ddof), RW_EPS) for s in samples_per_method]
    return _normalized(raw, Scheme.RW, _feature_of(samples_per_method))


def weights_one_minus_sd(samples_per_method: Sequence[ScoreSamples], ddof: int = 0) -> WeightVector:
    if not samples_per_method:
        raise ValueError("need at least one method")
    raw = [1.0 - samples_sd(s, ddof) for s in samples_per_method]
    if min(raw) < 0 or math.fsum(raw) <= 0:
        raise ValueError("standard deviation above 1; one-minus-SD weights undefined")
    return _normalized(raw, Scheme.OW, _feature_of(samples_per_method))


def binarize_fuzzy_set(fs: FuzzySet, n_subsets: int) -> np.ndarray:
    """L x 101 matrix; row p (level p/L) is set where p/L <= membership."""
    levels = np.arange(1, n_subsets + 1) / n_subsets
    return (levels[:, None] <= fs.membership[None, :]).astype(np.int64)


def weights_matrix_similarity(
    fuzzy_sets: Sequence[FuzzySet], n_subsets: int, feature_index: int = 0
) -> WeightVector:
    """Overlap of each set's binary image with the summed image of all sets.

    Binary images are filled bottom-up in every column, so the element-wise
    product of images j and k has min(count_j, count_k) ones per column and
    the similarity reduces to integer arithmetic on the column counts.
    """
    if not fuzzy_sets:
        raise ValueError("need at least one fuzzy set")
    counts = np.array([binarize_fuzzy_set(fs, n_subsets).sum(axis=0) for fs in fuzzy_sets])
    total = int(counts.sum())
    if total == 0:
        warnings.warn("all memberships are zero; falling back to equal weights", stacklevel=2)
        return WeightVector(weights_equal(len(fuzzy_sets)).weights, Scheme.MW, feature_index)
    overlap = [int(np.minimum(counts[j][None, :], counts).sum()) for j in range(len(counts))]
    similarity = [o / total for o in overlap]
    return _normalized(similarity, Scheme.MW, feature_index)


def compute_weights(
    scheme,
    samples_per_method: Sequence[ScoreSamples],
    fuzzy_sets: Sequence[FuzzySet],
    ddof: int = 0,
) -> WeightVector:
    scheme = parse_scheme(scheme)
    feature_index = _feature_of(samples_per_method)
    if scheme is Scheme.EW:
        return weights_equal(len(samples_per_method), feature_index)
    if scheme is Scheme.RW:
        return weights_reciprocal_sd(samples_per_method, ddof)
    if scheme is Scheme.OW:
        return weights_one_minus_sd(samples_per_method, ddof)
    return weights_matrix_similarity(fuzzy_sets, len(samples_per_method[0]), feature_index)


# ---------------------------------------------------------------------------
# combination and defuzzification
# ---------------------------------------------------------------------------

def combine_fuzzy_sets(fuzzy_sets: Sequence[FuzzySet], weights: WeightVector) -> FuzzySet:
    if len(fuzzy_sets) != len(weights.weights):
        raise ValueError(f"{len(fuzzy_sets)} fuzzy sets but {len(weights.weights)} weights")
    combined = np.zeros(GRID_SIZE)
    for w, fs in zip(weights.weights, fuzzy_sets):
        combined = combined + w * fs.membership
    # rounding can push a full membership a hair above 1
    return FuzzySet(np.minimum(combined, 1.0))


def defuzzify(fs: FuzzySet) -> float:
    """Centre of average: membership-weighted mean of the grid points."""
    total = fs.mass
    if total <= 0:
        raise ValueError("cannot defuzzify a fuzzy set with zero total membership")
    return math.fsum(GRID * fs.membership) / total


# ---------------------------------------------------------------------------
# pipeline
# ---------------------------------------------------------------------------

def _score_subset(indices, dataset: Dataset, methods, config: SelectorConfig) -> np.ndarray:
    subset = dataset.take(indices)
    return np.array([score(subset, m, config).scores for m in methods])


def collect_score_samples(
    dataset: Dataset,
    methods: Sequence = ALL_METHODS,
    n_subsets: int = DEFAULT_SUBSETS,
    ratio: float = DEFAULT_RATIO,
    seed: int = 0,
    selector_config: SelectorConfig = SelectorConfig(),
    normalization=Normalization.FEATURES,
    jobs: int = 1,
) -> np.ndarray:
    """Grid steps of every (subset, method, feature), shape (L, M, N)."""
    methods = [parse_method(m) for m in methods]
    if not methods:
        raise ValueError("need at least one method")
    normalization = Normalization(normalization)
    subsets = bootstrap_indices(dataset.labels, n_subsets, ratio, seed)
    worker = partial(_score_subset, dataset=dataset, methods=methods, config=selector_config)
    raw = np.array(parallel_map(worker, subsets, jobs))
    if normalization is Normalization.FEATURES:
        normed = np.apply_along_axis(normalize_scores, 2, raw)
    else:
        normed = np.apply_along_axis(normalize_scores, 0, raw)
    return discretize_steps(normed)


def feature_samples(steps: np.ndarray, feature_index: int, methods=None) -> list[ScoreSamples]:
    methods = methods or [None] * steps.shape[1]
    return [
        ScoreSamples.from_steps(steps[:, j, feature_index], feature_index, methods[j])
        for j in range(steps.shape[1])
    ]


def combined_fuzzy_set(samples: Sequence[ScoreSamples], scheme, ddof: int = 0) -> FuzzySet:
    fuzzy_sets = [build_fuzzy_set(s) for s in samples]
    weights = compute_weights(scheme, samples, fuzzy_sets, ddof)
    return combine_fuzzy_sets(fuzzy_sets, weights)


def scores_from_samples(steps: np.ndarray, scheme, ddof: int = 0) -> np.ndarray:
    """Defuzzified score of each feature from an (L, M, N) step array."""
    return np.array([
        defuzzify(combined_fuzzy_set(feature_samples(steps, i), scheme, ddof))
        for i in range(steps.shape[2])
    ])


def ranking_from_scores(scores) -> np.ndarray:
    """Feature indices by descending score, ties by ascending index."""
    scores = np.asarray(scores)
    return np.lexsort((np.arange(len(scores)), -scores))


@dataclass(frozen=True)
class RankingResult:
    defuzzified_scores: np.ndarray
    ranking: np.ndarray
    scheme: Scheme
    seed: int
    n_subsets: int
    ratio: float
    method_ids: tuple[Method, ...]
    dataset: str = ""
    feature_names: tuple[str, ...] = field(default=())

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "scheme": self.scheme.value,
            "seed": self.seed,
            "L": self.n_subsets,
            "ratio": self.ratio,
            "methods": [m.value for m in self.method_ids],
            "feature_names": list(self.feature_names),
            "scores": [float(c) for c in self.defuzzified_scores],
            "ranking": [int(i) for i in self.ranking],
        }

    def to_csv(self) -> str:
        """``feature_name,score,rank`` rows in ranking order, rank 1 = best."""
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\r\n")
        writer.writerow(["feature_name", "score", "rank"])
        names = self.feature_names or tuple(str(i) for i in range(len(self.ranking)))
        for rank, i in enumerate(self.ranking, start=1):
            writer.writerow([names[i], repr(float(self.defuzzified_scores[i])), rank])
        return out.getvalue()


def rank_features(
    dataset: Dataset,
    method_ids: Sequence = ALL_METHODS,
    scheme=Scheme.OW,
    n_subsets: int = DEFAULT_SUBSETS,
    ratio: float = DEFAULT_RATIO,
    seed: int = 0,
    selector_config: SelectorConfig = SelectorConfig(),
    sd_ddof: int = 0,
    normalization=Normalization.FEATURES,
    jobs: int = 1,
) -> RankingResult:
    """Run the whole bootstrap / fuzzy-set / defuzzify pipeline on ``dataset``."""
    methods = tuple(parse_method(m) for m in method_ids)
    scheme = parse_scheme(scheme)
    steps = collect_score_samples(
        dataset, methods, n_subsets, ratio, seed, selector_config, normalization, jobs
    )
    scores = scores_from_samples(steps, scheme, sd_ddof)
    return RankingResult(
        defuzzified_scores=scores,
        ranking=ranking_from_scores(scores),
        scheme=scheme,
        seed=seed,
        n_subsets=n_subsets,
        ratio=ratio,
        method_ids=methods,
        dataset=dataset.name,
        feature_names=dataset.feature_names,
    )
