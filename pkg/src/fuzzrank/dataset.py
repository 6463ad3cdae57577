"""Tabular binary-classification datasets, fold splits and subsamples."""

from __future__ import annotations

import csv
import math
import os
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from ._seeding import derive_rng

MISSING_MARKER = "?"
DATA_DIR_ENV = "FUZZRANK_DATA_DIR"

WBC_RAW_ROWS = 699
WBC_CLEAN_ROWS = 683
WBC_COLUMNS = (
    "Sample_code_number",
    "Clump_Thickness",
    "Uniformity_of_Cell_Size",
    "Uniformity_of_Cell_Shape",
    "Marginal_Adhesion",
    "Single_Epithelial_Cell_Size",
    "Bare_Nuclei",
    "Bland_Chromatin",
    "Normal_Nucleoli",
    "Mitoses",
    "Class",
)

MAX_RESAMPLE_ATTEMPTS = 100


class DatasetError(ValueError):
    """Raised for malformed input files or datasets violating invariants."""


@dataclass(frozen=True, eq=False)
class Dataset:
    """Dense feature matrix with binary labels.

    Arrays are stored read-only so a Dataset can be shared freely between
    workers.
    """

    features: np.ndarray
    labels: np.ndarray
    feature_names: tuple[str, ...]
    name: str = "dataset"

    def __post_init__(self):
        features = np.array(self.features, dtype=float)
        labels = np.array(self.labels, dtype=np.int64)
        names = tuple(str(n) for n in self.feature_names)
        if features.ndim != 2:
            raise DatasetError("features must be a 2-D matrix")
        n_samples, n_features = features.shape
        if n_samples < 2:
            raise DatasetError(f"need at least 2 samples, got {n_samples}")
        if n_features < 1:
            raise DatasetError("need at least 1 feature")
        if labels.shape != (n_samples,):
            raise DatasetError("labels length does not match number of samples")
        if len(names) != n_features:
            raise DatasetError("feature_names length does not match number of features")
        if len(set(names)) != len(names):
            raise DatasetError("duplicate feature names")
        if not np.all(np.isfinite(features)):
            raise DatasetError("features contain non-finite values")
        if not np.all((labels == 0) | (labels == 1)):
            raise DatasetError("labels must be 0 or 1")
        if not (np.any(labels == 0) and np.any(labels == 1)):
            raise DatasetError("both classes must be present")
        features.flags.writeable = False
        labels.flags.writeable = False
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "feature_names", names)

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=2)

    def take(self, indices) -> "Dataset":
        """Rows at ``indices`` (duplicates allowed), in the given order."""
        indices = np.asarray(indices, dtype=np.int64)
        return Dataset(self.features[indices], self.labels[indices], self.feature_names, self.name)

    def select_features(self, columns: Sequence[int]) -> "Dataset":
        columns = list(columns)
        return Dataset(
            self.features[:, columns],
            self.labels,
            tuple(self.feature_names[c] for c in columns),
            self.name,
        )

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.name == other.name
            and self.feature_names == other.feature_names
            and np.array_equal(self.features, other.features)
            and np.array_equal(self.labels, other.labels)
        )

    __hash__ = None


@dataclass(frozen=True)
class FoldSplit:
    """K disjoint, sorted index arrays covering ``0..S-1``."""

    folds: tuple[np.ndarray, ...]
    seed: int

    @property
    def k(self) -> int:
        return len(self.folds)

    def train_test(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        test = self.folds[i]
        train = np.sort(np.concatenate([f for j, f in enumerate(self.folds) if j != i]))
        return train, test

    def __iter__(self):
        return (self.train_test(i) for i in range(self.k))


def resolve_path(path) -> Path:
    """Root relative paths at ``$FUZZRANK_DATA_DIR`` when that file exists."""
    path = Path(path)
    root = os.environ.get(DATA_DIR_ENV)
    if root and not path.is_absolute():
        rooted = Path(root) / path
        if rooted.exists():
            return rooted
    return path


def read_table(path, header: bool = True) -> tuple[list[str], list[list[str]]]:
    """Read a CSV file into (column names, rows of stripped strings)."""
    path = resolve_path(path)
    if not path.is_file():
        raise FileNotFoundError(f"dataset file not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [[cell.strip() for cell in row] for row in csv.reader(fh) if row and any(c.strip() for c in row)]
    if not rows:
        raise DatasetError(f"{path}: empty file")
    if header:
        columns, rows = rows[0], rows[1:]
    else:
        columns = [f"col{i}" for i in range(len(rows[0]))]
    width = len(columns)
    for lineno, row in enumerate(rows, start=2 if header else 1):
        if len(row) != width:
            raise DatasetError(f"{path}: line {lineno} has {len(row)} fields, expected {width}")
    return columns, rows


def _column_index(columns: Sequence[str], column) -> int:
    if isinstance(column, (int, np.integer)):
        idx = int(column)
        if not -len(columns) <= idx < len(columns):
            raise DatasetError(f"column index {idx} out of range")
        return idx % len(columns)
    if isinstance(column, str) and column in columns:
        return list(columns).index(column)
    if isinstance(column, str) and column.lstrip("-").isdigit():
        return _column_index(columns, int(column))
    raise DatasetError(f"unknown column {column!r}")


def table_to_dataset(columns, rows, label_column, name: str, drop_columns=()) -> Dataset:
    """Convert string rows into a Dataset; classes map to 0/1 by first appearance."""
    if len(rows) < 2:
        raise DatasetError(f"need at least 2 rows, got {len(rows)}")
    label_idx = _column_index(columns, label_column)
    dropped = {_column_index(columns, c) for c in drop_columns} | {label_idx}
    keep = [i for i in range(len(columns)) if i not in dropped]

    classes: dict[str, int] = {}
    labels = []
    for row in rows:
        value = row[label_idx]
        if value not in classes:
            if len(classes) == 2:
                raise DatasetError("more than two classes in label column")
            classes[value] = len(classes)
        labels.append(classes[value])
    if len(classes) < 2:
        raise DatasetError("label column holds a single class")

    features = np.empty((len(rows), len(keep)))
    for r, row in enumerate(rows):
        for c, col in enumerate(keep):
            try:
                features[r, c] = float(row[col])
            except ValueError:
                raise DatasetError(
                    f"non-numeric value {row[col]!r} in column {columns[col]!r}, row {r + 1}"
                ) from None
    return Dataset(features, np.array(labels), tuple(columns[i] for i in keep), name)


def load_csv(path, label_column, drop_columns=(), name: str | None = None) -> Dataset:
    """Load a headed CSV file with a binary label column."""
    columns, rows = read_table(path)
    return table_to_dataset(columns, rows, label_column, name or Path(path).stem, drop_columns)


def preprocess_wbc(columns, rows, id_column=0, label_column=-1, name: str = "wbc") -> Dataset:
    """Drop the sample ID column and every row with a '?' marker.

    The canonical UCI file has 699 rows; anything other than 683 survivors
    from such a table means the input drifted and is rejected.
    """
    complete = [row for row in rows if MISSING_MARKER not in row]
    if not complete:
        raise DatasetError("empty dataset after preprocessing")
    if len(rows) == WBC_RAW_ROWS and len(complete) != WBC_CLEAN_ROWS:
        raise DatasetError(
            f"expected {WBC_CLEAN_ROWS} complete rows from the {WBC_RAW_ROWS}-row WBC file, "
            f"got {len(complete)}"
        )
    return table_to_dataset(columns, complete, label_column, name, drop_columns=(id_column,))


def load_wbc(path) -> Dataset:
    """Load the UCI breast-cancer-wisconsin.data file (header optional)."""
    columns, rows = read_table(path, header=False)
    if not _is_numeric(rows[0][0]):
        columns, rows = rows[0], rows[1:]
    elif len(rows[0]) == len(WBC_COLUMNS):
        columns = list(WBC_COLUMNS)
    return preprocess_wbc(columns, rows, name=Path(path).stem)


def _is_numeric(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def kfold_split(dataset: Dataset, k: int, seed: int) -> FoldSplit:
    """Stratified k-fold split, deterministic in ``seed``.

    Indices are shuffled within each class, the classes are laid end to end
    and dealt round-robin into the folds, which balances both fold sizes and
    per-fold class counts to within one sample.
    """
    n = dataset.n_samples
    if k < 2 or k > n:
        raise DatasetError(f"k must satisfy 2 <= k <= {n}, got {k}")
    rng = derive_rng(seed, "kfold")
    counts = dataset.class_counts()
    if counts.min() < k:
        warnings.warn(
            f"a class has fewer than {k} samples; falling back to an unstratified split",
            stacklevel=2,
        )
        order = rng.permutation(n)
    else:
        order = np.concatenate(
            [rng.permutation(np.flatnonzero(dataset.labels == c)) for c in (0, 1)]
        )
    assignment = np.empty(n, dtype=np.int64)
    assignment[order] = np.arange(n) % k
    folds = tuple(np.flatnonzero(assignment == i) for i in range(k))
    return FoldSplit(folds, seed)


def subsample_size(p: float, n: int) -> int:
    # the epsilon keeps e.g. 0.29 * 100 from flooring to 28
    return int(math.floor(p * n + 1e-9))


def subsample(dataset: Dataset, p: float, seed: int) -> Dataset:
    """Rows drawn uniformly without replacement, kept in original order."""
    if not 0 < p <= 1:
        raise DatasetError(f"proportion must lie in (0, 1], got {p}")
    if p == 1:
        return dataset
    size = subsample_size(p, dataset.n_samples)
    if size < 2:
        raise DatasetError(f"subsample of proportion {p} has fewer than 2 rows")
    rng = derive_rng(seed, "subsample")
    for _ in range(MAX_RESAMPLE_ATTEMPTS):
        idx = np.sort(rng.choice(dataset.n_samples, size=size, replace=False))
        if np.unique(dataset.labels[idx]).size == 2:
            return dataset.take(idx)
    raise DatasetError(
        f"subsample of proportion {p} kept a single class after {MAX_RESAMPLE_ATTEMPTS} attempts"
    )
