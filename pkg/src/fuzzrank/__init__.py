"""Feature ranking by weighted combination of bootstrap fuzzy sets."""

from .dataset import Dataset, DatasetError, FoldSplit, kfold_split, load_csv, load_wbc, subsample
from .fuzzy_ensemble import RankingResult, Scheme, rank_features
from .selectors import Method, SelectorConfig

__all__ = [
    "Dataset",
    "DatasetError",
    "FoldSplit",
    "Method",
    "RankingResult",
    "Scheme",
    "SelectorConfig",
    "kfold_split",
    "load_csv",
    "load_wbc",
    "rank_features",
    "subsample",
]

__version__ = "0.1.0"
