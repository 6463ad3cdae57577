"""Command-line front end: ``fuzzrank {rank,eval-accuracy,eval-stability}``.

Settings resolve as command-line flags > ``--config`` JSON file > defaults.
Every JSON output embeds the resolved configuration; ``generated_at`` is the
only field that changes between identical runs.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .classifiers import DEFAULT_TREES, ClassifierKind
from .dataset import Dataset, DatasetError, kfold_split, load_csv, load_wbc
from .evaluation import (
    DEFAULT_P_GRID,
    DEFAULT_REPEATS,
    EnsembleConfig,
    compare_accuracy,
    compare_subsample_stability,
    fold_scores,
    stability_report,
)
from .fuzzy_ensemble import (
    ALL_SCHEMES,
    DEFAULT_RATIO,
    DEFAULT_SUBSETS,
    Normalization,
    parse_scheme,
    rank_features,
)
from .selectors import ALL_METHODS, SelectorConfig, parse_method

log = logging.getLogger("fuzzrank")

SCHEME_CHOICES = [s.value for s in ALL_SCHEMES]
SD_CONVENTIONS = {"population": 0, "sample": 1}


class ConfigError(ValueError):
    """Invalid or incomplete run configuration (exit status 2)."""


@dataclass
class RunConfig:
    data: str | None = None
    label: str | None = None
    drop_columns: list[str] = field(default_factory=list)
    preprocess: str = "none"
    methods: list[str] = field(default_factory=lambda: [m.value for m in ALL_METHODS])
    scheme: str | None = None
    subsets: int = DEFAULT_SUBSETS
    ratio: float = DEFAULT_RATIO
    seed: int = 0
    folds: int = 5
    classifier: str = "nb"
    n_trees: int = DEFAULT_TREES
    p_grid: list[float] = field(default_factory=lambda: list(DEFAULT_P_GRID))
    repeats: int = DEFAULT_REPEATS
    out: str = "results"
    jobs: int = 1
    relieff_k: int = 10
    bins: int = 10
    sd_convention: str = "population"
    normalization: str = "features"

    def validate(self, need_scheme: bool = False):
        if not self.data:
            raise ConfigError("--data is required")
        if self.preprocess not in ("none", "wbc"):
            raise ConfigError(f"unknown preprocess {self.preprocess!r}")
        if self.label is None and self.preprocess != "wbc":
            raise ConfigError("--label is required")
        if need_scheme and self.scheme is None:
            raise ConfigError("--scheme is required")
        if isinstance(self.methods, str):
            self.methods = _csv_list(self.methods)
        if isinstance(self.drop_columns, str):
            self.drop_columns = _csv_list(self.drop_columns)
        try:
            if isinstance(self.p_grid, str):
                self.p_grid = parse_p_grid(self.p_grid)
            self.methods = [parse_method(m).value for m in self.methods]
            if self.scheme is not None:
                self.scheme = parse_scheme(self.scheme).value
            ClassifierKind(self.classifier)
            Normalization(self.normalization)
        except (ValueError, argparse.ArgumentTypeError) as exc:
            raise ConfigError(str(exc)) from None
        if not self.methods:
            raise ConfigError("at least one method is required")
        if self.sd_convention not in SD_CONVENTIONS:
            raise ConfigError(f"sd_convention must be one of {sorted(SD_CONVENTIONS)}")
        for name in ("subsets", "folds", "n_trees", "repeats", "jobs", "relieff_k"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.bins < 2:
            raise ConfigError("bins must be >= 2")
        if not 0 < self.ratio <= 1:
            raise ConfigError("ratio must lie in (0, 1]")
        if not self.p_grid or not all(0 < p <= 1 for p in self.p_grid):
            raise ConfigError("p-grid values must lie in (0, 1]")
        return self

    def resolved(self) -> dict:
        """Settings that affect results; ``jobs`` and ``out`` are excluded."""
        d = dataclasses.asdict(self)
        d.pop("jobs")
        d.pop("out")
        return d

    def ensemble(self, schemes=None) -> EnsembleConfig:
        return EnsembleConfig(
            methods=tuple(self.methods),
            schemes=tuple(schemes if schemes is not None else ([self.scheme] if self.scheme else ALL_SCHEMES)),
            n_subsets=self.subsets,
            ratio=self.ratio,
            seed=self.seed,
            selector=SelectorConfig(relieff_k=self.relieff_k, n_bins=self.bins),
            sd_ddof=SD_CONVENTIONS[self.sd_convention],
            normalization=Normalization(self.normalization),
        )


def parse_p_grid(text: str) -> list[float]:
    """``start:stop:step`` (inclusive, either direction) or a comma list."""
    text = text.strip()
    try:
        if ":" in text:
            start, stop, step = (float(v) for v in text.split(":"))
            if step <= 0:
                raise ValueError
            count = int(round(abs(start - stop) / step)) + 1
            sign = -1 if stop < start else 1
            return [round(start + sign * i * step, 10) for i in range(count)]
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad proportion grid {text!r}") from None


def _csv_list(text: str) -> list[str]:
    return [v.strip() for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", help="JSON file with RunConfig fields")
    common.add_argument("--data", help="CSV dataset (relative paths may be rooted at $FUZZRANK_DATA_DIR)")
    common.add_argument("--label", help="label column name or index")
    common.add_argument("--drop-columns", dest="drop_columns", type=_csv_list, help="comma list of non-feature columns")
    common.add_argument("--preprocess", choices=["none", "wbc"], help="'wbc' reads the raw UCI breast-cancer file")
    common.add_argument("--methods", type=_csv_list, help="comma list from cfs,relieff,mi,fisher")
    common.add_argument("--scheme", choices=SCHEME_CHOICES)
    common.add_argument("--subsets", type=int, help="number of bootstrap subsets L")
    common.add_argument("--ratio", type=float, help="bootstrap subset size as a proportion of S")
    common.add_argument("--seed", type=int)
    common.add_argument("--folds", type=int)
    common.add_argument("--classifier", choices=[k.value for k in ClassifierKind])
    common.add_argument("--n-trees", dest="n_trees", type=int)
    common.add_argument("--p-grid", dest="p_grid", type=parse_p_grid, help="e.g. 0.9:0.3:0.1")
    common.add_argument("--repeats", type=int)
    common.add_argument("--relieff-k", dest="relieff_k", type=int)
    common.add_argument("--bins", type=int)
    common.add_argument("--sd-convention", dest="sd_convention", choices=sorted(SD_CONVENTIONS))
    common.add_argument("--normalization", choices=[n.value for n in Normalization])
    common.add_argument("--out", help="output directory")
    common.add_argument("--jobs", type=int, help="worker processes (results do not depend on it)")
    common.add_argument("-v", "--verbose", action="store_true", help="log written files to stderr")

    parser = argparse.ArgumentParser(prog="fuzzrank", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("rank", parents=[common], help="rank features of a dataset")
    sub.add_parser("eval-accuracy", parents=[common], help="cross-validated accuracy curves")
    sub.add_parser("eval-stability", parents=[common], help="fold and subsample stability")
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    values = {}
    config_path = getattr(args, "config", None)
    if config_path:
        try:
            with open(config_path, encoding="utf-8") as fh:
                values.update(json.load(fh))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {config_path}: {exc}") from None
    values.update({k: v for k, v in vars(args).items() if k not in ("config", "command", "verbose")})
    known = {f.name for f in dataclasses.fields(RunConfig)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    return RunConfig(**values)


def load_dataset(cfg: RunConfig) -> Dataset:
    if cfg.preprocess == "wbc":
        return load_wbc(cfg.data)
    return load_csv(cfg.data, cfg.label, drop_columns=cfg.drop_columns)


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------

def _write_json(path: Path, payload: dict):
    payload = {"generated_at": datetime.now(timezone.utc).isoformat(timespec="seconds"), **payload}
    path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    log.info("wrote %s", path)


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    log.info("wrote %s", path)


def _write_text(path: Path, text: str):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(text)
    log.info("wrote %s", path)


def _write_config(out: Path, command: str, cfg: RunConfig) -> Path:
    path = out / "config.json"
    _write_json(path, {"command": command, "config": cfg.resolved()})
    return path


def _fmt(value: float) -> str:
    return repr(float(value))


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_rank(cfg: RunConfig) -> list[Path]:
    dataset = load_dataset(cfg)
    ens = cfg.ensemble()
    result = rank_features(
        dataset,
        ens.methods,
        cfg.scheme,
        ens.n_subsets,
        ens.ratio,
        ens.seed,
        ens.selector,
        ens.sd_ddof,
        ens.normalization,
        jobs=cfg.jobs,
    )
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / "ranking.json", out / "ranking.csv"]
    _write_json(paths[0], {**result.to_dict(), "config": cfg.resolved()})
    _write_text(paths[1], result.to_csv())
    return paths + [_write_config(out, "rank", cfg)]


def cmd_eval_accuracy(cfg: RunConfig) -> list[Path]:
    dataset = load_dataset(cfg)
    ens = cfg.ensemble(schemes=ALL_SCHEMES if cfg.scheme is None else [cfg.scheme])
    folds = kfold_split(dataset, cfg.folds, cfg.seed)
    scores = fold_scores(dataset, folds, ens, jobs=cfg.jobs)
    curves = compare_accuracy(dataset, folds, scores, cfg.classifier, n_trees=cfg.n_trees, seed=cfg.seed)
    labels = ens.labels
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    kind = cfg.classifier
    paths = [
        out / f"accuracy_{kind}.csv",
        out / f"accuracy_{kind}.json",
        out / f"summary_{kind}.csv",
        out / f"summary_{kind}.json",
    ]
    n_points = len(curves[labels[0]].points)
    _write_csv(
        paths[0],
        ["n_features", *labels],
        [
            [curves[labels[0]].points[i].n_features, *(_fmt(curves[l].points[i].mean_accuracy) for l in labels)]
            for i in range(n_points)
        ],
    )
    _write_json(
        paths[1],
        {
            "dataset": dataset.name,
            "folds": [[int(i) for i in f] for f in folds.folds],
            "curves": [curves[l].to_dict() for l in labels],
            "config": cfg.resolved(),
        },
    )
    best = {l: curves[l].best for l in labels}
    _write_csv(paths[2], ["dataset", "classifier", *labels], [[dataset.name, kind, *(_fmt(best[l].mean_accuracy) for l in labels)]])
    _write_json(
        paths[3],
        {
            "dataset": dataset.name,
            "classifier": kind,
            "highest_mean_accuracy": {l: best[l].mean_accuracy for l in labels},
            "n_features_at_best": {l: best[l].n_features for l in labels},
            "config": cfg.resolved(),
        },
    )
    return paths + [_write_config(out, "eval-accuracy", cfg)]


def cmd_eval_stability(cfg: RunConfig) -> list[Path]:
    dataset = load_dataset(cfg)
    ens = cfg.ensemble(schemes=ALL_SCHEMES if cfg.scheme is None else [cfg.scheme])
    folds = kfold_split(dataset, cfg.folds, cfg.seed)
    scores = fold_scores(dataset, folds, ens, jobs=cfg.jobs)
    reports = {label: stability_report(matrix, ens.sd_ddof) for label, matrix in scores.items()}
    curves = compare_subsample_stability(dataset, ens, cfg.p_grid, cfg.repeats, cfg.seed, jobs=cfg.jobs)
    labels = ens.labels
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / "stability.csv", out / "stability.json", out / "subsample.csv", out / "subsample.json"]
    _write_csv(
        paths[0],
        ["index", "dataset", *labels],
        [
            ["ASD", dataset.name, *(_fmt(reports[l].asd) for l in labels)],
            ["APC", dataset.name, *(_fmt(reports[l].apc) for l in labels)],
        ],
    )
    _write_json(
        paths[1],
        {
            "dataset": dataset.name,
            "feature_names": list(dataset.feature_names),
            "reports": {l: reports[l].to_dict() for l in labels},
            "config": cfg.resolved(),
        },
    )
    _write_csv(
        paths[2],
        ["p", *labels],
        [[_fmt(p), *(_fmt(curves[l].points[i].mean_pearson) for l in labels)] for i, p in enumerate(cfg.p_grid)],
    )
    _write_json(
        paths[3],
        {
            "dataset": dataset.name,
            "repeats": cfg.repeats,
            "curves": [curves[l].to_dict() for l in labels],
            "config": cfg.resolved(),
        },
    )
    return paths + [_write_config(out, "eval-stability", cfg)]


COMMANDS = {
    "rank": (cmd_rank, True),
    "eval-accuracy": (cmd_eval_accuracy, False),
    "eval-stability": (cmd_eval_stability, False),
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
        format="%(levelname)s: %(message)s",
        stream=sys.stderr,
    )
    command, need_scheme = COMMANDS[args.command]
    try:
        cfg = resolve_config(args).validate(need_scheme=need_scheme)
    except (ConfigError, TypeError) as exc:
        parser.print_usage(sys.stderr)
        print(f"fuzzrank: error: {exc}", file=sys.stderr)
        return 2
    try:
        command(cfg)
    except (OSError, DatasetError, ValueError) as exc:
        print(f"fuzzrank: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
