"""Known-ratio protocol runner and the metric suite.

For each requested known-class ratio the protocol repeats: sample known
classes, train a detector on them, predict the full test split (unknown
classes relabelled "__ood__"), and score accuracy, macro-F1, F1 over known
classes, and F1 of the OOD class. Runs aggregate into mean and sample std.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import detector
from ._util import atomic_write_text
from .boundary import BoundaryParams
from .data import Dataset, OOD_LABEL, SplitSpec, make_split
from .errors import DataError
from .metric_learning import TrainConfig

REPORT_FORMAT = "oodbound-report/1"

_METRICS = ("accuracy", "macro_f1", "f1_ood", "f1_ind")


@dataclass(frozen=True)
class RunConfig:
    ratios: tuple[float, ...] = (0.25, 0.5, 0.75)
    runs: int = 10
    seed: int = 0
    train_fraction: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "ratios", tuple(float(r) for r in self.ratios))
        if not self.ratios:
            raise DataError("need at least one ratio")
        for r in self.ratios:
            if not (0.0 < r <= 1.0):
                raise DataError(f"ratio must be in (0, 1], got {r}")
        if self.runs < 1:
            raise DataError("runs must be >= 1")
        if self.seed < 0:
            raise DataError("seed must be non-negative")
        if not (0.0 < self.train_fraction <= 1.0):
            raise DataError(f"train_fraction must be in (0, 1], got {self.train_fraction}")


@dataclass(frozen=True)
class MetricsReport:
    """Scores of one ratio: per-run values plus mean and sample std."""

    ratio: float
    per_run: tuple[dict[str, float], ...]
    mean: dict[str, float]
    std: dict[str, float]
    per_class_f1: dict[str, float]
    config: dict


def confusion_and_f1(
    predictions: Sequence[str], gold: Sequence[str], label_set: Sequence[str]
) -> dict:
    """Exact-match accuracy and per-class F1 from one prediction run.

    Per-class F1 uses zero for undefined precision/recall. A class with no
    gold items and no predictions stays in the per-class table at 0 but is
    excluded from the macro averages. macro_f1 covers known classes plus the
    OOD class; f1_ind covers known classes only.
    """
    if len(predictions) != len(gold):
        raise DataError(f"got {len(predictions)} predictions for {len(gold)} gold labels")
    if not gold:
        raise DataError("cannot score an empty prediction list")
    labels = list(dict.fromkeys(label_set))
    if OOD_LABEL not in labels:
        raise DataError(f"label_set must include {OOD_LABEL!r}")
    known = set(labels)
    stray = (set(predictions) | set(gold)) - known
    if stray:
        raise DataError(f"labels outside label_set: {sorted(stray)}")

    correct = sum(1 for p, g in zip(predictions, gold) if p == g)
    accuracy = correct / len(gold)

    per_class: dict[str, float] = {}
    active: dict[str, bool] = {}
    for lab in labels:
        tp = sum(1 for p, g in zip(predictions, gold) if p == lab and g == lab)
        fp = sum(1 for p, g in zip(predictions, gold) if p == lab and g != lab)
        fn = sum(1 for p, g in zip(predictions, gold) if p != lab and g == lab)
        active[lab] = (tp + fp + fn) > 0
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        per_class[lab] = f1

    macro_pool = [per_class[lab] for lab in labels if active[lab]]
    ind_pool = [per_class[lab] for lab in labels if active[lab] and lab != OOD_LABEL]
    return {
        "accuracy": accuracy,
        "macro_f1": sum(macro_pool) / len(macro_pool) if macro_pool else 0.0,
        "f1_ood": per_class[OOD_LABEL],
        "f1_ind": sum(ind_pool) / len(ind_pool) if ind_pool else 0.0,
        "per_class_f1": per_class,
    }


def _subsample(dataset: Dataset, fraction: float, rng: np.random.Generator) -> Dataset:
    """Stratified per-class subsample with a floor of one example per class."""
    if fraction >= 1.0:
        return dataset
    keep: list[int] = []
    idx_by_class: dict[str, list[int]] = {}
    for i, it in enumerate(dataset.items):
        idx_by_class.setdefault(it.label, []).append(i)
    for label in sorted(idx_by_class):
        idx = idx_by_class[label]
        n = max(1, math.floor(fraction * len(idx)))
        chosen = rng.choice(len(idx), size=n, replace=False)
        keep.extend(idx[j] for j in chosen)
    keep.sort()
    return Dataset.from_items(dataset.items[i] for i in keep)


def _run_cell(
    train: Dataset,
    test: Dataset,
    ratio: float,
    run_index: int,
    run_config: RunConfig,
    train_config: TrainConfig,
    boundary_params: BoundaryParams,
) -> dict:
    split = make_split(train, test, SplitSpec(known_ratio=ratio, seed=run_config.seed, run_index=run_index))
    fit_train = split.train
    if run_config.train_fraction < 1.0:
        rng = np.random.default_rng(
            [run_config.seed, run_index, int(round(ratio * 1_000_000)), 1]
        )
        fit_train = _subsample(fit_train, run_config.train_fraction, rng)
    cell_config = replace(train_config, seed=train_config.seed + run_index)
    model = detector.fit(fit_train, cell_config, boundary_params)
    preds = detector.predict_batch(model, split.test.matrix())
    gold = [it.label for it in split.test.items]
    label_set = sorted(split.known_labels) + [OOD_LABEL]
    return confusion_and_f1([p.label for p in preds], gold, label_set)


def run_protocol(
    train: Dataset,
    test: Dataset,
    run_config: RunConfig = RunConfig(),
    train_config: TrainConfig = TrainConfig(),
    boundary_params: BoundaryParams = BoundaryParams(),
    threads: int = 1,
) -> list[MetricsReport]:
    """One MetricsReport per ratio, averaged over seeded runs.

    Each (ratio, run) cell is independent: the split is keyed by
    (seed, run_index), training uses train_config.seed + run_index, and the
    optional subsample has its own stream. Results are aggregated in
    deterministic (ratio, run) order however many worker threads execute the
    cells, and any failed cell aborts the whole report.
    """
    cells = [(ri, run) for ri in range(len(run_config.ratios)) for run in range(run_config.runs)]

    def work(cell: tuple[int, int]) -> dict:
        ri, run = cell
        return _run_cell(
            train, test, run_config.ratios[ri], run, run_config, train_config, boundary_params
        )

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = dict(zip(cells, pool.map(work, cells)))
    else:
        results = {cell: work(cell) for cell in cells}

    reports: list[MetricsReport] = []
    for ri, ratio in enumerate(run_config.ratios):
        rows = [results[(ri, run)] for run in range(run_config.runs)]
        per_run = tuple(
            {m: row[m] for m in _METRICS} for row in rows
        )
        mean = {m: float(np.mean([row[m] for row in rows])) for m in _METRICS}
        std = {
            m: (float(np.std([row[m] for row in rows], ddof=1)) if len(rows) > 1 else 0.0)
            for m in _METRICS
        }
        class_sums: dict[str, list[float]] = {}
        for row in rows:
            for lab, f1 in row["per_class_f1"].items():
                class_sums.setdefault(lab, []).append(f1)
        per_class = {lab: float(np.mean(v)) for lab, v in sorted(class_sums.items())}
        reports.append(
            MetricsReport(
                ratio=ratio,
                per_run=per_run,
                mean=mean,
                std=std,
                per_class_f1=per_class,
                config={
                    "ratio": ratio,
                    "runs": run_config.runs,
                    "seed": run_config.seed,
                    "train_fraction": run_config.train_fraction,
                    "loss": train_config.loss,
                    "epochs": train_config.epochs,
                    "batch_size": train_config.batch_size,
                    "learning_rate": train_config.learning_rate,
                    "train_seed": train_config.seed,
                    "boundary_step": boundary_params.step,
                    "boundary_max_iter": boundary_params.max_iter,
                    "beta_override": boundary_params.beta_override,
                },
            )
        )
    return reports


def train_size_sweep(
    fractions: Sequence[float],
    train: Dataset,
    test: Dataset,
    run_config: RunConfig = RunConfig(),
    train_config: TrainConfig = TrainConfig(),
    boundary_params: BoundaryParams = BoundaryParams(),
    threads: int = 1,
) -> list[tuple[float, list[MetricsReport]]]:
    """run_protocol at each training-set fraction, shared seeds throughout."""
    fractions = [float(f) for f in fractions]
    if not fractions:
        raise DataError("need at least one fraction")
    if sorted(fractions) != fractions:
        raise DataError("fractions must be sorted ascending")
    for f in fractions:
        if not (0.0 < f <= 1.0):
            raise DataError(f"fraction must be in (0, 1], got {f}")
    out: list[tuple[float, list[MetricsReport]]] = []
    for f in fractions:
        rc = replace(run_config, train_fraction=f)
        out.append((f, run_protocol(train, test, rc, train_config, boundary_params, threads)))
    return out


def report_payload(reports: Sequence[MetricsReport]) -> dict:
    return {
        "version": REPORT_FORMAT,
        "reports": [
            {
                "ratio": r.ratio,
                "per_run": list(r.per_run),
                "mean": r.mean,
                "std": r.std,
                "per_class_f1": r.per_class_f1,
                "config": r.config,
            }
            for r in reports
        ],
    }


def emit_report(reports: Sequence[MetricsReport], path: str | Path, fmt: str) -> None:
    """Write the aggregate report as json (full), csv, or markdown (summary)."""
    path = Path(path)
    if fmt == "json":
        atomic_write_text(path, json.dumps(report_payload(reports), indent=2, sort_keys=True) + "\n")
    elif fmt == "csv":
        lines = ["ratio,metric,mean,std,runs"]
        for r in reports:
            for m in _METRICS:
                lines.append(f"{r.ratio},{m},{r.mean[m]:.10f},{r.std[m]:.10f},{r.config['runs']}")
        atomic_write_text(path, "\n".join(lines) + "\n")
    elif fmt == "markdown":
        lines = [
            "| ratio | accuracy | macro_f1 | f1_ood | f1_ind |",
            "| --- | --- | --- | --- | --- |",
        ]
        for r in reports:
            cells = " | ".join(
                f"{r.mean[m] * 100:.2f} ± {r.std[m] * 100:.2f}" for m in _METRICS
            )
            lines.append(f"| {r.ratio} | {cells} |")
        atomic_write_text(path, "\n".join(lines) + "\n")
    else:
        raise DataError(f"unknown report format {fmt!r}; expected json, csv, or markdown")


def load_report(path: str | Path) -> dict:
    """Read a json report back; verifies the format version."""
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such report file: {path}")
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: corrupt report file: {exc}") from None
    if not isinstance(payload, dict) or payload.get("version") != REPORT_FORMAT:
        raise DataError(f"{path}: not a {REPORT_FORMAT!r} report")
    return payload
