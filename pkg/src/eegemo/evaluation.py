"""Participant-grouped cross-validation, metrics and Table-shaped reports."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from . import pca
from .classify import AnnConfig, ann_predict, ann_train, knn_fit, knn_predict, svm_predict, svm_train
from .config import AnnParams, ExperimentConfig, KnnParams, SvmParams, config_hash
from .dataset import Dataset
from .features import FeatureMatrix, dataset_features
from .preprocess import WindowSpec

WORKERS_ENV = "EEGEMO_MAX_WORKERS"


class FoldError(ValueError):
    pass


class LeakageError(AssertionError):
    pass


class ExperimentError(RuntimeError):
    """A stage failed inside one grid cell / fold."""


@dataclass(frozen=True)
class FoldPlan:
    seed: int
    folds: tuple[tuple[int, ...], ...]

    @property
    def k(self) -> int:
        return len(self.folds)

    def test_mask(self, participants: np.ndarray, fold: int) -> np.ndarray:
        return np.isin(participants, self.folds[fold])

    def train_mask(self, participants: np.ndarray, fold: int) -> np.ndarray:
        others = [p for i, f in enumerate(self.folds) if i != fold for p in f]
        return np.isin(participants, others)


def make_folds(participants: Sequence[int], k: int = 8, seed: int = 0) -> FoldPlan:
    """Seeded shuffle of the participant ids, then a contiguous split into k folds."""
    ids = sorted(set(int(p) for p in participants))
    if len(ids) % k:
        raise FoldError(
            f"{len(ids)} participants cannot be split into {k} equal folds "
            f"(remainder {len(ids) % k}); drop participants or change k"
        )
    perm = np.random.default_rng(seed).permutation(len(ids))
    shuffled = [ids[i] for i in perm]
    size = len(ids) // k
    return FoldPlan(seed, tuple(tuple(sorted(shuffled[i * size:(i + 1) * size])) for i in range(k)))


@dataclass(frozen=True)
class MetricSet:
    """Confusion counts with "high" (1) as the positive class.

    Sensitivity / specificity are NaN when their class is absent.
    """

    tp: int
    tn: int
    fp: int
    fn: int

    @property
    def n(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    @property
    def accuracy(self) -> float:
        return (self.tp + self.tn) / self.n

    @property
    def sensitivity(self) -> float:
        pos = self.tp + self.fn
        return self.tp / pos if pos else math.nan

    @property
    def specificity(self) -> float:
        neg = self.tn + self.fp
        return self.tn / neg if neg else math.nan

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "sensitivity": _json_float(self.sensitivity),
            "specificity": _json_float(self.specificity),
            "tp": self.tp, "tn": self.tn, "fp": self.fp, "fn": self.fn,
        }

    def __add__(self, other: "MetricSet") -> "MetricSet":
        return MetricSet(self.tp + other.tp, self.tn + other.tn, self.fp + other.fp, self.fn + other.fn)


def _json_float(x: float):
    return None if math.isnan(x) else x


def compute_metrics(predictions, labels) -> MetricSet:
    p = np.asarray(predictions).astype(np.int64).ravel()
    t = np.asarray(labels).astype(np.int64).ravel()
    if p.shape != t.shape:
        raise ValueError("predictions and labels differ in length")
    if p.size == 0:
        raise ValueError("no predictions to score")
    return MetricSet(
        tp=int(np.sum((p == 1) & (t == 1))),
        tn=int(np.sum((p == 0) & (t == 0))),
        fp=int(np.sum((p == 1) & (t == 0))),
        fn=int(np.sum((p == 0) & (t == 1))),
    )


@dataclass
class CellResult:
    window_seconds: float
    axis_value: str
    classifier: str
    dimension: str
    folds: list[MetricSet] = field(default_factory=list)

    def mean(self, metric: str) -> float:
        vals = [getattr(m, metric) for m in self.folds]
        vals = [v for v in vals if not math.isnan(v)]
        return float(np.mean(vals)) if vals else math.nan

    @property
    def accuracy(self) -> float:
        return self.mean("accuracy")

    @property
    def pooled(self) -> MetricSet:
        total = self.folds[0]
        for m in self.folds[1:]:
            total = total + m
        return total

    def to_dict(self) -> dict:
        return {
            "window_seconds": self.window_seconds,
            "axis_value": self.axis_value,
            "classifier": self.classifier,
            "dimension": self.dimension,
            "mean": {m: _json_float(self.mean(m)) for m in ("accuracy", "sensitivity", "specificity")},
            "pooled": self.pooled.to_dict(),
            "folds": [m.to_dict() for m in self.folds],
        }


@dataclass
class ExperimentReport:
    config: dict
    config_hash: str
    seed: int
    fold_plan: FoldPlan
    cells: dict[tuple[float, str, str, str], CellResult]
    class_priors: dict[str, float]
    classifiers: tuple[str, ...]
    axis: str
    axis_values: tuple[str, ...]
    window_lengths: tuple[float, ...]
    dimensions: tuple[str, ...]

    def cell(self, window_seconds: float, axis_value: str, classifier: str, dimension: str) -> CellResult:
        return self.cells[(float(window_seconds), axis_value, classifier, dimension)]

    def to_dict(self) -> dict:
        return {
            "config_hash": self.config_hash,
            "seed": self.seed,
            "config": self.config,
            "axis": self.axis,
            "axis_values": list(self.axis_values),
            "window_lengths": list(self.window_lengths),
            "classifiers": list(self.classifiers),
            "dimensions": list(self.dimensions),
            "fold_plan": {"seed": self.fold_plan.seed, "folds": [list(f) for f in self.fold_plan.folds]},
            "class_priors": self.class_priors,
            "cells": [self.cells[k].to_dict() for k in sorted(self.cells)],
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "ExperimentReport":
        cells = {}
        for c in data["cells"]:
            res = CellResult(c["window_seconds"], c["axis_value"], c["classifier"], c["dimension"])
            res.folds = [MetricSet(f["tp"], f["tn"], f["fp"], f["fn"]) for f in c["folds"]]
            cells[(float(res.window_seconds), res.axis_value, res.classifier, res.dimension)] = res
        plan = data["fold_plan"]
        return cls(
            config=data["config"],
            config_hash=data["config_hash"],
            seed=data["seed"],
            fold_plan=FoldPlan(plan["seed"], tuple(tuple(f) for f in plan["folds"])),
            cells=cells,
            class_priors=data["class_priors"],
            classifiers=tuple(data["classifiers"]),
            axis=data["axis"],
            axis_values=tuple(data["axis_values"]),
            window_lengths=tuple(float(w) for w in data["window_lengths"]),
            dimensions=tuple(data["dimensions"]),
        )

    def table(self, metric: str = "accuracy") -> str:
        """Delimited table laid out like the published ones: one block per
        window length, rows ``<Dimension>-<Classifier>``, columns = axis values,
        values in percent."""
        buf = io.StringIO()
        buf.write(f"# config_hash={self.config_hash} seed={self.seed} metric={metric}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["window_s", "row"] + list(self.axis_values))
        for win in self.window_lengths:
            for clf in self.classifiers:
                for dim in self.dimensions:
                    row = [f"{win:g}", f"{dim.capitalize()}-{clf}"]
                    for v in self.axis_values:
                        x = self.cell(win, v, clf, dim).mean(metric)
                        row.append("nan" if math.isnan(x) else f"{100 * x:.2f}")
                    w.writerow(row)
        return buf.getvalue()

    def write(self, out_dir) -> list[Path]:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        paths = []
        for metric in ("accuracy", "sensitivity", "specificity"):
            p = out_dir / f"table_{metric}.csv"
            p.write_text(self.table(metric))
            paths.append(p)
        p = out_dir / "report.json"
        p.write_text(json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n")
        paths.append(p)
        return paths

    @classmethod
    def read(cls, path) -> "ExperimentReport":
        path = Path(path)
        if path.is_dir():
            path = path / "report.json"
        return cls.from_dict(json.loads(path.read_text()))


def _row_digests(fm: FeatureMatrix, mask: np.ndarray) -> set[bytes]:
    idx = np.flatnonzero(mask)
    ident = np.stack([fm.participant[idx], fm.trial[idx], fm.window[idx]], axis=1)
    out = set()
    for meta, vals in zip(ident, fm.values[idx]):
        out.add(hashlib.sha1(meta.tobytes() + vals.tobytes()).digest())
    return out


def _fit_predict(params, Ztr, ytr, Zte, seed: int) -> np.ndarray:
    if isinstance(params, SvmParams):
        model = svm_train(Ztr, 2 * ytr - 1, sigma=params.sigma, C=params.C, tol=params.tol, seed=seed)
        return svm_predict(model, Zte)[0]
    if isinstance(params, KnnParams):
        model = knn_fit(Ztr, ytr, params.k, require_odd=not params.allow_even)
        return knn_predict(model, Zte)
    if isinstance(params, AnnParams):
        cfg = AnnConfig(
            hidden=tuple(params.hidden),
            learning_rate=params.learning_rate,
            batch_size=params.batch_size,
            epochs=params.epochs,
            seed=seed,
        )
        return ann_predict(ann_train(Ztr, ytr, cfg), Zte)[0]
    raise TypeError(f"unknown classifier parameters {params!r}")


def run_fold(fm: FeatureMatrix, plan: FoldPlan, fold: int, config: ExperimentConfig) -> dict:
    """Fit PCA and every classifier on the training folds, score the held-out fold.

    Returns {(classifier, dimension): MetricSet}.
    """
    test = plan.test_mask(fm.participant, fold)
    train = plan.train_mask(fm.participant, fold)
    if not test.any() or not train.any():
        raise FoldError(f"fold {fold} leaves an empty train or test set")
    if not np.all(train | test):
        missing = sorted(set(np.unique(fm.participant[~(train | test)]).tolist()))
        raise FoldError(f"participants {missing} are not in the fold plan")
    if set(np.unique(fm.participant[train])) & set(np.unique(fm.participant[test])):
        raise LeakageError(f"fold {fold}: a participant is in both train and test")
    if _row_digests(fm, train) & _row_digests(fm, test):
        raise LeakageError(f"fold {fold}: test rows present in the training set")

    Xtr, Xte = fm.values[train], fm.values[test]
    basis = pca.fit(Xtr, center=config.pca_center)
    Ztr = pca.transform(Xtr, basis)
    Zte = pca.transform(Xte, basis)
    out = {}
    for ci, params in enumerate(config.classifiers):
        for dim in config.dimensions:
            y = fm.labels[dim]
            seed = config.seed * 1000 + fold * 10 + ci
            pred = _fit_predict(params, Ztr, y[train], Zte, seed)
            out[(params.label(), dim)] = compute_metrics(pred, y[test])
    return out


def _job(args):
    fm, plan, fold, config, key = args
    try:
        return key, fold, run_fold(fm, plan, fold, config)
    except Exception as exc:  # context for the caller
        raise ExperimentError(f"window {key[0]:g} s, {key[1]}, fold {fold}: {exc}") from exc


def _worker_count(requested: int) -> int:
    cap = os.environ.get(WORKERS_ENV)
    if cap:
        requested = min(requested, max(1, int(cap)))
    return max(1, requested)


def experiment_features(
    dataset: Dataset, config: ExperimentConfig, window_seconds: float
) -> dict[str, FeatureMatrix]:
    """Feature matrices of every axis value for one window length."""
    spec = WindowSpec(window_seconds, config.overlap)
    full = dataset_features(dataset, spec, channels=config.channels, reference=config.reference)
    return {mode: full.select(mode) for mode in config.modes()}


def run_experiment(
    dataset: Dataset | None,
    config: ExperimentConfig,
    features: Mapping[float, Mapping[str, FeatureMatrix]] | None = None,
    progress: Callable[[str], None] | None = None,
    run_config: Mapping | None = None,
) -> ExperimentReport:
    """Cross-validate every (window, axis value, classifier, dimension) cell.

    ``features`` may supply precomputed matrices keyed by window length and
    mode string (``band:beta``); otherwise they are computed from ``dataset``.
    ``run_config`` replaces the echoed configuration (and hence the hash),
    e.g. with the full CLI run configuration.
    """
    feats: dict[float, Mapping[str, FeatureMatrix]] = {}
    for win in config.window_lengths:
        if features is not None and float(win) in features:
            feats[float(win)] = features[float(win)]
        else:
            if dataset is None:
                raise ValueError("no dataset and no cached features for window %g s" % win)
            feats[float(win)] = experiment_features(dataset, config, win)
        if progress:
            progress(f"features ready for {win:g} s windows")

    first = next(iter(next(iter(feats.values())).values()))
    plan = make_folds(np.unique(first.participant), config.folds, config.seed)
    priors = {d: float(first.labels[d].mean()) for d in config.dimensions}

    jobs = []
    for win in config.window_lengths:
        for mode, value in zip(config.modes(), config.axis_values()):
            fm = feats[float(win)][mode]
            for fold in range(plan.k):
                jobs.append((fm, plan, fold, config, (float(win), value)))

    cells: dict[tuple[float, str, str, str], CellResult] = {}
    for win in config.window_lengths:
        for value in config.axis_values():
            for params in config.classifiers:
                for dim in config.dimensions:
                    cells[(float(win), value, params.label(), dim)] = CellResult(float(win), value, params.label(), dim)

    results: dict[tuple, dict] = {}
    workers = _worker_count(config.workers)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for key, fold, res in pool.map(_job, jobs):
                results[(key, fold)] = res
    else:
        for job in jobs:
            key, fold, res = _job(job)
            results[(key, fold)] = res
            if progress:
                progress(f"{key[0]:g} s {key[1]} fold {fold + 1}/{plan.k}")

    # merge in a fixed order so the report does not depend on scheduling
    for (key, fold) in sorted(results):
        for (clf, dim), metrics in results[(key, fold)].items():
            cells[(key[0], key[1], clf, dim)].folds.append(metrics)

    echo = dict(run_config) if run_config is not None else config.model_dump(mode="json")
    return ExperimentReport(
        config=echo,
        config_hash=config_hash(echo),
        seed=config.seed,
        fold_plan=plan,
        cells=cells,
        class_priors=priors,
        classifiers=tuple(p.label() for p in config.classifiers),
        axis=config.axis,
        axis_values=config.axis_values(),
        window_lengths=tuple(float(w) for w in config.window_lengths),
        dimensions=tuple(config.dimensions),
    )
