"""Experiment plumbing behind the CLI: runs, cross-validation, repeated holdout, file formats."""
from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import asdict, dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from sklearn.model_selection import StratifiedKFold

from .dataio import Dataset, DegenerateDataError, compute_stats, normalize, row_norms, split
from .objective import auc_score
from .regularizer import RegKind, RegularizerSpec
from .solvers import (ConfigError, EvalHooks, SolveResult, SolverConfig, StepSizeWarning,
                      TraceRecord, pgd, prox_full_gradient, reference_step_size, spam, vrspam)

TRACE_COLUMNS = ["stage", "grad_evals", "elapsed_ms", "objective", "test_auc",
                 "update_variance", "dist_sq_to_ref"]
DEFAULT_GRID = tuple(10.0**k for k in range(-5, 6))
ALGORITHMS = ("vrspam", "spam", "pgd")


@dataclass
class RunConfig:
    algo: str = "vrspam"
    reg: str = "l2"
    beta: float = 1.0
    beta1: float = 0.0
    eta: Optional[float] = None
    theta: float = 0.5
    m: Optional[int] = None
    epochs: int = 20
    seed: int = 0
    normalize: bool = True
    warm_start: str = "zero"
    spam_c: Optional[float] = None
    tolerance: float = 1e-10

    def __post_init__(self):
        if self.algo not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algo!r}")
        self.regularizer()
        self.solver_config()

    def regularizer(self) -> RegularizerSpec:
        kind = RegKind(self.reg)
        return RegularizerSpec(kind, self.beta, self.beta1 if kind is RegKind.ELASTIC_NET else 0.0)

    def solver_config(self, seed: int | None = None) -> SolverConfig:
        return SolverConfig(eta=self.eta, theta=self.theta, m=self.m, epochs=self.epochs,
                            seed=self.seed if seed is None else seed,
                            warm_start=self.warm_start, spam_c=self.spam_c)


@dataclass
class CvConfig:
    folds: int = 5
    beta_grid: Sequence[float] = DEFAULT_GRID
    beta1_grid: Sequence[float] = DEFAULT_GRID

    def __post_init__(self):
        if self.folds < 2:
            raise ConfigError("need at least 2 folds")
        if not self.beta_grid or not self.beta1_grid:
            raise ConfigError("grids must be non-empty")


def prepare(train: Dataset, test: Dataset | None, do_normalize: bool):
    """Scale train to max norm 1 and test by the same factor; pad test to train's width."""
    if test is not None:
        d = max(train.dimension, test.dimension)
        train, test = train.with_dimension(d), test.with_dimension(d)
    if do_normalize:
        scale = float(row_norms(train).max(initial=0.0))
        train = normalize(train, scale)
        if test is not None:
            test = normalize(test, scale)
    return train, test


def train_model(train: Dataset, cfg: RunConfig, test: Dataset | None = None,
                w_ref: np.ndarray | None = None, seed: int | None = None,
                measure: bool = True, sink=None) -> SolveResult:
    """Train on already prepared data; ``measure=False`` skips per-stage objective and variance."""
    stats = compute_stats(train)
    reg = cfg.regularizer()
    hooks = EvalHooks(test=test, w_ref=w_ref, objective=measure, variance=measure, sink=sink)
    scfg = cfg.solver_config(seed)
    if cfg.algo == "vrspam":
        return vrspam(train, stats, reg, scfg, hooks)
    if cfg.algo == "spam":
        return spam(train, stats, reg, scfg, hooks)
    return pgd(train, stats, reg, scfg, hooks, tolerance=cfg.tolerance)


def reference_optimum(train: Dataset, cfg: RunConfig) -> np.ndarray:
    stats = compute_stats(train)
    # same step as the pgd solver, so a converged pgd run lands on it exactly
    eta = cfg.eta if cfg.algo == "pgd" and cfg.eta is not None else reference_step_size(stats)
    return prox_full_gradient(train, stats, cfg.regularizer(), eta=eta, tolerance=cfg.tolerance)


def _fold_seed(seed: int, fold: int) -> int:
    return int(np.random.SeedSequence([seed, fold]).generate_state(1)[0])


def stratified_folds(y: np.ndarray, folds: int, seed: int) -> list[tuple[np.ndarray, np.ndarray]]:
    counts = np.unique(y, return_counts=True)[1]
    if len(counts) < 2 or counts.min() < folds:
        raise DegenerateDataError(f"each class needs at least {folds} samples for {folds}-fold CV")
    skf = StratifiedKFold(n_splits=folds, shuffle=True, random_state=seed % 2**32)
    return list(skf.split(np.zeros(len(y)), y))


@dataclass
class CvCell:
    beta: float
    beta1: float
    fold_aucs: list[float]

    @property
    def mean_auc(self) -> float:
        return float(np.mean(self.fold_aucs))

    @property
    def std_auc(self) -> float:
        return float(np.std(self.fold_aucs))

    def to_dict(self):
        return {"beta": self.beta, "beta1": self.beta1, "mean_auc": self.mean_auc,
                "std_auc": self.std_auc, "fold_aucs": self.fold_aucs}


@dataclass
class CvResult:
    best: CvCell
    cells: list[CvCell] = field(default_factory=list)

    def to_dict(self):
        return {"best": {"beta": self.best.beta, "beta1": self.best.beta1,
                         "mean_auc": self.best.mean_auc},
                "cells": [c.to_dict() for c in self.cells]}


def _grid(cfg: RunConfig, cv: CvConfig):
    beta1s = cv.beta1_grid if RegKind(cfg.reg) is RegKind.ELASTIC_NET else (0.0,)
    return [(float(b), float(b1)) for b in cv.beta_grid for b1 in beta1s]


def _quiet_fit(train, cfg, seed=None):
    # a fixed eta above beta/(128 M^4) is the norm across a beta grid; do not warn per cell
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", StepSizeWarning)
        return train_model(train, cfg, seed=seed, measure=False).weights


def _cell_fold_auc(data, cfg, tr, va, fold, beta, beta1):
    train, valid = prepare(data.subset(tr), data.subset(va), cfg.normalize)
    run = replace(cfg, beta=beta, beta1=beta1)
    w = _quiet_fit(train, run, seed=_fold_seed(cfg.seed, fold))
    return auc_score(valid.X @ w, valid.y)


def cross_validate(data: Dataset, cfg: RunConfig, cv: CvConfig, jobs: int = 1) -> CvResult:
    """Stratified k-fold search over (beta, beta1) by mean validation AUC.

    Ties go to the larger beta, then the larger beta1.  Every (cell, fold) task
    has a fixed seed, so ``jobs`` does not affect the result.
    """
    folds = stratified_folds(data.y, cv.folds, cfg.seed)
    cells = _grid(cfg, cv)
    tasks = [(c, f) for c in range(len(cells)) for f in range(len(folds))]

    def run(task):
        c, f = task
        tr, va = folds[f]
        return _cell_fold_auc(data, cfg, tr, va, f, *cells[c])

    if jobs == 1:
        aucs = [run(t) for t in tasks]
    else:
        from joblib import Parallel, delayed
        aucs = Parallel(n_jobs=jobs)(delayed(run)(t) for t in tasks)
    table = [CvCell(b, b1, [aucs[i] for i, (c, _) in enumerate(tasks) if c == k])
             for k, (b, b1) in enumerate(cells)]
    best = max(table, key=lambda cell: (cell.mean_auc, cell.beta, cell.beta1))
    return CvResult(best, table)


@dataclass
class HoldoutRun:
    run: int
    beta: float
    beta1: float
    cv_auc: float
    test_auc: float


def repeated_holdout(data: Dataset, cfg: RunConfig, cv: CvConfig, runs: int = 20,
                     train_fraction: float = 0.8, jobs: int = 1) -> list[HoldoutRun]:
    """Per run: fresh split, CV on the training part, retrain with the best cell, test AUC."""
    out = []
    for r in range(runs):
        run_seed = _fold_seed(cfg.seed, 10_000 + r)
        train, test = split(data, train_fraction, run_seed)
        run_cfg = replace(cfg, seed=run_seed)
        best = cross_validate(train, run_cfg, cv, jobs=jobs).best
        tr, te = prepare(train, test, cfg.normalize)
        final = replace(run_cfg, beta=best.beta, beta1=best.beta1)
        w = _quiet_fit(tr, final)
        out.append(HoldoutRun(r, best.beta, best.beta1, best.mean_auc, auc_score(te.X @ w, te.y)))
    return out


def summarize(runs: list[HoldoutRun]) -> dict:
    aucs = np.array([r.test_auc for r in runs])
    return {"runs": [asdict(r) for r in runs], "mean_test_auc": float(aucs.mean()),
            "std_test_auc": float(aucs.std())}


def _fmt(value) -> str:
    if value is None:
        return ""
    return repr(float(value)) if isinstance(value, float) else str(value)


def write_trace(records: Sequence[TraceRecord], fh, timing: bool = True) -> None:
    """CSV with a fixed header; absent measurements are empty cells."""
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(TRACE_COLUMNS)
    for rec in records:
        row = asdict(rec)
        if not timing:
            row["elapsed_ms"] = None
        writer.writerow([_fmt(row[c]) for c in TRACE_COLUMNS])


def read_trace(fh) -> list[TraceRecord]:
    if isinstance(fh, str):
        fh = io.StringIO(fh)
    reader = csv.DictReader(fh)
    if reader.fieldnames != TRACE_COLUMNS:
        raise ValueError(f"unexpected trace header {reader.fieldnames}")
    out = []
    for row in reader:
        kw = {}
        for name, text in row.items():
            if text == "":
                kw[name] = None if name != "elapsed_ms" else math.nan
            elif name in ("stage", "grad_evals"):
                kw[name] = int(text)
            else:
                kw[name] = float(text)
        out.append(TraceRecord(**kw))
    return out


def save_model(path: str, weights: np.ndarray, metadata: dict) -> None:
    with open(path, "w") as fh:
        json.dump({"dimension": int(weights.shape[0]),
                   "weights": [float(v) for v in weights],
                   "metadata": metadata}, fh, indent=1)
        fh.write("\n")


def load_model(path: str) -> tuple[np.ndarray, dict]:
    with open(path) as fh:
        doc = json.load(fh)
    w = np.asarray(doc["weights"], dtype=float)
    if w.shape != (doc["dimension"],):
        raise ValueError("model dimension does not match its weight array")
    return w, doc.get("metadata", {})
