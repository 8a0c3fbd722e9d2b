"""Pairwise squared AUC surrogate in its saddle-point form.

For a sample z = (x, y) the saddle function is

    F(w, a, b, zeta; z) = (1-p) (w.x - a)^2 [y=1] + p (w.x - b)^2 [y=-1]
                          + 2 (1 + zeta) w.x (p [y=-1] - (1-p) [y=1]) - p(1-p) zeta^2

and the auxiliary variables sit at their optima a(w) = w.mu+, b(w) = w.mu-,
zeta(w) = b(w) - a(w).  The stochastic gradient G(w; z) differentiates F in
its first argument only, with a, b, zeta frozen at those optima.  It is always
a scalar multiple of x, which is what :func:`gradient_coefficients` returns.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .dataio import Dataset, DatasetStats, DegenerateDataError, Sample


@dataclass(frozen=True)
class SaddleParams:
    a: float
    b: float
    zeta: float


def _check_dim(w: np.ndarray, stats: DatasetStats) -> None:
    if w.shape != (stats.dimension,):
        raise ValueError(f"weights have shape {w.shape}, stats have dimension {stats.dimension}")


def saddle_params(w: np.ndarray, stats: DatasetStats) -> SaddleParams:
    w = np.asarray(w, dtype=float)
    _check_dim(w, stats)
    a = float(w @ stats.mean_pos)
    b = float(w @ stats.mean_neg)
    return SaddleParams(a, b, b - a)


def saddle_function(w, a, b, zeta, x, y, p) -> float:
    """F(w, a, b, zeta; (x, y)) with dense ``x``."""
    s = float(np.dot(w, x))
    if y == 1:
        return (1 - p) * (s - a) ** 2 - 2 * (1 + zeta) * s * (1 - p) - p * (1 - p) * zeta ** 2
    return p * (s - b) ** 2 + 2 * (1 + zeta) * s * p - p * (1 - p) * zeta ** 2


def gradient_coefficients(scores: np.ndarray, labels: np.ndarray, params: SaddleParams,
                          p: float) -> np.ndarray:
    """Scalars c_i with G(w; z_i) = c_i x_i, given scores w.x_i."""
    one_zeta = 1.0 + params.zeta
    return np.where(
        labels == 1,
        2.0 * (1.0 - p) * (scores - params.a) - 2.0 * one_zeta * (1.0 - p),
        2.0 * p * (scores - params.b) + 2.0 * one_zeta * p,
    )


def stochastic_gradient(w: np.ndarray, z: Sample, stats: DatasetStats) -> np.ndarray:
    """Dense G(w; z)."""
    w = np.asarray(w, dtype=float)
    params = saddle_params(w, stats)
    score = float(w[z.indices] @ z.values)
    c = gradient_coefficients(np.array([score]), np.array([z.label]), params, stats.p)[0]
    g = np.zeros_like(w)
    g[z.indices] = c * z.values
    return g


def per_sample_gradients(w: np.ndarray, data: Dataset, stats: DatasetStats) -> np.ndarray:
    """All G(w; z_i) stacked as a dense n x d array (test and analysis helper)."""
    w = np.asarray(w, dtype=float)
    params = saddle_params(w, stats)
    c = gradient_coefficients(data.X @ w, data.y, params, stats.p)
    return data.X.multiply(c[:, None]).toarray()


def full_gradient(w: np.ndarray, data: Dataset, stats: DatasetStats) -> np.ndarray:
    """Mean of G(w; z_i) over the dataset."""
    if data.n == 0:
        raise ValueError("full gradient of an empty dataset")
    w = np.asarray(w, dtype=float)
    params = saddle_params(w, stats)
    c = gradient_coefficients(data.X @ w, data.y, params, stats.p)
    return (data.X.T @ c) / data.n


def _class_scores(w, data: Dataset):
    pos = data.y == 1
    if pos.all() or not pos.any():
        raise DegenerateDataError("objective needs both classes")
    scores = data.X @ np.asarray(w, dtype=float)
    return scores[pos], scores[~pos], pos.mean()


def objective_value(w: np.ndarray, data: Dataset, stats: DatasetStats | None = None) -> float:
    """Empirical surrogate p(1-p) [(1 - (a - b))^2 + V+ + V-].

    a, b are the class-mean scores and V+, V- the (biased) within-class score
    variances, so the value equals the average pairwise loss exactly.
    """
    if stats is not None:
        _check_dim(np.asarray(w), stats)
    s_pos, s_neg, p = _class_scores(w, data)
    a, b = s_pos.mean(), s_neg.mean()
    v_pos = np.mean((s_pos - a) ** 2)
    v_neg = np.mean((s_neg - b) ** 2)
    return float(p * (1 - p) * ((1 - (a - b)) ** 2 + v_pos + v_neg))


def objective_value_bruteforce(w: np.ndarray, data: Dataset) -> float:
    """p(1-p) times the mean of (1 - w.(x - x'))^2 over every positive-negative pair."""
    s_pos, s_neg, p = _class_scores(w, data)
    total = 0.0
    for sp_ in s_pos:
        for sn in s_neg:
            total += (1.0 - (sp_ - sn)) ** 2
    return float(p * (1 - p) * total / (len(s_pos) * len(s_neg)))


def _auc_inputs(scores, labels):
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    if scores.shape != labels.shape:
        raise ValueError("scores and labels differ in length")
    pos = labels == 1
    n_pos = int(pos.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DegenerateDataError("AUC needs both classes")
    return scores, pos, n_pos, n_neg


def auc_score(scores, labels) -> float:
    """Mann-Whitney AUC via average ranks; ties count one half."""
    scores, pos, n_pos, n_neg = _auc_inputs(scores, labels)
    ranks = rankdata(scores)
    wins = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(wins / (n_pos * n_neg))


def auc_score_pairs(scores, labels) -> float:
    """O(n^2) pair count; the oracle for :func:`auc_score`."""
    scores, pos, n_pos, n_neg = _auc_inputs(scores, labels)
    wins = 0.0
    for s in scores[pos]:
        for t in scores[~pos]:
            wins += 1.0 if s > t else 0.5 if s == t else 0.0
    return float(wins / (n_pos * n_neg))
