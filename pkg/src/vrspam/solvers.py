"""VRSPAM (proximal SVRG on the AUC saddle objective), SPAM, and a proximal
full-gradient reference solver.

All solvers draw their indices from ``numpy.random.default_rng(seed)`` and are
bitwise reproducible for a fixed seed.
"""
from __future__ import annotations

import enum
import logging
import time
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import _kernels
from .analysis import VarianceMode, update_variance
from .dataio import Dataset, DatasetStats
from .objective import auc_score, full_gradient, objective_value
from .regularizer import RegularizerSpec, prox, reg_value

log = logging.getLogger(__name__)


class WarmStart(str, enum.Enum):
    ZERO = "zero"
    SPAM_ONE_PASS = "spam_one_pass"
    SPAM_ONE_STEP = "spam_one_step"


class ConfigError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, weights: np.ndarray, residual: float):
        super().__init__(message)
        self.weights = weights
        self.residual = residual


class StepSizeWarning(UserWarning):
    """The step size exceeds beta / (128 M^4), where alpha < 1 is no longer guaranteed."""


@dataclass
class SolverConfig:
    """``eta=None`` selects theta * beta / (128 M^4); ``m=None`` means m = n.

    ``spam_c`` is the constant c of SPAM's schedule eta_t = c / (1 + c beta t)
    (default 1 / beta).
    """

    eta: Optional[float] = None
    theta: float = 0.5
    m: Optional[int] = None
    epochs: int = 10
    seed: int = 0
    warm_start: WarmStart = WarmStart.ZERO
    spam_c: Optional[float] = None
    keep_snapshots: bool = False

    def __post_init__(self):
        self.warm_start = WarmStart(self.warm_start)
        if self.eta is not None and not self.eta > 0:
            raise ConfigError(f"eta must be positive, got {self.eta}")
        if not 0 < self.theta < 1:
            raise ConfigError(f"theta must lie in (0, 1), got {self.theta}")
        if self.m is not None and self.m < 1:
            raise ConfigError(f"m must be positive, got {self.m}")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be positive, got {self.epochs}")
        if self.spam_c is not None and not self.spam_c > 0:
            raise ConfigError(f"spam_c must be positive, got {self.spam_c}")

    def step_size(self, stats: DatasetStats, reg: RegularizerSpec) -> float:
        if self.eta is not None:
            return self.eta
        return default_step_size(stats, reg.beta, self.theta)


@dataclass
class TraceRecord:
    stage: int
    grad_evals: int
    elapsed_ms: float
    objective: Optional[float] = None
    test_auc: Optional[float] = None
    update_variance: Optional[float] = None
    dist_sq_to_ref: Optional[float] = None


@dataclass
class SolveResult:
    weights: np.ndarray
    trace: list[TraceRecord]
    snapshots: Optional[list[np.ndarray]] = None


@dataclass
class EvalHooks:
    """What to measure at stage boundaries.  ``sink`` receives each record as it is made."""

    test: Optional[Dataset] = None
    w_ref: Optional[np.ndarray] = None
    objective: bool = True
    variance: bool = True
    sink: Optional[Callable[[TraceRecord], None]] = None


@dataclass
class _Tracer:
    data: Dataset
    stats: DatasetStats
    reg: RegularizerSpec
    hooks: EvalHooks
    trace: list = field(default_factory=list)
    elapsed: float = 0.0
    _tick: float = 0.0

    def start(self):
        self._tick = time.perf_counter()

    def stop(self):
        self.elapsed += time.perf_counter() - self._tick

    def record(self, stage, grad_evals, w, variance=None):
        h = self.hooks
        rec = TraceRecord(stage, grad_evals, self.elapsed * 1e3)
        if h.objective:
            rec.objective = objective_value(w, self.data) + reg_value(w, self.reg)
        if h.test is not None:
            rec.test_auc = auc_score(h.test.X @ w, h.test.y)
        if h.variance and variance is not None:
            rec.update_variance = variance()
        if h.w_ref is not None:
            rec.dist_sq_to_ref = float(np.sum((w - h.w_ref) ** 2))
        self.trace.append(rec)
        if h.sink is not None:
            h.sink(rec)


def default_step_size(stats: DatasetStats, beta: float, theta: float) -> float:
    """theta * beta / (128 M^4)."""
    if not 0 < theta < 1:
        raise ConfigError(f"theta must lie in (0, 1), got {theta}")
    if not beta > 0 or not stats.max_norm > 0:
        raise ConfigError("beta and the max sample norm must be positive")
    return theta * beta / (128.0 * stats.max_norm**4)


def _csr(data: Dataset):
    X = data.X
    if not X.has_sorted_indices:
        X = X.sorted_indices()
    return (X.indptr.astype(np.int64), X.indices.astype(np.int64),
            X.data.astype(np.float64), data.y.astype(np.int64))


def _spam_c(cfg: SolverConfig, reg: RegularizerSpec) -> float:
    return cfg.spam_c if cfg.spam_c is not None else 1.0 / reg.beta


def vrspam(data: Dataset, stats: DatasetStats, reg: RegularizerSpec, cfg: SolverConfig,
           hooks: EvalHooks | None = None) -> SolveResult:
    """Proximal SVRG: ``cfg.epochs`` stages of ``m`` variance-reduced prox steps.

    Each stage costs n + 2m stochastic-gradient evaluations.  The update variance
    reported for stage s is measured at the stage's last iterate against the
    snapshot it was anchored to.
    """
    hooks = hooks or EvalHooks()
    n = data.n
    if n == 0:
        raise ConfigError("empty dataset")
    eta = cfg.step_size(stats, reg)
    eta_max = reg.beta / (128.0 * stats.max_norm**4)
    if eta >= eta_max:
        warnings.warn(f"eta={eta:.3g} >= beta/(128 M^4)={eta_max:.3g}; "
                      "geometric convergence is not guaranteed", StepSizeWarning, stacklevel=2)
    m = cfg.m or n
    rng = np.random.default_rng(cfg.seed)
    indptr, indices, values, y = _csr(data)
    tracer = _Tracer(data, stats, reg, hooks)

    tracer.start()
    w_tilde, evals = _warm_start(data, stats, reg, cfg, rng)
    tracer.stop()
    snapshots = [w_tilde.copy()] if cfg.keep_snapshots else None
    tracer.record(0, evals, w_tilde, lambda: 0.0)

    for s in range(1, cfg.epochs + 1):
        tracer.start()
        mu_tilde = full_gradient(w_tilde, data, stats)
        picks = rng.integers(0, n, size=m)
        w = _kernels.vrspam_stage(indptr, indices, values, y, w_tilde, mu_tilde,
                                  stats.mean_pos, stats.mean_neg, stats.p, eta,
                                  reg.beta, reg.l1, picks)
        evals += n + 2 * m
        tracer.stop()
        anchor = w_tilde
        w_tilde = w
        tracer.record(s, evals, w_tilde,
                      lambda: update_variance(w, anchor, data, stats, VarianceMode.VRSPAM).value)
        if snapshots is not None:
            snapshots.append(w_tilde.copy())
    return SolveResult(w_tilde, tracer.trace, snapshots)


def _warm_start(data, stats, reg, cfg, rng):
    w = np.zeros(data.dimension)
    if cfg.warm_start is WarmStart.ZERO:
        return w, 0
    steps = data.n if cfg.warm_start is WarmStart.SPAM_ONE_PASS else 1
    indptr, indices, values, y = _csr(data)
    picks = rng.integers(0, data.n, size=steps)
    _kernels.spam_steps(indptr, indices, values, y, w, stats.mean_pos, stats.mean_neg,
                        stats.p, reg.beta, reg.l1, _spam_c(cfg, reg), 0, picks)
    return w, steps


def spam_step_sizes(c: float, beta: float, iterations: int) -> np.ndarray:
    t = np.arange(1, iterations + 1)
    return c / (1.0 + c * beta * t)


def spam(data: Dataset, stats: DatasetStats, reg: RegularizerSpec, cfg: SolverConfig,
         hooks: EvalHooks | None = None) -> SolveResult:
    """Stochastic proximal gradient with eta_t = c / (1 + c beta t).

    Runs ``cfg.epochs * n`` iterations and checkpoints every n of them.
    """
    hooks = hooks or EvalHooks()
    n = data.n
    c0 = _spam_c(cfg, reg)
    rng = np.random.default_rng(cfg.seed)
    indptr, indices, values, y = _csr(data)
    tracer = _Tracer(data, stats, reg, hooks)
    w = np.zeros(data.dimension)
    snapshots = [w.copy()] if cfg.keep_snapshots else None

    def variance(w_now):
        return lambda: update_variance(w_now, None, data, stats, VarianceMode.SPAM).value

    tracer.record(0, 0, w.copy(), variance(w.copy()))
    for s in range(1, cfg.epochs + 1):
        tracer.start()
        picks = rng.integers(0, n, size=n)
        _kernels.spam_steps(indptr, indices, values, y, w, stats.mean_pos, stats.mean_neg,
                            stats.p, reg.beta, reg.l1, c0, (s - 1) * n, picks)
        tracer.stop()
        current = w.copy()
        tracer.record(s, s * n, current, variance(current))
        if snapshots is not None:
            snapshots.append(current)
    return SolveResult(w, tracer.trace, snapshots)


def reference_step_size(stats: DatasetStats) -> float:
    """1 / (8 M^2), the inverse of the Lipschitz bound on G."""
    return 1.0 / (8.0 * stats.max_norm**2)


def prox_full_gradient(data: Dataset, stats: DatasetStats, reg: RegularizerSpec,
                       eta: float | None = None, iterations: int = 100_000,
                       tolerance: float = 1e-10, w0: np.ndarray | None = None,
                       callback: Callable[[int, np.ndarray], None] | None = None) -> np.ndarray:
    """Iterate w <- prox(w - eta * full_gradient(w)) until the step is <= ``tolerance``.

    Raises :class:`ConvergenceError` (carrying the last iterate) at the cap.
    """
    eta = reference_step_size(stats) if eta is None else eta
    if not eta > 0:
        raise ConfigError(f"eta must be positive, got {eta}")
    w = np.zeros(data.dimension) if w0 is None else np.array(w0, dtype=float)
    residual = np.inf
    for k in range(1, iterations + 1):
        w_next = prox(w - eta * full_gradient(w, data, stats), eta, reg)
        residual = float(np.linalg.norm(w_next - w))
        w = w_next
        if callback is not None:
            callback(k, w)
        if residual <= tolerance:
            return w
    raise ConvergenceError(f"no convergence in {iterations} iterations "
                           f"(last step {residual:.3e})", w, residual)


def pgd(data: Dataset, stats: DatasetStats, reg: RegularizerSpec, cfg: SolverConfig,
        hooks: EvalHooks | None = None, tolerance: float = 1e-10) -> SolveResult:
    """Traced proximal full-gradient descent: one record per iteration.

    Stops early once a step is within ``tolerance``, in which case the final
    weights equal :func:`prox_full_gradient`'s output bit for bit.
    """
    hooks = hooks or EvalHooks()
    eta = cfg.eta if cfg.eta is not None else reference_step_size(stats)
    tracer = _Tracer(data, stats, reg, hooks)
    w = np.zeros(data.dimension)
    snapshots = [w.copy()] if cfg.keep_snapshots else None
    tracer.record(0, 0, w, None)
    for k in range(1, cfg.epochs + 1):
        tracer.start()
        w_next = prox(w - eta * full_gradient(w, data, stats), eta, reg)
        residual = float(np.linalg.norm(w_next - w))
        w = w_next
        tracer.stop()
        tracer.record(k, k * data.n, w, None)
        if snapshots is not None:
            snapshots.append(w.copy())
        if residual <= tolerance:
            break
    else:
        log.warning("pgd stopped at the iteration cap (last step %.3e)", residual)
    return SolveResult(w, tracer.trace, snapshots)
