"""Convergence constants and numerical checks of the gradient/variance bounds.

With L = 8 M^2 the Lipschitz constant of G in w, the per-step constants are

    C = (1 + 2 L^2 eta^2) / (1 + eta beta)^2,   D = 2 L^2 eta^2 / (1 + eta beta)^2

(2 L^2 = 128 M^4) and the per-stage contraction of E||w~_s - w*||^2 is
alpha = C^m + D C (C^m - 1) / (C - 1).
"""
from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .dataio import Dataset, DatasetStats, compute_stats
from .objective import full_gradient, gradient_coefficients, per_sample_gradients, saddle_params
from .regularizer import RegularizerSpec, prox


@dataclass(frozen=True)
class TheoryConstants:
    eta: float
    beta: float
    M: float
    m: int
    C: float
    D: float
    E: float
    alpha: float
    eta_max: float
    theta: float


def theory_constants(eta: float, beta: float, M: float, m: int) -> TheoryConstants:
    if not (eta > 0 and beta > 0 and M > 0):
        raise ValueError("eta, beta and M must be positive")
    if m < 1:
        raise ValueError("m must be at least 1")
    q = 128.0 * M**4 * eta**2
    denom = (1.0 + eta * beta) ** 2
    C = (1.0 + q) / denom
    D = q / denom
    # C - 1 without cancellation, so alpha stays accurate as eta -> 0
    c_minus_1 = (q - 2.0 * eta * beta - (eta * beta) ** 2) / denom
    if c_minus_1 == 0.0:
        alpha = C**m + D * C * m * C ** (m - 1)
    else:
        log_c = math.log1p(c_minus_1)
        alpha = math.exp(m * log_c) + D * C * math.expm1(m * log_c) / c_minus_1
    eta_max = beta / (128.0 * M**4)
    theta = eta / eta_max
    E = 1.0 / (1.0 + theta * beta**2 / (128.0 * M**4))
    return TheoryConstants(eta, beta, M, m, C, D, E, alpha, eta_max, theta)


class VarianceMode(str, enum.Enum):
    SPAM = "spam"
    VRSPAM = "vrspam"


@dataclass(frozen=True)
class VarianceReport:
    mode: VarianceMode
    value: float


def _spread(delta: np.ndarray, data: Dataset) -> float:
    # (1/n) sum ||delta_i x_i - mean_j delta_j x_j||^2
    sq_norms = np.asarray(data.X.multiply(data.X).sum(axis=1)).ravel()
    mean_vec = (data.X.T @ delta) / data.n
    value = float(np.mean(delta**2 * sq_norms) - mean_vec @ mean_vec)
    return max(value, 0.0)


def update_variance(w, snapshot, data: Dataset, stats: DatasetStats,
                    mode: VarianceMode | str) -> VarianceReport:
    """Trace of the covariance of the update direction over all n samples.

    ``spam``: directions G(w; z_i).  ``vrspam``: v_i = G(w; z_i) - G(w~; z_i) + mu~,
    whose spread only involves the first two terms.
    """
    mode = VarianceMode(mode)
    w = np.asarray(w, dtype=float)
    c = gradient_coefficients(data.X @ w, data.y, saddle_params(w, stats), stats.p)
    if mode is VarianceMode.VRSPAM:
        if snapshot is None:
            raise ValueError("vrspam variance needs a snapshot")
        snapshot = np.asarray(snapshot, dtype=float)
        c = c - gradient_coefficients(data.X @ snapshot, data.y,
                                      saddle_params(snapshot, stats), stats.p)
    return VarianceReport(mode, _spread(c, data))


@dataclass
class CheckResult:
    name: str
    passed: bool
    worst_margin: float
    evaluations: int
    detail: str = ""


@dataclass
class InvariantReport:
    checks: list[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {"passed": self.passed, "checks": [asdict(c) for c in self.checks]}


MARGIN_SLACK = 1e-9
UNBIASED_TOL = 1e-10


def _random_state(rng: np.random.Generator, d: int, radius: float = 2.0) -> np.ndarray:
    g = rng.standard_normal(d)
    norm = np.linalg.norm(g)
    return g / norm * radius * rng.uniform() if norm > 0 else g


def _vr_directions(w, w_tilde, data, stats):
    G = per_sample_gradients(w, data, stats)
    G_tilde = per_sample_gradients(w_tilde, data, stats)
    return G - G_tilde + G_tilde.mean(axis=0)


def lemma3_grid(beta: float, M: float, n: int, decades: int = 6):
    """alpha over eta = eta_max * 10^-k (k = 0..decades) and m in {1, 10, n, 10n}."""
    eta_max = beta / (128.0 * M**4)
    return [theory_constants(eta_max * 10.0**-k, beta, M, m)
            for k in range(decades + 1) for m in sorted({1, 10, n, 10 * n})]


def run_invariant_suite(data: Dataset, reg: RegularizerSpec, seed: int = 0,
                        draws: int = 1000, stats: DatasetStats | None = None,
                        w_star: np.ndarray | None = None) -> InvariantReport:
    """Evaluate the gradient, variance, prox and step-size inequalities on random states.

    Margins are right-hand side minus left-hand side (tolerance minus error for
    the unbiasedness identity); a check passes when its worst margin is at
    least -1e-9.
    """
    from .solvers import prox_full_gradient

    stats = stats or compute_stats(data)
    rng = np.random.default_rng(seed)
    d, n = data.dimension, data.n
    L = 8.0 * stats.max_norm**2
    if w_star is None:
        w_star = prox_full_gradient(data, stats, reg, tolerance=1e-10)
    grad_star = full_gradient(w_star, data, stats)
    report = InvariantReport()

    margins = []
    for _ in range(draws):
        w, w2 = _random_state(rng, d), _random_state(rng, d)
        z = data.sample(int(rng.integers(n)))
        dx = np.zeros(d)
        dx[z.indices] = z.values
        c1, c2 = (gradient_coefficients(np.array([w_ @ dx]), np.array([z.label]),
                                        saddle_params(w_, stats), stats.p)[0] for w_ in (w, w2))
        lhs = np.linalg.norm((c2 - c1) * dx)
        margins.append(L * np.linalg.norm(w2 - w) - lhs)
    report.checks.append(_result("lipschitz", margins, "||G(w';z)-G(w;z)|| <= 8M^2 ||w'-w||"))

    unbiased, opt_bound, cur_bound = [], [], []
    # the degenerate state w = w~ = w* leads, then random states
    states = [(w_star, w_star)] + [(_random_state(rng, d), _random_state(rng, d))
                                   for _ in range(draws)]
    for w, w_tilde in states:
        V = _vr_directions(w, w_tilde, data, stats)
        grad = full_gradient(w, data, stats)
        unbiased.append(UNBIASED_TOL - np.max(np.abs(V.mean(axis=0) - grad)))
        dw = float(np.sum((w - w_star) ** 2))
        dt = float(np.sum((w_tilde - w_star) ** 2))
        lhs_opt = float(np.mean(np.sum((V - grad_star) ** 2, axis=1)))
        lhs_cur = float(np.mean(np.sum((V - grad) ** 2, axis=1)))
        opt_bound.append(2 * L**2 * (dw + dt) - lhs_opt)
        cur_bound.append(4 * L**2 * dw + 2 * L**2 * dt - lhs_cur)
    report.checks.append(_result("unbiasedness", unbiased,
                                 "max |mean_i v_i - full_gradient(w)| <= 1e-10"))
    report.checks.append(_result("variance_vs_optimum", opt_bound,
                                 "E||v - grad f(w*)||^2 <= 2L^2(||w-w*||^2 + ||w~-w*||^2)"))
    report.checks.append(_result("variance_vs_current", cur_bound,
                                 "E||v - grad f(w)||^2 <= 4L^2||w-w*||^2 + 2L^2||w~-w*||^2"))

    margins = []
    for _ in range(draws):
        u, v = rng.standard_normal(d) * 3, rng.standard_normal(d) * 3
        eta = 10.0 ** rng.uniform(-4, 2)
        lhs = np.linalg.norm(prox(u, eta, reg) - prox(v, eta, reg))
        margins.append(np.linalg.norm(u - v) / (1 + eta * reg.beta) - lhs)
    report.checks.append(_result("prox_contraction", margins,
                                 "||prox(u)-prox(v)|| <= ||u-v|| / (1 + eta beta)"))

    grid = lemma3_grid(reg.beta, stats.max_norm, n)
    report.checks.append(_result("lemma3_alpha", [1.0 - tc.alpha for tc in grid],
                                 "alpha <= 1 for eta <= beta / (128 M^4)"))
    return report


def _result(name, margins, detail) -> CheckResult:
    worst = float(np.min(margins))
    return CheckResult(name, worst >= -MARGIN_SLACK, worst, len(margins), detail)
