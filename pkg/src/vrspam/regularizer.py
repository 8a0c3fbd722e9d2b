"""Strongly convex penalties and their proximal maps.

L2:          (beta/2) ||w||^2
ElasticNet:  (beta/2) ||w||^2 + beta1 ||w||_1
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np


class RegKind(str, enum.Enum):
    L2 = "l2"
    ELASTIC_NET = "elasticnet"


@dataclass(frozen=True)
class RegularizerSpec:
    kind: RegKind = RegKind.L2
    beta: float = 1.0
    beta1: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", RegKind(self.kind))
        if not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if self.beta1 < 0:
            raise ValueError(f"beta1 must be non-negative, got {self.beta1}")
        if self.kind is RegKind.L2 and self.beta1 != 0:
            raise ValueError("beta1 is only meaningful for the elastic net")

    @property
    def l1(self) -> float:
        return self.beta1 if self.kind is RegKind.ELASTIC_NET else 0.0


def reg_value(w, spec: RegularizerSpec) -> float:
    w = np.asarray(w, dtype=float)
    value = 0.5 * spec.beta * float(w @ w)
    if spec.kind is RegKind.ELASTIC_NET:
        value += spec.beta1 * float(np.abs(w).sum())
    return value


def soft_threshold(u: np.ndarray, tau: float) -> np.ndarray:
    return np.sign(u) * np.maximum(np.abs(u) - tau, 0.0)


def prox(v, eta: float, spec: RegularizerSpec) -> np.ndarray:
    """argmin_w 1/2 ||w - v||^2 + eta * Omega(w)."""
    if not eta > 0:
        raise ValueError(f"eta must be positive, got {eta}")
    shrink = 1.0 + eta * spec.beta
    u = np.asarray(v, dtype=float) / shrink
    if spec.kind is RegKind.ELASTIC_NET and spec.beta1 > 0:
        return soft_threshold(u, eta * spec.beta1 / shrink)
    return u


def strong_convexity(spec: RegularizerSpec) -> float:
    # the L1 part is convex but contributes no curvature
    return spec.beta
