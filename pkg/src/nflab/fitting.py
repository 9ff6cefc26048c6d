"""Least-squares fits of small-time growth rates."""
from __future__ import annotations

import math
from typing import NamedTuple, Sequence

import numpy as np

from .errors import SingularFit


class SqrtRateFit(NamedTuple):
    a: float          # coefficient of sqrt(t)
    b: float          # coefficient of t
    residual: float   # root-mean-square residual in log space

    @property
    def s_hat(self) -> float:
        """Boundary-curvature estimate: a = 2 S / sqrt(pi)."""
        return self.a * math.sqrt(math.pi) / 2.0


def fit_sqrt_rate(pairs: Sequence[tuple[float, float]]) -> SqrtRateFit:
    """Fit ``log(value) = a sqrt(t) + b t`` (no constant: every rate is 1 at t = 0)."""
    arr = np.asarray(pairs, dtype=float)
    if arr.ndim != 2 or arr.shape[0] < 3:
        raise SingularFit("need at least 3 (t, value) pairs")
    t, v = arr[:, 0], arr[:, 1]
    if np.any(v <= 0) or np.any(t < 0):
        raise ValueError("values must be positive and times non-negative")
    X = np.stack([np.sqrt(t), t], axis=-1)
    if np.linalg.matrix_rank(X) < 2 or np.linalg.cond(X) > 1e12:
        raise SingularFit("design matrix is singular (need distinct positive times)")
    y = np.log(v)
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    res = float(np.sqrt(np.mean((X @ coef - y) ** 2)))
    return SqrtRateFit(float(coef[0]), float(coef[1]), res)


def fit_power_law(pairs: Sequence[tuple[float, float]]) -> tuple[float, float]:
    """Fit ``value = prefactor * t**exponent``; returns (exponent, prefactor)."""
    arr = np.asarray(pairs, dtype=float)
    if arr.shape[0] < 2:
        raise SingularFit("need at least 2 pairs")
    slope, icept = np.polyfit(np.log(arr[:, 0]), np.log(arr[:, 1]), 1)
    return float(slope), float(math.exp(icept))
