"""Probabilistic gradient bounds and the closed-form comparison rates.

The gradient bound weights ``|grad f|`` at the endpoint of a reflected path
by ``exp(-k t - sum s(contact point) * dl)``; with a nonconvex boundary
(``s < 0``) the weight grows with the accumulated local time, and its
exponential moments are controlled by Khasminskii's lemma through the
supremal mean local time ``2 sqrt(t/pi) + O(t^{3/2})``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import RegimeExceeded
from .geometry import Domain
from .rbm import MCEstimate, SimConfig, _estimate, simulate_batch

EXP_MOMENT_GUARD = 0.8


@dataclass(frozen=True)
class RateModel:
    """Comparison rates ``exp(2 S sqrt(t/pi) + C t)`` and ``exp(K t)`` valid for t <= t0."""

    S: float = 0.0
    K: float = 0.0
    C: float = 0.0
    t0: float = 1.0

    def __post_init__(self):
        if self.S < 0 or self.C < 0:
            raise ValueError("S and C must be non-negative")
        if not self.t0 > 0:
            raise ValueError("t0 must be positive")

    def bound(self, t: float) -> float:
        return math.exp(2 * self.S * math.sqrt(t / math.pi) + self.C * t)

    def convex(self, t: float) -> float:
        return convex_rate(self.K, t)


def sharp_rate(S: float, t: float) -> float:
    if S < 0 or t < 0:
        raise ValueError("S and t must be non-negative")
    return math.exp(2.0 * S * math.sqrt(t / math.pi))


def convex_rate(K: float, t: float) -> float:
    if t < 0:
        raise ValueError("t must be non-negative")
    return math.exp(K * t)


def khasminskii_bound(q: float, S: float, Lbar: float) -> float:
    """``(1 / (1 - q S Lbar))**(1/q)``, bounding ``sup_x E_x[exp(q S l_t)]**(1/q)``."""
    if q <= 1:
        raise ValueError("q must exceed 1")
    if S < 0 or Lbar < 0:
        raise ValueError("S and Lbar must be non-negative")
    x = q * S * Lbar
    if x >= 1:
        raise RegimeExceeded(f"q*S*Lbar = {x:.4g} >= 1")
    return (1.0 / (1.0 - x)) ** (1.0 / q)


def holder_conjugate(p: float) -> float:
    if p <= 1:
        raise ValueError("p must exceed 1")
    return p / (p - 1.0)


def forward_constant(q: float, S: float, K: float, t: float, Lbar: float | None = None) -> float:
    """``exp(K t / 2) * khasminskii_bound`` with ``Lbar`` defaulting to ``2 sqrt(t/pi)``."""
    if Lbar is None:
        Lbar = 2.0 * math.sqrt(t / math.pi)
    return math.exp(K * t / 2.0) * khasminskii_bound(q, S, Lbar)


def exp_moment_mc(domain: Domain, x0, q: float, S: float, t: float,
                  cfg: SimConfig) -> MCEstimate:
    """Monte Carlo mean of ``exp(q S l_t)``."""
    if S == 0 or t == 0:
        return MCEstimate(1.0, 0.0)
    res = simulate_batch(domain, x0, [t], cfg)
    ell = res.local_time(cfg.scheme)[0]
    if q * S * ell.mean() > EXP_MOMENT_GUARD:
        raise RegimeExceeded(
            f"q*S*mean(l_t) = {q * S * ell.mean():.3g} > {EXP_MOMENT_GUARD}; estimate unreliable")
    return _estimate(np.exp(q * S * ell))


def fk_gradient_bound(domain: Domain, grad_f: Callable, x, t: float, cfg: SimConfig,
                      s_field: Callable | None = None) -> MCEstimate:
    """Monte Carlo value of ``E_x[exp(-k t - int s dl) |grad f(B_t)|]``.

    ``grad_f`` maps an ``(n, d)`` array of positions to gradients (or to
    gradient norms). ``s_field`` defaults to the domain's second fundamental
    form bound, evaluated at the projected contact point of each step.
    """
    x = np.asarray(x, dtype=float)
    if t == 0:
        g = np.asarray(grad_f(np.atleast_2d(x)), dtype=float)
        return MCEstimate(float(np.linalg.norm(g.reshape(1, -1))), 0.0)
    if s_field is None:
        def s_field(z):
            return domain._curvature(z)
    res = simulate_batch(domain, x, [t], cfg, s_field=s_field)
    g = np.asarray(grad_f(res.final), dtype=float)
    gnorm = np.linalg.norm(g, axis=-1) if g.ndim == 2 else np.abs(g)
    weight = np.exp(-domain.k_bound * t - res.s_ell[0])
    return _estimate(weight * gnorm)


def log_ratio_slope(q: float, S: float) -> float:
    """Small-t slope of ``log sharp_rate - log khasminskii_bound(q, S, 2 sqrt(t/pi))`` in t.

    From ``-(1/q) log(1 - q S L) = S L + q S^2 L^2 / 2 + ...`` with
    ``L^2 = 4 t / pi``.
    """
    return -2.0 * q * S * S / math.pi
