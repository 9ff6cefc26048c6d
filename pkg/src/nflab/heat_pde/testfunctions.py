"""The localized tangential test function used for sharpness and gradient checks.

Around a boundary point ``z0`` with unit tangent ``e`` it equals
``<x - z0, e> (1 - C |x - z0|^2)`` inside radius ``1/sqrt(3C)`` and is
extended radially (constant along rays) outside, where the radial
derivative already vanishes, so the extension is C^1, bounded and keeps
``|grad f| <= 1``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class LocalizedTestFunction:
    origin: tuple[float, float]
    tangent: tuple[float, float]
    c: float = 1.0

    @property
    def cutoff(self) -> float:
        return 1.0 / math.sqrt(3.0 * self.c)

    def _rel(self, x):
        y = np.asarray(x, dtype=float) - np.asarray(self.origin)
        rho = np.linalg.norm(y, axis=-1, keepdims=True)
        scale = np.minimum(1.0, self.cutoff / np.maximum(rho, 1e-300))
        return y * scale, rho[..., 0] > self.cutoff, y

    def __call__(self, x):
        y, _, _ = self._rel(x)
        e = np.asarray(self.tangent)
        u = y @ e
        return u * (1.0 - self.c * np.sum(y * y, axis=-1))

    def gradient(self, x):
        y, outside, raw = self._rel(x)
        e = np.asarray(self.tangent)
        u = y @ e
        g = e * (1.0 - self.c * np.sum(y * y, axis=-1))[..., None] - 2.0 * self.c * u[..., None] * y
        # outside the cutoff only the angular part of the gradient survives, scaled by rho_cut/rho
        rho = np.maximum(np.linalg.norm(raw, axis=-1, keepdims=True), self.cutoff)
        radial = raw / rho
        g_out = (g - np.sum(g * radial, axis=-1, keepdims=True) * radial) * (self.cutoff / rho)
        return np.where(outside[..., None], g_out, g)

    def grad_norm(self, x):
        return np.linalg.norm(self.gradient(x), axis=-1)


def tangential_test_function(domain, c: float = 1.0, angle: float = 0.0) -> LocalizedTestFunction:
    """Test function at the chart origin of a parabolic cap or disk exterior."""
    z0 = domain.boundary_chart(np.array(0.0), angle)
    if domain.kind == "parabolic_cap":
        e = (1.0, 0.0)
    else:
        e = (-math.sin(angle), math.cos(angle))
    return LocalizedTestFunction(tuple(map(float, z0)), e, c)
