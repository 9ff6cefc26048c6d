"""Closed-form Neumann heat kernel of the half-line (method of images)."""
from __future__ import annotations

import math

import numpy as np
from scipy import integrate


def halfline_heat_kernel(x, y, t):
    """Transition density of reflected motion on [0, inf) with generator d^2/dx^2."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(np.asarray(t) <= 0):
        raise ValueError("t must be positive")
    c = 1.0 / np.sqrt(4.0 * np.pi * t)
    out = c * (np.exp(-(x - y) ** 2 / (4.0 * t)) + np.exp(-(x + y) ** 2 / (4.0 * t)))
    return float(out) if out.ndim == 0 else out


def kernel_time_integral(t: float, x: float = 0.0, y: float = 0.0) -> float:
    """Integral of the kernel over [0, t] by quadrature; equals 2 sqrt(t/pi) at x=y=0."""
    if t == 0:
        return 0.0
    # substitute r = s^2 to remove the r^{-1/2} endpoint singularity
    val, _ = integrate.quad(lambda s: 2 * s * halfline_heat_kernel(x, y, s * s),
                            0.0, math.sqrt(t), epsabs=1e-14, epsrel=1e-12)
    return val


def halfline_mean(t: float) -> float:
    """Mean position at time t of reflected motion started at 0, by quadrature."""
    val, _ = integrate.quad(lambda x: x * halfline_heat_kernel(x, 0.0, t), 0.0, np.inf,
                            epsabs=1e-14, epsrel=1e-12)
    return val
