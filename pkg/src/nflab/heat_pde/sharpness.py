"""Two-point Lipschitz quotients at a nonconvex boundary point.

For each time ``t`` the heat flow of the localized tangential test function
is solved on a grid local to the chart origin (box half-width
``(radius_factor + margin) sqrt(t)``, spacing ``min(sqrt(t)/nodes, h_max)``)
and the quotient ``(P_t f(z_r) - P_t f(z_0)) / d(z_r, z_0)`` is taken between
the origin and the boundary point at tangential coordinate
``r = radius_factor * sqrt(t)``. The distance is the boundary arc length,
which is the intrinsic distance here since the chord leaves the domain.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from ..fitting import SqrtRateFit, fit_sqrt_rate
from ..geometry import DiskExterior, Domain, ParabolicCap
from .grid import Grid, ScalarField
from .solver import solve_neumann
from .testfunctions import tangential_test_function


def local_grid(domain: Domain, half_width: float, h: float) -> Grid:
    """Grid on a square of the given half-width around the chart origin."""
    L = half_width
    if isinstance(domain, ParabolicCap):
        box = ((-L, L), (float(domain.psi(L)) - 2 * h, L))
    elif isinstance(domain, DiskExterior):
        R = domain.radius
        cx, cy = domain.center
        inner = math.sqrt(max(R * R - L * L, 0.0))
        box = ((cx + inner - 2 * h, cx + R + L), (cy - L, cy + L))
    else:
        raise ValueError(f"no local chart for {domain.kind}")
    return Grid.build(domain, h, box)


def chart_domain(kind: str, s1: float) -> Domain:
    if kind == "parabolic_cap":
        return ParabolicCap(curvature=s1)
    if kind == "disk_exterior":
        if s1 <= 0:
            raise ValueError("disk_exterior needs s1 > 0")
        return DiskExterior(radius=1.0 / s1)
    raise ValueError(f"unknown chart domain {kind!r}")


@dataclass
class SharpnessRow:
    t: float
    quotient: float
    bound: float
    reference: float
    h: float
    n_active: int

    @property
    def slope_partial(self) -> float:
        return math.log(self.quotient) / math.sqrt(self.t)


@dataclass
class SharpnessResult:
    domain_kind: str
    s1: float
    rows: list[SharpnessRow] = field(default_factory=list)
    fit: SqrtRateFit | None = None

    @property
    def s_hat(self) -> float:
        return self.fit.s_hat

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "quotient", "bound", "slope_partial"])
            for r in self.rows:
                w.writerow([repr(r.t), repr(r.quotient), repr(r.bound), repr(r.slope_partial)])


def boundary_quotient(domain: Domain, t: float, c: float = 0.25, radius_factor: float = 2.0,
                      nodes_per_sqrt_t: int = 16, h_max: float = 1 / 512, steps: int = 60,
                      margin: float = 7.0) -> tuple[float, Grid]:
    st = math.sqrt(t)
    r = radius_factor * st
    h = min(st / nodes_per_sqrt_t, h_max)
    grid = local_grid(domain, (radius_factor + margin) * st, h)
    f = tangential_test_function(domain, c=c)
    u = solve_neumann(domain, ScalarField.from_function(grid, f), t, steps)
    z = domain.boundary_chart(np.array([r, 0.0]))
    vals = u.value_at(z)
    return float((vals[0] - vals[1]) / domain.boundary_arc(r)), grid


def sharpness_experiment(s1: float, t_grid, c: float = 0.25, eps: float = 0.0,
                         delta: float = 0.0, domain_kind: str = "parabolic_cap",
                         radius_factor: float = 2.0, nodes_per_sqrt_t: int = 16,
                         h_max: float = 1 / 512, steps: int = 60) -> SharpnessResult:
    """Quotients over ``t_grid`` with the lower comparator and the fitted sqrt(t) slope.

    ``bound`` is ``exp(2 s1 (1 - eps) sqrt(t/pi) - delta sqrt(t))``;
    ``reference`` is the sharp rate ``exp(2 s1 sqrt(t/pi))``.
    """
    domain = chart_domain(domain_kind, s1)
    res = SharpnessResult(domain_kind, s1)
    for t in t_grid:
        q, grid = boundary_quotient(domain, t, c, radius_factor, nodes_per_sqrt_t, h_max, steps)
        st = math.sqrt(t)
        bound = math.exp(2 * s1 * (1 - eps) * math.sqrt(t / math.pi) - delta * st)
        ref = math.exp(2 * s1 * math.sqrt(t / math.pi))
        res.rows.append(SharpnessRow(float(t), q, bound, ref, grid.h, grid.n_active))
    if len(res.rows) >= 3:
        res.fit = fit_sqrt_rate([(r.t, r.quotient) for r in res.rows])
    return res
