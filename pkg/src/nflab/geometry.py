"""Domain families: half-line, disk interior/exterior, parabolic cap, custom SDF.

Every domain is an immutable object exposing a signed distance (positive
inside), the inward unit normal, a lower bound ``s`` for the second
fundamental form ``II(v, v) = -<grad_v n, v>`` and sampling of the boundary
under its surface measure. Positions are numpy arrays whose last axis has
length ``dimension``; for the half-line plain floats are accepted too.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, optimize

from .errors import ConfigInvalid, NotOnBoundary, OutsideCollar

BOUNDARY_TOL = 1e-8


def _as_points(x, dim: int) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if dim == 1 and (arr.ndim == 0 or arr.shape[-1] != 1):
        arr = arr[..., None]
    if arr.shape[-1] != dim:
        raise ValueError(f"expected positions with last axis {dim}, got shape {arr.shape}")
    return arr


def _default_collar(reach: float) -> float:
    # 0.1 * smallest curvature radius, capped at 0.1; flat boundaries have no limit
    if not math.isfinite(reach):
        return math.inf
    return min(0.1, 0.1 * reach)


@dataclass(frozen=True)
class Domain:
    """Base class. Subclasses implement the analytic pieces."""

    k_bound: float = field(default=0.0, kw_only=True)
    collar_width: float | None = field(default=None, kw_only=True)

    kind = "abstract"
    dimension = 2

    # -- to be provided by subclasses ------------------------------------
    def sdf(self, x) -> np.ndarray:
        raise NotImplementedError

    def _nearest(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _gradient(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _curvature(self, z: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    @property
    def reach(self) -> float:
        """Smallest radius of curvature of the boundary (inf when flat)."""
        raise NotImplementedError

    @property
    def bounding_box(self) -> tuple[tuple[float, float], ...]:
        raise NotImplementedError

    def to_config(self) -> dict:
        raise NotImplementedError

    # -- shared behaviour -------------------------------------------------
    @property
    def collar(self) -> float:
        if self.collar_width is not None:
            return self.collar_width
        return _default_collar(self.reach)

    def contains(self, x, tol: float = 0.0) -> np.ndarray:
        return self.sdf(x) >= -tol

    def normal(self, x, check: bool = True) -> np.ndarray:
        """Inward unit normal, the gradient of the signed distance."""
        x = _as_points(x, self.dimension)
        if check:
            d = self.sdf(x)
            if np.any(np.abs(d) > self.collar):
                raise OutsideCollar(f"|sdf| exceeds collar width {self.collar}")
        n = self._gradient(x)
        return n / np.linalg.norm(n, axis=-1, keepdims=True)

    def project(self, x, check: bool = True) -> tuple[np.ndarray, np.ndarray]:
        """Nearest boundary point and the distance to it."""
        x = _as_points(x, self.dimension)
        d = self.sdf(x)
        if check and np.any(np.abs(d) > self.collar):
            raise OutsideCollar(f"|sdf| exceeds collar width {self.collar}")
        return self._nearest(x), np.abs(d)

    def s_bound(self, z, check: bool = True) -> np.ndarray:
        z = _as_points(z, self.dimension)
        if check and np.any(np.abs(self.sdf(z)) > BOUNDARY_TOL):
            raise NotOnBoundary("point is not on the boundary")
        return self._curvature(z)

    def boundary_sample(self, n: int, seed: int | None = None):
        raise NotImplementedError

    def to_json(self) -> str:
        return json.dumps(self.to_config())


@dataclass(frozen=True)
class HalfLine(Domain):
    """The half-line [0, inf); the exactly solvable calibration case."""

    extent: float = 10.0

    kind = "half_line"
    dimension = 1

    def sdf(self, x):
        return _as_points(x, 1)[..., 0]

    def _nearest(self, x):
        return np.zeros_like(x)

    def _gradient(self, x):
        return np.ones_like(x)

    def _curvature(self, z):
        return np.zeros(z.shape[:-1])

    @property
    def reach(self):
        return math.inf

    @property
    def bounding_box(self):
        return ((0.0, self.extent),)

    def boundary_sample(self, n=1, seed=None):
        return np.zeros((1, 1)), np.ones(1)

    def to_config(self):
        return {"kind": self.kind, "k_bound": self.k_bound}


@dataclass(frozen=True)
class DiskInterior(Domain):
    radius: float = 1.0
    center: tuple[float, float] = (0.0, 0.0)

    kind = "disk_interior"

    def _rel(self, x):
        return _as_points(x, 2) - np.asarray(self.center)

    def sdf(self, x):
        return self.radius - np.linalg.norm(self._rel(x), axis=-1)

    def _gradient(self, x):
        return -self._rel(x)

    def _nearest(self, x):
        rel = self._rel(x)
        rho = np.linalg.norm(rel, axis=-1, keepdims=True)
        return np.asarray(self.center) + self.radius * rel / rho

    def _curvature(self, z):
        return np.full(z.shape[:-1], 1.0 / self.radius)

    @property
    def reach(self):
        return self.radius

    @property
    def bounding_box(self):
        cx, cy = self.center
        r = self.radius
        return ((cx - r, cx + r), (cy - r, cy + r))

    def boundary_sample(self, n, seed=None):
        phase = 0.0 if seed is None else np.random.default_rng(seed).random()
        theta = 2 * np.pi * (np.arange(n) + phase) / n
        pts = np.asarray(self.center) + self.radius * np.stack([np.cos(theta), np.sin(theta)], -1)
        return pts, np.full(n, 2 * np.pi * self.radius / n)

    def to_config(self):
        return {"kind": self.kind, "radius": self.radius, "center": list(self.center),
                "k_bound": self.k_bound}


@dataclass(frozen=True)
class DiskExterior(DiskInterior):
    """Complement of a closed disk; nonconvex with s = -1/R everywhere."""

    extent: float = 3.0

    kind = "disk_exterior"

    def sdf(self, x):
        return -super().sdf(x)

    def _gradient(self, x):
        return self._rel(x)

    def _curvature(self, z):
        return np.full(z.shape[:-1], -1.0 / self.radius)

    @property
    def bounding_box(self):
        cx, cy = self.center
        e = self.extent * self.radius
        return ((cx - e, cx + e), (cy - e, cy + e))

    def boundary_chart(self, u, angle: float = 0.0):
        """Boundary point with tangential coordinate ``u`` around the point at ``angle``."""
        u = np.asarray(u, dtype=float)
        base = np.array([math.cos(angle), math.sin(angle)])
        tangent = np.array([-math.sin(angle), math.cos(angle)])
        r = self.radius
        v = np.sqrt(r * r - u * u)
        return np.asarray(self.center) + v[..., None] * base + u[..., None] * tangent

    def boundary_arc(self, u):
        """Intrinsic (boundary) distance from the chart origin to ``boundary_chart(u)``."""
        return self.radius * np.arcsin(np.abs(np.asarray(u, dtype=float)) / self.radius)

    def geodesic(self, a, b) -> np.ndarray:
        """Exact shortest-path distance in the closed exterior (tangent lines plus arc)."""
        a = self._rel(a)
        b = self._rel(b)
        a, b = np.broadcast_arrays(a, b)
        r = self.radius
        ra = np.maximum(np.linalg.norm(a, axis=-1), r)
        rb = np.maximum(np.linalg.norm(b, axis=-1), r)
        cosang = np.sum(a * b, axis=-1) / (ra * rb)
        theta = np.arccos(np.clip(cosang, -1.0, 1.0))
        alpha = np.arccos(np.clip(r / ra, -1.0, 1.0))
        beta = np.arccos(np.clip(r / rb, -1.0, 1.0))
        straight = np.linalg.norm(a - b, axis=-1)
        wrapped = np.sqrt(ra**2 - r**2) + np.sqrt(rb**2 - r**2) + r * (theta - alpha - beta)
        return np.where(theta > alpha + beta, wrapped, straight)


@dataclass(frozen=True)
class ParabolicCap(Domain):
    """Region above the graph x2 = -S1 x1^2 / 2, truncated at |x1| <= R0.

    The boundary is nonconvex with II(e1, e1) = -S1 at the origin. Only the
    graph part is modelled; the far-away closure is never reached at the
    time scales this domain is used for.
    """

    curvature: float = 1.0
    truncation: float = 2.0
    height: float = 2.0

    kind = "parabolic_cap"

    def psi(self, u):
        return -0.5 * self.curvature * np.asarray(u, dtype=float) ** 2

    def _foot(self, x: np.ndarray) -> np.ndarray:
        """Graph abscissa of the nearest boundary point (all real cubic roots compared)."""
        a = x[..., 0]
        b = x[..., 1]
        s = self.curvature
        if s == 0.0:
            return a.copy()
        # stationarity: (s^2/2) u^3 + (1 + s b) u - a = 0
        p = 2.0 * (1.0 + s * b) / s**2
        q = -2.0 * a / s**2
        disc = (q / 2.0) ** 2 + (p / 3.0) ** 3
        sq = np.sqrt(np.maximum(disc, 0.0))
        one = np.cbrt(-q / 2.0 + sq) + np.cbrt(-q / 2.0 - sq)
        # three real roots when disc < 0
        pneg = np.minimum(p, -1e-300)
        m = 2.0 * np.sqrt(-pneg / 3.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            arg = np.clip(np.nan_to_num(3.0 * q / (pneg * m)), -1.0, 1.0)
        phi = np.arccos(arg) / 3.0
        roots = np.stack([one,
                          m * np.cos(phi),
                          m * np.cos(phi - 2 * np.pi / 3),
                          m * np.cos(phi - 4 * np.pi / 3)], axis=-1)
        three = (disc < 0)[..., None]
        roots = np.where(three | (np.arange(4) == 0), roots, roots[..., :1])
        for _ in range(2):
            g = 0.5 * s**2 * roots**3 + (1 + s * b)[..., None] * roots - a[..., None]
            dg = 1.5 * s**2 * roots**2 + (1 + s * b)[..., None]
            safe = np.abs(dg) > 1e-12
            roots = roots - np.where(safe, g / np.where(safe, dg, 1.0), 0.0)
        dist2 = (roots - a[..., None]) ** 2 + (self.psi(roots) - b[..., None]) ** 2
        idx = np.argmin(dist2, axis=-1)
        return np.take_along_axis(roots, idx[..., None], axis=-1)[..., 0]

    def sdf(self, x):
        x = _as_points(x, 2)
        u = self._foot(x)
        d = np.hypot(x[..., 0] - u, x[..., 1] - self.psi(u))
        return np.where(x[..., 1] >= self.psi(x[..., 0]), d, -d)

    def _nearest(self, x):
        u = self._foot(x)
        return np.stack([u, self.psi(u)], axis=-1)

    def graph_normal(self, u):
        u = np.asarray(u, dtype=float)
        s = self.curvature
        n = np.stack([s * u, np.ones_like(u)], axis=-1)
        return n / np.sqrt(1.0 + (s * u) ** 2)[..., None]

    def _gradient(self, x):
        return self.graph_normal(self._foot(x))

    def _curvature(self, z):
        u = z[..., 0]
        s = self.curvature
        return -s / (1.0 + (s * u) ** 2) ** 1.5

    @property
    def reach(self):
        return math.inf if self.curvature == 0 else 1.0 / self.curvature

    @property
    def bounding_box(self):
        r = self.truncation
        return ((-r, r), (float(self.psi(r)), self.height))

    def arc_length(self, u):
        """Signed boundary arc length from the origin to the graph point over ``u``."""
        u = np.asarray(u, dtype=float)
        s = self.curvature
        if s == 0:
            return u
        w = s * u
        return 0.5 * (u * np.sqrt(1 + w * w) + np.arcsinh(w) / s)

    def boundary_chart(self, u, angle: float = 0.0):
        u = np.asarray(u, dtype=float)
        return np.stack([u, self.psi(u)], axis=-1)

    def boundary_arc(self, u):
        return np.abs(self.arc_length(u))

    def boundary_sample(self, n, seed=None):
        r = self.truncation
        total = 2.0 * float(self.arc_length(r))
        phase = 0.5 if seed is None else np.random.default_rng(seed).random()
        targets = -total / 2 + total * (np.arange(n) + phase) / n
        u = np.array([optimize.brentq(lambda v, a=a: float(self.arc_length(v)) - a, -r, r)
                      for a in targets])
        return self.boundary_chart(u), np.full(n, total / n)

    def to_config(self):
        return {"kind": self.kind, "curvature": self.curvature, "truncation": self.truncation,
                "k_bound": self.k_bound}


@dataclass(frozen=True)
class CustomSDF(Domain):
    """User-supplied planar signed distance; derivatives by finite differences.

    ``boundary`` optionally parametrizes the boundary over [0, 1) so that
    surface-measure sampling is available.
    """

    func: Callable[[np.ndarray], np.ndarray] = None
    box: tuple = ((-1.0, 1.0), (-1.0, 1.0))
    min_radius: float = 1.0
    boundary: Callable[[np.ndarray], np.ndarray] | None = None
    fd_step: float = 1e-5

    kind = "custom_sdf"

    def sdf(self, x):
        return np.asarray(self.func(_as_points(x, 2)), dtype=float)

    def _gradient(self, x):
        h = self.fd_step
        g = np.empty_like(x)
        for i in range(2):
            e = np.zeros(2)
            e[i] = h
            g[..., i] = (self.sdf(x + e) - self.sdf(x - e)) / (2 * h)
        return g

    def _nearest(self, x):
        z = x
        for _ in range(20):
            n = self._gradient(z)
            n /= np.linalg.norm(n, axis=-1, keepdims=True)
            z = z - self.sdf(z)[..., None] * n
        return z

    def _curvature(self, z):
        # II(v, v) = -v^T Hess(sdf) v for the unit tangent v
        h = 1e-4
        n = self.normal(z, check=False)
        v = np.stack([-n[..., 1], n[..., 0]], axis=-1)
        return -(self.sdf(z + h * v) - 2 * self.sdf(z) + self.sdf(z - h * v)) / h**2

    @property
    def reach(self):
        return self.min_radius

    @property
    def bounding_box(self):
        return tuple(tuple(b) for b in self.box)

    def boundary_sample(self, n, seed=None):
        if self.boundary is None:
            raise NotImplementedError("custom domain has no boundary parametrization")
        fine = np.linspace(0.0, 1.0, 4097)
        pts = self.boundary(fine)
        seg = np.linalg.norm(np.diff(pts, axis=0), axis=-1)
        total = seg.sum()
        phase = 0.0 if seed is None else np.random.default_rng(seed).random()
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        params = np.interp(total * (np.arange(n) + phase) / n, cum, fine)
        return self.boundary(params), np.full(n, total / n)

    def to_config(self):
        raise ConfigInvalid("custom_sdf domains cannot be serialized")


# -- module-level operations ------------------------------------------------

def signed_distance(domain: Domain, x):
    d = domain.sdf(x)
    return float(d) if np.ndim(d) == 0 else d


def inward_normal(domain: Domain, x):
    return domain.normal(x)


def second_ff_lower_bound(domain: Domain, z):
    s = domain.s_bound(z)
    return float(s) if np.ndim(s) == 0 else s


def boundary_sample(domain: Domain, n: int, seed: int | None = None):
    """Boundary points and surface-measure weights (weights sum to the boundary length)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return domain.boundary_sample(n, seed)


def project_to_boundary(domain: Domain, x):
    z, d = domain.project(x)
    if np.ndim(d) == 0:
        return z, float(d)
    return z, d


def parabola_arc_length_quad(curvature: float, r: float) -> float:
    """Arc length of the graph over [-r, r] by adaptive quadrature."""
    val, _ = integrate.quad(lambda u: math.sqrt(1 + (curvature * u) ** 2), -r, r,
                            epsabs=1e-13, epsrel=1e-13)
    return val


_KINDS = {
    "half_line": HalfLine,
    "disk_interior": DiskInterior,
    "disk_exterior": DiskExterior,
    "parabolic_cap": ParabolicCap,
}


def domain_from_config(cfg: dict) -> Domain:
    """Build a domain from a JSON-style block such as ``{"kind": "disk_exterior", "radius": 1.0}``."""
    cfg = dict(cfg)
    kind = cfg.pop("kind", None)
    if kind not in _KINDS:
        raise ConfigInvalid(f"unknown domain kind {kind!r}")
    if "center" in cfg:
        cfg["center"] = tuple(cfg["center"])
    aliases = {"S1": "curvature", "R0": "truncation", "R": "radius"}
    cfg = {aliases.get(k, k): v for k, v in cfg.items()}
    try:
        return _KINDS[kind](**cfg)
    except TypeError as exc:
        raise ConfigInvalid(str(exc)) from exc
