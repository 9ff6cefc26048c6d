"""Masked rectangular grids over a domain and grid functions living on them.

Each node owns the cell ``[x - h/2, x + h/2]^d``. Cells cut by the boundary
carry their inside volume fraction and the inside fraction of each face
(aperture); both come from supersampling the signed distance with a
linearly smoothed indicator.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from ..geometry import Domain

SUPERSAMPLE = 16


def _smooth_inside(d: np.ndarray, width: float) -> np.ndarray:
    return np.clip(0.5 + d / width, 0.0, 1.0)


@dataclass
class Grid:
    domain: Domain
    h: float
    axes: tuple[np.ndarray, ...]
    volume: np.ndarray                 # volume fraction per node, shape = grid shape
    apertures: tuple[np.ndarray, ...]  # per axis, shape with that axis shortened by one
    centroid: np.ndarray               # (*shape, d) centroid of the inside part of each cell
    active: np.ndarray = field(init=False)
    index: np.ndarray = field(init=False)

    def __post_init__(self):
        conn = np.zeros(self.volume.shape, dtype=bool)
        for ax, ap in enumerate(self.apertures):
            sl_lo = [slice(None)] * self.volume.ndim
            sl_hi = [slice(None)] * self.volume.ndim
            sl_lo[ax] = slice(0, -1)
            sl_hi[ax] = slice(1, None)
            conn[tuple(sl_lo)] |= ap > 0
            conn[tuple(sl_hi)] |= ap > 0
        self.active = (self.volume > 0) & conn
        self.index = np.full(self.volume.shape, -1, dtype=np.int64)
        self.index[self.active] = np.arange(int(self.active.sum()))

    @property
    def shape(self):
        return self.volume.shape

    @property
    def dimension(self):
        return len(self.axes)

    @property
    def n_active(self) -> int:
        return int(self.active.sum())

    def nodes(self) -> np.ndarray:
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack(mesh, axis=-1)

    @classmethod
    def build(cls, domain: Domain, h: float, box=None) -> "Grid":
        """Grid with spacing ``h`` over ``box`` (defaults to the domain's bounding box)."""
        box = domain.bounding_box if box is None else box
        axes = tuple(lo + h * np.arange(int(math.floor((hi - lo) / h + 1e-9)) + 1)
                     for lo, hi in box)
        dim = len(axes)
        if dim != domain.dimension:
            raise ValueError("box dimension does not match domain")
        m = SUPERSAMPLE
        off = (np.arange(m) + 0.5) / m - 0.5  # sub-sample offsets in units of h
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        dc = domain.sdf(mesh)
        cut = np.abs(dc) < h * (0.5 * math.sqrt(dim) + 0.1)
        volume = (dc > 0).astype(float)
        centroid = mesh.copy()
        if np.any(cut):
            pts = mesh[cut]
            sub = np.stack(np.meshgrid(*([off] * dim), indexing="ij"), -1).reshape(-1, dim)
            sp = pts[:, None, :] + h * sub[None]
            w = _smooth_inside(domain.sdf(sp), h / m)
            vol = w.mean(axis=1)
            volume[cut] = vol
            with np.errstate(invalid="ignore", divide="ignore"):
                cen = (w[..., None] * sp).sum(axis=1) / w.sum(axis=1)[:, None]
            cen[vol == 0] = pts[vol == 0]
            centroid[cut] = cen
        apertures = []
        for ax in range(dim):
            lo = [slice(None)] * dim
            lo[ax] = slice(0, -1)
            face_c = mesh[tuple(lo)].copy()
            face_c[..., ax] += 0.5 * h
            if dim == 1:
                ap = (domain.sdf(face_c) > 0).astype(float)
            else:
                dface = domain.sdf(face_c)
                ap = (dface > 0).astype(float)
                fcut = np.abs(dface) < h * 0.6
                if np.any(fcut):
                    other = 1 - ax
                    fp = face_c[fcut]
                    sp = np.repeat(fp[:, None, :], m, axis=1)
                    sp[..., other] += h * off[None, :]
                    ap[fcut] = _smooth_inside(domain.sdf(sp), h / m).mean(axis=1)
            ap[(volume[tuple(lo)] <= 0) | (volume[tuple(_hi(ax, dim))] <= 0)] = 0.0
            apertures.append(ap)
        return cls(domain, h, axes, volume, tuple(apertures), centroid)

    def stiffness(self) -> sparse.csr_matrix:
        """Symmetric flux matrix ``A`` with zero row sums: ``h^2 V du/dt = A u``."""
        rows, cols, vals = [], [], []
        for ax, ap in enumerate(self.apertures):
            lo = tuple(_lo(ax, self.dimension))
            hi = tuple(_hi(ax, self.dimension))
            ia = self.index[lo]
            ib = self.index[hi]
            ok = (ap > 0) & (ia >= 0) & (ib >= 0)
            a, b, w = ia[ok], ib[ok], ap[ok]
            rows += [a, b, a, b]
            cols += [b, a, a, b]
            vals += [w, w, -w, -w]
        n = self.n_active
        A = sparse.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                              shape=(n, n))
        return A.tocsr()

    def mass_weights(self) -> np.ndarray:
        return self.volume[self.active] * self.h ** self.dimension


def _lo(ax, dim):
    s = [slice(None)] * dim
    s[ax] = slice(0, -1)
    return s


def _hi(ax, dim):
    s = [slice(None)] * dim
    s[ax] = slice(1, None)
    return s


@dataclass
class ScalarField:
    """Values on the active nodes of a grid (NaN elsewhere)."""

    grid: Grid
    values: np.ndarray

    @classmethod
    def from_function(cls, grid: Grid, f) -> "ScalarField":
        vals = np.full(grid.shape, np.nan)
        pts = grid.centroid[grid.active]
        vals[grid.active] = np.asarray(f(pts), dtype=float).reshape(-1)
        return cls(grid, vals)

    @property
    def active_values(self) -> np.ndarray:
        return self.values[self.grid.active]

    def with_active(self, vec: np.ndarray) -> "ScalarField":
        vals = np.full(self.grid.shape, np.nan)
        vals[self.grid.active] = vec
        return ScalarField(self.grid, vals)

    def mass(self) -> float:
        return float(np.dot(self.grid.mass_weights(), self.active_values))

    def _fit(self, p: np.ndarray, radius: int = 2):
        """Weighted least-squares quadratic around ``p`` using cell centroids."""
        g = self.grid
        h = g.h
        dim = g.dimension
        idx = [int(round((p[k] - g.axes[k][0]) / h)) for k in range(dim)]
        n_coef = 3 if dim == 1 else 6
        # widen the stencil near the edge of the grid or mask until the fit is overdetermined
        for rad in range(radius, radius + 3):
            sl = tuple(slice(max(i - rad, 0), i + rad + 1) for i in idx)
            act = g.active[sl]
            if act.sum() >= n_coef + 2:
                break
        else:
            raise ValueError("not enough active nodes near the evaluation point")
        c = g.centroid[sl][act]
        v = self.values[sl][act]
        vol = g.volume[sl][act]
        y = (c - p) / h
        if dim == 1:
            X = np.stack([np.ones(len(y)), y[:, 0], y[:, 0] ** 2], -1)
        else:
            X = np.stack([np.ones(len(y)), y[:, 0], y[:, 1], y[:, 0] ** 2,
                          y[:, 0] * y[:, 1], y[:, 1] ** 2], -1)
        # slivers carry flux-balance values, not point values: weight by volume
        w = np.exp(-0.5 * np.sum(y * y, axis=-1) / 1.5 ** 2) * vol
        coef, *_ = np.linalg.lstsq(X * w[:, None], v * w, rcond=None)
        return coef

    def value_at(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return np.array([self._fit(p)[0] for p in pts])

    def gradient_at(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        d = self.grid.dimension
        return np.array([self._fit(p)[1:1 + d] / self.grid.h for p in pts])

    def to_csv(self, path) -> None:
        g = self.grid
        nodes = g.nodes()[g.active]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x1", "x2", "value"])
            for p, v in zip(nodes, self.active_values):
                w.writerow([repr(float(p[0])), repr(float(p[1])) if len(p) > 1 else "",
                            repr(float(v))])
