"""Gradients and Lipschitz constants of grid functions."""
from __future__ import annotations

import itertools
import math

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from ..errors import DisconnectedMask
from .grid import Grid, ScalarField


def gradient_field(u: ScalarField) -> np.ndarray:
    """Gradient on active nodes, shape ``(*grid.shape, dim)`` (NaN off the mask).

    Central differences where both neighbours are full cells; near the mask
    edge a local weighted quadratic fit through the cell centroids replaces
    the one-sided difference.
    """
    g = u.grid
    dim = g.dimension
    vals = u.values
    out = np.full(g.shape + (dim,), np.nan)
    full = g.volume >= 1.0 - 1e-12
    interior = g.active & full
    for ax in range(dim):
        lo = [slice(None)] * dim
        hi = [slice(None)] * dim
        mid = [slice(None)] * dim
        lo[ax], hi[ax], mid[ax] = slice(0, -2), slice(2, None), slice(1, -1)
        ok = np.zeros(g.shape, dtype=bool)
        ok[tuple(mid)] = full[tuple(lo)] & full[tuple(hi)] & interior[tuple(mid)]
        interior &= ok
        diff = np.full(g.shape, np.nan)
        diff[tuple(mid)] = (vals[tuple(hi)] - vals[tuple(lo)]) / (2 * g.h)
        out[..., ax] = np.where(ok, diff, np.nan)
    edge = g.active & ~interior
    for idx in zip(*np.nonzero(edge)):
        out[idx] = u.gradient_at(g.centroid[idx][None])[0]
    out[~g.active] = np.nan
    return out


def _graph(grid: Grid) -> tuple[sparse.csr_matrix, np.ndarray]:
    """8-neighbour (2-neighbour in 1D) graph on active nodes, weighted by centroid distance."""
    dim = grid.dimension
    pos = grid.centroid[grid.active]
    rows, cols, w = [], [], []
    offsets = [o for o in itertools.product((-1, 0, 1), repeat=dim) if any(o) and o > tuple([0] * dim)]
    for off in offsets:
        src = [slice(max(0, -o), n - max(0, o)) for o, n in zip(off, grid.shape)]
        dst = [slice(max(0, o), n - max(0, -o)) for o, n in zip(off, grid.shape)]
        a = grid.index[tuple(src)]
        b = grid.index[tuple(dst)]
        ok = (a >= 0) & (b >= 0)
        a, b = a[ok], b[ok]
        if dim > 1:
            # drop edges whose midpoint lies clearly outside the domain
            mid = 0.5 * (pos[a] + pos[b])
            keep = grid.domain.sdf(mid) > -0.25 * grid.h
            a, b = a[keep], b[keep]
        d = np.linalg.norm(pos[a] - pos[b], axis=-1)
        rows += [a, b]
        cols += [b, a]
        w += [d, d]
    n = grid.n_active
    G = sparse.coo_matrix((np.concatenate(w), (np.concatenate(rows), np.concatenate(cols))),
                          shape=(n, n)).tocsr()
    return G, pos


def grid_geodesic(grid: Grid, sources: np.ndarray) -> np.ndarray:
    """Intrinsic distances from the given active-node indices to all active nodes."""
    G, _ = _graph(grid)
    return csgraph.dijkstra(G, directed=False, indices=sources)


def lipschitz_constant(u: ScalarField, domain=None, n_sources: int = 32, seed: int = 0) -> float:
    """Max of the sup gradient norm and sampled two-point quotients in the intrinsic metric."""
    grid = u.grid
    G, pos = _graph(grid)
    ncomp, _ = csgraph.connected_components(G, directed=False)
    if ncomp > 1:
        raise DisconnectedMask(f"active region has {ncomp} components")
    grad = gradient_field(u)
    gnorm = np.linalg.norm(grad[grid.active], axis=-1)
    sup_grad = float(np.nanmax(gnorm)) if gnorm.size else 0.0
    vals = u.active_values
    rng = np.random.default_rng(seed)
    n = grid.n_active
    src = rng.choice(n, size=min(n_sources, n), replace=False)
    dist = csgraph.dijkstra(G, directed=False, indices=src)
    with np.errstate(divide="ignore", invalid="ignore"):
        q = np.abs(vals[None, :] - vals[src][:, None]) / dist
    q[~np.isfinite(q)] = 0.0
    return max(sup_grad, float(q.max()))
