"""Exact Wasserstein distances between discrete measures and the contraction check.

Optimal couplings are computed as linear programs (HiGHS dual simplex via
scipy), which returns a vertex of the transportation polytope, so the
optimal value is exact up to round-off. The ground cost is the intrinsic
distance of the domain raised to the power ``q``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .errors import DegenerateInput, DisconnectedSupport, NonConvergent, TooManyAtoms
from .feynman_kac import RateModel
from .fitting import fit_sqrt_rate
from .geometry import DiskExterior, Domain, _as_points
from .rbm import SimConfig, simulate_batch

MAX_ATOMS = 512


@dataclass(frozen=True)
class DiscreteMeasure:
    atoms: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        atoms = np.atleast_2d(np.asarray(self.atoms, dtype=float))
        weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if atoms.shape[0] != weights.shape[0]:
            raise ValueError("atoms and weights differ in length")
        if np.any(weights <= 0):
            raise ValueError("weights must be positive")
        if abs(weights.sum() - 1.0) > 1e-12:
            raise ValueError(f"weights sum to {weights.sum()!r}, not 1")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", weights)

    def __len__(self):
        return len(self.weights)

    @classmethod
    def dirac(cls, x) -> "DiscreteMeasure":
        return cls(np.atleast_2d(np.asarray(x, dtype=float)), np.ones(1))

    @classmethod
    def normalized(cls, atoms, weights) -> "DiscreteMeasure":
        w = np.asarray(weights, dtype=float)
        return cls(atoms, w / w.sum())

    def check_support(self, domain: Domain, tol: float = 1e-9) -> None:
        if np.any(domain.sdf(_as_points(self.atoms, domain.dimension)) < -tol):
            raise ValueError("atoms must lie in the closed domain")

    @classmethod
    def from_csv(cls, path) -> "DiscreteMeasure":
        atoms, weights = [], []
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                x2 = row.get("x2", "")
                atoms.append([float(row["x1"])] + ([float(x2)] if x2 not in ("", None) else []))
                weights.append(float(row["weight"]))
        return cls.normalized(np.array(atoms), weights)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x1", "x2", "weight"])
            for a, m in zip(self.atoms, self.weights):
                w.writerow([repr(float(a[0])), repr(float(a[1])) if len(a) > 1 else "",
                            repr(float(m))])


def _segment_inside(domain: Domain, a: np.ndarray, b: np.ndarray, n: int = 33) -> np.ndarray:
    lam = np.linspace(0.0, 1.0, n)[:, None, None, None]
    pts = (1 - lam) * a[None, :, None, :] + lam * b[None, None, :, :]
    return np.all(domain.sdf(pts) >= -1e-12, axis=0)


def intrinsic_distance(domain: Domain, a, b, grid_h: float = 1 / 128) -> np.ndarray:
    """Pairwise shortest-path distances in the closed domain, shape ``(len(a), len(b))``.

    Exact for the half-line, convex disks and the disk exterior; otherwise
    Euclidean when the segment stays in the domain, else grid Dijkstra.
    """
    a = _as_points(a, domain.dimension).reshape(-1, domain.dimension)
    b = _as_points(b, domain.dimension).reshape(-1, domain.dimension)
    if isinstance(domain, DiskExterior):
        return domain.geodesic(a[:, None, :], b[None, :, :])
    euclid = np.linalg.norm(a[:, None, :] - b[None, :, :], axis=-1)
    if domain.kind in ("half_line", "disk_interior"):
        return euclid
    inside = _segment_inside(domain, a, b)
    if np.all(inside):
        return euclid
    from .heat_pde.fields import _graph
    from .heat_pde.grid import Grid
    from scipy.sparse import csgraph
    grid = Grid.build(domain, grid_h)
    G, pos = _graph(grid)

    def snap(p):
        return np.argmin(np.linalg.norm(pos[None] - p[:, None], axis=-1), axis=1)

    ia, ib = snap(a), snap(b)
    dist = csgraph.dijkstra(G, directed=False, indices=ia)[:, ib]
    dist = dist + np.linalg.norm(pos[ia] - a, axis=-1)[:, None] \
        + np.linalg.norm(pos[ib] - b, axis=-1)[None, :]
    return np.where(inside, euclid, dist)


def optimal_cost(a: np.ndarray, b: np.ndarray, cost: np.ndarray) -> tuple[float, np.ndarray]:
    """Minimum of <plan, cost> over couplings of ``a`` and ``b``; returns (value, plan)."""
    m, n = cost.shape
    if m == 1 or n == 1:
        plan = np.outer(a, b)
        return float(np.sum(plan * cost)), plan
    A = sparse.vstack([sparse.kron(sparse.eye(m), np.ones((1, n))),
                       sparse.kron(np.ones((1, m)), sparse.eye(n))]).tocsr()
    # the marginals share total mass one; drop one redundant equality
    A = A[:-1]
    rhs = np.concatenate([a, b])[:-1]
    res = linprog(cost.ravel(), A_eq=A, b_eq=rhs, bounds=(0, None), method="highs-ds",
                  options={"primal_feasibility_tolerance": 1e-10,
                           "dual_feasibility_tolerance": 1e-10})
    if res.status != 0:
        raise NonConvergent(f"transport LP failed: {res.message}")
    plan = np.maximum(res.x.reshape(m, n), 0.0)
    return float(np.sum(plan * cost)), plan


def wasserstein(mu: DiscreteMeasure, nu: DiscreteMeasure, q: float, domain: Domain,
                return_plan: bool = False):
    """Exact ``W_q(mu, nu)`` with the intrinsic distance of ``domain`` as ground metric."""
    if q < 1:
        raise ValueError("q must be >= 1")
    if len(mu) + len(nu) > MAX_ATOMS:
        raise TooManyAtoms(f"{len(mu) + len(nu)} atoms exceed the exact limit {MAX_ATOMS}")
    d = intrinsic_distance(domain, mu.atoms, nu.atoms)
    if not np.all(np.isfinite(d)):
        raise DisconnectedSupport("some atoms are not connected inside the domain")
    val, plan = optimal_cost(mu.weights, nu.weights, d ** q)
    w = max(val, 0.0) ** (1.0 / q)
    return (w, plan) if return_plan else w


def evolve_measure(domain: Domain, mu: DiscreteMeasure, t: float, cfg: SimConfig) -> DiscreteMeasure:
    """Particle approximation of the heat flow of ``mu``: ``cfg.n_paths`` endpoints per atom.

    Every atom uses the same seed, so particles from different atoms are
    driven by common noise.
    """
    if t == 0:
        return mu
    atoms, weights = [], []
    for x, w in zip(mu.atoms, mu.weights):
        res = simulate_batch(domain, x, [t], cfg)
        atoms.append(res.final)
        weights.append(np.full(cfg.n_paths, w / cfg.n_paths))
    weights = np.concatenate(weights)
    return DiscreteMeasure(np.concatenate(atoms), weights / weights.sum())


@dataclass
class ContractionRow:
    t: float
    ratio: float
    bound: float
    stderr: float


def _pair_seed(seed: int, batch: int, entry: int) -> int:
    return int(np.random.SeedSequence([seed, batch, entry]).generate_state(1)[0])


def contraction_check(domain: Domain, mu: DiscreteMeasure, nu: DiscreteMeasure, t_grid,
                      q: float, rate: RateModel, cfg: SimConfig,
                      n_batches: int = 16) -> list[ContractionRow]:
    """W_q ratios of coupled particle clouds against ``rate.bound(t)``.

    Mass is paired along the optimal plan of (mu, nu); each plan entry drives
    its two particle clouds with one shared noise stream. The ratio is
    averaged over independent batches and reported with its standard error.
    """
    w0, plan = wasserstein(mu, nu, q, domain, return_plan=True)
    if w0 <= 0:
        raise DegenerateInput("W_q(mu, nu) = 0; the ratio is undefined")
    entries = [(i, j, plan[i, j]) for i, j in zip(*np.nonzero(plan > 1e-15))]
    per = cfg.n_paths
    if 2 * per * len(entries) > MAX_ATOMS:
        raise TooManyAtoms("n_paths too large for exact transport of the evolved clouds")
    rows = []
    for t in t_grid:
        if t == 0:
            rows.append(ContractionRow(0.0, 1.0, rate.bound(0.0), 0.0))
            continue
        ratios = []
        for b in range(n_batches):
            xs, ys, ws = [], [], []
            for k, (i, j, m) in enumerate(entries):
                c = cfg.with_(seed=_pair_seed(cfg.seed, b, k))
                xs.append(simulate_batch(domain, mu.atoms[i], [t], c).final)
                ys.append(simulate_batch(domain, nu.atoms[j], [t], c).final)
                ws.append(np.full(per, m / per))
            w = np.concatenate(ws)
            w = w / w.sum()
            mt = DiscreteMeasure(np.concatenate(xs), w)
            nt = DiscreteMeasure(np.concatenate(ys), w)
            ratios.append(wasserstein(mt, nt, q, domain) / w0)
        ratios = np.asarray(ratios)
        se = float(ratios.std(ddof=1) / math.sqrt(n_batches)) if n_batches > 1 else math.inf
        rows.append(ContractionRow(float(t), float(ratios.mean()), rate.bound(t), se))
    return rows


def fitted_rate_constant(rows: list[ContractionRow]) -> float:
    """The O(t) constant ``C >= 0`` obtained by fitting the ratios (needs three positive times)."""
    pts = [(r.t, r.ratio) for r in rows if r.t > 0]
    return max(fit_sqrt_rate(pts).b, 0.0)


def contraction_to_csv(rows: list[ContractionRow], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "ratio", "bound", "stderr"])
        for r in rows:
            w.writerow([repr(r.t), repr(r.ratio), repr(r.bound), repr(r.stderr)])
