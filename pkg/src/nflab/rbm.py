"""Reflected Brownian motion with generator Laplacian and its boundary local time.

The process moves with increments ``sqrt(2 dt) * N(0, I)`` and is projected
back onto the boundary whenever a proposal leaves the closed domain; the
projection distance is the local-time increment (Skorokhod pushback). An
independent estimator integrates the boundary-layer indicator
``(1/eps) 1[sdf <= eps]`` along the path.

Random streams are keyed by ``(seed, block)`` where a block holds
``block_size`` consecutive path indices, so any path can be regenerated on
its own and block reductions do not depend on scheduling order.
"""
from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .errors import StepOutOfCollar
from .geometry import Domain, _as_points


class MCEstimate(NamedTuple):
    mean: float
    stderr: float


@dataclass(frozen=True)
class SimConfig:
    """Monte Carlo settings.

    ``bridge`` enables the Brownian-bridge correction: besides projecting
    proposals that land outside, a step whose endpoints are both inside can
    still touch the boundary; the minimum of the normal coordinate over the
    step is sampled from its exact bridge law and any dip below zero is
    pushed back. In one dimension this makes the pushback local time exact
    in law at every grid time.
    """

    dt: float = 1e-4
    n_paths: int = 10_000
    seed: int = 0
    scheme: str = "pushback"
    epsilon: float | None = None
    bridge: bool = False
    block_size: int = 4096

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.n_paths < 1:
            raise ValueError("n_paths must be >= 1")
        if self.scheme not in ("pushback", "penalization"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.epsilon is not None and not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.block_size < 1:
            raise ValueError("block_size must be >= 1")

    @property
    def eps(self) -> float:
        return math.sqrt(self.dt) if self.epsilon is None else self.epsilon

    def with_(self, **kw) -> "SimConfig":
        return replace(self, **kw)


def n_threads() -> int:
    try:
        return max(1, int(os.environ.get("NFL_THREADS", "1")))
    except ValueError:
        return 1


def block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(block,)))


# -- single step ------------------------------------------------------------

def _reflect(domain: Domain, x, d0, prop, d1, dt, uniform):
    """Vectorized reflection of proposals ``prop``; returns (pos, dl, contact, contact_point)."""
    if np.any(d1 < -domain.collar):
        raise StepOutOfCollar(
            f"proposal at depth {-d1.min():.3g} beyond collar {domain.collar:.3g}; reduce dt")
    out = d1 < 0
    if uniform is None:
        dl = np.where(out, -d1, 0.0)
    else:
        # minimum of the normal coordinate along the step's Brownian bridge
        gap = d1 - d0
        m = 0.5 * (d0 + d1 - np.sqrt(gap * gap - 4.0 * dt * np.log(uniform)))
        dl = np.maximum(-m, np.where(out, -d1, 0.0))
    contact = dl > 0
    pos = prop.copy()
    cpoint = None
    if np.any(contact):
        idx = np.nonzero(contact)[0]
        z = domain._nearest(prop[idx])
        cpoint = z
        newd = d1[idx] + dl[idx]  # sdf after pushback
        if uniform is None:
            pos[idx] = z
        else:
            n = domain._gradient(z)
            n = n / np.linalg.norm(n, axis=-1, keepdims=True)
            pos[idx] = z + newd[:, None] * n
    return pos, dl, contact, cpoint


def step(domain: Domain, x, dt: float, noise, uniform=None):
    """One reflected step from ``x``.

    Returns ``(position, local-time increment, contact flag)``. Without
    ``uniform`` this is the plain projection scheme; with a uniform variate
    in (0, 1) the bridge correction is applied.
    """
    x = _as_points(x, domain.dimension)
    noise = np.broadcast_to(_as_points(noise, domain.dimension), x.shape)
    single = x.ndim == 1
    xs = np.atleast_2d(x)
    zs = np.atleast_2d(noise)
    prop = xs + math.sqrt(2.0 * dt) * zs
    d0 = domain.sdf(xs)
    d1 = domain.sdf(prop)
    u = None if uniform is None else np.atleast_1d(np.asarray(uniform, dtype=float))
    pos, dl, contact, _ = _reflect(domain, xs, d0, prop, d1, dt, u)
    if single:
        return pos[0], float(dl[0]), bool(contact[0])
    return pos, dl, contact


# -- batched engine -----------------------------------------------------------

@dataclass
class BlockResult:
    ell: np.ndarray           # (n_ckpt, n) pushback local time
    ell_pen: np.ndarray       # (n_ckpt, n) penalization occupation estimate
    s_ell: np.ndarray         # (n_ckpt, n) sum of s(contact point) * dl
    final: np.ndarray         # (n, d) positions at the last step
    track: np.ndarray | None  # (n_steps+1, n_rec, d) recorded rows
    track_ell: np.ndarray | None
    track_contact: np.ndarray | None


def _check_dt(domain: Domain, dt: float):
    disp = math.sqrt(2.0 * dt * domain.dimension)
    if disp > domain.reach / 4.0:
        raise StepOutOfCollar(
            f"rms step {disp:.3g} exceeds a quarter of the curvature radius {domain.reach:.3g}")


def _run_block(domain: Domain, x0: np.ndarray, n_steps: int, h: float, cfg: SimConfig,
               block: int, n: int, ckpt: Sequence[int], record: Sequence[int] | None,
               s_field: Callable | None):
    rng = block_rng(cfg.seed, block)
    size = cfg.block_size
    dim = domain.dimension
    x = np.broadcast_to(x0, (size, dim)).astype(float)
    d = domain.sdf(x)
    eps = cfg.eps
    ell = np.zeros(size)
    pen = np.zeros(size)
    sel = np.zeros(size)
    ckpt = list(ckpt)
    n_ck = len(ckpt)
    out_ell = np.zeros((n_ck, n))
    out_pen = np.zeros((n_ck, n))
    out_s = np.zeros((n_ck, n))
    track = track_ell = track_contact = None
    if record is not None:
        record = np.asarray(record, dtype=int)
        track = np.empty((n_steps + 1, len(record), dim))
        track_ell = np.zeros((n_steps + 1, len(record)))
        track_contact = np.zeros((n_steps + 1, len(record)), dtype=bool)
        track[0] = x[record]
    sqh = math.sqrt(2.0 * h)
    c = 0
    while c < n_ck and ckpt[c] == 0:
        c += 1
    for k in range(1, n_steps + 1):
        z = rng.standard_normal((size, dim))
        u = rng.random(size) if cfg.bridge else None
        pen += (h / eps) * (d <= eps)
        prop = x + sqh * z
        d1 = domain.sdf(prop)
        x, dl, contact, cpoint = _reflect(domain, x, d, prop, d1, h, u)
        d = d1 + dl
        ell += dl
        if cpoint is not None and s_field is not None:
            idx = np.nonzero(contact)[0]
            sel[idx] += s_field(cpoint) * dl[idx]
        if record is not None:
            track[k] = x[record]
            track_ell[k] = ell[record]
            track_contact[k] = contact[record]
        while c < n_ck and ckpt[c] == k:
            out_ell[c] = ell[:n]
            out_pen[c] = pen[:n]
            out_s[c] = sel[:n]
            c += 1
    return BlockResult(out_ell, out_pen, out_s, x[:n].copy(), track, track_ell, track_contact)


@dataclass
class BatchResult:
    ell: np.ndarray
    ell_pen: np.ndarray
    s_ell: np.ndarray
    final: np.ndarray
    times: np.ndarray

    def local_time(self, scheme: str = "pushback") -> np.ndarray:
        return self.ell if scheme == "pushback" else self.ell_pen


def checkpoint_steps(times: Sequence[float], dt: float) -> tuple[int, float, list[int]]:
    """Uniform grid with step ``dt`` hitting every requested time."""
    times = [float(t) for t in times]
    idx = [int(round(t / dt)) for t in times]
    for t, i in zip(times, idx):
        if abs(i * dt - t) > 1e-9 * max(t, 1.0):
            raise ValueError(f"time {t} is not a multiple of dt={dt}")
    return max(idx), dt, idx


def simulate_batch(domain: Domain, x0, times, cfg: SimConfig,
                   s_field: Callable | None = None) -> BatchResult:
    """Simulate ``cfg.n_paths`` reflected paths from ``x0`` and snapshot at ``times``.

    A single time that is not a multiple of ``dt`` is reached with
    ``ceil(t/dt)`` equal steps.
    """
    x0 = _as_points(x0, domain.dimension).reshape(domain.dimension)
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if np.any(times < 0):
        raise ValueError("times must be >= 0")
    if np.any(domain.sdf(x0) < -1e-12):
        raise ValueError("x0 must lie in the closed domain")
    _check_dt(domain, cfg.dt)
    if len(times) == 1:
        m = int(math.ceil(times[0] / cfg.dt - 1e-9))
        n_steps, h, ckpt = m, (times[0] / m if m else cfg.dt), [m]
    else:
        n_steps, h, ckpt = checkpoint_steps(times, cfg.dt)
    order = np.argsort(ckpt, kind="stable")
    sorted_ckpt = [ckpt[i] for i in order]
    nb = -(-cfg.n_paths // cfg.block_size)
    sizes = [min(cfg.block_size, cfg.n_paths - b * cfg.block_size) for b in range(nb)]

    def work(b):
        return _run_block(domain, x0, n_steps, h, cfg, b, sizes[b], sorted_ckpt, None, s_field)

    workers = min(n_threads(), nb)
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            parts = list(ex.map(work, range(nb)))
    else:
        parts = [work(b) for b in range(nb)]
    inv = np.argsort(order)

    def cat(name):
        return np.concatenate([getattr(p, name) for p in parts], axis=1)[inv]

    return BatchResult(cat("ell"), cat("ell_pen"), cat("s_ell"),
                       np.concatenate([p.final for p in parts]), times)


# -- trajectories -------------------------------------------------------------

@dataclass(frozen=True)
class TrajectoryWithLocalTime:
    times: np.ndarray
    positions: np.ndarray
    local_time: np.ndarray
    contact: np.ndarray

    def to_csv(self, path) -> None:
        dim = self.positions.shape[1]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "x1", "x2", "ell", "contact"])
            for t, p, l, c in zip(self.times, self.positions, self.local_time, self.contact):
                x2 = repr(float(p[1])) if dim > 1 else ""
                w.writerow([repr(float(t)), repr(float(p[0])), x2, repr(float(l)), int(c)])


def simulate_path(domain: Domain, x0, t: float, cfg: SimConfig,
                  path_index: int = 0) -> TrajectoryWithLocalTime:
    """Regenerate path ``path_index`` of the ensemble defined by ``cfg``."""
    if not t > 0:
        raise ValueError("t must be positive")
    x0 = _as_points(x0, domain.dimension).reshape(domain.dimension)
    _check_dt(domain, cfg.dt)
    m = int(math.ceil(t / cfg.dt - 1e-9))
    h = t / m
    block, row = divmod(int(path_index), cfg.block_size)
    res = _run_block(domain, x0, m, h, cfg, block, 0, [], [row], None)
    times = np.linspace(0.0, t, m + 1)
    return TrajectoryWithLocalTime(times, res.track[:, 0], res.track_ell[:, 0],
                                   res.track_contact[:, 0])


def penalization_local_time(path: TrajectoryWithLocalTime, domain: Domain, eps: float) -> float:
    """Boundary-layer occupation ``sum dt/eps * 1[sdf <= eps]`` over the left grid points."""
    d = domain.sdf(path.positions[:-1])
    dt = np.diff(path.times)
    return float(np.sum(dt * (d <= eps)) / eps)


def _estimate(samples: np.ndarray) -> MCEstimate:
    n = samples.size
    se = float(samples.std(ddof=1) / math.sqrt(n)) if n > 1 else math.inf
    return MCEstimate(float(samples.mean()), se)


def local_time_mean(domain: Domain, x0, t: float, cfg: SimConfig) -> MCEstimate:
    if t == 0:
        return MCEstimate(0.0, 0.0)
    res = simulate_batch(domain, x0, [t], cfg)
    return _estimate(res.local_time(cfg.scheme)[0])


def local_time_curve(domain: Domain, x0, times, cfg: SimConfig) -> list[MCEstimate]:
    """Local-time means at several times from one set of paths."""
    res = simulate_batch(domain, x0, times, cfg)
    return [_estimate(row) for row in res.local_time(cfg.scheme)]


def sup_local_time_mean(domain: Domain, t: float, cfg: SimConfig, n_probes: int = 8,
                        seed: int | None = None) -> float:
    """Largest boundary-started mean local time over a surface-measure probe set."""
    if t == 0:
        return 0.0
    probes, _ = domain.boundary_sample(n_probes, seed)
    return max(local_time_mean(domain, z, t, cfg).mean for z in probes)


def convention_rescale(t_standard: float) -> float:
    """Generator-Laplacian time matching time ``t_standard`` of the half-Laplacian flow."""
    if t_standard < 0:
        raise ValueError("t must be >= 0")
    return t_standard / 2.0


def halfline_local_time_mean(t: float) -> float:
    """Exact mean boundary local time at 0 on the half-line: 2 sqrt(t/pi)."""
    return 2.0 * math.sqrt(t / math.pi)
