"""Named experiments: config parsing, per-t measurement tables and rate fits.

An experiment produces a table of rows (written as CSV) and a summary with
fitted constants and pass/fail bands. The summary is computed from the table
alone, so re-evaluating a saved CSV reproduces it.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from .errors import ConfigInvalid, NFLError
from .feynman_kac import RateModel, fk_gradient_bound
from .fitting import SqrtRateFit, fit_power_law, fit_sqrt_rate
from .geometry import Domain, HalfLine, domain_from_config
from .rbm import SimConfig, halfline_local_time_mean, simulate_batch

__all__ = ["EXPERIMENTS", "ExperimentConfig", "Report", "evaluate", "fit_sqrt_rate",
           "load_config", "run"]

SQRT_RATE = 2.0 / math.sqrt(math.pi)


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    domain: dict
    sim: SimConfig
    t_grid: tuple[float, ...]
    rate: RateModel
    output: str = "results"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigInvalid(f"unknown experiment {self.experiment!r}; "
                                f"choose from {sorted(EXPERIMENTS)}")
        t = np.asarray(self.t_grid, dtype=float)
        if t.size == 0:
            raise ConfigInvalid("t_grid is empty")
        if np.any(t < 0) or np.any(np.diff(t) <= 0):
            raise ConfigInvalid("t_grid must be non-negative and strictly increasing")
        if t[-1] > self.rate.t0:
            raise ConfigInvalid(f"t_grid exceeds the rate model's t0={self.rate.t0}")

    def build_domain(self) -> Domain:
        return domain_from_config(self.domain)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigInvalid("config must be a JSON object")
        unknown = set(data) - {"experiment", "domain", "sim", "t_grid", "rate", "output", "params"}
        if unknown:
            raise ConfigInvalid(f"unknown config keys {sorted(unknown)}")
        for key in ("experiment", "t_grid"):
            if key not in data:
                raise ConfigInvalid(f"missing config key {key!r}")
        try:
            sim = SimConfig(**data.get("sim", {}))
            rate = RateModel(**data.get("rate", {}))
            t_grid = tuple(float(t) for t in data["t_grid"])
        except (TypeError, ValueError) as exc:
            raise ConfigInvalid(str(exc)) from exc
        cfg = cls(data["experiment"], dict(data.get("domain", {"kind": "half_line"})), sim,
                  t_grid, rate, str(data.get("output", "results")), dict(data.get("params", {})))
        cfg.build_domain()  # validates the domain block
        return cfg


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"{path}: {exc}") from exc
    return ExperimentConfig.from_dict(data)


@dataclass
class Report:
    experiment: str
    columns: list[str]
    rows: list[dict]
    fitted: dict
    bands: list[dict]
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(b["pass"] for b in self.bands)

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([_fmt(r[c]) for c in self.columns])
        return buf.getvalue()

    def summary(self) -> dict:
        out = {"experiment": self.experiment, "fitted": self.fitted, "bands": self.bands,
               "pass": self.passed}
        out.update(self.extra)
        return out

    def write(self, directory) -> tuple[Path, Path]:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        csv_path = d / f"{self.experiment}.csv"
        json_path = d / f"{self.experiment}.json"
        csv_path.write_text(self.csv_text())
        json_path.write_text(json.dumps(self.summary(), indent=2, sort_keys=True) + "\n")
        return csv_path, json_path


def _fmt(v) -> str:
    return repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)


def _band(name: str, value: float, lo: float | None = None, hi: float | None = None) -> dict:
    ok = (lo is None or value >= lo) and (hi is None or value <= hi)
    return {"name": name, "value": float(value), "lo": lo, "hi": hi, "pass": bool(ok)}


def _fit_or_none(pairs) -> SqrtRateFit | None:
    pairs = [(t, v) for t, v in pairs if t > 0 and v > 0]
    if len(pairs) < 3:
        return None
    try:
        return fit_sqrt_rate(pairs)
    except NFLError:
        return None


def _fitted(fit: SqrtRateFit | None, **more) -> dict:
    out = {"S_hat": None if fit is None else fit.s_hat,
           "C_hat": None if fit is None else fit.b}
    out.update(more)
    return out


def _start_point(domain: Domain, params: dict) -> np.ndarray:
    if "x0" in params:
        return np.asarray(params["x0"], dtype=float)
    if isinstance(domain, HalfLine):
        return np.zeros(1)
    if hasattr(domain, "boundary_chart"):
        return np.asarray(domain.boundary_chart(np.array(0.0)), dtype=float)
    return np.asarray(domain.boundary_sample(1, 0)[0][0], dtype=float)


# -- experiments: each returns (columns, rows, extra) ------------------------------------------

def _localtime(cfg: ExperimentConfig, domain: Domain):
    x0 = _start_point(domain, cfg.params)
    res = simulate_batch(domain, x0, list(cfg.t_grid), cfg.sim)
    n = cfg.sim.n_paths
    rows = []
    for k, t in enumerate(cfg.t_grid):
        push, pen = res.ell[k], res.ell_pen[k]
        rows.append({"t": t, "mean": float(push.mean()),
                     "stderr": float(push.std(ddof=1) / math.sqrt(n)) if n > 1 else math.inf,
                     "pen_mean": float(pen.mean()),
                     "reference": halfline_local_time_mean(t)})
    return ["t", "mean", "stderr", "pen_mean", "reference"], rows, {"x0": x0.tolist()}


def _kernel_validate(cfg: ExperimentConfig, domain: Domain):
    from .heat_pde import halfline_grid, halfline_heat_kernel, point_mass_field, solve_neumann
    if not isinstance(domain, HalfLine):
        raise ConfigInvalid("kernel_validate runs on the half-line")
    h = float(cfg.params.get("h", 1 / 256))
    grid = halfline_grid(h, domain.extent)
    steps_per_unit = cfg.params.get("steps", None)
    f0 = point_mass_field(grid)
    x = grid.centroid[grid.active][:, 0]
    rows = []
    for t in cfg.t_grid:
        steps = int(steps_per_unit) if steps_per_unit else max(400, int(round(2000 * math.sqrt(t))))
        u = solve_neumann(domain, f0, t, steps)
        err = float(np.max(np.abs(u.active_values - halfline_heat_kernel(x, 0.0, t))))
        rows.append({"t": t, "linf_error": err, "mass": u.mass()})
    return ["t", "linf_error", "mass"], rows, {"h": h}


def _gradbound(cfg: ExperimentConfig, domain: Domain):
    from .heat_pde import ScalarField, local_grid, solve_neumann, tangential_test_function
    c = float(cfg.params.get("c", 0.25))
    f = tangential_test_function(domain, c=c)
    x = np.asarray(f.origin)
    rows = []
    for t in cfg.t_grid:
        st = math.sqrt(t)
        grid = local_grid(domain, 9 * st, min(st / 16, 1 / 512))
        u = solve_neumann(domain, ScalarField.from_function(grid, f), t, 60)
        pde = float(np.linalg.norm(u.gradient_at(x[None])[0]))
        # keep the collar small relative to the diffusion scale
        sim = cfg.sim.with_(dt=min(cfg.sim.dt, t / 1000))
        est = fk_gradient_bound(domain, f.gradient, x, t, sim)
        rows.append({"t": t, "pde_grad": pde, "fk_mean": est.mean, "fk_stderr": est.stderr,
                     "bound": cfg.rate.bound(t)})
    return ["t", "pde_grad", "fk_mean", "fk_stderr", "bound"], rows, {"c": c}


def _sharpness(cfg: ExperimentConfig, domain: Domain):
    from .heat_pde import sharpness_experiment
    p = cfg.params
    if domain.kind == "parabolic_cap":
        s1 = float(domain.curvature)
    elif domain.kind == "disk_exterior":
        s1 = 1.0 / domain.radius
    else:
        raise ConfigInvalid("sharpness runs on parabolic_cap or disk_exterior")
    res = sharpness_experiment(s1, cfg.t_grid, c=float(p.get("c", 0.25)),
                               eps=float(p.get("eps", 0.0)), delta=float(p.get("delta", 0.0)),
                               domain_kind=domain.kind,
                               radius_factor=float(p.get("radius_factor", 2.0)),
                               nodes_per_sqrt_t=int(p.get("nodes_per_sqrt_t", 16)),
                               h_max=float(p.get("h_max", 1 / 512)),
                               steps=int(p.get("steps", 60)))
    rows = [{"t": r.t, "quotient": r.quotient, "bound": r.bound,
             "slope_partial": r.slope_partial} for r in res.rows]
    return ["t", "quotient", "bound", "slope_partial"], rows, {"S1": s1}


def _transport(cfg: ExperimentConfig, domain: Domain):
    from .transport import DiscreteMeasure, contraction_check

    def measure(entry):
        if isinstance(entry, str):
            return DiscreteMeasure.from_csv(entry)
        atoms = np.asarray(entry["atoms"], dtype=float)
        w = entry.get("weights", np.ones(len(atoms)))
        return DiscreteMeasure.normalized(atoms, w)

    p = cfg.params
    if "mu" not in p or "nu" not in p:
        raise ConfigInvalid("transport needs params.mu and params.nu")
    try:
        mu, nu = measure(p["mu"]), measure(p["nu"])
        mu.check_support(domain)
        nu.check_support(domain)
    except (KeyError, ValueError) as exc:
        raise ConfigInvalid(f"bad measure: {exc}") from exc
    q = float(p.get("q", 1))
    if q not in (1.0, 2.0):
        raise ConfigInvalid("q must be 1 or 2")
    rows_ = contraction_check(domain, mu, nu, cfg.t_grid, q, cfg.rate, cfg.sim,
                              n_batches=int(p.get("n_batches", 16)))
    rows = [{"t": r.t, "ratio": r.ratio, "bound": r.bound, "stderr": r.stderr} for r in rows_]
    return ["t", "ratio", "bound", "stderr"], rows, {"q": q}


def _convex_contrast(cfg: ExperimentConfig, domain: Domain):
    from .heat_pde import Grid, ScalarField, lipschitz_constant, solve_neumann
    h = float(cfg.params.get("h", 1 / 128))
    axis = int(cfg.params.get("axis", 0))
    (x0, x1), (y0, y1) = domain.bounding_box
    grid = Grid.build(domain, h, ((x0 - 2 * h, x1 + 2 * h), (y0 - 2 * h, y1 + 2 * h)))
    f0 = ScalarField.from_function(grid, lambda x: x[..., axis])
    lip0 = lipschitz_constant(f0)
    rows = []
    for t in cfg.t_grid:
        u = solve_neumann(domain, f0, t, int(cfg.params.get("steps", 50)))
        rows.append({"t": t, "lip_ratio": lipschitz_constant(u) / lip0,
                     "bound": cfg.rate.convex(t)})
    return ["t", "lip_ratio", "bound"], rows, {"h": h}


EXPERIMENTS: dict[str, Callable] = {
    "localtime": _localtime,
    "kernel_validate": _kernel_validate,
    "gradbound": _gradbound,
    "sharpness": _sharpness,
    "transport": _transport,
    "convex_contrast": _convex_contrast,
}

DESCRIPTIONS = {
    "localtime": "mean boundary local time vs 2 sqrt(t/pi), power-law fit",
    "kernel_validate": "Neumann solver vs the closed-form half-line heat kernel",
    "gradbound": "PDE gradient vs Monte Carlo Feynman-Kac gradient bound",
    "sharpness": "two-point Lipschitz quotients at a nonconvex boundary point",
    "transport": "Wasserstein contraction ratios of coupled particle clouds",
    "convex_contrast": "Lipschitz ratios of the heat flow on a convex domain",
}


# -- evaluation from the table ---------------------------------------------------------------

def evaluate(experiment: str, rows: list[dict], params: dict | None = None) -> tuple[dict, list[dict]]:
    """Fitted constants and bands computed from the per-t rows only."""
    p = params or {}
    col = lambda name: [float(r[name]) for r in rows]  # noqa: E731
    t = col("t")
    bands: list[dict] = []
    if experiment == "localtime":
        pairs = [(ti, m) for ti, m in zip(t, col("mean")) if ti > 0]
        exp_, pref = fit_power_law(pairs) if len(pairs) >= 2 else (math.nan, math.nan)
        fitted = _fitted(None, exponent=exp_, prefactor=pref)
        tol_e = float(p.get("exponent_tol", 0.02))
        tol_p = float(p.get("prefactor_rtol", 0.02))
        bands.append(_band("exponent", exp_, 0.5 - tol_e, 0.5 + tol_e))
        bands.append(_band("prefactor", pref, SQRT_RATE * (1 - tol_p), SQRT_RATE * (1 + tol_p)))
        return fitted, bands
    if experiment == "kernel_validate":
        tol = float(p.get("tol", 1e-3))
        for ti, e in zip(t, col("linf_error")):
            bands.append(_band(f"linf_error(t={ti!r})", e, None, tol))
        return _fitted(None), bands
    if experiment == "gradbound":
        fit = _fit_or_none(list(zip(t, col("fk_mean"))))
        for ti, g, m, s in zip(t, col("pde_grad"), col("fk_mean"), col("fk_stderr")):
            bands.append(_band(f"pde_grad - fk_mean - 3se (t={ti!r})", g - m - 3 * s, None, 0.0))
        return _fitted(fit), bands
    if experiment == "sharpness":
        fit = _fit_or_none(list(zip(t, col("quotient"))))
        s1 = float(p.get("S1", 1.0))
        fitted = _fitted(fit, slope_est=None if fit is None else fit.a)
        if s1 > 0 and fit is not None:
            lo, hi = p.get("s_hat_band", (0.9, 1.25))
            bands.append(_band("S_hat / S1", fit.s_hat / s1, lo, hi))
        else:
            for ti, qv in zip(t, col("quotient")):
                bands.append(_band(f"quotient - 1 - t (t={ti!r})", qv - 1 - ti, None, 0.0))
        return fitted, bands
    if experiment == "transport":
        fit = _fit_or_none(list(zip(t, col("ratio"))))
        c_hat = max(fit.b, 0.0) if fit is not None else 0.0
        S = float(p.get("S", 0.0))
        for ti, r, s in zip(t, col("ratio"), col("stderr")):
            ref = math.exp(2 * S * math.sqrt(ti / math.pi) + c_hat * ti)
            bands.append(_band(f"ratio - bound - 3se (t={ti!r})", r - ref - 3 * s, None, 0.0))
        return _fitted(fit, C_used=c_hat), bands
    if experiment == "convex_contrast":
        tol = float(p.get("tol", 0.01))
        for ti, r, b in zip(t, col("lip_ratio"), col("bound")):
            bands.append(_band(f"lip_ratio / bound (t={ti!r})", r / b, None, 1.0 + tol))
        return _fitted(None), bands
    raise ConfigInvalid(f"unknown experiment {experiment!r}")


def read_rows(path) -> list[dict]:
    with open(path, newline="") as fh:
        return [dict(r) for r in csv.DictReader(fh)]


def run(config: ExperimentConfig, write: bool = True) -> Report:
    """Run one experiment; writes ``<output>/<experiment>.csv`` and ``.json`` when ``write``."""
    domain = config.build_domain()
    try:
        columns, rows, extra = EXPERIMENTS[config.experiment](config, domain)
    except NFLError as exc:
        raise type(exc)(f"[{config.experiment}] {exc}") from exc
    eval_params: dict[str, Any] = dict(config.params)
    eval_params.update({k: v for k, v in extra.items() if k == "S1"})
    if config.experiment == "transport":
        eval_params["S"] = config.rate.S
    report = Report(config.experiment, columns, rows, {}, [], {})
    # evaluate from the serialized table so the summary depends on the CSV alone
    parsed = list(csv.DictReader(io.StringIO(report.csv_text())))
    report.fitted, report.bands = evaluate(config.experiment, parsed, eval_params)
    report.extra = {"domain": config.domain, "params": extra}
    if write:
        report.write(config.output)
    return report
