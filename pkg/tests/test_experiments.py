import json
import math

import pytest

from nflab.cli import main
from nflab.errors import ConfigInvalid, SingularFit
from nflab.experiments import EXPERIMENTS, ExperimentConfig, evaluate, fit_sqrt_rate, read_rows, run
from nflab.fitting import fit_power_law


def test_fit_recovers_sharp_rate():
    ts = [1e-4, 1e-3, 4e-3, 1e-2, 2.5e-2]
    fit = fit_sqrt_rate([(t, math.exp(2 * math.sqrt(t / math.pi))) for t in ts])
    assert fit.a == pytest.approx(2 / math.sqrt(math.pi), abs=1e-8)
    assert fit.b == pytest.approx(0.0, abs=1e-8)
    assert fit.s_hat == pytest.approx(1.0, abs=1e-8)


def test_fit_recovers_linear_rate():
    fit = fit_sqrt_rate([(t, math.exp(0.5 * t)) for t in (0.01, 0.05, 0.1, 0.3)])
    assert fit.a == pytest.approx(0.0, abs=1e-8)
    assert fit.b == pytest.approx(0.5, abs=1e-8)


def test_fit_rejects_degenerate_designs():
    with pytest.raises(SingularFit):
        fit_sqrt_rate([(0.01, 1.1), (0.01, 1.1)])
    with pytest.raises(SingularFit):
        fit_sqrt_rate([(0.01, 1.1), (0.01, 1.1), (0.01, 1.1)])


def test_power_law_fit():
    e, p = fit_power_law([(t, 3 * t ** 0.5) for t in (0.01, 0.1, 1.0)])
    assert e == pytest.approx(0.5)
    assert p == pytest.approx(3.0)


def base(**kw):
    cfg = {"experiment": "localtime", "domain": {"kind": "half_line"},
           "sim": {"dt": 1e-3, "n_paths": 2000, "seed": 1, "bridge": True},
           "t_grid": [0.01, 0.04, 0.09, 0.16, 0.25]}
    cfg.update(kw)
    return cfg


@pytest.mark.parametrize("bad", [
    {"t_grid": [0.2, 0.1, 0.3]},
    {"t_grid": [0.1, 0.1, 0.2]},
    {"t_grid": [0.1, 2.0]},
    {"experiment": "nope"},
    {"domain": {"kind": "torus"}},
    {"sim": {"dt": -1}},
    {"extra_key": 1},
])
def test_invalid_configs(bad):
    with pytest.raises(ConfigInvalid):
        ExperimentConfig.from_dict(base(**bad))


def test_localtime_run_is_byte_identical(tmp_path):
    cfg = ExperimentConfig.from_dict(base(output=str(tmp_path / "a")))
    r1 = run(cfg)
    first = (tmp_path / "a" / "localtime.csv").read_bytes()
    run(cfg)
    assert (tmp_path / "a" / "localtime.csv").read_bytes() == first
    summary = json.loads((tmp_path / "a" / "localtime.json").read_text())
    assert summary["experiment"] == "localtime"
    assert set(summary["fitted"]) >= {"S_hat", "C_hat"}
    assert summary["pass"] == r1.passed
    assert summary["fitted"]["exponent"] == pytest.approx(0.5, abs=0.05)


def test_summary_is_function_of_csv(tmp_path):
    cfg = ExperimentConfig.from_dict(base(output=str(tmp_path)))
    rep = run(cfg)
    fitted, bands = evaluate("localtime", read_rows(tmp_path / "localtime.csv"), cfg.params)
    assert fitted == rep.fitted
    assert bands == rep.bands


def test_evaluate_bands_flip_with_table():
    # sqrt(t) growth cannot be absorbed by the fitted O(t) constant when S = 0
    rows = [{"t": t, "ratio": math.exp(2 * math.sqrt(t)), "bound": 1.0, "stderr": 0.0}
            for t in [1e-3, 2e-3, 3e-3]]
    _, bands = evaluate("transport", rows, {"S": 0.0})
    assert not all(b["pass"] for b in bands)
    rows_ok = [dict(r, ratio=0.99) for r in rows]
    _, bands = evaluate("transport", rows_ok, {"S": 0.0})
    assert all(b["pass"] for b in bands)


def test_every_experiment_runs_small(tmp_path):
    small = {
        "localtime": base(),
        "kernel_validate": {"experiment": "kernel_validate", "domain": {"kind": "half_line", "extent": 6},
                            "t_grid": [0.1], "params": {"h": 1 / 128}},
        "gradbound": {"experiment": "gradbound", "domain": {"kind": "disk_exterior", "radius": 1.0},
                      "sim": {"dt": 1e-6, "n_paths": 2000, "seed": 1, "bridge": True},
                      "t_grid": [1e-3], "rate": {"S": 1.0}},
        "sharpness": {"experiment": "sharpness", "domain": {"kind": "parabolic_cap", "S1": 1.0},
                      "t_grid": [1e-4, 4e-4, 1.6e-3]},
        "transport": {"experiment": "transport", "domain": {"kind": "disk_interior", "radius": 1.0},
                      "sim": {"dt": 1e-5, "n_paths": 32, "seed": 1},
                      "t_grid": [1e-3, 2e-3, 4e-3],
                      "params": {"mu": {"atoms": [[1.0, 0.0]]},
                                 "nu": {"atoms": [[0.9999, 0.01]]}, "n_batches": 4}},
        "convex_contrast": {"experiment": "convex_contrast", "domain": {"kind": "disk_interior", "radius": 1.0},
                            "t_grid": [0.01], "params": {"h": 1 / 32}},
    }
    assert set(small) == set(EXPERIMENTS)
    for name, data in small.items():
        data = dict(data, output=str(tmp_path))
        rep = run(ExperimentConfig.from_dict(data))
        assert (tmp_path / f"{name}.csv").exists()
        assert (tmp_path / f"{name}.json").exists()
        assert rep.bands, name
    sharp = json.loads((tmp_path / "sharpness.json").read_text())
    assert 1.016 <= sharp["fitted"]["slope_est"] <= 1.411


def test_convex_contrast_passes(tmp_path):
    data = {"experiment": "convex_contrast", "domain": {"kind": "disk_interior", "radius": 1.0},
            "t_grid": [0.01, 0.05, 0.1], "params": {"h": 1 / 64}, "output": str(tmp_path)}
    rep = run(ExperimentConfig.from_dict(data))
    assert rep.passed
    assert all(r["lip_ratio"] <= 1.01 for r in rep.rows)


def test_cli(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps(base(output=str(tmp_path / "out"))))
    assert main(["list-experiments"]) == 0
    assert "sharpness" in capsys.readouterr().out
    assert main(["validate", str(cfg)]) == 0
    code = main(["run", str(cfg)])
    summary = json.loads((tmp_path / "out" / "localtime.json").read_text())
    assert code == (0 if summary["pass"] else 1)
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(base(t_grid=[0.2, 0.1])))
    assert main(["validate", str(bad)]) == 2
    bad.write_text("{not json")
    assert main(["run", str(bad)]) == 2


def test_threads_do_not_change_output(tmp_path, monkeypatch):
    cfg = ExperimentConfig.from_dict(base(output=str(tmp_path / "one"),
                                          sim={"dt": 1e-3, "n_paths": 5000, "seed": 3,
                                               "block_size": 1024}))
    run(cfg)
    monkeypatch.setenv("NFL_THREADS", "4")
    from dataclasses import replace
    run(replace(cfg, output=str(tmp_path / "four")))
    assert (tmp_path / "one" / "localtime.csv").read_bytes() == \
        (tmp_path / "four" / "localtime.csv").read_bytes()
