"""Unit tests for ``cavityflux.sweep``."""

import json
from dataclasses import asdict

import numpy as np
import pytest
from numpy.testing import assert_allclose

from cavityflux.sweep import (
    SweepConfig,
    UnknownFigure,
    figure_datasets,
    run_sweep,
)

OMEGA_M = 1.8170


def _config(**kwargs):
    base = dict(v_min=0.05, v_max=1.2, v_count=4,
                delta_min=0.0, delta_max=2.0, delta_count=4,
                omega_threshold=OMEGA_M)
    base.update(kwargs)
    return SweepConfig(**base)


def test_config_validation():
    with pytest.raises(ValueError):
        _config(v_count=0)
    with pytest.raises(ValueError):
        _config(delta_min=2.0, delta_max=0.0)
    with pytest.raises(ValueError):
        _config(n_traj=100)            # sampled flux needs a master seed
    _config(n_traj=100, master_seed=1)


def test_config_grids():
    cfg = _config()
    assert_allclose(cfg.v_values(), np.linspace(0.05, 1.2, 4))
    assert_allclose(cfg.delta_values(), np.linspace(0.0, 2.0, 4))


def test_config_from_json(tmp_path):
    path = tmp_path / "sweep.json"
    path.write_text(json.dumps({
        "v_min": 0.1, "v_max": 1.0, "v_count": 3,
        "delta_min": 0.0, "delta_max": 1.0, "delta_count": 2,
        "omega_threshold": 1.8, "n_traj": 50, "master_seed": 7}))
    cfg = SweepConfig.from_json(path)
    assert cfg.v_count == 3
    assert cfg.master_seed == 7
    assert cfg.omega_threshold == 1.8
    assert cfg.t_max == 14.0


def test_single_cell():
    cfg = _config(v_min=2.0, v_max=2.0, v_count=1,
                  delta_min=2.0, delta_max=2.0, delta_count=1)
    region = run_sweep(cfg)
    assert region.all_ok
    cells = list(region.iter_cells())
    assert len(cells) == 1
    cell = cells[0]
    assert cell["n_value"] > 0.0
    assert cell["verdict"] == "NonMarkovianDetected"
    assert cell["omega"] == pytest.approx(np.sqrt(20.0))


def test_ground_truth_flips_at_resonant_threshold():
    # the resonant critical coupling is gamma/4; just above it the first
    # revival arrives near t = 15..19, hence the longer horizon
    cfg = _config(v_min=0.1, v_max=0.3, v_count=3,
                  delta_min=0.0, delta_max=0.0, delta_count=1, t_max=30.0)
    region = run_sweep(cfg)
    verdicts = [c["verdict"] for c in region.iter_cells()]
    assert verdicts[0] == "Markovian"
    assert verdicts[1] == "Markovian"
    assert verdicts[2] == "NonMarkovianUndetectable"


def test_verdict_coherence():
    region = run_sweep(_config())
    assert region.all_ok
    for cell in region.iter_cells():
        assert cell["omega"] == pytest.approx(
            np.hypot(2.0 * cell["v"], cell["delta"]))
        if cell["verdict"] == "NonMarkovianDetected":
            assert cell["n_value"] > 1e-10
        if cell["n_value"] == 0.0:
            assert cell["verdict"] == "Markovian"


def test_auto_threshold():
    cfg = SweepConfig(v_min=0.05, v_max=1.2, v_count=4,
                      delta_min=0.0, delta_max=1.0, delta_count=3)
    region = run_sweep(cfg)
    # largest coherent frequency over Markovian grid points of this grid
    assert region.omega_threshold == pytest.approx(1.3233, abs=2e-3)
    assert region.manifest()["omega_threshold"] == region.omega_threshold


def test_error_isolation():
    cfg = _config(v_min=-0.1, v_max=0.2, v_count=2,
                  delta_min=0.0, delta_max=0.0, delta_count=1)
    region = run_sweep(cfg)
    cells = list(region.iter_cells())
    assert cells[0]["verdict"] == "Error(ValueError)"
    assert cells[0]["error"]
    assert np.isnan(cells[0]["n_value"])
    assert cells[1]["verdict"] == "Markovian"   # the sweep carries on
    assert not region.all_ok
    assert len(region.errors) == 1


def test_worker_count_does_not_change_results(tmp_path, monkeypatch):
    monkeypatch.delenv("NM_WORKERS", raising=False)
    cfg = _config(v_count=2, delta_count=3, n_traj=100, master_seed=11)
    serial = run_sweep(cfg, out_dir=tmp_path / "serial")
    parallel = run_sweep(_config(v_count=2, delta_count=3, n_traj=100,
                                 master_seed=11, workers=2),
                         out_dir=tmp_path / "parallel")
    assert serial.n_workers == 1
    assert parallel.n_workers == 2
    assert serial.cells == parallel.cells
    for name in ("manifest.json", "cells.csv"):
        a = (tmp_path / "serial" / name).read_bytes()
        b = (tmp_path / "parallel" / name).read_bytes()
        assert a == b


def test_workers_env_override(monkeypatch):
    cfg = _config(v_count=1, delta_count=2, workers=1)
    monkeypatch.setenv("NM_WORKERS", "2")
    region = run_sweep(cfg)
    assert region.n_workers == 2
    monkeypatch.setenv("NM_WORKERS", "")
    region = run_sweep(cfg)
    assert region.n_workers == 1


def test_manifest_excludes_execution_details():
    cfg = _config(v_count=1, delta_count=1, workers=3)
    region = run_sweep(cfg)
    manifest = region.manifest()
    expected = asdict(cfg)
    expected.pop("workers")
    assert manifest["config"] == expected
    assert "workers" not in manifest["config"]
    assert set(manifest) == {"config", "omega_threshold",
                             "engine_version", "numpy_version"}


def test_cells_csv_format(tmp_path):
    cfg = _config(v_count=2, delta_count=2)
    region = run_sweep(cfg, out_dir=tmp_path)
    lines = (tmp_path / "cells.csv").read_text().splitlines()
    assert lines[0] == "delta,v,n_value,omega,omega_peak,prominence,verdict"
    assert len(lines) == 5
    # verdict strings stay single-column: commas are replaced
    for line in lines[1:]:
        assert len(line.split(",")) == 7
    data = np.genfromtxt(tmp_path / "cells.csv", delimiter=",", names=True,
                         dtype=None, encoding="utf-8")
    assert data["verdict"].dtype.kind == "U"
    assert_allclose(sorted(set(data["delta"])), [0.0, 2.0])


def test_unknown_figure(tmp_path):
    for bad in (0, 9, -1):
        with pytest.raises(UnknownFigure):
            figure_datasets(bad, tmp_path)


def test_figure1_datasets(tmp_path):
    paths = figure_datasets(1, tmp_path, dt=1e-2)
    names = {p.name for p in paths}
    assert len([n for n in names if n.startswith("population_")]) == 6
    assert len([n for n in names if n.startswith("flux_")]) == 6
    assert "plot_figures.py" in names
    for p in paths:
        assert p.exists()
    resonant = np.genfromtxt(tmp_path / "flux_v1_d0.csv", delimiter=",",
                             names=True)
    detuned = np.genfromtxt(tmp_path / "flux_v1_d1.csv", delimiter=",",
                            names=True)
    # detuning weakens the emission
    assert resonant["flux"].max() > detuned["flux"].max()
    pop = np.genfromtxt(tmp_path / "population_v0.2_d0.csv", delimiter=",",
                        names=True)
    assert pop["population"][0] == 1.0
    assert np.all(np.diff(pop["population"]) <= 1e-12)   # below threshold


def test_figure2_datasets(tmp_path):
    paths = figure_datasets(2, tmp_path, sign_points=11, sign_dt=0.1)
    names = {p.name for p in paths}
    assert {"sign_map_delta.csv", "sign_map_v.csv",
            "plot_figures.py"} <= names
    frame = np.genfromtxt(tmp_path / "sign_map_delta.csv", delimiter=",",
                          names=True)
    assert frame.dtype.names == ("t", "delta", "c_pos", "b_pos")
    assert set(np.unique(frame["c_pos"])) <= {0.0, 1.0}


def test_figure3_datasets(tmp_path):
    paths = figure_datasets(3, tmp_path, boundary_points=15, map_points=10)
    names = {p.name for p in paths}
    assert {"boundary.csv", "omega_map.csv", "threshold.json"} <= names
    thr = json.loads((tmp_path / "threshold.json").read_text())
    assert set(thr) == {"omega_m", "v_star", "delta_star"}
    assert 1.4 < thr["omega_m"] < 2.2
    omega_map = np.genfromtxt(tmp_path / "omega_map.csv", delimiter=",",
                              names=True)
    assert omega_map.size == 150
    assert_allclose(omega_map["omega"],
                    np.hypot(2.0 * omega_map["v"], omega_map["delta"]))


def test_figure4_datasets(tmp_path):
    paths = figure_datasets(4, tmp_path)
    names = {p.name for p in paths}
    assert {"spectrum_d2_v2.csv", "spectrum_d0_v0.9.csv",
            "spectrum_d1_v0.7.csv", "spectrum_d1.7_v0.3.csv",
            "peaks.json"} <= names
    peaks = json.loads((tmp_path / "peaks.json").read_text())
    assert peaks["d2_v2"]["omega_peak"] == pytest.approx(4.3677, abs=1e-3)
    # the strong point's line sits beyond the Markovian threshold: the
    # spectrum has a strict local maximum above OMEGA_M
    spec = np.genfromtxt(tmp_path / "spectrum_d2_v2.csv", delimiter=",",
                         names=True)
    p = spec["power"]
    local_max = (p[1:-1] > p[:-2]) & (p[1:-1] > p[2:])
    assert np.any(local_max & (spec["omega"][1:-1] > OMEGA_M))


def test_figure_rerun_is_byte_identical(tmp_path):
    first = tmp_path / "a"
    second = tmp_path / "b"
    figure_datasets(4, first)
    figure_datasets(4, second)
    for path in sorted(first.iterdir()):
        assert path.read_bytes() == (second / path.name).read_bytes()
