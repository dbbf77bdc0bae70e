import csv
import json

import numpy as np
import pytest

from znqed import persist
from znqed.cli import analyze, main, plot
from znqed.config import PRESETS, RunConfig, parse_text
from znqed.errors import ConfigurationError


def run(*argv):
    return main([str(a) for a in argv])


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


def test_config_errors_carry_line_numbers(tmp_path):
    cfg = write(tmp_path / "bad.cfg", "model.N = 4\n\nmodel.m = heavy\n")
    with pytest.raises(ConfigurationError, match=r"bad.cfg:3"):
        RunConfig.load(cfg)
    with pytest.raises(ConfigurationError, match=r":2: unknown key 'model.mass'"):
        parse_text("model.N = 4\nmodel.mass = 1\n")
    with pytest.raises(ConfigurationError, match=r":1: expected"):
        parse_text("just words\n")


def test_sections_and_comments():
    vals = parse_text("[model]\nN = 6  # sites\nm = -0.5\n[run]\nt_max = 2\n")
    assert vals == {"model.N": 6, "model.m": -0.5, "run.t_max": 2.0}


def test_every_preset_parses():
    for name in PRESETS:
        cfg = RunConfig.load(preset=name)
        if cfg.is_sweep:
            names, points, specs = cfg.grid()
            assert len(points) == len(specs) > 1
        else:
            cfg.quench_spec()


def test_standard_coupling_default():
    spec = RunConfig.load(preset="fig3").quench_spec()
    assert spec.params.g == pytest.approx((3 / np.pi) ** 0.5)


def test_bad_config_exit_code(tmp_path, capsys):
    cfg = write(tmp_path / "bad.cfg", "model.N = 5\n")
    assert run("quench", "--config", cfg, "--out", tmp_path / "o") == 1
    assert "even" in capsys.readouterr().err
    assert not (tmp_path / "o").exists()
    assert run("quench", "--out", tmp_path / "o") == 1


def test_missing_config_file_is_config_error(tmp_path):
    assert run("quench", "--config", tmp_path / "nope.cfg") == 1


def test_refuses_to_clobber_foreign_directory(tmp_path):
    target = tmp_path / "occupied"
    target.mkdir()
    (target / "notes.txt").write_text("keep me")
    assert run("quench", "--preset", "fig3", "--set", "run.t_max = 0.1", "--out", target) == 3
    assert (target / "notes.txt").read_text() == "keep me"


@pytest.fixture(scope="module")
def fig3_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("runs") / "fig3"
    assert main(["quench", "--preset", "fig3", "--out", str(out), "--svg"]) == 0
    return out


def test_fig3_layout(fig3_dir):
    names = {p.name for p in fig3_dir.iterdir()}
    assert {"manifest.json", "rho.csv", "entropy.csv", "field_profile.csv", "rho.svg"} <= names
    with open(fig3_dir / "field_profile.csv") as fh:
        header = next(csv.reader(fh))
    assert header == ["time", "link=1", "link=2", "link=3"]
    manifest = persist.read_manifest(fig3_dir)
    assert manifest["params"]["N"] == 4 and manifest["integrator"]["dt"] == 0.01
    assert {"code_version", "wall_time_s", "config", "spec"} <= set(manifest)
    t, rho = persist.read_series(fig3_dir, "rho")
    assert 0.4 <= rho.max() <= 0.5


def test_csv_round_trip(fig3_dir):
    from znqed.protocols import run_vacuum_quench

    fresh = run_vacuum_quench(RunConfig.load(preset="fig3").quench_spec())
    back = persist.read_bundle(fig3_dir)
    assert np.abs(back.sample_times - fresh.sample_times).max() < 1e-12
    for k, v in fresh.records.items():
        assert np.abs(back.records[k] - v).max() < 1e-12, k
    # 17 significant digits reproduce doubles exactly
    assert back.same_data(fresh)


def test_manifest_rerun_bit_identical(fig3_dir, tmp_path):
    again = tmp_path / "again"
    assert run("quench", "--config", fig3_dir / "manifest.json", "--out", again) == 0
    for name in ("rho.csv", "entropy.csv", "mean_field.csv", "field_profile.csv", "norm.csv", "energy.csv"):
        assert (again / name).read_bytes() == (fig3_dir / name).read_bytes(), name


def test_rerun_replaces_previous_run(fig3_dir, tmp_path):
    out = tmp_path / "twice"
    for _ in range(2):
        assert run("quench", "--preset", "fig3", "--set", "run.t_max = 0.2", "--out", out) == 0
    assert not list(tmp_path.glob(".twice*"))


def test_output_root_env(tmp_path, monkeypatch):
    monkeypatch.setenv("ZNQED_OUTPUT_ROOT", str(tmp_path / "root"))
    assert run("quench", "--preset", "fig3", "--set", "run.t_max = 0.1") == 0
    assert (tmp_path / "root" / "quench_fig3" / "manifest.json").is_file()


def test_analyze_peaks(fig3_dir):
    report = analyze(fig3_dir, "peaks")
    t, rho = persist.read_series(fig3_dir, "rho")
    first = report["peaks"][0]
    i = int(np.argmax(rho[t < 1.5]))
    assert abs(first["t_peak"] - t[i]) <= 0.05
    assert first["value"] == rho[first["index"]]


def test_analyze_cli_writes_report(fig3_dir, capsys):
    assert run("analyze", fig3_dir, "--task", "period") == 0
    report = json.loads((fig3_dir / "analysis_period.json").read_text())
    assert report["period"] > 0
    assert run("analyze", fig3_dir, "--task", "peaks", "--series", "magnetization") == 1
    assert run("analyze", fig3_dir, "--task", "peaks", "--series", "field_profile") == 1


def test_plot_deterministic(fig3_dir, tmp_path):
    a = plot(fig3_dir, ["rho", "entropy"])
    b = plot(fig3_dir, ["rho", "entropy"])
    assert a == b and a.startswith("<svg")
    heat = plot(fig3_dir, ["field_profile"])
    assert "<rect" in heat
    assert run("plot", fig3_dir, "--series", "rho", "--out", tmp_path / "r1.svg") == 0
    assert run("plot", fig3_dir, "--series", "rho", "--out", tmp_path / "r2.svg") == 0
    assert (tmp_path / "r1.svg").read_bytes() == (tmp_path / "r2.svg").read_bytes()


def test_zero_series_flat_plot():
    from znqed.svg import line_plot

    t = np.linspace(0, 1, 11)
    a = line_plot(t, {"rho": np.zeros(11)})
    assert a == line_plot(t, {"rho": np.zeros(11)})
    pts = a.split('points="')[1].split('"')[0].split()
    assert len({p.split(",")[1] for p in pts}) == 1


def test_empty_sweep_creates_nothing(tmp_path, capsys):
    cfg = write(tmp_path / "s.cfg", "model.N = 4\nsweep.m =\n")
    assert run("sweep", "--config", cfg, "--out", tmp_path / "sw") == 1
    assert not (tmp_path / "sw").exists()
    assert run("sweep", "--preset", "fig3", "--out", tmp_path / "sw") == 1
    assert "empty sweep grid" in capsys.readouterr().err


def test_wrong_command_for_config(tmp_path):
    assert run("quench", "--preset", "fig9a", "--out", tmp_path / "x") == 1
    assert run("string", "--preset", "fig3", "--out", tmp_path / "x") == 1
    assert run("quench", "--preset", "fig6", "--out", tmp_path / "x") == 1


def sweep_cfg(tmp_path):
    return write(tmp_path / "grid.cfg", (
        "model.N = 8\nrun.string = 4\nrun.t_max = 2\nrun.probes = rho\n"
        "sweep.m = 0.1, 3.0\nsweep.g = 0.1, 1.42\n"
    ))


def test_sweep_heatmap_and_workers(tmp_path):
    cfg = sweep_cfg(tmp_path)
    assert run("sweep", "--config", cfg, "--out", tmp_path / "w1") == 0
    assert run("sweep", "--config", cfg, "--out", tmp_path / "w2", "--workers", "2") == 0
    for cell in sorted(p.name for p in (tmp_path / "w1").glob("cell_*")):
        for f in ("rho.csv", "central_field_sum.csv", "subtracted_profile.csv", "vacuum/rho.csv"):
            assert (tmp_path / "w1" / cell / f).read_bytes() == (tmp_path / "w2" / cell / f).read_bytes()
    assert (tmp_path / "w1" / "sweep_index.csv").read_bytes() == (tmp_path / "w2" / "sweep_index.csv").read_bytes()

    manifest = persist.read_manifest(tmp_path / "w1")
    cells = {(c["m"], c["g"]): c["central_field_sum_final"] for c in manifest["cells"]}
    assert cells[(3.0, 1.42)] > cells[(0.1, 0.1)]
    svg_text = plot(tmp_path / "w1", [], metric="central_field_sum_final")
    assert svg_text == plot(tmp_path / "w1", [], metric="central_field_sum_final")
    assert svg_text.count("<rect") > 50


def test_sweep_partial_failure(tmp_path):
    cfg = write(tmp_path / "f.cfg", "model.N = 6\nrun.string = 2\nrun.t_max = 0.2\nsweep.N = 6, 4\n")
    cfg_text = cfg.read_text().replace("run.string = 2", "run.string = 6")
    write(cfg, cfg_text)
    assert run("sweep", "--config", cfg, "--out", tmp_path / "pf") == 2
    manifest = persist.read_manifest(tmp_path / "pf")
    assert [c["status"] for c in manifest["cells"]] == ["ok", "failed"]
    assert (tmp_path / "pf" / "cell_000" / "manifest.json").is_file()
    assert not (tmp_path / "pf" / "cell_001").exists()


def test_extrapolate_from_sweep(tmp_path):
    cfg = write(tmp_path / "fs.cfg", "model.m = 2.0\nrun.t_max = 0.6\nrun.sample_every = 1\n"
                "run.probes = rho\nsweep.N = 4, 6, 8\n")
    assert run("sweep", "--config", cfg, "--out", tmp_path / "fs") == 0
    rep = analyze(tmp_path / "fs", "extrapolate", t0=0.52)
    assert rep["x"] == [4.0, 6.0, 8.0] and len(rep["y"]) == 3
    assert rep["rho_inf"] > max(rep["y"])


@pytest.mark.slow
def test_heavy_string_preset(tmp_path):
    assert run("string", "--preset", "fig9c", "--out", tmp_path / "s") == 0
    t, c = persist.read_series(tmp_path / "s", "central_field_sum")
    assert c[-1] > 0.9 * c[0]
    assert (tmp_path / "s" / "vacuum" / "manifest.json").is_file()


def test_grid_applies_axis_values():
    cfg = RunConfig.load(preset="fig10")
    names, points, specs = cfg.grid()
    assert names == ["m", "g"] and len(specs) == 16
    for (m, g), spec in zip(points, specs):
        assert (spec.params.m, spec.params.g) == (m, g)
    _, points, specs = RunConfig.load(preset="fig13").grid()
    assert [s.params.N for s in specs] == [8, 10, 12, 14, 16]
    _, points, specs = RunConfig.load(preset="fig12").grid()
    assert [s.epsilon for s in specs] == [p[0] for p in points]
