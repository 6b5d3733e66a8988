import json
import math

import numpy as np
import pytest

from lassodist import cli, figures, harness
from conftest import fig1_config, fig2_config


@pytest.fixture()
def config_path(tmp_path):
    cfg = fig1_config(L=60).resolved()
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return path


def test_simulate_writes_everything(tmp_path, config_path):
    out = tmp_path / "out"
    rc = cli.main(["simulate", "--config", str(config_path), "--out", str(out),
                   "--threads", "1", "--emit-samples"])
    assert rc == 0
    for name in ["report.json", "cf_grid.csv", "run_meta.json", "cf_gaps.png"]:
        assert (out / name).exists()
    for k in range(1, 5):
        assert (out / f"hist_{k}.csv").exists()
        assert (out / f"hist_{k}.png").exists()
        assert (out / f"samples_{k}.csv").exists()
    report = json.loads((out / "report.json").read_text())
    assert report["config"]["L"] == 60


def test_simulate_deterministic_across_runs(tmp_path, config_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert cli.main(["simulate", "--config", str(config_path), "--out", str(out1),
                     "--threads", "1", "--no-figures"]) == 0
    assert cli.main(["simulate", "--config", str(config_path), "--out", str(out2),
                     "--threads", "2", "--no-figures"]) == 0
    assert (out1 / "report.json").read_bytes() == (out2 / "report.json").read_bytes()
    assert (out1 / "cf_grid.csv").read_bytes() == (out2 / "cf_grid.csv").read_bytes()


def test_simulate_overrides_echoed(tmp_path, config_path):
    out = tmp_path / "out"
    rc = cli.main(["simulate", "--config", str(config_path), "--out", str(out),
                   "--threads", "1", "--no-figures", "--L", "25", "--seed", "9"])
    assert rc == 0
    report = json.loads((out / "report.json").read_text())
    assert report["config"]["L"] == 25
    assert report["config"]["seed"] == 9


def test_simulate_tiny_run_flags_ks(tmp_path, config_path):
    out = tmp_path / "out"
    rc = cli.main(["simulate", "--config", str(config_path), "--out", str(out),
                   "--threads", "1", "--no-figures", "--L", "10"])
    assert rc == 0
    report = json.loads((out / "report.json").read_text())
    assert all(c["ks_insufficient"] for c in report["components"])


def test_simulate_config_error_exit_2(tmp_path):
    missing = tmp_path / "nope.json"
    assert cli.main(["simulate", "--config", str(missing), "--out", str(tmp_path)]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"model_kind": "orthogonal"}))
    assert cli.main(["simulate", "--config", str(bad), "--out", str(tmp_path)]) == 2


def test_simulate_exclusion_exit_3(tmp_path):
    cfg = fig2_config(L=30, solver_max_iter=1).resolved()
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    rc = cli.main(["simulate", "--config", str(path), "--out", str(tmp_path / "out"),
                   "--threads", "1"])
    assert rc == 3


def test_simulate_strict_ok(tmp_path, config_path):
    rc = cli.main(["simulate", "--config", str(config_path), "--out",
                   str(tmp_path / "out"), "--threads", "1", "--no-figures", "--strict"])
    assert rc == 0


def test_cf_check_writes_grid_only(tmp_path, config_path):
    out = tmp_path / "out"
    rc = cli.main(["cf-check", "--config", str(config_path), "--out", str(out),
                   "--threads", "1"])
    assert rc == 0
    assert (out / "cf_grid.csv").exists()
    assert (out / "cf_gaps.png").exists()
    assert not (out / "hist_1.csv").exists()


def test_rip_hadamard_table(capsys):
    assert cli.main(["rip", "--hadamard", "4", "--K", "4"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "K,delta_K"
    assert len(lines) == 5
    for line in lines[1:]:
        assert float(line.split(",")[1]) <= 1e-10


def test_rip_bernoulli_matches_library(capsys):
    from lassodist.linmodel import build_bernoulli_model, rip_constant
    assert cli.main(["rip", "--bernoulli", "4", "8", "--seed", "7", "--K", "2"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    model = build_bernoulli_model(4, 8, np.zeros(8), 1.0, 1.0, seed=7)
    assert float(lines[2].split(",")[1]) == rip_constant(model.A, 2)


def test_rip_bad_order_exit_2(capsys):
    assert cli.main(["rip", "--hadamard", "3"]) == 2


def test_pdf_orthogonal_csv(tmp_path, capsys):
    out = tmp_path / "pdf.csv"
    rc = cli.main(["pdf", "--law", "orthogonal", "--location", "4", "--sigma", "1",
                   "--tau", "1", "--range", "-2", "8", "--points", "2001",
                   "--out", str(out)])
    assert rc == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("#") and "point_mass_zero" in lines[0]
    atom = float(lines[0].split("point_mass_zero=")[1])
    rows = np.array([[float(x) for x in line.split(",")] for line in lines[2:]])
    v, dens = rows[:, 0], rows[:, 1]
    # peak at v = location - tau
    peak_idx = int(np.argmax(dens))
    assert v[peak_idx] == pytest.approx(3.0, abs=0.01)
    assert dens[peak_idx] == pytest.approx(1.0 / math.sqrt(2 * math.pi), abs=1e-4)
    # trapezoid normalization to 1 - atom over the emitted window
    assert np.trapezoid(dens, v) == pytest.approx(1.0 - atom, abs=1e-4)


def test_pdf_transformed_unit_wkk_equals_orthogonal(capsys):
    args = ["--location", "2", "--sigma", "1.5", "--tau", "0.5",
            "--range", "-4", "6", "--points", "101"]
    assert cli.main(["pdf", "--law", "orthogonal", *args]) == 0
    ortho = capsys.readouterr().out
    assert cli.main(["pdf", "--law", "transformed", "--w-kk", "1.0", *args]) == 0
    trans = capsys.readouterr().out
    assert ortho.splitlines()[1:] == trans.splitlines()[1:]


def test_pdf_invalid_params_exit_2(capsys):
    assert cli.main(["pdf", "--law", "transformed", "--location", "1", "--sigma", "1",
                     "--tau", "1", "--w-kk", "-2", "--range", "-1", "1"]) == 2
    assert cli.main(["pdf", "--law", "ml", "--location", "0", "--sigma", "1",
                     "--range", "3", "-3"]) == 2


def test_figures_render_from_report(tmp_path):
    rep = harness.run_experiment(fig1_config(L=80))
    written = figures.render_report_figures(rep, tmp_path)
    assert len(written) == 5
    for path in written:
        assert path.exists() and path.stat().st_size > 1000
