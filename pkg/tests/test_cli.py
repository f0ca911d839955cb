import json
import os
import subprocess
import sys

import numpy as np
import pytest

from sparsemd import io as sio
from sparsemd.cli import EXIT_INPUT, EXIT_NUMERIC, EXIT_OK, main, make_parser


def run(*args):
    return main([str(a) for a in args])


def test_help_lists_units(capsys):
    with pytest.raises(SystemExit):
        make_parser().parse_args(["pipeline", "--help"])
    out = capsys.readouterr().out
    for needle in ("[s]", "[Hz]", "[slots]", "[packets/s]"):
        assert needle in out


def test_synth_is_deterministic(tmp_path):
    for d in ("a", "b"):
        assert run("synth", "--out", tmp_path / d, "--n_columns", 10, "--sampling", "poisson", "--rate", 800,
                   "--seed", 9) == EXIT_OK
    assert (tmp_path / "a/cir.csv").read_bytes() == (tmp_path / "b/cir.csv").read_bytes()
    man = json.loads((tmp_path / "a/manifest.json").read_text())
    assert man["seed"] == 9 and man["config"]["rate"] == 800.0
    assert set(man["versions"]) >= {"python", "numpy", "numba", "sparsemd", "backend"}


def test_static_synth_constant_phase(tmp_path):
    assert run("synth", "--out", tmp_path, "--preset", "static", "--noise_std", 0, "--n_columns", 2) == EXIT_OK
    s = sio.read_cir(tmp_path / "cir.csv")
    ell, b = np.unravel_index(np.argmax(np.abs(s.gains[0])), s.gains.shape[1:])
    assert np.allclose(s.gains[:, ell, b], s.gains[0, ell, b], rtol=0, atol=0)


def test_synth_resample_recover_chain(tmp_path):
    assert run("synth", "--out", tmp_path, "--n_columns", 12, "--output", tmp_path / "s.bin") == EXIT_OK
    assert run("resample", "--out", tmp_path, "--stream", tmp_path / "s.bin", "--n_columns", 12) == EXIT_OK
    g = sio.read_grid_csv(tmp_path / "grid.csv")
    assert g.mask.all()
    assert run("recover", "--out", tmp_path / "r", "--stream", tmp_path / "s.bin", "--n_columns", 12) == EXIT_OK
    vel, cols = sio.read_spectrogram_csv(tmp_path / "r/sparse.csv")
    assert cols.shape == (12, 64)


def test_pipeline_outputs_and_config_file(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\nn_columns = 20\nsampling = uniform\nper_window = 16  # samples\nseed=2\n")
    assert run("pipeline", "--config", cfg, "--out", tmp_path / "o", "--W", 64) == EXIT_OK
    files = {p.name for p in (tmp_path / "o").iterdir()}
    assert files >= {"sparse.csv", "sparse.pgm", "stft.csv", "stft.pgm", "truth.csv", "truth.pgm",
                     "metrics.json", "manifest.json"}
    metrics = json.loads((tmp_path / "o/metrics.json").read_text())
    assert metrics["rmse_sparse"] < metrics["rmse_stft"]
    man = json.loads((tmp_path / "o/manifest.json").read_text())
    assert man["config"]["per_window"] == 16 and man["config"]["sampling"] == "uniform"


def test_flags_override_config(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("n_columns = 20\nseed = 1\n")
    assert run("pipeline", "--config", cfg, "--seed", 5, "--out", tmp_path) == EXIT_OK
    assert json.loads((tmp_path / "manifest.json").read_text())["seed"] == 5


def test_empty_windows_exit_nonzero(tmp_path, capsys):
    trace = tmp_path / "t.csv"
    trace.write_text("0.0,1500\n0.00027,1500\n")
    args = ["pipeline", "--out", tmp_path, "--sampling", "trace", "--trace", trace, "--n_columns", 10]
    assert run(*args) == EXIT_NUMERIC
    assert "no CIR samples" in capsys.readouterr().err
    assert run(*args, "--allow-gaps") == EXIT_OK
    assert run(*args, "--inject", "true") == EXIT_OK


@pytest.mark.parametrize("args", [
    ["pipeline", "--W", "33"],
    ["pipeline", "--config", "missing.cfg"],
    ["recover", "--stream", "missing.csv"],
    ["recover"],
    ["pipeline", "--inject", "maybe"],
    ["pipeline", "--n_columns", "ten"],
])
def test_input_errors_exit_2(tmp_path, args):
    assert run(*args, "--out", tmp_path) == EXIT_INPUT


def test_unknown_config_key(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("window = 64\n")
    assert run("pipeline", "--config", cfg, "--out", tmp_path) == EXIT_INPUT


def test_inject_sim_reports(tmp_path):
    assert run("inject-sim", "--out", tmp_path, "--rate", 90, "--duration", 10) == EXIT_OK
    rep = json.loads((tmp_path / "overhead.json").read_text())
    rows = rep["rows"]
    assert [r["M_s"] for r in rows] == [4, 8, 16, 24, 32, 64]
    assert all(b["OH"] >= a["OH"] for a, b in zip(rows, rows[1:]))
    header = (tmp_path / "overhead.csv").read_text().splitlines()[0].split(",")
    assert header == ["M_s", "n_c", "n_inj", "units_per_window_min", "units_per_window_mean", "OH"]


def test_inject_sim_with_trace_file(tmp_path):
    trace = tmp_path / "t.csv"
    trace.write_text("".join(f"{k * 0.27e-3!r},1500\n" for k in range(500)))
    assert run("inject-sim", "--out", tmp_path, "--trace", trace) == EXIT_OK
    rows = json.loads((tmp_path / "overhead.json").read_text())["rows"]
    assert all(r["n_inj"] == 0 for r in rows)


def test_export_conversions(tmp_path):
    assert run("pipeline", "--out", tmp_path, "--n_columns", 5) == EXIT_OK
    assert run("export", tmp_path / "sparse.csv", tmp_path / "x.pgm") == EXIT_OK
    assert (tmp_path / "x.pgm").read_text() == (tmp_path / "sparse.pgm").read_text()
    assert run("synth", "--out", tmp_path, "--n_columns", 3) == EXIT_OK
    assert run("export", tmp_path / "cir.csv", tmp_path / "cir.bin") == EXIT_OK
    assert run("export", tmp_path / "cir.bin", tmp_path / "back.csv") == EXIT_OK
    assert (tmp_path / "back.csv").read_bytes() == (tmp_path / "cir.csv").read_bytes()
    assert run("export", tmp_path / "nope.csv", tmp_path / "y.bin") == EXIT_INPUT


def test_module_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "sparsemd", "inject-sim", "--out", str(tmp_path), "--duration", "2"],
                         capture_output=True, text=True)
    assert out.returncode == 0 and "M_s=  8" in out.stdout
