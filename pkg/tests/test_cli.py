from __future__ import annotations

import csv
import json
import math
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from klee.cli import CSV_COLUMNS, main, read_table
from klee.config import ConfigError, RunConfig, load_config, parse_config
from klee.core import kappa


def test_default_config():
    cfg = RunConfig()
    assert cfg.dims == (3, 4, 5)
    assert cfg.epsilons == (0.02, 0.05, 0.1)
    assert cfg.degree == 64
    assert len(cfg.cells) == 9


def test_config_round_trip(tmp_path):
    cfg = RunConfig(dims=(3, 6), epsilons=(0.1, 1 / 3), degree=32, mc_samples=5000, seed=9, tol_m=1e-7,
                    refine=True, out_dir="x y", formats=("json",), jobs=2)
    path = tmp_path / "run.cfg"
    cfg.save(path)
    assert load_config(path) == cfg


@settings(max_examples=30, deadline=None)
@given(
    dims=st.lists(st.integers(3, 9), min_size=1, max_size=4),
    eps=st.lists(st.floats(0.0, 0.999, allow_nan=False), min_size=1, max_size=4),
    degree=st.integers(1, 100).map(lambda k: 2 * k),
    seed=st.integers(0, 2**31),
    tol=st.one_of(st.none(), st.floats(1e-14, 1.0)),
)
def test_config_text_is_lossless(dims, eps, degree, seed, tol):
    cfg = RunConfig(dims=tuple(dims), epsilons=tuple(eps), degree=degree, seed=seed, tol_m=tol)
    assert parse_config(cfg.to_text()) == cfg


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("degree = 7", "degree"),
        ("dims = 2", "dims"),
        ("epsilons = 1.0", "epsilons"),
        ("nodes = 8", "nodes"),
        ("formats = png", "formats"),
        ("color = red", "unknown key"),
        ("degree 64", "expected"),
        ("degree = 64\ndegree = 32", "duplicate"),
        ("seed = abc", "seed"),
        ("tol_solver = 1e-6", "tol_solver"),
    ],
)
def test_config_errors_name_the_field(text, fragment):
    with pytest.raises(ConfigError) as err:
        parse_config(text, "run.cfg")
    assert fragment in str(err.value)


def test_config_error_has_line_number():
    with pytest.raises(ConfigError, match=r"run.cfg:3"):
        parse_config("# comment\nseed = 1\ncolor = red\n", "run.cfg")


def test_config_comments_and_blanks():
    cfg = parse_config("# header\n\n dims = 3, 4  # inline\nepsilons=0.05\n")
    assert cfg.dims == (3, 4) and cfg.epsilons == (0.05,)


def run_cli(*args):
    return main(list(args))


def test_construct_writes_tables_and_summary(tmp_path, capsys):
    out = tmp_path / "o"
    assert run_cli("construct", "--dim", "3", "--eps", "0.1", "--eps", "0", "--degree", "16",
                   "--out", str(out), "--format", "csv") == 0
    files = sorted(p.name for p in out.iterdir())
    assert files == ["construct_summary.csv", "profile_n3_eps0.0.csv", "profile_n3_eps0.1.csv"]
    t = read_table(out / "profile_n3_eps0.1.csv")
    assert tuple(t) == CSV_COLUMNS
    mid = int(np.argmin(np.abs(t["phi"] - math.pi / 2)))
    assert t["phi"][mid] == pytest.approx(math.pi / 2, abs=1e-15)
    assert t["rho_K"][mid] == 1.0
    assert abs(t["t_star"][mid]) < 1e-12
    ball = read_table(out / "profile_n3_eps0.0.csv")
    assert np.max(np.abs(ball["m_K"] - kappa(2))) < 1e-13


def test_construct_default_matrix_counts(tmp_path, monkeypatch):
    # nine tables and one summary for the default 3 x 3 matrix (tables stubbed for speed)
    import klee.cli as cli

    def fake_table(eps, n, N, m):
        phi = np.linspace(0.1, 3.0, 5)
        return {c: phi.copy() for c in CSV_COLUMNS}

    monkeypatch.setattr(cli, "profile_table", fake_table)
    out = tmp_path / "d"
    assert run_cli("construct", "--out", str(out), "--format", "csv") == 0
    names = [p.name for p in out.iterdir()]
    assert len([n for n in names if n.startswith("profile_")]) == 9
    assert "construct_summary.csv" in names


def test_csv_is_round_trippable(tmp_path):
    out = tmp_path / "c"
    run_cli("construct", "--dim", "4", "--eps", "0.05", "--degree", "8", "--out", str(out), "--format", "csv")
    with open(out / "profile_n4_eps0.05.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == list(CSV_COLUMNS)
    for v in rows[1]:
        assert float(repr(float(v))) == float(v)
        assert float(f"{float(v):.17g}") == float(v)


def test_outputs_are_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        run_cli("construct", "--dim", "3", "--eps", "0.05", "--degree", "8", "--out", str(d))
        run_cli("verify", "--dim", "3", "--eps", "0.05", "--degree", "8", "--out", str(d))
    names = sorted(p.name for p in a.iterdir())
    assert names == sorted(p.name for p in b.iterdir())
    for n in names:
        assert (a / n).read_bytes() == (b / n).read_bytes(), n


def test_verify_failure_exit_status(tmp_path):
    out = tmp_path / "v"
    status = run_cli("verify", "--dim", "3", "--eps", "0.95", "--degree", "8", "--out", str(out))
    assert status == 1
    rep = json.loads((out / "report_n3_eps0.95.json").read_text())
    assert "curvature_K" in rep["failed_checks"]
    assert rep["schema_version"] == 1
    assert rep["passed"] is False


def test_verify_low_degree_warning(tmp_path):
    out = tmp_path / "w"
    run_cli("verify", "--dim", "3", "--eps", "0.1", "--degree", "8", "--out", str(out), "--format", "json")
    rep = json.loads((out / "report_n3_eps0.1.json").read_text())
    assert any("under-resolved" in note for note in rep["notes"])


def test_plot_figures(tmp_path):
    out = tmp_path / "p"
    run_cli("construct", "--dim", "3", "--eps", "0.1", "--eps", "0", "--degree", "16", "--out", str(out),
            "--format", "csv")
    assert run_cli("plot", "--dim", "3", "--eps", "0.1", "--eps", "0", "--degree", "16", "--out", str(out)) == 0
    for kind in ("boundary", "sections", "maximizer"):
        svg = (out / f"{kind}_n3_eps0.1.svg").read_text()
        assert svg.startswith("<svg") and "n = 3, eps = 0.1" in svg
    # the maximizer curve is antisymmetric about pi/2
    t = read_table(out / "profile_n3_eps0.1.csv")
    assert np.max(np.abs(t["t_star"] + t["t_star"][::-1])) < 1e-15
    # eps = 0: both boundary curves are the unit circle
    ball = read_table(out / "profile_n3_eps0.0.csv")
    assert np.max(np.abs(ball["rho_K"] - 1)) == 0 and np.max(np.abs(ball["rho_L"] - 1)) < 1e-12


def test_plot_gap_matches_report(tmp_path):
    out = tmp_path / "g"
    run_cli("construct", "--dim", "3", "--eps", "0.05", "--degree", "16", "--out", str(out), "--format", "csv")
    run_cli("verify", "--dim", "3", "--eps", "0.05", "--degree", "16", "--out", str(out), "--format", "json")
    t = read_table(out / "profile_n3_eps0.05.csv")
    rep = json.loads((out / "report_n3_eps0.05.json").read_text())
    gap = float(np.max(np.abs(t["m_K"] - t["m_L"])))
    # the report takes the sup over the plotted grid plus extra check angles
    assert gap <= rep["m_mismatch"] <= rep["tolerances"]["m_mismatch"]


def test_sweep(tmp_path, capsys):
    out = tmp_path / "s"
    assert run_cli("sweep", "--out", str(out)) == 0
    assert "0.918558653" in capsys.readouterr().out
    data = json.loads((out / "sweep.json").read_text())
    assert abs(data["critical_epsilon"] - data["exact"]) < 1e-9


def test_selftest_passes(capsys):
    assert run_cli("selftest") == 0
    assert "FAIL" not in capsys.readouterr().out


def test_bad_config_exit_code(tmp_path, capsys):
    p = tmp_path / "bad.cfg"
    p.write_text("degree = 9\n")
    assert run_cli("verify", "--config", str(p)) == 2
    assert "degree" in capsys.readouterr().err


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "klee", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    assert "selftest" in res.stdout
