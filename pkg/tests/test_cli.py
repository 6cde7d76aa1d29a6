"""Command-line driver: subcommands, exit codes, output files, and
seeded determinism."""

import csv

import numpy as np
import pytest

from pcpfv import build_triangular, save_mesh
from pcpfv.cli import main


CONST_CFG = """
[eos]
kind = "ideal"
gamma = 1.6666666666666667

[mesh]
kind = "cartesian"
nx = 4
ny = 4

[scheme]
order = 1

[run]
t_end = 0.05
max_steps = 5
output_prefix = "{prefix}"
dump_interval = 0

[initial]
preset = "constant"
"""


def _write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def _read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_run_constant_preset(tmp_path, capsys, monkeypatch):
    monkeypatch.chdir(tmp_path)
    cfg = _write(tmp_path, "run.toml",
                 CONST_CFG.format(prefix=tmp_path / "out"))
    assert main(["run", cfg]) == 0
    rows = _read_csv(tmp_path / "out_diag.csv")
    assert list(rows[0].keys()) == [
        "n", "t", "dt", "min_rho", "min_p", "max_W", "max_abs_div",
        "max_abs_div_out", "mass_total", "energy_total"]
    assert len(rows) >= 2
    mass = [float(r["mass_total"]) for r in rows]
    energy = [float(r["energy_total"]) for r in rows]
    assert np.allclose(mass, mass[0], rtol=1e-12)
    assert np.allclose(energy, energy[0], rtol=1e-12)
    # a 17-significant-digit value appears verbatim
    assert all(float(r["min_rho"]) > 0 for r in rows)
    dumps = list(tmp_path.glob("out_dump_*.csv"))
    assert dumps
    drows = _read_csv(dumps[0])
    assert len(drows) == 16
    assert {"cell_id", "rho", "p", "D", "E"} <= set(drows[0].keys())


def test_run_high_order_smooth(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    cfg = _write(tmp_path, "run.toml", """
[mesh]
nx = 6
ny = 6

[scheme]
order = 2
rk = 3

[run]
t_end = 0.02
max_steps = 3
output_prefix = "hi"

[initial]
preset = "smooth-vortex-like"
""")
    assert main(["run", cfg]) == 0
    rows = _read_csv(tmp_path / "hi_diag.csv")
    assert float(rows[-1]["min_p"]) > 0
    assert float(rows[-1]["t"]) > 0


def test_run_missing_config_exits_1(tmp_path, capsys):
    assert main(["run", str(tmp_path / "nope.toml")]) == 1
    err = capsys.readouterr().err
    assert "nope.toml" in err


def test_run_missing_mesh_file_exits_1(tmp_path, capsys):
    cfg = _write(tmp_path, "run.toml", """
[mesh]
kind = "file"
path = "/does/not/exist.mesh"
""")
    assert main(["run", cfg]) == 1
    assert "/does/not/exist.mesh" in capsys.readouterr().err


def test_run_bad_sigma_exits_1(tmp_path):
    cfg = _write(tmp_path, "run.toml",
                 CONST_CFG.format(prefix=tmp_path / "x"))
    assert main(["run", cfg, "--set", "cfl.sigma=1.5"]) == 1


def test_set_override_changes_behavior(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    cfg = _write(tmp_path, "run.toml",
                 CONST_CFG.format(prefix=tmp_path / "ov"))
    assert main(["run", cfg, "--set", "run.max_steps=2",
                 "--set", "run.t_end=10.0"]) == 0
    rows = _read_csv(tmp_path / "ov_diag.csv")
    assert int(rows[-1]["n"]) == 2


def test_lab_counterexample(tmp_path, capsys):
    out = str(tmp_path / "ce.csv")
    # exit code 2: the check passes by exhibiting an inadmissible update
    code = main(["lab", "counterexample", "--theta", "0.25",
                 "--output", out])
    assert code == 0
    rows = _read_csv(out)
    assert len(rows) == 1
    assert float(rows[0]["qtilde"]) < 0.0
    assert rows[0]["inadmissible"] == "True"


def test_lab_counterexample_sweep(tmp_path):
    out = str(tmp_path / "sweep.csv")
    assert main(["lab", "counterexample", "--sweep", "--output", out]) == 0
    rows = _read_csv(out)
    assert len(rows) == 9
    assert all(float(r["qtilde"]) < 0 for r in rows)


def test_lab_divergence(tmp_path):
    out = str(tmp_path / "div.csv")
    assert main(["lab", "divergence", "--steps", "5", "--seed", "1",
                 "--output", out]) == 0
    rows = _read_csv(out)
    assert len(rows) == 6
    assert all(float(r["max_abs_div"]) <= 1e-11 for r in rows)


def test_lab_seed_env_determinism(tmp_path, monkeypatch):
    monkeypatch.setenv("PCP_SEED", "31")
    out1 = str(tmp_path / "a.csv")
    out2 = str(tmp_path / "b.csv")
    args = ["lab", "splitting", "--trials", "20", "--output"]
    assert main(args + [out1]) == 0
    assert main(args + [out2]) == 0
    assert (tmp_path / "a.csv").read_text() == (tmp_path / "b.csv").read_text()


def test_validate_eos_ideal(tmp_path, capsys):
    cfg = _write(tmp_path, "eos.toml", """
[eos]
kind = "ideal"
gamma = 2.0

[validation]
samples = 500
""")
    assert main(["validate-eos", cfg]) == 0
    assert "500 samples" in capsys.readouterr().out


def test_validate_eos_tm(tmp_path):
    cfg = _write(tmp_path, "eos.toml", """
[eos]
kind = "tm"

[validation]
samples = 300
""")
    assert main(["validate-eos", cfg]) == 0


def test_mesh_info(tmp_path, capsys):
    mesh = build_triangular(3, 3)
    path = tmp_path / "tri.mesh"
    save_mesh(mesh, path)
    assert main(["mesh-info", str(path)]) == 0
    out = capsys.readouterr().out
    assert "cells: 18" in out
    assert "total measure: 1" in out


def test_mesh_info_missing_file(tmp_path, capsys):
    assert main(["mesh-info", str(tmp_path / "missing.mesh")]) == 1
    assert "missing.mesh" in capsys.readouterr().err


def test_run_determinism_random_preset(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.setenv("PCP_SEED", "9")
    base = """
[mesh]
nx = 6
ny = 6

[run]
t_end = 0.02
max_steps = 3
output_prefix = "{prefix}"

[initial]
preset = "random-admissible-ddf"
"""
    c1 = _write(tmp_path, "r1.toml", base.format(prefix=tmp_path / "d1"))
    c2 = _write(tmp_path, "r2.toml", base.format(prefix=tmp_path / "d2"))
    assert main(["run", c1]) == 0
    assert main(["run", c2]) == 0
    assert (tmp_path / "d1_diag.csv").read_text() \
        == (tmp_path / "d2_diag.csv").read_text()
