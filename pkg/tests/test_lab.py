"""Verification drivers: the admissibility-loss construction, splitting
trials, divergence tracking, and the refinement-study bound."""

import numpy as np
import pytest

from pcpfv import (CounterexampleConfig, IdealEos, Report,
                   check_divergence_growth, check_generalized_splitting,
                   check_odelta_bound, default_seed, qtilde_limit,
                   run_counterexample)
from pcpfv.errors import DomainError


def test_qtilde_limit_reference():
    # 27 theta^7 (4 theta + 1)^2 (theta - 2) / 64 at theta = 1/4
    expect = 27.0 * 0.25 ** 7 * 2.0 ** 2 * (-1.75) / 64.0
    assert qtilde_limit(0.25) == pytest.approx(expect, rel=0)
    assert expect == pytest.approx(-1.8024e-4, rel=1e-3)
    assert qtilde_limit(0.4) < 0 < -qtilde_limit(0.05)


def test_counterexample_config_validation():
    with pytest.raises(DomainError):
        CounterexampleConfig(theta=0.5)
    with pytest.raises(DomainError):
        CounterexampleConfig(epsilon=0.0)


@pytest.mark.parametrize("theta", [0.05, 0.15, 0.25, 0.35, 0.45])
def test_counterexample_loses_admissibility(theta):
    rep = run_counterexample(CounterexampleConfig(theta=theta), IdealEos())
    assert rep.passed
    assert rep.rows[0]["qtilde"] < 0.0


def test_counterexample_converges_to_limit():
    cfg = CounterexampleConfig(epsilon=1e-8, tau=1e-8, theta=0.25)
    rep = run_counterexample(cfg, IdealEos())
    qt = rep.rows[0]["qtilde"]
    assert qt == pytest.approx(qtilde_limit(0.25), rel=0.01)


def test_generalized_splitting_small_run():
    rep = check_generalized_splitting(n_poly2d=40, n_tet3d=10, n_star=50,
                                      seed=7, rotate_check=True)
    assert rep.passed
    assert all(row["worst_slack"] >= -1e-12 for row in rep.rows)
    dims = {row["dim"] for row in rep.rows}
    assert dims == {2, 3}


def test_divergence_growth_ddf_small():
    rep = check_divergence_growth(nx=8, ny=8, steps=10, ddf=True, seed=3)
    assert rep.passed
    assert all(row["max_abs_div"] <= 1e-11 for row in rep.rows)


def test_divergence_growth_non_ddf_small():
    rep = check_divergence_growth(nx=8, ny=8, steps=15, ddf=False, seed=4)
    assert rep.passed
    vals = [row["max_abs_div"] for row in rep.rows]
    assert vals[0] > 1e-3  # the perturbed data really has divergence
    assert all(b <= a + 1e-12 * max(1.0, vals[0])
               for a, b in zip(vals, vals[1:]))


def test_odelta_bound_small():
    rep = check_odelta_bound(base=8, levels=2, seed=5, n_star=100)
    assert rep.passed
    assert rep.rows[1]["slack_ratio"] >= 1.8
    assert rep.rows[1]["max_abs_div_out"] < rep.rows[0]["max_abs_div_out"]


def test_report_csv_17_digits(tmp_path):
    rep = Report(name="demo", passed=True,
                 rows=[{"a": 1, "x": 0.1}, {"a": 2, "x": 2.0 / 3.0}])
    path = tmp_path / "r.csv"
    rep.to_csv(path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "a,x"
    assert lines[1] == "1,0.10000000000000001"
    assert lines[2] == "2,0.66666666666666663"


def test_default_seed_env(monkeypatch):
    monkeypatch.delenv("PCP_SEED", raising=False)
    assert default_seed(42) == 42
    monkeypatch.setenv("PCP_SEED", "7")
    assert default_seed(42) == 7
