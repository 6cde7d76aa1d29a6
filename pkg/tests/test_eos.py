"""Equation-of-state behavior: forward/inverse maps, derivative chains,
validation sweeps, and table round trips."""

import numpy as np
import pytest

from pcpfv import (DomainError, Eos, IdealEos, TabulatedEos, TaubMathewsEos,
                   load_eos_table, save_eos_table, validate_eos)


def test_ideal_enthalpy_reference_value():
    eos = IdealEos(gamma=5.0 / 3.0)
    assert eos.enthalpy(1.0, 1.0) == pytest.approx(3.5, abs=0.0)


def test_ideal_enthalpy_limit_small_pressure():
    eos = IdealEos(gamma=2.0)
    assert eos.enthalpy(1e-300, 1.0) == pytest.approx(1.0, rel=1e-12)


def test_tm_enthalpy_above_causal_floor():
    eos = TaubMathewsEos()
    h = eos.enthalpy(1.0, 1.0)
    t = 1.0
    expected = 2.5 * t + np.sqrt(2.25 * t * t + 1.0)
    assert h == pytest.approx(expected, rel=1e-15)
    assert h >= np.sqrt(2.0) + 1.0


def test_ideal_pressure_inverse_reference():
    eos = IdealEos(gamma=5.0 / 3.0)
    assert eos.pressure_from_rho_h(1.0, 3.5) == pytest.approx(1.0, rel=1e-15)
    assert eos.pressure_from_rho_h(2.0, 2.0) == pytest.approx(0.8, rel=1e-15)


def test_pressure_limit_small_enthalpy():
    for eos in (IdealEos(5.0 / 3.0), TaubMathewsEos()):
        p = eos.pressure_from_rho_h(1.0, 1.0 + 1e-12)
        assert 0.0 < p < 1e-11


@pytest.mark.parametrize("eos", [IdealEos(4.0 / 3.0), IdealEos(5.0 / 3.0),
                                 IdealEos(2.0), TaubMathewsEos()])
def test_enthalpy_pressure_round_trip(eos):
    rng = np.random.default_rng(0)
    p = np.exp(rng.uniform(np.log(1e-8), np.log(1e8), 200))
    rho = np.exp(rng.uniform(np.log(1e-8), np.log(1e8), 200))
    h = eos.enthalpy(p, rho)
    back = eos.pressure_from_rho_h(rho, h)
    assert np.allclose(back, p, rtol=1e-12)


@pytest.mark.parametrize("eos", [IdealEos(5.0 / 3.0), TaubMathewsEos()])
def test_derivatives_match_finite_differences(eos):
    p, rho = 0.7, 1.3
    d = 1e-6
    fd_hp = (eos.enthalpy(p + d, rho) - eos.enthalpy(p - d, rho)) / (2 * d)
    fd_hr = (eos.enthalpy(p, rho + d) - eos.enthalpy(p, rho - d)) / (2 * d)
    assert eos.dh_dp(p, rho) == pytest.approx(fd_hp, rel=1e-6)
    assert eos.dh_drho(p, rho) == pytest.approx(fd_hr, rel=1e-6)
    h = eos.enthalpy(p, rho)
    fd_ph = (eos.pressure_from_rho_h(rho, h + d)
             - eos.pressure_from_rho_h(rho, h - d)) / (2 * d)
    assert eos.dp_dh(rho, h) == pytest.approx(fd_ph, rel=1e-6)


def test_domain_errors():
    eos = IdealEos(5.0 / 3.0)
    with pytest.raises(DomainError):
        eos.enthalpy(-1.0, 1.0)
    with pytest.raises(DomainError):
        eos.enthalpy(1.0, 0.0)
    with pytest.raises(DomainError):
        eos.pressure_from_rho_h(1.0, 0.5)
    with pytest.raises(DomainError):
        IdealEos(gamma=2.5)


def test_validate_ideal_clean():
    rep = validate_eos(IdealEos(5.0 / 3.0), (1e-8, 1e3), (1e-8, 1e3),
                       n=10_000, seed=0)
    assert rep.ok
    assert rep.violations == []
    rep2 = validate_eos(IdealEos(2.0), (1e-8, 1e3), (1e-8, 1e3),
                        n=10_000, seed=0)
    assert rep2.ok


class _BrokenEos(Eos):
    """h = 1 + p/rho: too stiff to be causal at p = rho = 1."""

    def _h(self, p, rho):
        return 1.0 + p / rho

    def _p(self, rho, h):
        return rho * (np.asarray(h, dtype=float) - 1.0)

    def _dh_dp(self, p, rho):
        return np.ones_like(np.asarray(p, dtype=float)) / rho

    def _dh_drho(self, p, rho):
        return -p / np.asarray(rho, dtype=float) ** 2

    def _dp_dh(self, rho, h):
        return np.broadcast_to(np.asarray(rho, float),
                               np.broadcast(rho, h).shape).copy()

    def _dp_drho(self, rho, h):
        return np.asarray(h, dtype=float) - 1.0


def test_validate_flags_acausal_eos():
    rep = validate_eos(_BrokenEos(), (0.5, 2.0), (0.5, 2.0), n=500, seed=0)
    assert not rep.ok
    assert any(v.condition == "causality" for v in rep.violations)


def test_validate_tm_clean():
    rep = validate_eos(TaubMathewsEos(), (1e-6, 1e3), (1e-6, 1e3),
                       n=2000, seed=1)
    assert rep.ok


def test_table_round_trip(tmp_path):
    base = IdealEos(5.0 / 3.0)
    p_grid = np.geomspace(1e-4, 1e4, 40)
    rho_grid = np.geomspace(1e-4, 1e4, 35)
    h = base.enthalpy(p_grid[:, None], rho_grid[None, :])
    tab = TabulatedEos(p_grid, rho_grid, h)
    path = tmp_path / "table.txt"
    save_eos_table(tab, path)
    back = load_eos_table(path)
    assert np.array_equal(back.p_grid, tab.p_grid)
    assert np.array_equal(back.rho_grid, tab.rho_grid)
    assert np.allclose(back.h_table, tab.h_table, rtol=1e-15)


def test_table_interpolates_and_inverts():
    base = IdealEos(5.0 / 3.0)
    p_grid = np.geomspace(1e-4, 1e4, 400)
    rho_grid = np.geomspace(1e-4, 1e4, 400)
    tab = TabulatedEos(p_grid, rho_grid,
                       base.enthalpy(p_grid[:, None], rho_grid[None, :]))
    p, rho = 0.37, 2.1
    h = tab.enthalpy(p, rho)
    assert h == pytest.approx(base.enthalpy(p, rho), rel=1e-4)
    assert tab.pressure_from_rho_h(rho, h) == pytest.approx(p, rel=1e-10)
