"""State containers, the forward map, admissibility functions, the linear
constraint family, convexity, and rotational invariance."""

import numpy as np
import pytest

from pcpfv import (ConservedState, DomainError, PrimitiveState, StarDirection,
                   U_DIM, WeightError, convex_combine, g1_constraint,
                   is_admissible_g0, phi_value, prim_to_cons,
                   prim_to_cons_array, psi_value, q_value, qhat_qtilde,
                   rotate_state, sample_star_directions, star_vector)
from pcpfv.flux import rotation_t3_2d

from conftest import random_admissible


def test_primitive_validation():
    with pytest.raises(DomainError):
        PrimitiveState(rho=-1.0, v=(0, 0, 0), B=(0, 0, 0), p=1.0)
    with pytest.raises(DomainError):
        PrimitiveState(rho=1.0, v=(0, 0, 0), B=(0, 0, 0), p=0.0)
    with pytest.raises(DomainError):
        PrimitiveState(rho=1.0, v=(1.0, 0, 0), B=(0, 0, 0), p=1.0)
    s = PrimitiveState(rho=1.0, v=(0.6, 0, 0), B=(0, 0, 0), p=1.0)
    assert s.lorentz == pytest.approx(1.25, rel=1e-15)


def test_conserved_array_round_trip():
    u = np.arange(8.0)
    u[0] = 1.0
    c = ConservedState.from_array(u)
    assert np.array_equal(c.as_array(), u)


def test_forward_map_static_hydro(ideal):
    V = PrimitiveState(rho=1.0, v=(0, 0, 0), B=(0, 0, 0), p=1.0)
    u = prim_to_cons(ideal, V).as_array()
    assert np.allclose(u, [1, 0, 0, 0, 0, 0, 0, 2.5], atol=1e-15)


def test_forward_map_static_magnetized(ideal):
    V = PrimitiveState(rho=1.0, v=(0, 0, 0), B=(1, 0, 0), p=1.0)
    u = prim_to_cons(ideal, V).as_array()
    assert np.allclose(u, [1, 0, 0, 0, 1, 0, 0, 3.0], atol=1e-15)


def test_forward_map_zero_velocity_zero_momentum(ideal, tm, rng):
    for eos in (IdealLike := ideal, tm):
        rho = rng.uniform(0.5, 2.0, 10)
        p = rng.uniform(0.5, 2.0, 10)
        B = rng.normal(size=(10, 3))
        u = prim_to_cons_array(eos, rho, np.zeros((10, 3)), B, p)
        assert np.all(u[:, 1:4] == 0.0)


def test_q_values():
    assert q_value([1, 0, 0, 0, 0, 0, 0, 2.5]) == pytest.approx(1.5)
    assert q_value([1, 0, 0, 0, 1, 0, 0, 3]) == pytest.approx(2.0)
    assert q_value([1, 3, 4, 0, 0, 0, 0, 5]) == pytest.approx(5 - np.sqrt(26))
    assert q_value([1, 3, 4, 0, 0, 0, 0, 5]) < 0


def test_psi_reference_values():
    u1 = np.array([1, 0, 0, 0, 0, 0, 0, 2.5])
    phi1 = np.sqrt(22.0)
    expect1 = (phi1 + 5.0) * np.sqrt(phi1 - 2.5)
    assert phi_value(u1) == pytest.approx(phi1, rel=1e-15)
    assert psi_value(u1) == pytest.approx(expect1, rel=1e-13)
    assert expect1 == pytest.approx(14.34, abs=0.01)

    u2 = np.array([1, 0, 0, 0, 1, 0, 0, 3])
    phi2 = np.sqrt(28.0)
    expect2 = (phi2 + 4.0) * np.sqrt(phi2 - 2.0) - np.sqrt(13.5)
    assert psi_value(u2) == pytest.approx(expect2, rel=1e-13)
    assert expect2 == pytest.approx(13.18, abs=0.01)


def test_psi_positive_on_forward_map(ideal, rng):
    U, _ = random_admissible(ideal, rng, 500)
    assert np.all(psi_value(U) > 0.0)
    assert np.all(q_value(U) > 0.0)
    assert np.all(is_admissible_g0(U))


def test_qhat_reference_value():
    qh, _ = qhat_qtilde([1, 0, 0, 0, 0, 0, 0, 2.5])
    assert qh == pytest.approx(np.sqrt(22.0) + 5.0, rel=1e-14)


def test_qhat_qtilde_equivalent_to_psi(ideal, rng):
    U, _ = random_admissible(ideal, rng, 1000)
    qh, qt = qhat_qtilde(U)
    psi = psi_value(U)
    assert np.all((psi > 0) == ((qh > 0) & (qt > 0)))


def test_inadmissible_examples():
    assert not is_admissible_g0([-1, 0, 0, 0, 0, 0, 0, 2.5])
    assert not is_admissible_g0([1, 3, 4, 0, 0, 0, 0, 5])


def test_star_vector_trivial_direction():
    n, p_m = star_vector(np.zeros(3), np.zeros(3))
    assert np.allclose(n, [-1, 0, 0, 0, 0, 0, 0, 1])
    assert p_m == 0.0
    val = g1_constraint([1, 0, 0, 0, 0, 0, 0, 2.5],
                        StarDirection(np.zeros(3), np.zeros(3)))
    assert val == pytest.approx(1.5)


def test_star_vector_magnetic_direction():
    s = StarDirection(np.zeros(3), np.array([1.0, 0, 0]))
    val = g1_constraint([1, 0, 0, 0, 1, 0, 0, 3], s)
    assert val == pytest.approx(1.5)


def test_g1_positive_for_admissible(ideal, rng):
    U, _ = random_admissible(ideal, rng, 200)
    vstar, Bstar = sample_star_directions(rng, 100)
    n, p_m = star_vector(vstar, Bstar)
    vals = U @ n.T + p_m[None, :]
    assert np.all(vals > 0.0)


def test_convex_combine():
    a = np.array([1, 0, 0, 0, 0, 0, 0, 2.5])
    b = np.array([1, 0, 0, 0, 1, 0, 0, 3.0])
    same = convex_combine([(1.0, a)])
    assert np.array_equal(same, a)
    mix = convex_combine([(0.5, a), (0.5, b)])
    assert is_admissible_g0(mix)
    with pytest.raises(WeightError):
        convex_combine([(0.5, a), (0.6, b)])
    with pytest.raises(WeightError):
        convex_combine([(-0.5, a), (1.5, b)])


def test_rotate_identity_and_quarter_turn():
    u = np.array([1, 0, 0, 0, 1, 0, 0, 3.0])
    assert np.array_equal(rotate_state(u, np.eye(3)), u)
    out = rotate_state(u, rotation_t3_2d(np.pi / 2.0))
    assert out[0] == 1.0 and out[7] == 3.0
    assert np.allclose(np.abs(out[4:7]), [0, 1, 0], atol=1e-15)


def test_rotation_preserves_admissibility(ideal, rng):
    U, _ = random_admissible(ideal, rng, 100)
    for phi in rng.uniform(0, 2 * np.pi, 5):
        out = rotate_state(U, rotation_t3_2d(phi))
        assert np.all(is_admissible_g0(out))


def test_star_directions_shape(rng):
    vstar, Bstar = sample_star_directions(rng, 50)
    assert vstar.shape == (50, 3) and Bstar.shape == (50, 3)
    assert np.all(np.sum(vstar ** 2, axis=1) < 1.0)
