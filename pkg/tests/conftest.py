"""Shared fixtures: equations of state and random admissible state batches."""

import numpy as np
import pytest

from pcpfv import IdealEos, TaubMathewsEos, prim_to_cons_array


@pytest.fixture
def ideal():
    return IdealEos(gamma=5.0 / 3.0)


@pytest.fixture
def tm():
    return TaubMathewsEos()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_admissible(eos, rng, n, rho_range=(1e-2, 1e2), p_range=(1e-2, 1e2),
                      v_max=0.95, b_scale=2.0):
    """Random admissible conserved states via the forward map."""
    rho = np.exp(rng.uniform(np.log(rho_range[0]), np.log(rho_range[1]), n))
    p = np.exp(rng.uniform(np.log(p_range[0]), np.log(p_range[1]), n))
    speed = rng.uniform(0.0, v_max, n)
    vdir = rng.normal(size=(n, 3))
    vdir /= np.linalg.norm(vdir, axis=1, keepdims=True)
    v = speed[:, None] * vdir
    B = rng.normal(scale=b_scale, size=(n, 3))
    return prim_to_cons_array(eos, rho, v, B, p), (rho, v, B, p)
