"""Built-in initial conditions.

Pointwise presets return a field function x -> primitive tuple and are
projected to cell averages with the cell decomposition quadrature; the
random preset generates admissible per-cell data directly, with magnetic
averages built from a discrete vector potential so the centered discrete
divergence vanishes exactly on a periodic Cartesian mesh.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError, UnknownPreset
from .geometry import cell_decomposition
from .states import U_DIM, prim_to_cons_array

__all__ = ["preset_initial_condition", "project_to_averages",
           "initial_averages", "random_ddf_averages", "PRESET_NAMES"]

PRESET_NAMES = ("constant", "smooth-vortex-like", "random-admissible-ddf",
                "discontinuity")


def _constant_field(params):
    rho = float(params.get("rho", 1.0))
    p = float(params.get("p", 1.0))
    v = np.asarray(params.get("v", (0.0, 0.0, 0.0)), dtype=float)
    B = np.asarray(params.get("B", (0.0, 0.0, 0.0)), dtype=float)

    def field(x):
        x = np.asarray(x, dtype=float)
        shape = x.shape[:-1]
        return (np.full(shape, rho), np.broadcast_to(v, shape + (3,)),
                np.broadcast_to(B, shape + (3,)), np.full(shape, p))

    return field


def _smooth_field(params):
    amp = float(params.get("amplitude", 0.2))
    bamp = float(params.get("b_amplitude", 0.5))
    tp = 2.0 * np.pi

    def field(x):
        x = np.asarray(x, dtype=float)
        xs, ys = x[..., 0], x[..., 1]
        rho = 1.0 + 0.5 * np.sin(tp * (xs + ys))
        p = 1.0 + 0.25 * np.cos(tp * xs)
        v = np.stack([amp * np.sin(tp * ys), amp * np.cos(tp * xs),
                      np.zeros_like(xs)], axis=-1)
        # B = curl(0, 0, A) with A = bamp sin(tp x) sin(tp y) / tp:
        # pointwise divergence-free
        B = np.stack([bamp * np.sin(tp * xs) * np.cos(tp * ys),
                      -bamp * np.cos(tp * xs) * np.sin(tp * ys),
                      np.zeros_like(xs)], axis=-1)
        return rho, v, B, p

    return field


def _discontinuity_field(params):
    left = _constant_field(params.get("left", {"rho": 1.0, "p": 1.0}))
    right = _constant_field(params.get(
        "right", {"rho": 0.125, "p": 0.1, "B": (0.75, -1.0, 0.0)}))
    split = float(params.get("split", 0.5))

    def field(x):
        x = np.asarray(x, dtype=float)
        mask = (x[..., 0] < split)[..., None]
        rl, vl, bl, pl = left(x)
        rr, vr, br, pr = right(x)
        return (np.where(mask[..., 0], rl, rr), np.where(mask, vl, vr),
                np.where(mask, bl, br), np.where(mask[..., 0], pl, pr))

    return field


def preset_initial_condition(name, params=None):
    """Field function for a named pointwise preset."""
    params = params or {}
    if name == "constant":
        return _constant_field(params)
    if name == "smooth-vortex-like":
        return _smooth_field(params)
    if name == "discontinuity":
        return _discontinuity_field(params)
    if name == "random-admissible-ddf":
        raise UnknownPreset(
            "random-admissible-ddf generates cell data, not a field; "
            "use initial_averages")
    raise UnknownPreset(f"unknown preset: {name}")


def project_to_averages(field, mesh, eos, quad):
    """Cell averages of a pointwise primitive field via the decomposition
    quadrature (centroid value where no decomposition exists)."""
    avg = np.empty((mesh.n_cells, U_DIM))
    for k in range(mesh.n_cells):
        try:
            nodes, w, _ = cell_decomposition(mesh, k, quad)
        except Exception:
            nodes, w = mesh.centroid[k][None, :], np.array([1.0])
        rho, v, B, p = field(nodes)
        u = prim_to_cons_array(eos, rho, v, B, p)
        avg[k] = w @ u
    return avg


def random_ddf_averages(mesh, eos, rng, b_scale=1.0, v_max=0.5):
    """Random admissible cell data on a periodic Cartesian mesh whose
    centered discrete divergence is exactly zero.

    The in-plane magnetic averages come from centered differences of a
    random scalar potential A:

        B1 = (A[i, j+1] - A[i, j-1]) / (2 dy),
        B2 = -(A[i+1, j] - A[i-1, j]) / (2 dx),

    which makes the centered divergence a telescoping sum that cancels
    identically on the periodic grid.
    """
    if mesh.kind != "cartesian" or mesh.boundary != "periodic":
        raise ConfigError("random-admissible-ddf needs a periodic "
                          "Cartesian mesh")
    nx, ny = mesh.shape
    dx, dy = mesh.spacing
    A = rng.normal(scale=b_scale * min(dx, dy), size=(nx, ny))
    b1 = (np.roll(A, -1, axis=1) - np.roll(A, 1, axis=1)) / (2.0 * dy)
    b2 = -(np.roll(A, -1, axis=0) - np.roll(A, 1, axis=0)) / (2.0 * dx)
    n = mesh.n_cells
    rho = rng.uniform(0.5, 2.0, n)
    p = rng.uniform(0.5, 2.0, n)
    speed = rng.uniform(0.0, v_max, n)
    vdir = rng.normal(size=(n, 3))
    vdir /= np.linalg.norm(vdir, axis=1, keepdims=True)
    v = speed[:, None] * vdir
    B = np.empty((n, 3))
    # cell index layout is row-major: k = j * nx + i
    B[:, 0] = b1.T.reshape(-1)
    B[:, 1] = b2.T.reshape(-1)
    B[:, 2] = rng.normal(scale=b_scale, size=n)
    return prim_to_cons_array(eos, rho, v, B, p)


def initial_averages(name, params, mesh, eos, quad, rng=None):
    """Cell averages for any preset name."""
    if name == "random-admissible-ddf":
        params = params or {}
        if rng is None:
            rng = np.random.default_rng(int(params.get("seed", 0)))
        return random_ddf_averages(
            mesh, eos, rng, b_scale=float(params.get("b_scale", 1.0)),
            v_max=float(params.get("v_max", 0.5)))
    return project_to_averages(preset_initial_condition(name, params),
                               mesh, eos, quad)
