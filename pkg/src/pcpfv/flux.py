"""Physical flux, directional flux, rotations, and the Lax-Friedrichs
numerical flux.

The magnetofluid flux along axis i is

    F_i = ( D v_i,
            v_i m - B_i (W^-2 B + (v.B) v) + p_tot e_i,
            v_i B - B_i v,
            m_i ),

with p_tot = p + p_m the total (gas plus magnetic) pressure.  Directional
fluxes are the component sums <xi, F> = sum_l xi_l F_l, which coincide with
the rotation-conjugated axis-1 flux T^-1 F_1(T U) — the identity the
rotation helpers exist to exercise.
"""

from __future__ import annotations

import numpy as np

from .errors import DomainError
from .recovery import recover_primitives_batch
from .states import U_DIM, StarDirection, _u, star_vector

__all__ = [
    "flux_from_primitives", "physical_flux", "directed_flux", "lxf_flux",
    "splitting_inequality", "rotation_t3_2d", "rotation_t3_3d",
    "full_rotation",
]


def flux_from_primitives(rho, v, B, p, h):
    """All three axis fluxes from primitive fields; returns shape (..., 3, 8).

    Vectorized building block: h must already be consistent with (p, rho)
    through the equation of state.
    """
    rho = np.asarray(rho, dtype=float)
    v = np.asarray(v, dtype=float)
    B = np.asarray(B, dtype=float)
    p = np.asarray(p, dtype=float)
    h = np.asarray(h, dtype=float)
    v2 = np.sum(v * v, axis=-1)
    w2inv = 1.0 - v2
    b2 = np.sum(B * B, axis=-1)
    vb = np.sum(v * B, axis=-1)
    rhw2 = rho * h / w2inv
    d = rho / np.sqrt(w2inv)
    m = (rhw2 + b2)[..., None] * v - vb[..., None] * B
    p_tot = p + 0.5 * (w2inv * b2 + vb * vb)
    out = np.zeros(np.broadcast(rho, v2, p).shape + (3, U_DIM))
    for i in range(3):
        vi = v[..., i]
        bi = B[..., i]
        out[..., i, 0] = d * vi
        out[..., i, 1:4] = (vi[..., None] * m
                            - bi[..., None] * (w2inv[..., None] * B
                                               + vb[..., None] * v))
        out[..., i, 1 + i] += p_tot
        out[..., i, 4:7] = vi[..., None] * B - bi[..., None] * v
        out[..., i, 7] = m[..., i]
    return out


def _fluxes_of(eos, U):
    u = _u(U)
    rec = recover_primitives_batch(eos, u)
    return flux_from_primitives(rec["rho"], rec["v"], rec["B"], rec["p"],
                                rec["h"])


def physical_flux(eos, U, axis):
    """Flux along coordinate axis ``axis`` (1-based, in {1, 2, 3})."""
    if axis not in (1, 2, 3):
        raise DomainError("axis must be 1, 2 or 3")
    f = _fluxes_of(eos, U)[..., axis - 1, :]
    return f


def directed_flux(eos, U, xi):
    """<xi, F(U)> for a unit direction xi of dimension 1, 2 or 3."""
    xi = np.asarray(xi, dtype=float)
    if xi.ndim != 1 or xi.size not in (1, 2, 3):
        raise DomainError("xi must be a 1-, 2- or 3-vector")
    if abs(np.linalg.norm(xi) - 1.0) > 1e-12:
        raise DomainError("xi must be a unit vector")
    f = _fluxes_of(eos, U)
    return np.einsum("l,...lc->...c", np.pad(xi, (0, 3 - xi.size)), f)


def lxf_flux(eos, UL, UR, xi, alpha=1.0):
    """Lax-Friedrichs flux (<xi, F(UL) + F(UR)> - alpha (UR - UL)) / 2."""
    if alpha < 1.0:
        raise DomainError("alpha must be >= 1 (units with c = 1)")
    ul = _u(UL)
    ur = _u(UR)
    return 0.5 * (directed_flux(eos, ul, xi) + directed_flux(eos, ur, xi)
                  - alpha * (ur - ul))


def splitting_inequality(eos, U, theta, axis, s):
    """(U + theta F_i(U)) . n* + p_m* + theta (v_i* p_m* - B_i (v*.B*)).

    Nonnegative for every admissible U, |theta| <= 1 and star direction —
    the scalar inequality behind the flux-splitting convexity argument.
    """
    theta = np.asarray(theta, dtype=float)
    if np.any(np.abs(theta) > 1.0):
        raise DomainError("|theta| must be <= 1")
    if axis not in (1, 2, 3):
        raise DomainError("axis must be 1, 2 or 3")
    u = _u(U)
    f = physical_flux(eos, u, axis)
    if isinstance(s, StarDirection):
        vstar, Bstar = s.vstar, s.Bstar
    else:
        vstar, Bstar = np.asarray(s[0], float), np.asarray(s[1], float)
    n, p_m = star_vector(vstar, Bstar)
    vsbs = np.sum(vstar * Bstar, axis=-1)
    extra = (vstar[..., axis - 1] * p_m - u[..., 4 + axis - 1] * vsbs)
    return np.sum((u + theta[..., None] * f) * n, axis=-1) \
        + p_m + theta * extra


def rotation_t3_2d(phi):
    """Planar rotation taking the direction (cos phi, sin phi) to e1."""
    c, s = np.cos(phi), np.sin(phi)
    return np.array([[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]])


def rotation_t3_3d(theta, phi):
    """Spherical-angle rotation taking
    (sin theta cos phi, sin theta sin phi, cos theta) to e1."""
    st, ct = np.sin(theta), np.cos(theta)
    sp, cp = np.sin(phi), np.cos(phi)
    return np.array([
        [st * cp, st * sp, ct],
        [-sp, cp, 0.0],
        [-ct * cp, -ct * sp, st],
    ])


def full_rotation(T3):
    """Lift a 3x3 rotation to the 8x8 block matrix diag{1, T3, T3, 1}."""
    T3 = np.asarray(T3, dtype=float)
    T = np.eye(U_DIM)
    T[1:4, 1:4] = T3
    T[4:7, 4:7] = T3
    return T
