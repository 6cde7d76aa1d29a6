"""Conserved/primitive state types and the admissible-set machinery.

A conserved state is the 8-vector U = (D, m1, m2, m3, B1, B2, B3, E).
Admissibility (positive density and pressure, subluminal velocity) has two
equivalent algebraic characterizations used throughout:

* the pointwise check D > 0, q(U) > 0, Psi(U) > 0, convenient for testing
  a given state and for the scaling limiter;
* the family of linear constraints U . n*(v*, B*) + p_m*(v*, B*) > 0 over
  all star directions, convenient for proving scheme properties.

Array-valued functions accept either a ConservedState or an ndarray of
shape (..., 8) and are fully vectorized.  All types are immutable value
objects and every operation is pure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, MatrixError, WeightError

__all__ = [
    "U_DIM", "PrimitiveState", "ConservedState", "StarDirection",
    "prim_to_cons", "prim_to_cons_array",
    "q_value", "phi_value", "psi_value", "qhat_qtilde", "is_admissible_g0",
    "star_vector", "g1_constraint", "convex_combine", "rotate_state",
    "sample_star_directions",
]

U_DIM = 8

_D = 0
_M = slice(1, 4)
_B = slice(4, 7)
_E = 7


def _vec3(x, name):
    x = np.asarray(x, dtype=float)
    if x.shape != (3,):
        raise DomainError(f"{name} must be a 3-vector")
    return x


@dataclass(frozen=True)
class PrimitiveState:
    """Physical description (rho, v, B, p); validates its own invariants."""

    rho: float
    v: np.ndarray
    B: np.ndarray
    p: float

    def __post_init__(self):
        object.__setattr__(self, "v", _vec3(self.v, "v"))
        object.__setattr__(self, "B", _vec3(self.B, "B"))
        if not (self.rho > 0.0 and np.isfinite(self.rho)):
            raise DomainError("rho must be positive")
        if not (self.p > 0.0 and np.isfinite(self.p)):
            raise DomainError("p must be positive")
        if np.dot(self.v, self.v) >= 1.0:
            raise DomainError("|v| must be < 1 (c = 1 units)")

    @property
    def lorentz(self):
        return 1.0 / np.sqrt(1.0 - np.dot(self.v, self.v))

    @property
    def magnetic_pressure(self):
        w2 = 1.0 - np.dot(self.v, self.v)
        return 0.5 * (w2 * np.dot(self.B, self.B) + np.dot(self.v, self.B) ** 2)


@dataclass(frozen=True)
class ConservedState:
    """Evolved 8-vector (D, m, B, E); admissibility is a predicate, not a
    constructor constraint."""

    D: float
    m: np.ndarray
    B: np.ndarray
    E: float

    def __post_init__(self):
        object.__setattr__(self, "m", _vec3(self.m, "m"))
        object.__setattr__(self, "B", _vec3(self.B, "B"))

    def as_array(self):
        out = np.empty(U_DIM)
        out[_D] = self.D
        out[_M] = self.m
        out[_B] = self.B
        out[_E] = self.E
        return out

    @classmethod
    def from_array(cls, u):
        u = np.asarray(u, dtype=float)
        if u.shape != (U_DIM,):
            raise DomainError("conserved array must have shape (8,)")
        return cls(float(u[_D]), u[_M].copy(), u[_B].copy(), float(u[_E]))


@dataclass(frozen=True)
class StarDirection:
    """A (v*, B*) pair indexing one linear admissibility constraint."""

    vstar: np.ndarray
    Bstar: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "vstar", _vec3(self.vstar, "vstar"))
        object.__setattr__(self, "Bstar", _vec3(self.Bstar, "Bstar"))
        if np.dot(self.vstar, self.vstar) >= 1.0:
            raise DomainError("|vstar| must be < 1")


def _u(U):
    """Coerce a ConservedState or array-like to an (..., 8) float array."""
    if isinstance(U, ConservedState):
        return U.as_array()
    u = np.asarray(U, dtype=float)
    if u.shape[-1] != U_DIM:
        raise DomainError("conserved array must have last dimension 8")
    return u


def prim_to_cons_array(eos, rho, v, B, p):
    """Vectorized forward map; v, B have shape (..., 3)."""
    rho = np.asarray(rho, dtype=float)
    v = np.asarray(v, dtype=float)
    B = np.asarray(B, dtype=float)
    p = np.asarray(p, dtype=float)
    v2 = np.sum(v * v, axis=-1)
    if np.any(v2 >= 1.0):
        raise DomainError("|v| must be < 1")
    w2 = 1.0 / (1.0 - v2)
    h = eos.enthalpy(p, rho)
    rhw2 = rho * h * w2
    b2 = np.sum(B * B, axis=-1)
    vb = np.sum(v * B, axis=-1)
    p_m = 0.5 * (b2 / w2 + vb * vb)
    out = np.empty(np.broadcast(rho, v2, p).shape + (U_DIM,))
    out[..., _D] = rho * np.sqrt(w2)
    out[..., _M] = (rhw2 + b2)[..., None] * v - vb[..., None] * B
    out[..., _B] = B
    out[..., _E] = rhw2 - (p + p_m) + b2
    return out


def prim_to_cons(eos, V):
    """Forward map V -> U = (rho W, rho h W^2 v + |B|^2 v - (v.B) B, B,
    rho h W^2 - p_tot + |B|^2)."""
    u = prim_to_cons_array(eos, V.rho, V.v, V.B, V.p)
    return ConservedState.from_array(u)


def q_value(U):
    """q(U) = E - sqrt(D^2 + |m|^2); positive for every admissible state."""
    u = _u(U)
    m2 = np.sum(u[..., _M] ** 2, axis=-1)
    return u[..., _E] - np.sqrt(u[..., _D] ** 2 + m2)


def phi_value(U):
    """Phi(U) = sqrt((|B|^2 - E)^2 + 3 (E^2 - D^2 - |m|^2))."""
    u = _u(U)
    b2 = np.sum(u[..., _B] ** 2, axis=-1)
    m2 = np.sum(u[..., _M] ** 2, axis=-1)
    e = u[..., _E]
    arg = (b2 - e) ** 2 + 3.0 * (e * e - u[..., _D] ** 2 - m2)
    return np.sqrt(np.maximum(arg, 0.0))


def psi_value(U):
    """Psi(U); returns -inf where the inner square root would go negative,
    which only happens off the admissible branch."""
    u = _u(U)
    b2 = np.sum(u[..., _B] ** 2, axis=-1)
    m2 = np.sum(u[..., _M] ** 2, axis=-1)
    e = u[..., _E]
    d = u[..., _D]
    phi_arg = (b2 - e) ** 2 + 3.0 * (e * e - d * d - m2)
    phi = np.sqrt(np.maximum(phi_arg, 0.0))
    root_arg = phi + b2 - e
    mb = np.sum(u[..., _M] * u[..., _B], axis=-1)
    with np.errstate(invalid="ignore"):
        psi = ((phi - 2.0 * (b2 - e)) * np.sqrt(np.maximum(root_arg, 0.0))
               - np.sqrt(13.5 * (d * d * b2 + mb * mb)))
    return np.where((root_arg < 0.0) | (phi_arg < 0.0), -np.inf, psi)


def qhat_qtilde(U):
    """The pair (qhat, qtilde) whose joint positivity is equivalent to
    Psi > 0; qtilde isolates the sign analytically and drives the
    non-preservation counterexample."""
    u = _u(U)
    b2 = np.sum(u[..., _B] ** 2, axis=-1)
    m2 = np.sum(u[..., _M] ** 2, axis=-1)
    mb = np.sum(u[..., _M] * u[..., _B], axis=-1)
    e = u[..., _E]
    d = u[..., _D]
    s = e - b2
    t = e * e - d * d - m2
    phi2 = s * s + 3.0 * t
    qhat = np.sqrt(np.maximum(phi2, 0.0)) + 2.0 * s
    cubic = s ** 3 + 13.5 * (b2 * d * d + mb * mb) - 9.0 * t * s
    qtilde = phi2 ** 3 - cubic ** 2
    return qhat, qtilde


def is_admissible_g0(U):
    """Pointwise admissibility: D > 0 and q(U) > 0 and Psi(U) > 0."""
    u = _u(U)
    return (u[..., _D] > 0.0) & (q_value(u) > 0.0) & (psi_value(u) > 0.0)


def star_vector(vstar, Bstar):
    """Return (n*, p_m*) for star directions; v*, B* have shape (..., 3).

    n* = (-1/W*, -v*, -(1 - |v*|^2) B* - (v*.B*) v*, 1),
    p_m* = ((1 - |v*|^2) |B*|^2 + (v*.B*)^2) / 2.
    """
    vstar = np.asarray(vstar, dtype=float)
    Bstar = np.asarray(Bstar, dtype=float)
    v2 = np.sum(vstar * vstar, axis=-1)
    if np.any(v2 >= 1.0):
        raise DomainError("|vstar| must be < 1")
    one_m_v2 = 1.0 - v2
    vb = np.sum(vstar * Bstar, axis=-1)
    n = np.empty(np.broadcast(v2, np.sum(Bstar, axis=-1)).shape + (U_DIM,))
    n[..., _D] = -np.sqrt(one_m_v2)
    n[..., _M] = -vstar
    n[..., _B] = -(one_m_v2[..., None] * Bstar + vb[..., None] * vstar)
    n[..., _E] = 1.0
    p_m = 0.5 * (one_m_v2 * np.sum(Bstar * Bstar, axis=-1) + vb * vb)
    return n, p_m


def g1_constraint(U, s):
    """The linear constraint U . n* + p_m*; positive for all star directions
    exactly when U is admissible."""
    u = _u(U)
    if isinstance(s, StarDirection):
        n, p_m = star_vector(s.vstar, s.Bstar)
    else:
        n, p_m = star_vector(s[0], s[1])
    return np.sum(u * n, axis=-1) + p_m


def convex_combine(states):
    """Component-wise convex combination of (weight, state) pairs."""
    weights = np.array([w for w, _ in states], dtype=float)
    if np.any(weights < 0.0):
        raise WeightError("weights must be nonnegative")
    if abs(weights.sum() - 1.0) > 1e-14:
        raise WeightError("weights must sum to 1")
    acc = np.zeros(U_DIM)
    for w, U in states:
        acc += w * _u(U)
    if all(isinstance(U, ConservedState) for _, U in states):
        return ConservedState.from_array(acc)
    return acc


def rotate_state(U, T3):
    """Apply T = diag{1, T3, T3, 1}: rotates m and B, leaves D and E fixed."""
    T3 = np.asarray(T3, dtype=float)
    if T3.shape != (3, 3):
        raise MatrixError("T3 must be 3x3")
    if not np.allclose(T3.T @ T3, np.eye(3), atol=1e-12, rtol=0.0):
        raise MatrixError("T3 must be orthogonal")
    u = _u(U)
    out = u.copy()
    out[..., _M] = u[..., _M] @ T3.T
    out[..., _B] = u[..., _B] @ T3.T
    if isinstance(U, ConservedState):
        return ConservedState.from_array(out)
    return out


def sample_star_directions(rng, n, bstar_scale=1.0):
    """Draw n random (v*, B*) pairs with |v*| concentrated near the light
    cone: |v*| = 1 - 10^u, u uniform in [-12, 0], where violations of the
    linear constraints cluster."""
    u = rng.uniform(-12.0, 0.0, n)
    speed = 1.0 - 10.0 ** u
    vdir = rng.normal(size=(n, 3))
    vdir /= np.linalg.norm(vdir, axis=1, keepdims=True)
    vstar = speed[:, None] * vdir
    Bstar = rng.normal(scale=bstar_scale, size=(n, 3))
    return vstar, Bstar
