"""Three-step scaling limiter enforcing admissibility at node sets.

Given a cell polynomial with admissible average, the limiter scales the
polynomial about its average so that every decomposition-node value lies in
the epsilon-shrunken admissible set

    G_eps = { U : D >= eps, q(U) >= eps, Psi_eps(U) >= 0 },

where Psi_eps(U) = Psi(D, m, B, E - eps).  Step (i) scales the density
deviation only, step (ii) scales the (D, m, E) deviations leaving B
untouched, step (iii) scales everything.  Each step preserves the cell
average exactly, so a locally divergence-free magnetic polynomial stays
locally divergence-free (its gradient is scaled uniformly).

The batch core operates on (n_cells, n_nodes, 8) node values and returns
the per-cell scaling factors; thin per-cell wrappers expose the individual
steps on a CellPoly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AverageInadmissible, BracketError
from .states import U_DIM, psi_value, q_value

__all__ = [
    "EpsilonSet", "CellPoly", "psi_eps", "limit_values",
    "limit_density", "limit_q", "limit_psi", "pcp_limit",
]

_BISECT_ITERS = 100


@dataclass(frozen=True)
class EpsilonSet:
    """Margin for the shrunken admissible set."""

    epsilon: float = 1e-13

    def __post_init__(self):
        if not self.epsilon > 0.0:
            raise ValueError("epsilon must be positive")


@dataclass
class CellPoly:
    """Linear cell polynomial U(x) = avg + grad . (x - centroid)."""

    avg: np.ndarray
    grad: np.ndarray  # shape (8, 2)
    centroid: np.ndarray

    def __call__(self, points):
        points = np.asarray(points, dtype=float)
        return self.avg + (points - self.centroid) @ self.grad.T

    def scaled(self, factors):
        """New polynomial with per-component gradient scaling."""
        return CellPoly(self.avg.copy(),
                        self.grad * np.asarray(factors)[:, None],
                        self.centroid)


def psi_eps(U, eps):
    """Psi evaluated on (D, m, B, E - eps)."""
    u = np.array(U, dtype=float, copy=True)
    u[..., 7] -= eps
    return psi_value(u)


def _theta_density(values, avg, eps):
    dbar = avg[..., 0]
    if np.any(dbar < eps):
        raise AverageInadmissible("cell-average density below epsilon")
    dmin = np.min(values[..., 0], axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        theta = (dbar - eps) / (dbar - dmin)
    return np.where(dmin < eps, np.minimum(theta, 1.0), 1.0)


def _scale_about_avg(values, avg, theta, comps):
    out = values.copy()
    dev = values[..., comps] - avg[..., None, comps]
    out[..., comps] = avg[..., None, comps] + theta[..., None, None] * dev
    return out


def _theta_q(values, avg, eps):
    qbar = q_value(avg)
    if np.any(qbar < eps):
        raise AverageInadmissible("cell-average q below epsilon")
    qmin = np.min(q_value(values), axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        theta = (qbar - eps) / (qbar - qmin)
    theta = np.where(qmin < eps, np.minimum(theta, 1.0), 1.0)
    # concavity of q makes one pass sufficient; guard round-off anyway
    hydro = [0, 1, 2, 3, 7]
    for _ in range(5):
        test = _scale_about_avg(values, avg, theta, hydro)
        bad = np.min(q_value(test), axis=-1) < eps * (1.0 - 1e-9)
        if not np.any(bad):
            break
        theta = np.where(bad, theta * (1.0 - 1e-12), theta)
    return theta


def _theta_psi(values, avg, eps):
    pbar = psi_eps(avg, eps)
    if np.any(pbar < 0.0):
        raise BracketError("cell-average Psi_eps negative")
    node_psi = psi_eps(values, eps)
    fail = node_psi < 0.0
    if not np.any(fail):
        return np.ones(avg.shape[:-1])
    # per failing node, bisect Psi_eps((1 - t) avg + t value) = 0 on [0, 1]
    lo = np.zeros(node_psi.shape)
    hi = np.ones(node_psi.shape)
    base = avg[..., None, :]
    for _ in range(_BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        u = (1.0 - mid[..., None]) * base + mid[..., None] * values
        good = psi_eps(u, eps) >= 0.0
        lo = np.where(good, mid, lo)
        hi = np.where(good, hi, mid)
    tnode = np.where(fail, lo, 1.0)
    return np.min(tnode, axis=-1)


def limit_values(values, avg, eps):
    """Batch limiter core.

    values: (..., n_nodes, 8) node evaluations, avg: (..., 8) cell means.
    Returns (limited_values, theta1, theta2, theta3).
    """
    values = np.asarray(values, dtype=float)
    avg = np.asarray(avg, dtype=float)
    t1 = _theta_density(values, avg, eps)
    v1 = _scale_about_avg(values, avg, t1, [0])
    t2 = _theta_q(v1, avg, eps)
    v2 = _scale_about_avg(v1, avg, t2, [0, 1, 2, 3, 7])
    t3 = _theta_psi(v2, avg, eps)
    v3 = _scale_about_avg(v2, avg, t3, list(range(U_DIM)))
    return v3, t1, t2, t3


def _check_poly(poly, avg):
    if not np.allclose(poly.avg, avg, rtol=1e-13, atol=0.0):
        raise AverageInadmissible("polynomial average disagrees with avg")


def limit_density(poly, nodes, avg, eps):
    """Step (i): enforce node densities >= eps, scaling D only."""
    avg = np.asarray(avg, dtype=float)
    _check_poly(poly, avg)
    t1 = _theta_density(poly(nodes)[None], avg[None], eps)[0]
    return poly.scaled([t1] + [1.0] * 7)


def limit_q(poly, nodes, avg, eps):
    """Step (ii): enforce node q >= eps, scaling D, m, E; B untouched."""
    avg = np.asarray(avg, dtype=float)
    _check_poly(poly, avg)
    t2 = _theta_q(poly(nodes)[None], avg[None], eps)[0]
    return poly.scaled([t2] * 4 + [1.0] * 3 + [t2])


def limit_psi(poly, nodes, avg, eps):
    """Step (iii): enforce node Psi_eps >= 0, scaling all components."""
    avg = np.asarray(avg, dtype=float)
    _check_poly(poly, avg)
    t3 = _theta_psi(poly(nodes)[None], avg[None], eps)[0]
    return poly.scaled([t3] * U_DIM)


def pcp_limit(poly, nodes, avg, eps):
    """All three steps composed; returns the limited polynomial."""
    avg = np.asarray(avg, dtype=float)
    _check_poly(poly, avg)
    _, t1, t2, t3 = limit_values(poly(nodes)[None], avg[None], eps)
    t1, t2, t3 = float(t1[0]), float(t2[0]), float(t3[0])
    return poly.scaled([t1 * t2 * t3] + [t2 * t3] * 3 + [t3] * 3 + [t2 * t3])
