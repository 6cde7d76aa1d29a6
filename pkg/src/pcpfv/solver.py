"""Finite-volume updates: first-order and high-order cell-average schemes
with the Lax-Friedrichs flux, P1 reconstruction, the PCP limiter hookup,
CFL control, and SSP Runge-Kutta time stepping.

The cell-average update is

    avg_k^{n+1} = avg_k - (dt / |I_k|) sum_faces |E_kj| Fhat_kj,

with Fhat the (edge-Gauss-averaged) Lax-Friedrichs flux.  High-order
admissibility rests on the per-cell convex decomposition

    avg^{n+1} = (1 - 2 beta_k) W_k + 2 (beta_k - lambda_k) Xi1
                + 2 lambda_k Xi2,

which ``decomposition_terms`` assembles independently so tests can check
the identity against the actual step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import StepError, UnsupportedOrder
from .flux import flux_from_primitives
from .geometry import cell_decomposition, discrete_div, face_quad_points
from .limiter import limit_values
from .recovery import recover_primitives_batch
from .states import U_DIM, is_admissible_g0

__all__ = [
    "CflPolicy", "FieldSolution", "beta_values", "compute_dt",
    "step_first_order", "step_high_order", "reconstruct_p1",
    "apply_pcp_limiter", "ssp_advance", "decomposition_terms",
    "discrete_div_traces", "diagnostics", "DecompositionCache",
]


@dataclass(frozen=True)
class CflPolicy:
    """Time-step policy: dt = sigma * min_k (scheme bound for cell k)."""

    sigma: float = 0.9
    alpha: float = 1.0

    def __post_init__(self):
        if not (0.0 < self.sigma):
            raise ValueError("sigma must be positive")
        if self.alpha < 1.0:
            raise ValueError("alpha must be >= 1")


@dataclass
class FieldSolution:
    """Per-cell solution: averages (n_cells, 8) and, for P1, gradients
    (n_cells, 8, 2) about the centroids."""

    avg: np.ndarray
    grad: np.ndarray = None
    t: float = 0.0
    n: int = 0

    def evaluate(self, cell, points):
        points = np.asarray(points, dtype=float)
        out = np.broadcast_to(self.avg[cell],
                              points.shape[:-1] + (U_DIM,)).copy()
        if self.grad is not None:
            # stored centroid offset convention: caller passes absolute
            # points minus the centroid
            out += points @ self.grad[cell].T
        return out


def _perimeter(mesh):
    out = np.zeros(mesh.n_cells)
    np.add.at(out, mesh.face_cell, mesh.face_measure)
    return out


def beta_values(mesh, quad):
    """Per-cell convex-decomposition weight bounding the high-order CFL
    number: omega_hat_1 on rectangles, edge-ratio dependent on triangles."""
    w1 = quad.omega_hat_1
    if mesh.kind == "cartesian":
        return np.full(mesh.n_cells, w1)
    if mesh.kind == "triangular":
        out = np.empty(mesh.n_cells)
        for k, ids in enumerate(mesh.cell_faces):
            lens = mesh.face_measure[ids]
            out[k] = (w1 / 3.0) * np.sum(lens) / np.max(lens)
        return out
    raise UnsupportedOrder("high-order bounds exist for rectangles and "
                           "triangles only")


def compute_dt(mesh, cfl, order=1, quad=None):
    """Largest stable step times the safety fraction sigma."""
    per = _perimeter(mesh)
    bound = 2.0 * mesh.cell_measure / (cfl.alpha * per)
    if order > 1:
        if quad is None:
            raise UnsupportedOrder("high-order dt needs a quadrature set")
        bound = bound * beta_values(mesh, quad)
    return cfl.sigma * float(np.min(bound))


def _recover_or_raise(eos, u, what):
    rec = recover_primitives_batch(eos, u.reshape(-1, U_DIM))
    if not np.all(rec["ok"]):
        bad = int(np.argmin(rec["ok"]))
        raise StepError(
            f"inadmissible state in {what}: entry {bad}, "
            f"U = {u.reshape(-1, U_DIM)[bad]}", cell=bad)
    return {k: v.reshape(u.shape[:-1] + v.shape[1:])
            for k, v in rec.items() if isinstance(v, np.ndarray)}


def _directed(flux3, xi):
    """Contract (..., 3, 8) axis fluxes with 2D directions (..., 2)."""
    return (xi[..., 0, None] * flux3[..., 0, :]
            + xi[..., 1, None] * flux3[..., 1, :])


def _check_averages(avg, what):
    ok = is_admissible_g0(avg)
    if not np.all(ok):
        k = int(np.argmin(ok))
        raise StepError(f"{what}: cell {k} left the admissible set, "
                        f"U = {avg[k]}", cell=k)


def step_first_order(sol, mesh, eos, cfl, dt=None, check=True):
    """One forward-Euler step of the piecewise-constant scheme."""
    if dt is None:
        dt = compute_dt(mesh, cfl, order=1)
    avg = sol.avg
    rec = _recover_or_raise(eos, avg, "cell averages")
    flux3 = flux_from_primitives(rec["rho"], rec["v"], rec["B"], rec["p"],
                                 rec["h"])
    k = mesh.face_cell
    j = np.where(mesh.face_neigh >= 0, mesh.face_neigh, k)
    xi = mesh.face_normal
    fk = _directed(flux3[k], xi)
    fj = _directed(flux3[j], xi)
    fhat = 0.5 * (fk + fj - cfl.alpha * (avg[j] - avg[k]))
    new = avg.copy()
    np.add.at(new, k, -(dt / mesh.cell_measure[k])[:, None]
              * mesh.face_measure[:, None] * fhat)
    if check:
        _check_averages(new, "first-order step")
    return FieldSolution(avg=new, t=sol.t + dt, n=sol.n + 1)


def _face_traces(avg, grad, mesh, quad):
    """Owner and neighbor state traces at the face Gauss nodes.

    Returns (trace_k, trace_j), each (n_faces, Q, 8).  The neighbor trace
    reuses the twin's owner trace with the node order reversed (the Gauss
    nodes are symmetric and the twin walks the edge backwards); outflow
    faces copy the owner trace.
    """
    pts = face_quad_points(mesh, quad)
    k = mesh.face_cell
    trace_k = avg[k][:, None, :] \
        + np.einsum("fqd,fcd->fqc", pts - mesh.centroid[k][:, None, :],
                    grad[k])
    twin = mesh.face_twin
    safe = np.where(twin >= 0, twin, np.arange(mesh.n_faces))
    trace_j = trace_k[safe][:, ::-1, :].copy()
    out = twin < 0
    if np.any(out):
        trace_j[out] = trace_k[out]
    return trace_k, trace_j


def step_high_order(sol, mesh, eos, cfl, quad, dt=None, check=True):
    """One forward-Euler step of the P1 cell-average scheme; the node
    values of sol must already be limited into the admissible set."""
    if sol.grad is None:
        raise UnsupportedOrder("step_high_order needs a P1 solution")
    if dt is None:
        dt = compute_dt(mesh, cfl, order=2, quad=quad)
    trace_k, trace_j = _face_traces(sol.avg, sol.grad, mesh, quad)
    rec_k = _recover_or_raise(eos, trace_k, "owner face traces")
    rec_j = _recover_or_raise(eos, trace_j, "neighbor face traces")
    xi = mesh.face_normal[:, None, :]
    fk = _directed(flux_from_primitives(rec_k["rho"], rec_k["v"],
                                        rec_k["B"], rec_k["p"],
                                        rec_k["h"]), xi)
    fj = _directed(flux_from_primitives(rec_j["rho"], rec_j["v"],
                                        rec_j["B"], rec_j["p"],
                                        rec_j["h"]), xi)
    node_flux = 0.5 * (fk + fj - cfl.alpha * (trace_j - trace_k))
    fhat = np.einsum("q,fqc->fc", quad.omega, node_flux)
    k = mesh.face_cell
    new = sol.avg.copy()
    np.add.at(new, k, -(dt / mesh.cell_measure[k])[:, None]
              * mesh.face_measure[:, None] * fhat)
    if check:
        _check_averages(new, "high-order step")
    return FieldSolution(avg=new, grad=sol.grad, t=sol.t + dt, n=sol.n + 1)


def reconstruct_p1(avg, mesh, quad=None, divfree_b=False, limit=True):
    """Least-squares P1 gradients from neighbor averages.

    Per component, the gradient minimizes the mismatch of avg differences
    to neighboring cells; an optional Barth-Jespersen-type factor keeps
    face-node values inside the neighbor-average range, applied jointly to
    (B1, B2) so the optional trace-free (locally divergence-free) magnetic
    projection survives limiting.
    """
    nc = mesh.n_cells
    k = mesh.face_cell
    interior = mesh.face_neigh >= 0
    ki = k[interior]
    ji = mesh.face_neigh[interior]
    # neighbor centroid as seen from the owner frame
    d = (mesh.centroid[ji] + mesh.face_shift[interior]) - mesh.centroid[ki]
    du = avg[ji] - avg[ki]
    A = np.zeros((nc, 2, 2))
    rhs = np.zeros((nc, U_DIM, 2))
    np.add.at(A, ki, d[:, :, None] * d[:, None, :])
    np.add.at(rhs, ki, du[:, :, None] * d[:, None, :])
    # guard cells with too few neighbors for a well-posed fit
    sing = np.abs(np.linalg.det(A)) < 1e-30 * np.maximum(
        np.einsum("kii->k", A), 1e-300) ** 2
    A[sing] = np.eye(2)
    rhs[sing] = 0.0
    grad = np.linalg.solve(A[:, None, :, :], rhs[..., None])[..., 0]
    if divfree_b:
        trace = 0.5 * (grad[:, 4, 0] + grad[:, 5, 1])
        grad[:, 4, 0] -= trace
        grad[:, 5, 1] -= trace
    if limit and quad is not None:
        grad *= _bj_factors(avg, grad, mesh, quad)[:, :, None]
    return grad


def _bj_factors(avg, grad, mesh, quad):
    nc = mesh.n_cells
    k = mesh.face_cell
    interior = mesh.face_neigh >= 0
    ki = k[interior]
    ji = mesh.face_neigh[interior]
    hi = avg.copy()
    lo = avg.copy()
    np.maximum.at(hi, ki, avg[ji])
    np.minimum.at(lo, ki, avg[ji])
    pts = face_quad_points(mesh, quad)
    dev = np.einsum("fqd,fcd->fqc", pts - mesh.centroid[k][:, None, :],
                    grad[k])
    dmax = np.zeros((nc, U_DIM))
    dmin = np.zeros((nc, U_DIM))
    np.maximum.at(dmax, k, np.max(dev, axis=1))
    np.minimum.at(dmin, k, np.min(dev, axis=1))
    up = hi - avg
    dn = lo - avg
    with np.errstate(divide="ignore", invalid="ignore"):
        phi_up = np.where(dmax > 1e-300, up / np.maximum(dmax, 1e-300), 1.0)
        phi_dn = np.where(dmin < -1e-300, dn / np.minimum(dmin, -1e-300), 1.0)
    phi = np.clip(np.minimum(phi_up, phi_dn), 0.0, 1.0)
    # joint factor for the in-plane magnetic pair keeps it trace-free
    bpair = np.minimum(phi[:, 4], phi[:, 5])
    phi[:, 4] = bpair
    phi[:, 5] = bpair
    return phi


class DecompositionCache:
    """Per-mesh decomposition node offsets (node minus centroid) and
    weights, grouped so the limiter can run as one batch when every cell
    has the same node count."""

    def __init__(self, mesh, quad):
        offs, wts = [], []
        for cell in range(mesh.n_cells):
            nodes, w, _ = cell_decomposition(mesh, cell, quad)
            offs.append(nodes - mesh.centroid[cell])
            wts.append(w)
        counts = {o.shape[0] for o in offs}
        self.uniform = len(counts) == 1
        if self.uniform:
            self.offsets = np.array(offs)
            self.weights = np.array(wts)
        else:
            self.offsets = offs
            self.weights = wts


def apply_pcp_limiter(avg, grad, mesh, cache, eps):
    """Scale gradients so decomposition-node values enter the shrunken
    admissible set; returns the new gradients and the theta triple."""
    if cache.uniform:
        values = avg[:, None, :] + np.einsum(
            "knd,kcd->knc", cache.offsets, grad)
        _, t1, t2, t3 = limit_values(values, avg, eps)
    else:
        t1 = np.empty(mesh.n_cells)
        t2 = np.empty(mesh.n_cells)
        t3 = np.empty(mesh.n_cells)
        for cell in range(mesh.n_cells):
            vals = avg[cell] + cache.offsets[cell] @ grad[cell].T
            _, a, b, c = limit_values(vals[None], avg[cell][None], eps)
            t1[cell], t2[cell], t3[cell] = a[0], b[0], c[0]
    factors = np.empty((mesh.n_cells, U_DIM))
    factors[:, 0] = t1 * t2 * t3
    factors[:, 1:4] = (t2 * t3)[:, None]
    factors[:, 4:7] = t3[:, None]
    factors[:, 7] = t2 * t3
    return grad * factors[:, :, None], (t1, t2, t3)


def _stage(avg, mesh, eos, cfl, dt, order, quad, cache, eps, divfree_b,
           check):
    sol = FieldSolution(avg=avg)
    if order == 1:
        return step_first_order(sol, mesh, eos, cfl, dt=dt,
                                check=check).avg
    grad = reconstruct_p1(avg, mesh, quad=quad, divfree_b=divfree_b)
    grad, _ = apply_pcp_limiter(avg, grad, mesh, cache, eps)
    sol = FieldSolution(avg=avg, grad=grad)
    return step_high_order(sol, mesh, eos, cfl, quad, dt=dt, check=check).avg


def ssp_advance(sol, mesh, eos, cfl, order=1, rk=None, quad=None,
                cache=None, eps=1e-13, divfree_b=True, dt=None, check=True):
    """One SSP Runge-Kutta step (rk in {1, 2, 3}, default = spatial order
    capped at 3); each stage is a forward-Euler step with reconstruction
    and PCP limiting, combined convexly."""
    if rk is None:
        rk = min(max(order, 1), 3)
    if order > 1 and (quad is None or cache is None):
        raise UnsupportedOrder("high order needs quad and cache")
    if dt is None:
        dt = compute_dt(mesh, cfl, order=order, quad=quad)

    def stage(u):
        return _stage(u, mesh, eos, cfl, dt, order, quad, cache, eps,
                      divfree_b, check)

    u0 = sol.avg
    if rk == 1:
        new = stage(u0)
    elif rk == 2:
        u1 = stage(u0)
        new = 0.5 * u0 + 0.5 * stage(u1)
    elif rk == 3:
        u1 = stage(u0)
        u2 = 0.75 * u0 + 0.25 * stage(u1)
        u3 = stage(u2)
        new = u0 / 3.0 + 2.0 / 3.0 * u3
    else:
        raise UnsupportedOrder("rk must be 1, 2 or 3")
    return FieldSolution(avg=new, grad=sol.grad, t=sol.t + dt, n=sol.n + 1)


def decomposition_terms(sol, mesh, eos, cfl, quad, dt):
    """Independently assemble (W_k, Xi1, Xi2, lambda_k, beta_k) of the
    high-order convex decomposition so tests can verify

        step result = (1 - 2 beta) W + 2 (beta - lambda) Xi1
                      + 2 lambda Xi2.
    """
    trace_k, trace_j = _face_traces(sol.avg, sol.grad, mesh, quad)
    rec_k = _recover_or_raise(eos, trace_k, "owner face traces")
    rec_j = _recover_or_raise(eos, trace_j, "neighbor face traces")
    xi = mesh.face_normal[:, None, :]
    fk = _directed(flux_from_primitives(rec_k["rho"], rec_k["v"],
                                        rec_k["B"], rec_k["p"],
                                        rec_k["h"]), xi)
    fj = _directed(flux_from_primitives(rec_j["rho"], rec_j["v"],
                                        rec_j["B"], rec_j["p"],
                                        rec_j["h"]), xi)
    wq = quad.omega
    mean_k = np.einsum("q,fqc->fc", wq, trace_k)
    split_k = np.einsum("q,fqc->fc", wq, trace_k - fk / cfl.alpha)
    split_j = np.einsum("q,fqc->fc", wq, trace_j - fj / cfl.alpha)
    per = _perimeter(mesh)
    k = mesh.face_cell
    wfar = mesh.face_measure[:, None]
    xi1 = np.zeros_like(sol.avg)
    xi2 = np.zeros_like(sol.avg)
    np.add.at(xi1, k, wfar * mean_k)
    np.add.at(xi2, k, wfar * (split_k + split_j))
    xi1 /= per[:, None]
    xi2 /= 2.0 * per[:, None]
    beta = beta_values(mesh, quad)
    lam = cfl.alpha * dt * per / (2.0 * mesh.cell_measure)
    w = (sol.avg - 2.0 * beta[:, None] * xi1) / (1.0 - 2.0 * beta[:, None])
    return w, xi1, xi2, lam, beta


def discrete_div_traces(avg, grad, mesh, quad, mode="centered"):
    """High-order discrete divergences of the magnetic polynomial from its
    face-node traces; reduces to the piecewise-constant operator when grad
    is None."""
    if grad is None:
        return discrete_div(mesh, avg[:, 4:6], mode=mode)
    trace_k, trace_j = _face_traces(avg, grad, mesh, quad)
    bk = trace_k[..., 4:6]
    bj = trace_j[..., 4:6]
    if mode == "inner":
        b = bk
    elif mode == "outer":
        b = bj
    else:
        b = 0.5 * (bk + bj)
    comp = np.einsum("q,fqd,fd->f", quad.omega, b, mesh.face_normal)
    out = np.zeros(mesh.n_cells)
    np.add.at(out, mesh.face_cell, comp * mesh.face_measure)
    return out


def diagnostics(sol, mesh, eos, quad=None):
    """Step diagnostics row: extrema of the recovered primitives,
    divergence norms, and the conserved totals."""
    rec = _recover_or_raise(eos, sol.avg, "diagnostics")
    div = discrete_div_traces(sol.avg, sol.grad, mesh, quad) \
        if (sol.grad is not None and quad is not None) \
        else discrete_div(mesh, sol.avg[:, 4:6])
    div_out = discrete_div_traces(sol.avg, sol.grad, mesh, quad,
                                  mode="outer") \
        if (sol.grad is not None and quad is not None) \
        else discrete_div(mesh, sol.avg[:, 4:6], mode="outer")
    vol = mesh.cell_measure
    return {
        "n": sol.n, "t": sol.t,
        "min_rho": float(np.min(rec["rho"])),
        "min_p": float(np.min(rec["p"])),
        "max_W": float(np.max(rec["W"])),
        "max_abs_div": float(np.max(np.abs(div))),
        "max_abs_div_out": float(np.max(np.abs(div_out))),
        "mass_total": float(np.sum(vol * sol.avg[:, 0])),
        "energy_total": float(np.sum(vol * sol.avg[:, 7])),
    }
