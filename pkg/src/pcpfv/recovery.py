"""Conservative-to-primitive inversion.

The unknown is xi = rho h W^2.  The scalar residual f_U(xi) is strictly
increasing on (xi4, +inf), where xi4 is the unique positive root of the
quartic f4, so a bracketed Newton iteration on that branch is globally
convergent.  Everything here is vectorized over a batch of states; the
scalar API wraps batch size one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DomainError, InadmissibleError
from .states import PrimitiveState, _u

__all__ = [
    "RecoveryWorkspace", "f_omega", "lorentz_of_xi", "f_u", "find_xi4",
    "recover_primitives", "recover_primitives_batch",
]

_MAX_DOUBLINGS = 200
_MAX_ITER = 200
_FD_REL_STEP = 1e-7


@dataclass
class RecoveryWorkspace:
    """Solve diagnostics: the bracketing quartic root, the residual root,
    iteration count and final residual."""

    xi4: float
    xi_star: float
    iterations: int
    residual: float


def _moduli(u):
    m2 = np.sum(u[..., 1:4] ** 2, axis=-1)
    b2 = np.sum(u[..., 4:7] ** 2, axis=-1)
    mb = np.sum(u[..., 1:4] * u[..., 4:7], axis=-1)
    return m2, b2, mb


def f_omega(U, xi):
    """f_Omega(xi) = xi^2 (xi + |B|^2)^2 - [xi^2 |m|^2 + (2 xi + |B|^2)(m.B)^2].

    Positive exactly where the Lorentz factor W(xi) is real and nonzero.
    """
    u = _u(U)
    xi = np.asarray(xi, dtype=float)
    m2, b2, mb = _moduli(u)
    return (xi * (xi + b2)) ** 2 - (xi * xi * m2 + (2.0 * xi + b2) * mb * mb)


def lorentz_of_xi(U, xi):
    """W(xi) = xi (xi + |B|^2) / sqrt(f_Omega(xi)); requires xi in Omega_f."""
    u = _u(U)
    xi = np.asarray(xi, dtype=float)
    fom = f_omega(u, xi)
    if np.any(fom <= 0.0):
        raise DomainError("xi outside Omega_f: W(xi) would be zero or imaginary")
    _, b2, _ = _moduli(u)
    return xi * (xi + b2) / np.sqrt(fom)


def f_u(eos, U, xi):
    """Residual f_U(xi) = xi - p(D/W, xi/(D W)) + |B|^2
    - (|B|^2 / W^2 + (m.B)^2 / xi^2) / 2 - E."""
    u = _u(U)
    xi = np.asarray(xi, dtype=float)
    d = u[..., 0]
    if np.any(d <= 0.0):
        raise DomainError("D must be positive")
    w = lorentz_of_xi(u, xi)
    return _f_u_given_w(eos, u, xi, w)


def _f_u_given_w(eos, u, xi, w):
    m2, b2, mb = _moduli(u)
    mods = (u[..., 0], u[..., 7], m2, b2, mb)
    return _fu_w(eos, xi, w, mods)


def _fu_w(eos, xi, w, mods):
    d, e, _, b2, mb = mods
    p = eos.pressure_unchecked(d / w, xi / (d * w))
    return (xi - p + b2 - 0.5 * (b2 / (w * w) + (mb / xi) ** 2) - e)


def _f4(u, xi):
    m2, b2, mb = _moduli(u)
    return _f4_m(xi, (u[..., 0], u[..., 7], m2, b2, mb))


def _f4_m(xi, mods):
    d, _, m2, b2, mb = mods
    return _fom_m(xi, m2, b2, mb) - (d * (xi + b2)) ** 2


def _find_xi4_batch(u):
    """Unique positive root of f4 per state: doubling search for an upper
    sign change from max(D, 1e-12), then bisection to relative 1e-14.

    The lower bracket is 0, where f4 <= 0 for every state with D > 0.
    """
    d = u[..., 0]
    if np.any(d <= 0.0):
        raise DomainError("D must be positive")
    m2, b2, mb = _moduli(u)
    mods = (d, u[..., 7], m2, b2, mb)
    hi = np.maximum(d, 1e-12)
    for _ in range(_MAX_DOUBLINGS):
        bad = _f4_m(hi, mods) <= 0.0
        if not np.any(bad):
            break
        hi = np.where(bad, 2.0 * hi, hi)
    else:
        raise ConvergenceError("no sign change for f4 within 200 doublings")
    lo = np.zeros_like(hi)
    for _ in range(_MAX_ITER):
        mid = 0.5 * (lo + hi)
        pos = _f4_m(mid, mods) > 0.0
        hi = np.where(pos, mid, hi)
        lo = np.where(pos, lo, mid)
        if np.all(hi - lo <= 1e-14 * hi):
            break
    return hi


def find_xi4(U):
    """Scalar xi4 for one state (see ``_find_xi4_batch``)."""
    u = _u(U)
    if u.ndim == 1:
        return float(_find_xi4_batch(u[None])[0])
    return _find_xi4_batch(u)


def _solve_xi_batch(eos, u, tol):
    """Safeguarded Newton-bisection for the root of f_U on (xi4, inf).

    Returns (xi, xi4, iterations, residual, ok); ok is False where the
    residual has no root on the monotone branch (inadmissible state).
    """
    xi4 = _find_xi4_batch(u)
    m2, b2, mb = _moduli(u)
    e = u[..., 7]
    d = u[..., 0]
    mods = (d, e, m2, b2, mb)
    scale = np.maximum(1.0, np.abs(e))
    eps = np.finfo(float).eps

    lo = xi4
    f_lo = _fu_w(eos, lo, _w_safe_m(lo, m2, b2, mb), mods)
    # The residual is evaluated with round-off of order eps times the size
    # of its largest term; a root can sit inside that noise band just above
    # the bracketing quartic root (vanishing-pressure states).
    noise = 64.0 * eps * (np.abs(e) + b2 + d + xi4 + (mb / xi4) ** 2)
    ok = f_lo < noise
    at_lo = ok & (f_lo >= 0.0)  # root indistinguishable from xi4

    hi = np.maximum(2.0 * xi4, e + b2 + d)
    hi = np.maximum(hi, lo)
    for _ in range(_MAX_DOUBLINGS):
        f_hi = _fu_w(eos, hi, _w_m(hi, m2, b2, mb), mods)
        bad = ok & (f_hi <= 0.0)
        if not np.any(bad):
            break
        hi = np.where(bad, 2.0 * hi, hi)
    else:
        raise ConvergenceError("no upper bracket for f_U within 200 doublings")

    x = 0.5 * (lo + hi)
    iters = np.zeros(x.shape, dtype=int)
    # Newton-bisection on the shrinking subset of unconverged states
    idx = np.flatnonzero(np.ravel(ok & ~at_lo))
    flat = x.reshape(-1)
    xs = flat[idx]
    los = lo.reshape(-1)[idx].copy()
    his = hi.reshape(-1)[idx].copy()
    ds, es = d.reshape(-1)[idx], e.reshape(-1)[idx]
    m2s, b2s, mbs = (m2.reshape(-1)[idx], b2.reshape(-1)[idx],
                     mb.reshape(-1)[idx])
    scales = scale.reshape(-1)[idx]
    iflat = iters.reshape(-1)
    for it in range(_MAX_ITER):
        if idx.size == 0:
            break
        mods_s = (ds, es, m2s, b2s, mbs)
        fx = _fu_w(eos, xs, _w_m(xs, m2s, b2s, mbs), mods_s)
        pos = fx > 0.0
        his = np.where(pos, xs, his)
        los = np.where(pos, los, xs)
        # Newton step with a centered-difference derivative; fall back to
        # bisection when the step leaves the bracket or the slope is bad.
        step = _FD_REL_STEP * xs
        fp = _fu_w(eos, xs + step, _w_safe_m(xs + step, m2s, b2s, mbs),
                   mods_s)
        fm = _fu_w(eos, xs - step, _w_safe_m(xs - step, m2s, b2s, mbs),
                   mods_s)
        deriv = (fp - fm) / (2.0 * step)
        with np.errstate(divide="ignore", invalid="ignore"):
            x_new = xs - fx / deriv
        inside = (x_new > los) & (x_new < his) & np.isfinite(x_new)
        x_new = np.where(inside, x_new, 0.5 * (los + his))
        # stop only when the residual is satisfied AND the iterate has
        # stalled at floating-point resolution (or within the jitter band
        # the residual's own evaluation noise permits): xi must be as
        # accurate as the data allow, not merely residual-small on an
        # absolute scale
        fnoise = eps * (np.abs(es) + b2s + ds + xs + np.abs(fx)
                        + (mbs / xs) ** 2)
        with np.errstate(divide="ignore", invalid="ignore"):
            jitter = 2.0 * fnoise / np.abs(deriv)
        jitter = np.where(np.isfinite(jitter), jitter, 0.0)
        stalled = np.abs(x_new - xs) <= 4.0 * eps * xs
        at_noise = (np.abs(fx) <= 8.0 * fnoise) \
            & (np.abs(x_new - xs) <= np.maximum(4.0 * eps * xs, jitter))
        converged = ((np.abs(fx) <= tol * scales) & stalled) | at_noise \
            | (his - los <= 4.0 * eps * his)
        if it > 150:
            converged |= np.abs(fx) <= 64.0 * fnoise
        xs = np.where(converged, xs, x_new)
        iflat[idx] += 1
        flat[idx] = xs
        if np.any(converged):
            keep = ~converged
            idx = idx[keep]
            xs, los, his = xs[keep], los[keep], his[keep]
            ds, es, scales = ds[keep], es[keep], scales[keep]
            m2s, b2s, mbs = m2s[keep], b2s[keep], mbs[keep]
    if idx.size:
        raise ConvergenceError("f_U root solve exceeded the iteration cap")
    x = flat.reshape(x.shape)
    x = _polish_extended(eos, u, x, b2, xi4, ok & ~at_lo, eps)
    x = np.where(at_lo, xi4, x)
    res = np.where(ok, _fu_w(eos, x, _w_safe_m(x, m2, b2, mb), mods), np.nan)
    return x, xi4, iters, res, ok


def _polish_extended(eos, u, x, b2, xi4, sel, eps):
    """Newton polish in extended precision for iterates pinned only to the
    double-precision noise band of the residual.

    When the residual derivative is small (ultra-relativistic, pressure-
    dominated states) the root cannot be located more precisely than
    eps * scale / |f'| using double evaluation; a couple of extended-
    precision Newton steps recovers the accuracy the input data support.
    Falls back silently when the platform or the EOS cannot evaluate in
    extended precision.
    """
    if not np.any(sel) or np.finfo(np.longdouble).eps >= eps:
        return x
    try:
        with np.errstate(all="ignore"):
            ul = u[sel].astype(np.longdouble)
            xl = x[sel].astype(np.longdouble)
            x0 = xl.copy()
            bl = b2[sel].astype(np.longdouble)
            floor = xi4[sel].astype(np.longdouble) * (1.0 + 1e-18)
            f0 = np.abs(_f_u_given_w(eos, ul, xl, _w_of_safe(ul, xl, bl)))
            for _ in range(3):
                fx = _f_u_given_w(eos, ul, xl, _w_of_safe(ul, xl, bl))
                step = np.longdouble(1e-10) * xl
                fp = _f_u_given_w(eos, ul, xl + step,
                                  _w_of_safe(ul, xl + step, bl))
                fm = _f_u_given_w(eos, ul, xl - step,
                                  _w_of_safe(ul, xl - step, bl))
                deriv = (fp - fm) / (2.0 * step)
                delta = fx / deriv
                delta = np.where(np.isfinite(delta)
                                 & (np.abs(delta) < 0.1 * xl), delta, 0.0)
                xl = np.maximum(xl - delta, floor)
            f1 = np.abs(_f_u_given_w(eos, ul, xl, _w_of_safe(ul, xl, bl)))
            keep = np.isfinite(xl) & (xl > 0.0) & (f1 <= f0)
            xl = np.where(keep, xl, x0)
            res = x.copy()
            res[sel] = xl.astype(float)
        return res
    except Exception:
        return x


def _fom_m(xi, m2, b2, mb):
    # dtype-preserving f_Omega (no coercion: the extended-precision polish
    # feeds long doubles through here)
    return (xi * (xi + b2)) ** 2 - (xi * xi * m2 + (2.0 * xi + b2) * mb * mb)


def _w_m(xi, m2, b2, mb):
    fom = _fom_m(xi, m2, b2, mb)
    if np.any(fom <= 0.0):
        raise DomainError("iterate left Omega_f")
    return xi * (xi + b2) / np.sqrt(fom)


def _w_safe_m(xi, m2, b2, mb):
    # Finite-difference probes may poke just past xi4; clamp instead of raise.
    fom = np.maximum(_fom_m(xi, m2, b2, mb), 1e-300)
    return xi * (xi + b2) / np.sqrt(fom)


def _w_of_safe(u, xi, b2):
    m2, _, mb = _moduli(u)
    return _w_safe_m(xi, m2, b2, mb)


def recover_primitives_batch(eos, U, tol=1e-12):
    """Vectorized recovery for (n, 8) states.

    Returns a dict with rho, v, B, p, W, h, xi, xi4, iterations, residual and
    an ``ok`` mask; entries with ok False are inadmissible (no root, or
    recovered values violating rho > 0, p > 0, |v| < 1).
    """
    u = _u(U)
    squeeze = u.ndim == 1
    if squeeze:
        u = u[None]
    d = u[..., 0]
    if np.any(d <= 0.0):
        raise InadmissibleError("state with D <= 0")
    xi, xi4, iters, res, ok = _solve_xi_batch(eos, u, tol)
    _, b2, mb = _moduli(u)
    safe_xi = np.where(ok, xi, 1.0)
    w = _w_of_safe(u, safe_xi, b2)
    v = (u[..., 1:4] + (mb / safe_xi)[..., None] * u[..., 4:7]) \
        / (safe_xi + b2)[..., None]
    rho = d / w
    h = safe_xi / (d * w)
    # at vanishing pressure the ratio can round to 1 or a hair below; the
    # admissible branch always has h > 1, so nudge onto it
    h = np.where(ok, np.maximum(h, 1.0 + 1e-16), h)
    with np.errstate(invalid="ignore"):
        p = eos.pressure_unchecked(rho, np.maximum(h, 1.0 + 1e-16))
    v2 = np.sum(v * v, axis=-1)
    ok = ok & (rho > 0.0) & (p > 0.0) & (v2 < 1.0) & (h > 1.0)
    out = {
        "rho": rho, "v": v, "B": u[..., 4:7].copy(), "p": p,
        "W": w, "h": h, "xi": xi, "xi4": xi4,
        "iterations": iters, "residual": res, "ok": ok,
    }
    if squeeze:
        out = {k: (val[0] if isinstance(val, np.ndarray) else val)
               for k, val in out.items()}
    return out


def recover_primitives(eos, U, tol=1e-12):
    """Recover (rho, v, B, p) from one conserved state.

    Raises InadmissibleError when the state has no physical description.
    """
    rec = recover_primitives_batch(eos, U, tol)
    if not rec["ok"]:
        raise InadmissibleError(
            f"no admissible primitives for U = {np.asarray(_u(U))}")
    return PrimitiveState(rho=float(rec["rho"]), v=rec["v"], B=rec["B"],
                          p=float(rec["p"]))


def recovery_workspace(eos, U, tol=1e-12):
    """Run the xi solve and return its diagnostics."""
    rec = recover_primitives_batch(eos, U, tol)
    if not np.all(rec["ok"]):
        raise InadmissibleError("xi solve found no admissible root")
    return RecoveryWorkspace(
        xi4=float(np.atleast_1d(rec["xi4"])[0]),
        xi_star=float(np.atleast_1d(rec["xi"])[0]),
        iterations=int(np.atleast_1d(rec["iterations"])[0]),
        residual=float(np.atleast_1d(rec["residual"])[0]),
    )
