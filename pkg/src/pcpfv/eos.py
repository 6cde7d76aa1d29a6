"""Equations of state h = h(p, rho) and their inverse form p = p(rho, h).

Units have c = 1 throughout; h is the specific enthalpy, dimensionless.
All evaluators are vectorized over numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.optimize import brentq

from .errors import ConvergenceError, DomainError

__all__ = [
    "Eos",
    "IdealEos",
    "TaubMathewsEos",
    "TabulatedEos",
    "Violation",
    "ValidationReport",
    "validate_eos",
    "load_eos_table",
    "save_eos_table",
]


def _check_positive(name, x):
    x = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(x)) or np.any(x <= 0.0):
        raise DomainError(f"{name} must be positive and finite")
    return x


class Eos:
    """Abstract EOS: forward h(p, rho), inverse p(rho, h), and partials.

    Subclasses implement the unchecked ``_h``, ``_p`` and derivative hooks;
    the public methods validate their inputs.  Instances are immutable and
    safe for concurrent reads.
    """

    def enthalpy(self, p, rho):
        """Specific enthalpy h(p, rho) > 1."""
        p = _check_positive("p", p)
        rho = _check_positive("rho", rho)
        return self._h(p, rho)

    def pressure_from_rho_h(self, rho, h):
        """Gas pressure p(rho, h) > 0 for h > 1."""
        rho = _check_positive("rho", rho)
        h = np.asarray(h, dtype=float)
        if np.any(~np.isfinite(h)) or np.any(h <= 1.0):
            raise DomainError("h must be finite and > 1")
        return self._p(rho, h)

    # Unchecked fast paths for the C2P hot loop, where the iterate is
    # already confined to the valid branch.
    def pressure_unchecked(self, rho, h):
        return self._p(np.asarray(rho, dtype=float), np.asarray(h, dtype=float))

    def dh_dp(self, p, rho):
        p = _check_positive("p", p)
        rho = _check_positive("rho", rho)
        return self._dh_dp(p, rho)

    def dh_drho(self, p, rho):
        p = _check_positive("p", p)
        rho = _check_positive("rho", rho)
        return self._dh_drho(p, rho)

    def dp_dh(self, rho, h):
        rho = _check_positive("rho", rho)
        return self._dp_dh(rho, np.asarray(h, dtype=float))

    def dp_drho(self, rho, h):
        rho = _check_positive("rho", rho)
        return self._dp_drho(rho, np.asarray(h, dtype=float))

    # hooks -----------------------------------------------------------------
    def _h(self, p, rho):
        raise NotImplementedError

    def _p(self, rho, h):
        raise NotImplementedError

    def _dh_dp(self, p, rho):
        raise NotImplementedError

    def _dh_drho(self, p, rho):
        raise NotImplementedError

    def _dp_dh(self, rho, h):
        raise NotImplementedError

    def _dp_drho(self, rho, h):
        raise NotImplementedError


@dataclass(frozen=True)
class IdealEos(Eos):
    """Ideal gas: h = 1 + gamma p / ((gamma - 1) rho), gamma in (1, 2]."""

    gamma: float = 5.0 / 3.0

    def __post_init__(self):
        if not (1.0 < self.gamma <= 2.0):
            raise DomainError("adiabatic index must lie in (1, 2]")

    @property
    def _g(self):
        return self.gamma / (self.gamma - 1.0)

    def _h(self, p, rho):
        return 1.0 + self._g * p / rho

    def _p(self, rho, h):
        return rho * (h - 1.0) / self._g

    def _dh_dp(self, p, rho):
        return self._g / rho + np.zeros_like(p)

    def _dh_drho(self, p, rho):
        return -self._g * p / rho**2

    def _dp_dh(self, rho, h):
        return rho / self._g + np.zeros_like(np.asarray(h, dtype=float))

    def _dp_drho(self, rho, h):
        return (h - 1.0) / self._g + np.zeros_like(np.asarray(rho, dtype=float))


@dataclass(frozen=True)
class TaubMathewsEos(Eos):
    """Approximate Synge gas: h = 2.5 T + sqrt(2.25 T^2 + 1) with T = p/rho.

    The closed form used by Mignone, Plewa & Bodo (2005); satisfies the
    kinetic-theory causality bound with a margin for all T > 0.
    """

    def _h(self, p, rho):
        t = p / rho
        return 2.5 * t + np.sqrt(2.25 * t * t + 1.0)

    def _p(self, rho, h):
        # Invert: 4 T^2 - 5 h T + (h^2 - 1) = 0, lower root so T -> 0 as h -> 1.
        h = np.asarray(h, dtype=float)
        disc = np.sqrt(9.0 * h * h + 16.0)
        t = (5.0 * h - disc) / 8.0
        return rho * t

    def _dh_dt(self, t):
        return 2.5 + 2.25 * t / np.sqrt(2.25 * t * t + 1.0)

    def _dh_dp(self, p, rho):
        return self._dh_dt(p / rho) / rho

    def _dh_drho(self, p, rho):
        return -self._dh_dt(p / rho) * p / rho**2

    def _dp_dh(self, rho, h):
        h = np.asarray(h, dtype=float)
        dt_dh = (5.0 - 9.0 * h / np.sqrt(9.0 * h * h + 16.0)) / 8.0
        return rho * dt_dh

    def _dp_drho(self, rho, h):
        h = np.asarray(h, dtype=float)
        disc = np.sqrt(9.0 * h * h + 16.0)
        return (5.0 * h - disc) / 8.0 + np.zeros_like(np.asarray(rho, dtype=float))


class TabulatedEos(Eos):
    """EOS from a tabulated h over a rectangular (p, rho) grid.

    Bilinear interpolation in (log p, log rho); the inverse p(rho, h) is a
    bracketed 1D root solve along p.  Derivatives are centered finite
    differences with relative step 1e-6.  Tables must pass ``validate_eos``
    before use with the solver: the constraint-preservation guarantees rely
    on the admissibility inequalities holding.
    """

    _FD_STEP = 1e-6

    def __init__(self, p_grid, rho_grid, h_table):
        p_grid = np.asarray(p_grid, dtype=float)
        rho_grid = np.asarray(rho_grid, dtype=float)
        h_table = np.asarray(h_table, dtype=float)
        if p_grid.ndim != 1 or rho_grid.ndim != 1:
            raise DomainError("p and rho grids must be 1D")
        if h_table.shape != (p_grid.size, rho_grid.size):
            raise DomainError("h table shape must be (np, nrho)")
        if np.any(p_grid <= 0) or np.any(rho_grid <= 0):
            raise DomainError("grid values must be positive")
        if np.any(np.diff(p_grid) <= 0) or np.any(np.diff(rho_grid) <= 0):
            raise DomainError("grids must be strictly increasing")
        self.p_grid = p_grid
        self.rho_grid = rho_grid
        self.h_table = h_table
        self._interp = RegularGridInterpolator(
            (np.log(p_grid), np.log(rho_grid)), h_table, method="linear",
            bounds_error=True)

    def _h(self, p, rho):
        p = np.asarray(p, dtype=float)
        rho = np.asarray(rho, dtype=float)
        pts = np.stack(np.broadcast_arrays(np.log(p), np.log(rho)), axis=-1)
        try:
            out = self._interp(pts.reshape(-1, 2)).reshape(pts.shape[:-1])
        except ValueError as exc:
            raise DomainError(f"(p, rho) outside table hull: {exc}") from exc
        return out if out.shape else float(out)

    def _p(self, rho, h):
        rho_b, h_b = np.broadcast_arrays(np.asarray(rho, float), np.asarray(h, float))
        flat_rho = np.ravel(rho_b)
        flat_h = np.ravel(h_b)
        out = np.empty_like(flat_rho)
        plo, phi = self.p_grid[0], self.p_grid[-1]
        for idx, (r, hh) in enumerate(zip(flat_rho, flat_h)):
            if not (self.rho_grid[0] <= r <= self.rho_grid[-1]):
                raise DomainError("rho outside table hull")
            f = lambda p: self._h(p, r) - hh  # noqa: E731
            flo, fhi = f(plo), f(phi)
            if flo > 0.0 or fhi < 0.0:
                raise ConvergenceError("h outside the table's enthalpy range")
            out[idx] = brentq(f, plo, phi, xtol=5e-324, rtol=8.9e-16,
                              maxiter=200)
        out = out.reshape(rho_b.shape)
        return out if out.shape else float(out)

    def _fd(self, fn, x, other, which):
        step = self._FD_STEP * np.abs(x)
        if which == "first":
            return (fn(x + step, other) - fn(x - step, other)) / (2.0 * step)
        return (fn(other, x + step) - fn(other, x - step)) / (2.0 * step)

    def _dh_dp(self, p, rho):
        return self._fd(self._h, np.asarray(p, float), rho, "first")

    def _dh_drho(self, p, rho):
        return self._fd(self._h, np.asarray(rho, float), p, "second")

    def _dp_dh(self, rho, h):
        return self._fd(self._p, np.asarray(h, float), rho, "second")

    def _dp_drho(self, rho, h):
        return self._fd(self._p, np.asarray(rho, float), h, "first")


def load_eos_table(path):
    """Read an ASCII table: header ``np nrho`` then np*nrho rows ``p rho h``.

    Rows are ordered row-major in p (rho varies fastest).
    """
    with open(path) as f:
        header = f.readline().split()
        if len(header) != 2:
            raise DomainError("table header must be 'np nrho'")
        n_p, n_rho = int(header[0]), int(header[1])
        data = np.loadtxt(f)
    if data.shape != (n_p * n_rho, 3):
        raise DomainError("table body does not match header dimensions")
    p = data[::n_rho, 0]
    rho = data[:n_rho, 1]
    h = data[:, 2].reshape(n_p, n_rho)
    return TabulatedEos(p, rho, h)


def save_eos_table(eos, path):
    """Write a TabulatedEos in the ASCII format read by ``load_eos_table``."""
    with open(path, "w") as f:
        f.write(f"{eos.p_grid.size} {eos.rho_grid.size}\n")
        for i, p in enumerate(eos.p_grid):
            for j, r in enumerate(eos.rho_grid):
                f.write(f"{p:.17g} {r:.17g} {eos.h_table[i, j]:.17g}\n")


@dataclass
class Violation:
    condition: str
    p: float
    rho: float
    margin: float


@dataclass
class ValidationReport:
    n_samples: int
    violations: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.violations


def validate_eos(eos, p_range=(1e-8, 1e3), rho_range=(1e-8, 1e3), n=10_000,
                 seed=0):
    """Sample-check the admissibility inequalities over a (p, rho) rectangle.

    Checks, at n log-uniform samples:
      causality          h >= sqrt(1 + p^2/rho^2) + p/rho
      thermal-expansion  h (1/rho - dh/dp) < dh/drho < 0
      inverse-causality  p(rho, h) <= (h^2 - 1) rho / (2 h)
      dp-dh-positive     dp/dh > 0
      inverse-chain      h (dp/dh / rho - 1) < -dp/drho < 0
    plus a soft check that h -> 1 as p -> 0 at a few fixed rho.

    Any violation is recorded with its location and margin (how far the
    inequality was missed); an empty report means all samples pass.
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    if p_range[0] <= 0 or rho_range[0] <= 0:
        raise DomainError("grid bounds must be positive")
    rng = np.random.default_rng(seed)
    p = np.exp(rng.uniform(np.log(p_range[0]), np.log(p_range[1]), n))
    rho = np.exp(rng.uniform(np.log(rho_range[0]), np.log(rho_range[1]), n))
    report = ValidationReport(n_samples=n)

    def record(cond, mask, margin):
        for i in np.flatnonzero(mask):
            report.violations.append(
                Violation(cond, float(p[i]), float(rho[i]), float(margin[i])))

    h = eos.enthalpy(p, rho)
    t = p / rho
    floor = np.sqrt(1.0 + t * t) + t
    record("causality", h < floor, h - floor)

    dh_dp = eos.dh_dp(p, rho)
    dh_drho = eos.dh_drho(p, rho)
    lhs = h * (1.0 / rho - dh_dp)
    record("thermal-expansion", ~((lhs < dh_drho) & (dh_drho < 0.0)),
           np.minimum(dh_drho - lhs, -dh_drho))

    p_back = eos.pressure_from_rho_h(rho, h)
    cap = (h * h - 1.0) * rho / (2.0 * h)
    record("inverse-causality", p_back > cap * (1.0 + 1e-12), cap - p_back)

    dp_dh = eos.dp_dh(rho, h)
    record("dp-dh-positive", dp_dh <= 0.0, dp_dh)

    dp_drho = eos.dp_drho(rho, h)
    lhs2 = h * (dp_dh / rho - 1.0)
    record("inverse-chain", ~((lhs2 < -dp_drho) & (-dp_drho < 0.0)),
           np.minimum(-dp_drho - lhs2, dp_drho))

    # Soft limit check: along p -> 0 the excess h - 1 must keep shrinking.
    for r in np.exp(np.linspace(np.log(rho_range[0]), np.log(rho_range[1]), 3)):
        p_seq = p_range[0] * 10.0 ** -np.arange(7.0)
        try:
            excess = np.asarray(eos.enthalpy(p_seq, np.full_like(p_seq, r))) - 1.0
        except DomainError:
            continue  # table hull does not extend below p_range[0]
        if excess[-1] > 0.5 * excess[0] and excess[-1] > 1e-8:
            report.violations.append(
                Violation("limit-h-to-1", float(p_seq[-1]), float(r),
                          float(excess[-1])))
    return report
