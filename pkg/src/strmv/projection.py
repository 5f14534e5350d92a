"""Exact Euclidean projection onto the portfolio feasible set.

The feasible set is the probability simplex intersected with a single
return halfspace. The projector first tries the simplex projection alone;
when the return constraint is violated there, the optimum lies on the
active face and is found by a one-dimensional search over the constraint's
multiplier nu, where x(nu) is the simplex projection of the shifted point
v + nu*mu and phi(nu) = mu.T @ x(nu) is continuous and nondecreasing. A
Dykstra-style alternating scheme remains as a safeguarded fallback.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (
    ArgumentError,
    InfeasibleTargetError,
    NumericError,
    ProjectionFailureError,
)


@dataclass
class FeasibleSet:
    """Simplex plus return constraint mu.T @ x >= R_target."""

    mu: np.ndarray
    R_target: float

    def __post_init__(self):
        self.mu = np.asarray(self.mu, dtype=np.float64)
        if self.mu.ndim != 1 or self.mu.size < 2:
            raise ArgumentError("mu must be a vector of length >= 2")
        if not np.all(np.isfinite(self.mu)) or not np.isfinite(self.R_target):
            raise NumericError("feasible set parameters must be finite")
        if self.R_target > self.mu.max():
            warnings.warn(
                f"R_target={self.R_target} exceeds max(mu)={self.mu.max()}; "
                "the feasible set is empty",
                stacklevel=2,
            )
        self.mu.setflags(write=False)

    @property
    def n(self) -> int:
        return self.mu.size


@dataclass
class ProjectionConfig:
    tol_scalar: float = 1e-10
    max_bracket_doublings: int = 60
    dykstra_max_iters: int = 10_000
    dykstra_tol: float = 1e-10

    def __post_init__(self):
        if min(self.tol_scalar, self.dykstra_tol) <= 0:
            raise ArgumentError("tolerances must be positive")
        if min(self.max_bracket_doublings, self.dykstra_max_iters) <= 0:
            raise ArgumentError("iteration budgets must be positive")


@dataclass
class ProjectionDiagnostics:
    constraint_active: bool = False
    nu_star: float = 0.0
    bracket_doublings: int = 0
    bisection_iters: int = 0
    fallback_used: bool = False
    return_residual: float = 0.0

    def to_dict(self) -> dict:
        return {
            "constraint_active": self.constraint_active,
            "nu_star": self.nu_star,
            "bracket_doublings": self.bracket_doublings,
            "bisection_iters": self.bisection_iters,
            "fallback_used": self.fallback_used,
            "return_residual": self.return_residual,
        }


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto {x >= 0, sum x = 1} by sorted thresholding.

    Sort descending, find the largest j with u_j - (cumsum_j - 1)/j > 0, and
    clip at that threshold. Ties keep their original order (stable sort); the
    projection value itself is tie-independent.
    """
    v = np.asarray(v, dtype=np.float64)
    if not np.all(np.isfinite(v)):
        raise NumericError("cannot project a non-finite point")
    u = -np.sort(-v, kind="stable")
    cssv = np.cumsum(u) - 1.0
    j = np.arange(1, v.size + 1)
    cand = np.nonzero(u - cssv / j > 0.0)[0]
    rho = cand[-1]
    tau = cssv[rho] / (rho + 1.0)
    x = np.maximum(v - tau, 0.0)
    # Roundoff guard: renormalize only on violations beyond 1e-14 to keep the
    # exact threshold construction untouched in the common case.
    if x.min() < -1e-14:
        x = np.maximum(x, 0.0)
        x /= x.sum()
    return x


def project_halfspace(y: np.ndarray, fs: FeasibleSet) -> np.ndarray:
    """Closed-form projection onto the return halfspace."""
    y = np.asarray(y, dtype=np.float64)
    mu = fs.mu
    norm2 = float(mu @ mu)
    if norm2 == 0.0:
        if fs.R_target > 0.0:
            raise InfeasibleTargetError("mu = 0 with a positive return target")
        return y.copy()
    gap = fs.R_target - float(mu @ y)
    if gap <= 0.0:
        return y.copy()
    return y + (gap / norm2) * mu


def _dual_point(v: np.ndarray, mu: np.ndarray, nu: float) -> np.ndarray:
    return project_simplex(v + nu * mu)


def project_feasible(
    v: np.ndarray,
    fs: FeasibleSet,
    cfg: ProjectionConfig | None = None,
) -> tuple[np.ndarray, ProjectionDiagnostics]:
    """Exact projection onto simplex-cap-halfspace via the scalar dual search.

    Returns the projected point and diagnostics. If the simplex projection
    already meets the return constraint it is returned unchanged; otherwise
    nu is bracketed by geometric doubling from 1 and refined by bisection
    until |phi(nu) - R_target| <= tol_scalar * max(1, |R_target|). A target
    equal to max(mu) exactly can exhaust the bracket budget (phi approaches
    that value only asymptotically), in which case the Dykstra fallback runs.
    """
    cfg = cfg or ProjectionConfig()
    v = np.asarray(v, dtype=np.float64)
    mu = fs.mu
    if v.shape != mu.shape:
        raise ArgumentError(f"point has shape {v.shape}, mu has shape {mu.shape}")
    if fs.R_target > mu.max():
        raise InfeasibleTargetError(
            f"R_target={fs.R_target} exceeds max(mu)={mu.max()}: no feasible portfolio"
        )
    diag = ProjectionDiagnostics()
    x0 = project_simplex(v)
    rtol = cfg.tol_scalar * max(1.0, abs(fs.R_target))
    phi0 = float(mu @ x0)
    if phi0 >= fs.R_target:
        diag.return_residual = 0.0
        return x0, diag

    diag.constraint_active = True
    lo, phi_lo = 0.0, phi0
    hi = 1.0
    bracketed = False
    for d in range(cfg.max_bracket_doublings):
        diag.bracket_doublings = d + 1
        x_hi = _dual_point(v, mu, hi)
        phi_hi = float(mu @ x_hi)
        if phi_hi >= fs.R_target:
            bracketed = True
            break
        lo, phi_lo = hi, phi_hi
        hi *= 2.0
    if not bracketed:
        diag.fallback_used = True
        x = dykstra_project(v, fs, cfg)
        diag.return_residual = abs(float(mu @ x) - fs.R_target)
        return x, diag

    # Bisection; phi is continuous and nondecreasing, so the residual shrinks
    # with the bracket. The iteration cap only guards pathological flats.
    x, nu = x_hi, hi
    if abs(phi_hi - fs.R_target) > rtol:
        for _ in range(200):
            diag.bisection_iters += 1
            mid = 0.5 * (lo + hi)
            x_mid = _dual_point(v, mu, mid)
            phi_mid = float(mu @ x_mid)
            if abs(phi_mid - fs.R_target) <= rtol:
                x, nu = x_mid, mid
                break
            if phi_mid >= fs.R_target:
                hi = mid
                x, nu = x_mid, mid
            else:
                lo = mid
        else:
            # Bracket collapsed without meeting the scalar tolerance; the
            # upper end is feasible-side, keep it but flag through residual.
            x, nu = _dual_point(v, mu, hi), hi
    diag.nu_star = nu
    diag.return_residual = abs(float(mu @ x) - fs.R_target)
    return x, diag


def dykstra_project(
    v: np.ndarray,
    fs: FeasibleSet,
    cfg: ProjectionConfig | None = None,
) -> np.ndarray:
    """Dykstra alternating projections between the simplex and the halfspace.

    Converges to the exact projection onto the intersection; stops when the
    simplex-side iterate moves less than dykstra_tol between sweeps.
    """
    cfg = cfg or ProjectionConfig()
    v = np.asarray(v, dtype=np.float64)
    x = v.copy()
    p = np.zeros_like(v)
    q = np.zeros_like(v)
    y_prev = None
    for _ in range(cfg.dykstra_max_iters):
        y = project_simplex(x + p)
        p = x + p - y
        x = project_halfspace(y + q, fs)
        q = y + q - x
        # Both half-iterates converge to the projection; requiring them to
        # agree guards against stalls where the simplex side parks on a
        # vertex for several sweeps while the corrections still evolve.
        change = float(np.linalg.norm(y - y_prev)) if y_prev is not None else np.inf
        if change <= cfg.dykstra_tol and float(np.linalg.norm(y - x)) <= cfg.dykstra_tol:
            return y
        y_prev = y
    raise ProjectionFailureError(
        f"Dykstra did not converge within {cfg.dykstra_max_iters} sweeps"
    )
