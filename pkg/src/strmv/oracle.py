"""Exact small-scale reference solver by active-set enumeration.

Solves min 1/2 x.T Q x + c.T x over the portfolio feasible set by brute
force: every subset of zero-pinned coordinates is combined with both states
of the return constraint, each equality-constrained system is solved, and
candidates are kept only if they pass primal feasibility and the dual sign
conditions. With n <= 14 the 2^n * 2 systems stay cheap, and the winner is
a certified KKT point, which is what makes this usable as ground truth for
the iterative solver and the projection routines.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, DimensionError, InfeasibleTargetError, NumericError
from .projection import FeasibleSet

logger = logging.getLogger(__name__)

MAX_ORACLE_DIM = 14

_FEAS_TOL = 1e-9
_DUAL_TOL = 1e-9
_RESIDUAL_TOL = 1e-8
_TIE_TOL = 1e-12


@dataclass
class QPInstance:
    """min 1/2 x.T Q x + c.T x subject to the feasible set."""

    Q: np.ndarray
    c: np.ndarray
    fs: FeasibleSet

    def __post_init__(self):
        self.Q = np.asarray(self.Q, dtype=np.float64)
        self.c = np.asarray(self.c, dtype=np.float64)
        n = self.fs.n
        if self.Q.shape != (n, n):
            raise DimensionError(f"Q must be {n}x{n}, got {self.Q.shape}")
        if self.c.shape != (n,):
            raise DimensionError(f"c must have length {n}")
        if n > MAX_ORACLE_DIM:
            raise ArgumentError(f"enumeration oracle is limited to n <= {MAX_ORACLE_DIM}")
        scale = max(1.0, float(np.abs(self.Q).max()))
        if float(np.abs(self.Q - self.Q.T).max()) > 1e-10 * scale:
            raise NumericError("Q must be symmetric")


@dataclass
class OracleSolution:
    x: np.ndarray
    value: float
    active_bounds: tuple[int, ...]  # indices pinned at zero
    return_active: bool
    subsets_visited: int
    subsets_skipped: int


def _candidate(
    Q: np.ndarray,
    c: np.ndarray,
    mu: np.ndarray,
    R: float,
    zero_set: tuple[int, ...],
    return_active: bool,
) -> tuple[np.ndarray, float, float] | None:
    """Solve the equality-constrained KKT system for one active-set guess.

    Returns (x, nu, kkt_residual) or None when the system has no usable
    least-squares solution.
    """
    n = Q.shape[0]
    free = [i for i in range(n) if i not in zero_set]
    if not free:
        return None  # budget constraint cannot hold with every weight zero
    f = len(free)
    rows = f + 1 + (1 if return_active else 0)
    A = np.zeros((rows, f + 1 + (1 if return_active else 0)))
    b = np.zeros(rows)
    A[:f, :f] = Q[np.ix_(free, free)]
    A[:f, f] = -1.0  # budget multiplier column
    if return_active:
        A[:f, f + 1] = -mu[free]
    b[:f] = -c[free]
    A[f, :f] = 1.0
    b[f] = 1.0
    if return_active:
        A[f + 1, :f] = mu[free]
        b[f + 1] = R
    sol, _, _, _ = np.linalg.lstsq(A, b, rcond=None)
    resid = float(np.linalg.norm(A @ sol - b))
    scale = max(1.0, float(np.abs(b).max()), float(np.abs(sol).max()))
    if resid > _RESIDUAL_TOL * scale:
        return None
    x = np.zeros(n)
    x[free] = sol[:f]
    nu = float(sol[f + 1]) if return_active else 0.0
    lam = float(sol[f])
    # Dual feasibility on the pinned bounds: eta_i >= 0.
    eta = Q @ x + c - lam - nu * mu
    if zero_set and float(eta[list(zero_set)].min()) < -_DUAL_TOL * scale:
        return None
    return x, nu, resid


def solve_exact(inst: QPInstance) -> OracleSolution:
    """Enumerate all active sets and return the best feasible KKT point.

    Ties within 1e-12 in value resolve to the lexicographically smallest
    (active bound set, return-active flag) pair so fixtures stay stable.
    """
    Q, c, fs = inst.Q, inst.c, inst.fs
    mu, R = fs.mu, fs.R_target
    n = fs.n
    rtol = _FEAS_TOL * max(1.0, abs(R))
    best: OracleSolution | None = None
    visited = 0
    skipped = 0
    for size in range(n + 1):
        for zero_set in itertools.combinations(range(n), size):
            for return_active in (False, True):
                visited += 1
                got = _candidate(Q, c, mu, R, zero_set, return_active)
                if got is None:
                    skipped += 1
                    continue
                x, nu, _ = got
                if float(x.min()) < -_FEAS_TOL:
                    continue
                if return_active:
                    if nu < -_DUAL_TOL:
                        continue
                else:
                    if float(mu @ x) < R - rtol:
                        continue
                value = 0.5 * float(x @ (Q @ x)) + float(c @ x)
                key = (tuple(zero_set), return_active)
                if (
                    best is None
                    or value < best.value - _TIE_TOL
                    or (
                        abs(value - best.value) <= _TIE_TOL
                        and key < (best.active_bounds, best.return_active)
                    )
                ):
                    best = OracleSolution(
                        x=x,
                        value=value,
                        active_bounds=tuple(zero_set),
                        return_active=return_active,
                        subsets_visited=0,
                        subsets_skipped=0,
                    )
    if best is None:
        raise InfeasibleTargetError(
            "no feasible KKT point found; the return target is unattainable"
        )
    if skipped:
        logger.debug("oracle skipped %d singular/unusable subsets", skipped)
    best.subsets_visited = visited
    best.subsets_skipped = skipped
    return best


def project_exact(v: np.ndarray, fs: FeasibleSet) -> np.ndarray:
    """Exact projection onto the feasible set: argmin ||x - v||^2 over F."""
    v = np.asarray(v, dtype=np.float64)
    inst = QPInstance(Q=2.0 * np.eye(v.size), c=-2.0 * v, fs=fs)
    return solve_exact(inst).x
