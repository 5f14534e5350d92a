"""Thin SVD, spectral diagnostics, and the truncation-level rule.

The truncation rule works on covariance eigenvalues (squared singular
values): keep the largest index i whose eigenvalue still clears the head
threshold tau relative to the top one AND whose successor drops by at least
the knee ratio rho. The convention sigma_{r+1} := 0 makes the knee test
satisfiable at the last retained index, so spectra without an interior knee
are still handled.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, DegenerateSpectrumError, NumericError

DEFAULT_RANK_TOL = 1e-12


@dataclass
class TruncationRule:
    """Head threshold tau and knee ratio rho, both applied to eigenvalues."""

    tau: float = 1e-3
    rho: float = 0.9

    def __post_init__(self):
        if not 0.0 < self.tau < 1.0:
            raise ArgumentError(f"tau must be in (0,1), got {self.tau}")
        if not 0.0 < self.rho < 1.0:
            raise ArgumentError(f"rho must be in (0,1), got {self.rho}")


@dataclass
class ThinSVD:
    U: np.ndarray  # (n, r), orthonormal columns
    S: np.ndarray  # (r,), descending positive
    V: np.ndarray  # (cols, r), orthonormal columns

    @property
    def rank(self) -> int:
        return self.S.shape[0]


@dataclass
class SpectrumReport:
    singular_values: np.ndarray
    eigenvalues: np.ndarray
    energy: np.ndarray
    numerical_rank: int
    degenerate: bool = False

    def to_dict(self) -> dict:
        return {
            "singular_values": self.singular_values.tolist(),
            "eigenvalues": self.eigenvalues.tolist(),
            "energy": self.energy.tolist(),
            "numerical_rank": self.numerical_rank,
            "degenerate": self.degenerate,
        }


def thin_svd(A: np.ndarray, rank_tol: float = DEFAULT_RANK_TOL) -> ThinSVD:
    """Thin SVD keeping singular values >= rank_tol * sigma_1."""
    A = np.asarray(A, dtype=np.float64)
    if not np.all(np.isfinite(A)):
        raise NumericError("matrix has non-finite entries")
    U, S, Vt = np.linalg.svd(A, full_matrices=False)
    if S.size == 0 or S[0] <= 0.0:
        r = 0
    else:
        r = int(np.count_nonzero(S >= rank_tol * S[0]))
    return ThinSVD(U=U[:, :r], S=S[:r], V=Vt[:r].T)


def cumulative_energy(eigenvalues: np.ndarray) -> np.ndarray:
    """E(r) = sum of the leading r eigenvalues over the total.

    An all-zero spectrum yields all-zero energy; callers can flag that case
    through ``SpectrumReport.degenerate``.
    """
    lam = np.asarray(eigenvalues, dtype=np.float64)
    total = lam.sum()
    if total <= 0.0:
        return np.zeros_like(lam)
    return np.cumsum(lam) / total


def energy_rank(energy: np.ndarray, eta: float) -> int:
    """Smallest r (1-based) with E(r) >= eta."""
    if not 0.0 < eta < 1.0:
        raise ArgumentError(f"eta must be in (0,1), got {eta}")
    energy = np.asarray(energy, dtype=np.float64)
    hits = np.nonzero(energy >= eta)[0]
    if hits.size == 0:
        return energy.size
    return int(hits[0]) + 1


def report_from_singular_values(
    singular_values: np.ndarray, rank_tol: float = DEFAULT_RANK_TOL
) -> SpectrumReport:
    s = np.asarray(singular_values, dtype=np.float64)
    lam = s**2
    energy = cumulative_energy(lam)
    degenerate = bool(lam.sum() <= 0.0)
    if degenerate:
        rank = 0
    else:
        rank = int(np.count_nonzero(s >= rank_tol * s[0]))
    return SpectrumReport(
        singular_values=s,
        eigenvalues=lam,
        energy=energy,
        numerical_rank=rank,
        degenerate=degenerate,
    )


def select_truncation_level(singular_values: np.ndarray, rule: TruncationRule) -> int:
    """Largest index i (1-based) passing both the head and the knee test.

    Tests run on eigenvalues lam_i = sigma_i^2: head lam_i/lam_1 >= tau,
    knee lam_{i+1}/lam_i <= rho with lam_{r+1} := 0. Invariant under uniform
    positive scaling of the spectrum. If no index passes both (a slow decay
    that never drops by rho before falling under tau), the cut falls back to
    the last head-passing index.
    """
    s = np.asarray(singular_values, dtype=np.float64)
    if s.size == 0 or s[0] <= 0.0:
        raise DegenerateSpectrumError("leading singular value must be positive")
    lam = s**2
    lam_next = np.append(lam[1:], 0.0)
    head = lam / lam[0] >= rule.tau
    knee = lam_next <= rule.rho * lam
    both = head & knee
    if both.any():
        return int(np.nonzero(both)[0][-1]) + 1
    return int(np.nonzero(head)[0][-1]) + 1


def truncation_error_bound(
    sketched_eigs: np.ndarray, ell: int, epsilon: float
) -> float:
    """Computable bound on the (ell+1)-th true eigenvalue: lam~_{ell+1}/(1-eps)."""
    if not 0.0 <= epsilon < 1.0:
        raise ArgumentError(f"epsilon must be in [0,1), got {epsilon}")
    lam = np.asarray(sketched_eigs, dtype=np.float64)
    if ell < 0:
        raise ArgumentError(f"ell must be nonnegative, got {ell}")
    if ell >= lam.size:
        return 0.0
    return float(lam[ell] / (1.0 - epsilon))
