"""Effective factor models: baseline, sketched, and sketch-truncate-ridge.

All three objectives share one parameterization: an effective factor and a
ridge, giving f(x) = ||L_eff.T @ x||^2 + gamma * ||x||^2. The STR factor is
stored as the n x ell matrix U_ell * S_ell; the dropped right factor has
orthonormal columns, so the induced covariance (and hence the objective and
gradient) is unchanged while the per-iteration cost falls to O(n * ell).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ArgumentError, DegenerateSpectrumError, DimensionError
from .panel import CovarianceFactor
from .sketch import SketchConfig, apply_sketch
from .spectrum import DEFAULT_RANK_TOL, TruncationRule, select_truncation_level, thin_svd

MODEL_KINDS = ("baseline", "sketch", "str")

#: Practical default for the conditioning target of the ridge stage.
DEFAULT_KAPPA_TARGET = 1e3


@dataclass
class RidgePolicy:
    """Either a target condition number or an explicit ridge value."""

    mode: str = "target_kappa"
    kappa_target: Optional[float] = DEFAULT_KAPPA_TARGET
    gamma_explicit: Optional[float] = None

    def __post_init__(self):
        if self.mode not in ("target_kappa", "explicit"):
            raise ArgumentError(f"unknown ridge mode {self.mode!r}")
        if self.mode == "target_kappa":
            if self.kappa_target is None or self.gamma_explicit is not None:
                raise ArgumentError("target_kappa mode takes kappa_target only")
            if self.kappa_target <= 1.0:
                raise ArgumentError(f"kappa_target must exceed 1, got {self.kappa_target}")
        else:
            if self.gamma_explicit is None or self.gamma_explicit <= 0.0:
                raise ArgumentError("explicit mode requires a positive gamma_explicit")


@dataclass
class FactorModel:
    """Effective factor plus ridge; gamma > 0 exactly for the str kind."""

    L_eff: np.ndarray  # (n, m)
    gamma: float
    kind: str
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ArgumentError(f"unknown model kind {self.kind!r}")
        self.L_eff = np.asarray(self.L_eff, dtype=np.float64)
        if self.L_eff.ndim != 2:
            raise DimensionError("L_eff must be a matrix")
        if self.kind == "str" and self.gamma <= 0.0:
            raise ArgumentError("str models require gamma > 0")
        if self.kind != "str" and self.gamma != 0.0:
            raise ArgumentError(f"{self.kind} models require gamma == 0")
        self.L_eff.setflags(write=False)

    @property
    def n(self) -> int:
        return self.L_eff.shape[0]

    @property
    def columns(self) -> int:
        return self.L_eff.shape[1]

    def covariance(self) -> np.ndarray:
        """Dense induced covariance; test/diagnostic scale only."""
        sigma = self.L_eff @ self.L_eff.T
        if self.gamma:
            sigma = sigma + self.gamma * np.eye(self.n)
        return sigma


def build_baseline(factor: CovarianceFactor) -> FactorModel:
    return FactorModel(
        L_eff=factor.L,
        gamma=0.0,
        kind="baseline",
        provenance={"columns": int(factor.columns)},
    )


def build_sketch(factor: CovarianceFactor, cfg: SketchConfig) -> FactorModel:
    sk = apply_sketch(factor, cfg)
    return FactorModel(
        L_eff=sk.Ltilde,
        gamma=0.0,
        kind="sketch",
        provenance={"sketch": {"kind": cfg.kind, "s": cfg.s, "seed": cfg.seed}},
    )


def ridge_for_target_kappa(sigma1: float, kappa_target: float) -> float:
    """gamma = sigma_1^2 / (kappa_target - 1), so kappa of the lifted covariance
    is exactly kappa_target."""
    if kappa_target <= 1.0:
        raise ArgumentError(f"kappa_target must exceed 1, got {kappa_target}")
    if sigma1 <= 0.0:
        raise DegenerateSpectrumError("sigma1 must be positive to place a ridge")
    return sigma1**2 / (kappa_target - 1.0)


def kappa_improvement_threshold(lambda_min: float, lambda_max: float, epsilon: float) -> float:
    """Smallest ridge guaranteeing a strict conditioning improvement.

    Any gamma strictly above (1+eps)*lam_min*lam_max / (lam_max - (1+eps)*lam_min)
    gives kappa(lifted) < kappa(original). The denominator is nonpositive when
    the original matrix is too well conditioned for the bound to bind.
    """
    if lambda_min <= 0.0 or lambda_max <= 0.0:
        raise ArgumentError("eigenvalues must be positive")
    denom = lambda_max - (1.0 + epsilon) * lambda_min
    if denom <= 0.0:
        raise ArgumentError(
            "threshold undefined: lambda_max must exceed (1+epsilon)*lambda_min"
        )
    return (1.0 + epsilon) * lambda_min * lambda_max / denom


def build_str(
    factor: CovarianceFactor,
    cfg: SketchConfig,
    rule: Optional[TruncationRule] = None,
    ridge: Optional[RidgePolicy] = None,
    ell: Optional[int] = None,
    rank_tol: float = DEFAULT_RANK_TOL,
) -> FactorModel:
    """Sketch, truncate, and ridge-lift the factor.

    The truncation level comes from ``rule`` (head/knee tests on the sketched
    eigenvalues) unless ``ell`` pins it directly, which is how energy-mapped
    sweeps parameterize the pipeline.
    """
    ridge = ridge or RidgePolicy()
    sk = apply_sketch(factor, cfg)
    svd = thin_svd(sk.Ltilde, rank_tol=rank_tol)
    if svd.rank == 0:
        raise DegenerateSpectrumError("sketched factor is numerically zero")
    if ell is None:
        rule = rule or TruncationRule()
        ell = select_truncation_level(svd.S, rule)
    if not 1 <= ell <= svd.rank:
        ell = min(max(ell, 1), svd.rank)
    sigma1 = float(svd.S[0])
    if ridge.mode == "target_kappa":
        gamma = ridge_for_target_kappa(sigma1, ridge.kappa_target)
    else:
        gamma = float(ridge.gamma_explicit)
    L_eff = svd.U[:, :ell] * svd.S[:ell]
    return FactorModel(
        L_eff=L_eff,
        gamma=gamma,
        kind="str",
        provenance={
            "sketch": {"kind": cfg.kind, "s": cfg.s, "seed": cfg.seed},
            "ell": int(ell),
            "gamma": float(gamma),
            "sigma1": sigma1,
            "ridge_mode": ridge.mode,
            "kappa_target": ridge.kappa_target if ridge.mode == "target_kappa" else None,
            "singular_values": svd.S[:ell].tolist(),
        },
    )
