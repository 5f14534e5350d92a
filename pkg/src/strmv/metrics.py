"""Experiment metrics: spectral errors, objective gaps, conditioning, and
annualized out-of-sample portfolio statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, DimensionError, NumericError
from .models import FactorModel

#: 5-minute intervals per trading year: 48 per day times 244 trading days.
INTERVALS_PER_YEAR = 48 * 244

#: Dense spectral norms up to this dimension; power iteration above.
_DENSE_NORM_LIMIT = 1000
_POWER_ITERS = 50


@dataclass
class GapReport:
    model_gap: float
    full_model_gap: float


@dataclass
class PortfolioStats:
    annualized_return: float  # percent
    annualized_vol: float  # percent
    intervals_per_year: int = INTERVALS_PER_YEAR

    def to_dict(self) -> dict:
        return {
            "annualized_return_pct": self.annualized_return,
            "annualized_vol_pct": self.annualized_vol,
            "intervals_per_year": self.intervals_per_year,
        }


@dataclass
class ConditioningReport:
    lambda_min: float
    lambda_max: float
    kappa: float  # inf when the model is rank deficient with no ridge
    finite: bool

    def to_dict(self) -> dict:
        return {
            "lambda_min": self.lambda_min,
            "lambda_max": self.lambda_max,
            "kappa": self.kappa if self.finite else None,
            "finite": self.finite,
        }


def spectral_norm(A: np.ndarray) -> float:
    """Spectral norm of a symmetric matrix; dense at small n, power method above."""
    A = np.asarray(A, dtype=np.float64)
    if A.shape[0] <= _DENSE_NORM_LIMIT:
        return float(np.linalg.norm(A, 2))
    rng = np.random.default_rng(0)
    u = rng.standard_normal(A.shape[0])
    u /= np.linalg.norm(u)
    est = 0.0
    for _ in range(_POWER_ITERS):
        w = A @ u
        wn = float(np.linalg.norm(w))
        if wn == 0.0:
            return 0.0
        est = wn
        u = w / wn
    return est


def relative_spectral_error(Sigma_hat: np.ndarray, Sigma: np.ndarray) -> float:
    """||Sigma_hat - Sigma||_2 / ||Sigma||_2."""
    Sigma_hat = np.asarray(Sigma_hat, dtype=np.float64)
    Sigma = np.asarray(Sigma, dtype=np.float64)
    if Sigma_hat.shape != Sigma.shape:
        raise DimensionError("matrices must share a shape")
    denom = spectral_norm(Sigma)
    if denom <= 0.0:
        raise NumericError("reference covariance has zero spectral norm")
    return spectral_norm(Sigma_hat - Sigma) / denom


def objective_gap(f_hat: float, f_ref: float) -> float:
    """max(f_hat - f_ref, 0) / max(|f_ref|, 1e-12)."""
    if not (math.isfinite(f_hat) and math.isfinite(f_ref)):
        raise NumericError("gap inputs must be finite")
    return max(f_hat - f_ref, 0.0) / max(abs(f_ref), 1e-12)


def annualize(test_returns_per_interval: np.ndarray) -> PortfolioStats:
    """Annualized mean return and volatility, both in percent.

    Simple (non-compounded) scaling of the per-interval mean; volatility uses
    the sample standard deviation (ddof=1).
    """
    r = np.asarray(test_returns_per_interval, dtype=np.float64)
    if r.ndim != 1 or r.size == 0:
        raise ArgumentError("need a nonempty 1-D return series")
    if r.size < 2:
        raise ArgumentError("volatility needs at least 2 intervals")
    ann_ret = float(r.mean()) * INTERVALS_PER_YEAR * 100.0
    ann_vol = float(r.std(ddof=1)) * math.sqrt(INTERVALS_PER_YEAR) * 100.0
    return PortfolioStats(annualized_return=ann_ret, annualized_vol=ann_vol)


def conditioning_report(model: FactorModel) -> ConditioningReport:
    """Extreme eigenvalues and condition number of the model covariance.

    For the ridge-lifted model these are closed-form from the stored spectrum
    (sigma_1^2 + gamma and gamma); no dense eigensolve happens. Rank-deficient
    ridgeless models report an infinite condition number.
    """
    if model.kind == "str":
        sigma1 = float(model.provenance["sigma1"])
        ell = int(model.provenance["ell"])
        lam_max = sigma1**2 + model.gamma
        lam_min = model.gamma if ell < model.n else float(
            model.provenance["singular_values"][-1]
        ) ** 2 + model.gamma
        return ConditioningReport(
            lambda_min=lam_min,
            lambda_max=lam_max,
            kappa=lam_max / lam_min,
            finite=True,
        )
    if model.columns < model.n:
        # Fewer factor columns than assets: the covariance is singular.
        s1 = float(np.linalg.norm(model.L_eff, 2)) if model.L_eff.size else 0.0
        return ConditioningReport(
            lambda_min=0.0, lambda_max=s1**2, kappa=math.inf, finite=False
        )
    if model.n > _DENSE_NORM_LIMIT:
        raise ArgumentError("dense conditioning report is limited to test scale")
    lam = np.linalg.eigvalsh(model.covariance())
    lam_min, lam_max = float(lam[0]), float(lam[-1])
    if lam_min <= 0.0:
        return ConditioningReport(
            lambda_min=max(lam_min, 0.0), lambda_max=lam_max, kappa=math.inf, finite=False
        )
    return ConditioningReport(
        lambda_min=lam_min, lambda_max=lam_max, kappa=lam_max / lam_min, finite=True
    )
