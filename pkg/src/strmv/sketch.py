"""Randomized sketching of the covariance factor: L -> L @ Phi.

Two embeddings are provided: a dense Gaussian projection with entries
N(0, 1/s), and CountSketch, where each input column is scattered with a
random sign into one of s output columns. Both are fully deterministic per
seed. A third kind, "identity", is a debug injection (requires s == T) used
to validate pipelines without distortion.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, DimensionError
from .panel import CovarianceFactor

SKETCH_KINDS = ("gaussian_jl", "countsketch", "identity")

#: Multiplier in the sketch-size rule s = ceil(c * (r + ln(1/delta)) / eps^2).
#: The underlying guarantee only fixes the rate; this constant was calibrated
#: once against the measured-distortion Monte Carlo in the test suite.
DEFAULT_SIZE_CONSTANT = 4.0

#: Above this many Phi entries the Gaussian sketch streams over column blocks
#: of L instead of materializing the full T x s projection.
DENSE_PHI_ENTRY_CAP = 2**24


@dataclass
class SketchConfig:
    kind: str
    s: int
    seed: int = 0

    def __post_init__(self):
        if self.kind not in SKETCH_KINDS:
            raise ArgumentError(f"unknown sketch kind {self.kind!r}")
        if self.s < 1:
            raise DimensionError(f"sketch size must be >= 1, got {self.s}")


@dataclass
class SketchedFactor:
    """Sketched factor Ltilde = L @ Phi plus provenance.

    ``apply_ops`` counts the scalar accumulations actually performed while
    applying Phi (n*T for CountSketch, n*T*s for the dense Gaussian path).
    """

    Ltilde: np.ndarray  # (n, s)
    config: SketchConfig
    apply_ops: int

    def __post_init__(self):
        self.Ltilde = np.asarray(self.Ltilde, dtype=np.float64)
        if self.Ltilde.shape[1] != self.config.s:
            raise DimensionError(
                f"sketched factor has {self.Ltilde.shape[1]} columns, config says {self.config.s}"
            )
        self.Ltilde.setflags(write=False)


def _check_size(s: int, T: int) -> None:
    if not 1 <= s <= T:
        raise DimensionError(f"sketch size must satisfy 1 <= s <= T={T}, got s={s}")


# ---------------------------------------------------------------------------
# Deterministic hashing for CountSketch
# ---------------------------------------------------------------------------

_U64 = np.uint64


def _splitmix64(x: np.ndarray) -> np.ndarray:
    # Standard 64-bit finalizer; numpy uint64 arithmetic wraps mod 2^64.
    z = x + _U64(0x9E3779B97F4A7C15)
    z = (z ^ (z >> _U64(30))) * _U64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> _U64(27))) * _U64(0x94D049BB133111EB)
    return z ^ (z >> _U64(31))


def countsketch_arrays(T: int, s: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Hash positions h(i) in [0, s) and signs in {-1, +1} for all T inputs.

    Positions and signs come from two independent seeded streams of a 64-bit
    mixing function, so they are reproducible without any RNG state.
    """
    idx = np.arange(T, dtype=np.uint64)
    key = _U64(seed & 0xFFFFFFFFFFFFFFFF)
    sign_key = _splitmix64(np.array([key], dtype=np.uint64))[0]
    h = _splitmix64(idx * _U64(0x9E3779B97F4A7C15) + key) % _U64(s)
    sign_bits = _splitmix64(idx * _U64(0xD1B54A32D192ED03) + sign_key)
    signs = np.where((sign_bits >> _U64(63)).astype(bool), -1.0, 1.0)
    return h.astype(np.int64), signs


def _apply_countsketch(L: np.ndarray, h: np.ndarray, signs: np.ndarray, s: int) -> np.ndarray:
    out = np.zeros((s, L.shape[0]))
    np.add.at(out, h, (L * signs).T)
    return out.T


def countsketch_sketch(factor: CovarianceFactor, s: int, seed: int) -> SketchedFactor:
    """Apply an implicit CountSketch matrix in O(nnz(L)) without forming Phi.

    Output column j accumulates sign_i * L[:, i] over all inputs i hashed to j.
    """
    L = factor.L
    _check_size(s, L.shape[1])
    h, signs = countsketch_arrays(L.shape[1], s, seed)
    Ltilde = _apply_countsketch(L, h, signs, s)
    cfg = SketchConfig(kind="countsketch", s=s, seed=seed)
    return SketchedFactor(Ltilde=Ltilde, config=cfg, apply_ops=L.shape[0] * L.shape[1])


def gaussian_jl_sketch(
    factor: CovarianceFactor,
    s: int,
    seed: int,
    entry_cap: int = DENSE_PHI_ENTRY_CAP,
) -> SketchedFactor:
    """Apply a dense Gaussian projection with Phi_ij ~ N(0, 1/s).

    When T*s exceeds ``entry_cap`` the projection is streamed over column
    blocks of L; the generator fills Phi row-major, so the streamed blocks
    use exactly the same Phi entries as the dense path.
    """
    L = factor.L
    n, T = L.shape
    _check_size(s, T)
    rng = np.random.default_rng(seed)
    scale = 1.0 / math.sqrt(s)
    if T * s <= entry_cap:
        phi = rng.standard_normal((T, s)) * scale
        Ltilde = L @ phi
    else:
        block = max(1, entry_cap // s)
        Ltilde = np.zeros((n, s))
        for start in range(0, T, block):
            stop = min(start + block, T)
            phi_block = rng.standard_normal((stop - start, s)) * scale
            Ltilde += L[:, start:stop] @ phi_block
    cfg = SketchConfig(kind="gaussian_jl", s=s, seed=seed)
    return SketchedFactor(Ltilde=Ltilde, config=cfg, apply_ops=n * T * s)


def apply_sketch(factor: CovarianceFactor, cfg: SketchConfig) -> SketchedFactor:
    """Dispatch on the sketch kind; the identity kind requires s == T."""
    if cfg.kind == "gaussian_jl":
        return gaussian_jl_sketch(factor, cfg.s, cfg.seed)
    if cfg.kind == "countsketch":
        return countsketch_sketch(factor, cfg.s, cfg.seed)
    if cfg.s != factor.L.shape[1]:
        raise DimensionError("identity sketch requires s == T")
    return SketchedFactor(Ltilde=factor.L.copy(), config=cfg, apply_ops=0)


def recommended_sketch_size(
    r_effective: int,
    epsilon: float,
    delta: float,
    c: float = DEFAULT_SIZE_CONSTANT,
) -> int:
    """Sketch size ceil(c * (r + ln(1/delta)) / eps^2).

    The caller clips the result to [1, T]; the rule itself only encodes the
    effective-rank and failure-probability dependence.
    """
    if not 0.0 < epsilon < 1.0:
        raise ArgumentError(f"epsilon must be in (0,1), got {epsilon}")
    if not 0.0 < delta < 1.0:
        raise ArgumentError(f"delta must be in (0,1), got {delta}")
    if c <= 0:
        raise ArgumentError(f"c must be positive, got {c}")
    if r_effective < 0:
        raise ArgumentError(f"r_effective must be nonnegative, got {r_effective}")
    return math.ceil(c * (r_effective + math.log(1.0 / delta)) / epsilon**2)


def materialize_sketch_matrix(cfg: SketchConfig, T: int) -> np.ndarray:
    """Dense T x s Phi for debugging; refuses more than 10^6 entries."""
    if T * cfg.s > 10**6:
        raise ArgumentError(f"refusing to materialize {T}x{cfg.s} sketch matrix")
    if cfg.kind == "gaussian_jl":
        rng = np.random.default_rng(cfg.seed)
        return rng.standard_normal((T, cfg.s)) / math.sqrt(cfg.s)
    if cfg.kind == "countsketch":
        h, signs = countsketch_arrays(T, cfg.s, cfg.seed)
        phi = np.zeros((T, cfg.s))
        phi[np.arange(T), h] = signs
        return phi
    if cfg.s != T:
        raise DimensionError("identity sketch requires s == T")
    return np.eye(T)


def dump_sketch_matrix(cfg: SketchConfig, T: int, path) -> None:
    """Write the materialized Phi as CSV (debug aid, same size limit)."""
    phi = materialize_sketch_matrix(cfg, T)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in phi:
            writer.writerow([repr(float(v)) for v in row])
