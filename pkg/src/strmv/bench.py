"""Experiment harness: sweeps, rate traces, solver benchmarks, panel runs.

Every row of a report carries the derived seed it was produced from, so any
row can be reproduced exactly; wall-clock fields are the only ones excluded
from the reproducibility contract (their key names live in TIMING_KEYS).
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
import os
import platform
import sys
import time
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import ArgumentError, DimensionError
from .metrics import annualize, objective_gap, relative_spectral_error
from .models import (
    DEFAULT_KAPPA_TARGET,
    FactorModel,
    RidgePolicy,
    build_baseline,
    build_sketch,
    build_str,
)
from .oracle import MAX_ORACLE_DIM, QPInstance, solve_exact
from .panel import (
    CovarianceFactor,
    ReturnPanel,
    SyntheticSpec,
    center_and_factor,
    generate_synthetic,
    load_panel,
)
from .projection import FeasibleSet, ProjectionConfig
from .sketch import SketchConfig, _splitmix64
from .solver import SolverConfig, gradient, objective, solve
from .spectrum import TruncationRule, cumulative_energy, energy_rank

#: Report fields that are wall-clock measurements and therefore not part of
#: the bit-reproducibility contract.
TIMING_KEYS = frozenset(
    {"build_time_s", "solve_time_s", "total_time_s", "wall_time_s", "grad_us_per_iter"}
)

#: JSON schema every saved report satisfies. Rows are flat records keyed by
#: model label and derived seed; the real-panel rows nest one portfolio block.
REPORT_SCHEMA = {
    "type": "object",
    "required": ["kind", "rows", "summary", "environment", "seed_ledger"],
    "properties": {
        "kind": {"type": "string"},
        "rows": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["model", "seed"],
                "properties": {
                    "model": {"type": "string"},
                    "seed": {"type": "integer"},
                    "portfolio": {"type": "object"},
                },
            },
        },
        "summary": {"type": "array"},
        "environment": {"type": "object"},
        "seed_ledger": {"type": "object"},
    },
}


def derive_seed(master: int, *parts: int) -> int:
    """Stable per-row seed derivation from the master seed."""
    state = np.array([master & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64)
    for p in parts:
        state = _splitmix64(state + np.uint64(p & 0xFFFFFFFFFFFFFFFF))
    return int(state[0] & 0x7FFFFFFFFFFFFFFF)


def environment_metadata(threads: Optional[int] = None) -> dict:
    return {
        "python": sys.version.split()[0],
        "numpy": np.__version__,
        "platform": platform.platform(),
        "threads": threads if threads is not None else os.environ.get("OMP_NUM_THREADS"),
    }


@dataclass
class ModelSpec:
    """One model configuration inside an experiment."""

    kind: str = "str"  # baseline | sketch | str
    sketch_kind: str = "gaussian_jl"
    s: Optional[int] = None
    s_over_ell: Optional[float] = None
    eta: Optional[float] = None  # energy level mapped to ell on the dense spectrum
    tau: float = 1e-3
    rho: float = 0.9
    kappa_target: Optional[float] = DEFAULT_KAPPA_TARGET
    gamma: Optional[float] = None  # explicit ridge, overrides kappa_target

    def label(self) -> str:
        if self.kind == "baseline":
            return "baseline"
        return f"{self.kind}-{self.sketch_kind}"

    def ridge_policy(self) -> RidgePolicy:
        if self.gamma is not None:
            return RidgePolicy(mode="explicit", kappa_target=None, gamma_explicit=self.gamma)
        return RidgePolicy(mode="target_kappa", kappa_target=self.kappa_target)


@dataclass
class ExperimentConfig:
    synthetic: Optional[SyntheticSpec] = None
    panel_path: Optional[str] = None
    models: list[ModelSpec] = field(default_factory=lambda: [ModelSpec()])
    eta_grid: list[float] = field(default_factory=lambda: [0.98])
    s_over_ell_grid: list[float] = field(default_factory=lambda: [2.0])
    sizes: list[int] = field(default_factory=lambda: [8, 10, 12])
    T_over_n: int = 4
    solver: SolverConfig = field(default_factory=SolverConfig)
    projection: ProjectionConfig = field(default_factory=ProjectionConfig)
    repetitions: int = 3
    warmup: int = 1
    seed: int = 0
    r_target_percentile: float = 60.0
    split_fraction: float = 2.0 / 3.0
    rate_iters: int = 500

    def __post_init__(self):
        if self.repetitions < 1:
            raise ArgumentError("repetitions must be >= 1")
        if self.warmup < 0:
            raise ArgumentError("warmup must be >= 0")

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        raw = dict(raw)
        synth = raw.pop("synthetic", None)
        if synth is not None:
            synth = SyntheticSpec(**synth)
        models = [ModelSpec(**m) for m in raw.pop("models", [{}])]
        solver = SolverConfig(**raw.pop("solver", {}))
        projection = ProjectionConfig(**raw.pop("projection", {}))
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ArgumentError(f"unknown config keys: {sorted(unknown)}")
        return cls(
            synthetic=synth, models=models, solver=solver, projection=projection, **raw
        )

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


@dataclass
class BenchReport:
    kind: str
    rows: list[dict]
    summary: list[dict]
    environment: dict
    seed_ledger: dict

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "rows": self.rows,
            "summary": self.summary,
            "environment": self.environment,
            "seed_ledger": self.seed_ledger,
        }

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def strip_timings(obj):
    """Recursively drop wall-clock fields; used for reproducibility checks."""
    if isinstance(obj, dict):
        return {k: strip_timings(v) for k, v in obj.items() if k not in TIMING_KEYS}
    if isinstance(obj, list):
        return [strip_timings(v) for v in obj]
    return obj


def rows_to_csv(rows: list[dict], path) -> None:
    """Flatten report rows into one CSV table (nested dicts get dotted keys)."""

    def flatten(row):
        flat = {}
        for key, val in row.items():
            if isinstance(val, dict):
                for sub, v in val.items():
                    flat[f"{key}.{sub}"] = v
            else:
                flat[key] = val
        return flat

    flat_rows = [flatten(r) for r in rows]
    fields: list[str] = []
    for r in flat_rows:
        for k in r:
            if k not in fields:
                fields.append(k)
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        writer.writerows(flat_rows)


# ---------------------------------------------------------------------------
# Shared pieces
# ---------------------------------------------------------------------------


def feasible_from_factor(factor: CovarianceFactor, percentile: float) -> FeasibleSet:
    """Expected returns from the raw sample means; target at their percentile."""
    mu = factor.mean
    target = float(np.percentile(mu, percentile))
    return FeasibleSet(mu=mu, R_target=target)


def _model_from_spec(
    factor: CovarianceFactor,
    mspec: ModelSpec,
    seed: int,
    dense_singvals: Optional[np.ndarray] = None,
) -> tuple[FactorModel, dict]:
    """Construct the model a ModelSpec describes; returns (model, metadata).

    For sketch/str models the sketch width comes from, in order: the explicit
    ``s``; or ``s_over_ell`` applied to the eta-mapped truncation level of the
    dense spectrum (requires ``dense_singvals``).
    """
    T = factor.columns
    if mspec.kind == "baseline":
        return build_baseline(factor), {"columns": T}

    ell_from_eta = None
    if mspec.eta is not None:
        if dense_singvals is None:
            raise ArgumentError("eta-mapped sizing needs the dense spectrum")
        energy = cumulative_energy(dense_singvals**2)
        ell_from_eta = energy_rank(energy, mspec.eta)

    if mspec.s is not None:
        s = mspec.s
    elif mspec.s_over_ell is not None and ell_from_eta is not None:
        s = math.ceil(mspec.s_over_ell * ell_from_eta)
    else:
        raise ArgumentError(
            f"model {mspec.label()} needs either s or (s_over_ell and eta)"
        )
    s = min(max(s, 1), T)
    cfg = SketchConfig(kind=mspec.sketch_kind, s=s, seed=seed)

    if mspec.kind == "sketch":
        return build_sketch(factor, cfg), {"s": s, "ell": ell_from_eta}

    model = build_str(
        factor,
        cfg,
        rule=TruncationRule(tau=mspec.tau, rho=mspec.rho),
        ridge=mspec.ridge_policy(),
        ell=ell_from_eta,
    )
    meta = {"s": s, "ell": model.provenance["ell"], "gamma": model.gamma}
    return model, meta


def _timed_solve(model, fs, cfg, pcfg, warmup: int, repeats: int):
    """Warmup solves are discarded; the median of repeated timings is kept.

    The solve itself is deterministic, so metrics come from the last run.
    """
    for _ in range(warmup):
        solve(model, fs, cfg=cfg, pcfg=pcfg)
    times = []
    result = None
    for _ in range(max(repeats, 1)):
        t0 = time.perf_counter()
        result = solve(model, fs, cfg=cfg, pcfg=pcfg)
        times.append(time.perf_counter() - t0)
    return result, float(np.median(times))


# ---------------------------------------------------------------------------
# Approximation sweep
# ---------------------------------------------------------------------------


def run_approximation_sweep(cfg: ExperimentConfig) -> BenchReport:
    """Spectral error and full-objective gap across the sketch-size grid.

    Per (model, eta, s/ell, repetition): generate the controlled-spectrum
    panel, map eta to a truncation level on the dense spectrum, build the
    reduced model, and compare it to the unreduced reference both spectrally
    and through the unreduced objective at the reduced model's optimizer.
    Summary rows carry medians across repetitions.
    """
    if cfg.synthetic is None:
        raise ArgumentError("approximation sweep needs a synthetic instance")
    rows: list[dict] = []
    failures: list[dict] = []
    for rep in range(cfg.repetitions):
        panel_seed = derive_seed(cfg.seed, 101, rep)
        spec = replace(cfg.synthetic, seed=panel_seed)
        panel = generate_synthetic(spec)
        factor = center_and_factor(panel)
        dense_singvals = np.linalg.svd(factor.L, compute_uv=False)
        Sigma = factor.L @ factor.L.T
        fs = feasible_from_factor(factor, cfg.r_target_percentile)
        baseline = build_baseline(factor)
        ref = solve(baseline, fs, cfg=cfg.solver, pcfg=cfg.projection)
        f_full_star = ref.objective
        for mi, mspec in enumerate(cfg.models):
            if mspec.kind == "baseline":
                continue
            for ei, eta in enumerate(cfg.eta_grid):
                for ri, ratio in enumerate(cfg.s_over_ell_grid):
                    point = dataclasses.replace(mspec, eta=eta, s_over_ell=ratio, s=None)
                    sketch_seed = derive_seed(cfg.seed, 102, rep, mi, ei, ri)
                    try:
                        t0 = time.perf_counter()
                        model, meta = _model_from_spec(
                            factor, point, sketch_seed, dense_singvals
                        )
                        build_time = time.perf_counter() - t0
                        spec_err = relative_spectral_error(model.covariance(), Sigma)
                        t0 = time.perf_counter()
                        res = solve(model, fs, cfg=cfg.solver, pcfg=cfg.projection)
                        solve_time = time.perf_counter() - t0
                        gap = objective_gap(objective(baseline, res.x), f_full_star)
                    except Exception as exc:  # a failed row is recorded, not fatal
                        failures.append(
                            {
                                "model": point.label(),
                                "eta": eta,
                                "s_over_ell": ratio,
                                "seed": sketch_seed,
                                "error": f"{type(exc).__name__}: {exc}",
                            }
                        )
                        continue
                    rows.append(
                        {
                            "model": point.label(),
                            "eta": eta,
                            "s_over_ell": ratio,
                            "s": meta.get("s"),
                            "ell": meta.get("ell"),
                            "gamma": meta.get("gamma", 0.0),
                            "rep": rep,
                            "panel_seed": panel_seed,
                            "seed": sketch_seed,
                            "rel_spectral_error": spec_err,
                            "full_model_gap": gap,
                            "iterations": res.iterations,
                            "build_time_s": build_time,
                            "solve_time_s": solve_time,
                        }
                    )
    summary = _summarize_sweep(rows)
    return BenchReport(
        kind="approx",
        rows=rows + failures,
        summary=summary,
        environment=environment_metadata(),
        seed_ledger={"master_seed": cfg.seed, "derivation": "splitmix64 chain"},
    )


def _summarize_sweep(rows: list[dict]) -> list[dict]:
    keys = sorted({(r["model"], r["eta"], r["s_over_ell"]) for r in rows})
    summary = []
    for model, eta, ratio in keys:
        grp = [
            r
            for r in rows
            if (r["model"], r["eta"], r["s_over_ell"]) == (model, eta, ratio)
        ]
        summary.append(
            {
                "model": model,
                "eta": eta,
                "s_over_ell": ratio,
                "median_rel_spectral_error": float(
                    np.median([r["rel_spectral_error"] for r in grp])
                ),
                "median_full_model_gap": float(
                    np.median([r["full_model_gap"] for r in grp])
                ),
                "repetitions": len(grp),
            }
        )
    return summary


# ---------------------------------------------------------------------------
# Rate experiment
# ---------------------------------------------------------------------------


def run_rate_experiment(cfg: ExperimentConfig, trace_path=None) -> BenchReport:
    """Per-iteration objective-gap traces for the two curvature regimes.

    The convex case runs the t_k momentum at the exact fixed step 1/L_f and
    fits a log-log slope; the ridge-stabilized case runs constant momentum
    and checks the geometric envelope fitted at iteration 5. Reference
    optima come from the enumeration oracle, so instances must stay small.
    """
    spec = cfg.synthetic or SyntheticSpec(n=8, T=40, singular_decay=0.7, seed=cfg.seed)
    if spec.n > MAX_ORACLE_DIM:
        raise ArgumentError(f"rate experiment needs n <= {MAX_ORACLE_DIM} for the oracle")
    rows = []
    traces: list[tuple[str, np.ndarray]] = []
    panel_seed = derive_seed(cfg.seed, 201)
    panel = generate_synthetic(replace(spec, seed=panel_seed))
    factor = center_and_factor(panel)
    fs = feasible_from_factor(factor, cfg.r_target_percentile)

    # Convex case: exact smoothness constant from the dense spectrum.
    baseline = build_baseline(factor)
    s1 = float(np.linalg.norm(factor.L, 2))
    L_f = 2.0 * s1**2
    run_cfg = replace(
        cfg.solver,
        step_mode="fixed_explicit",
        alpha=1.0 / L_f,
        momentum_mode="fista",
        max_iters=cfg.rate_iters,
        tol=1e-300,
        record_objective=True,
    )
    res = solve(baseline, fs, cfg=run_cfg, pcfg=cfg.projection)
    inst = QPInstance(Q=2.0 * baseline.covariance(), c=np.zeros(spec.n), fs=fs)
    f_star = solve_exact(inst).value
    gaps = np.maximum(res.objective_trace - f_star, 1e-18)
    k_hi = min(200, gaps.size - 1)
    ks = np.arange(10, k_hi + 1)
    slope = float(np.polyfit(np.log(ks), np.log(gaps[ks]), 1)[0])
    traces.append(("convex", gaps))
    rows.append(
        {
            "model": "baseline",
            "case": "convex",
            "seed": panel_seed,
            "alpha": 1.0 / L_f,
            "loglog_slope": slope,
            "iterations": res.iterations,
            "final_gap": float(gaps[-1]),
        }
    )

    # Strongly convex case: ridge large enough for a visible linear rate,
    # truncation below n so the curvature bound 2*gamma is exact.
    gamma = 0.005 * s1**2
    dense_singvals = np.linalg.svd(factor.L, compute_uv=False)
    str_spec = ModelSpec(
        kind="str", sketch_kind="gaussian_jl", s=factor.columns, eta=0.95, gamma=gamma
    )
    model, _ = _model_from_spec(
        factor, str_spec, derive_seed(cfg.seed, 202), dense_singvals
    )
    sig1 = float(np.linalg.norm(model.L_eff, 2))
    L_f = 2.0 * (sig1**2 + model.gamma)
    m_f = 2.0 * model.gamma
    alpha = 1.0 / L_f
    theta = 1.0 - math.sqrt(alpha * m_f)
    run_cfg = replace(
        cfg.solver,
        step_mode="fixed_explicit",
        alpha=alpha,
        momentum_mode="strongly_convex",
        max_iters=cfg.rate_iters,
        tol=1e-300,
        record_objective=True,
    )
    res = solve(model, fs, cfg=run_cfg, pcfg=cfg.projection)
    inst = QPInstance(Q=2.0 * model.covariance(), c=np.zeros(spec.n), fs=fs)
    f_star = solve_exact(inst).value
    gaps = np.maximum(res.objective_trace - f_star, 1e-18)
    k_fit = 5
    k_hi = min(200, gaps.size - 1)
    envelope_ok = True
    if gaps.size > k_fit:
        C = gaps[k_fit] / theta**k_fit
        ks = np.arange(k_fit, k_hi + 1)
        envelope_ok = bool(np.all(gaps[ks] <= C * theta**ks * (1 + 1e-9) + 1e-18))
    traces.append(("strongly_convex", gaps))
    rows.append(
        {
            "model": "str-gaussian_jl",
            "case": "strongly_convex",
            "seed": panel_seed,
            "alpha": alpha,
            "theta": theta,
            "envelope_ok": envelope_ok,
            "iterations": res.iterations,
            "final_gap": float(gaps[-1]),
        }
    )

    if trace_path is not None:
        with open(trace_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["case", "k", "gap"])
            for case, gap_arr in traces:
                for k, g in enumerate(gap_arr):
                    writer.writerow([case, k, repr(float(g))])

    return BenchReport(
        kind="rate",
        rows=rows,
        summary=[],
        environment=environment_metadata(),
        seed_ledger={"master_seed": cfg.seed, "derivation": "splitmix64 chain"},
    )


# ---------------------------------------------------------------------------
# Solver benchmark
# ---------------------------------------------------------------------------


def run_solver_benchmark(cfg: ExperimentConfig) -> BenchReport:
    """Build/solve timings plus gap columns across problem sizes.

    Same-model gaps against the enumeration oracle exist only for sizes the
    oracle can certify (n <= 14); larger rows are timing rows with the gap
    marked unavailable. The unreduced-objective gap is always reported,
    against the oracle optimum where possible and the unreduced solver
    otherwise.
    """
    base = cfg.synthetic or SyntheticSpec(n=8, T=32, singular_decay=0.7, seed=cfg.seed)
    rows = []
    for n in cfg.sizes:
        T = max(cfg.T_over_n * n, 4)
        panel_seed = derive_seed(cfg.seed, 301, n)
        spec = SyntheticSpec(
            n=n,
            T=T,
            singular_decay=base.singular_decay,
            leading_scale=base.leading_scale,
            noise_floor=base.noise_floor,
            seed=panel_seed,
        )
        factor = center_and_factor(generate_synthetic(spec))
        dense_singvals = np.linalg.svd(factor.L, compute_uv=False)
        fs = feasible_from_factor(factor, cfg.r_target_percentile)
        baseline = build_baseline(factor)
        ref_result, _ = _timed_solve(
            baseline, fs, cfg.solver, cfg.projection, warmup=0, repeats=1
        )
        f_full_ref = ref_result.objective
        for mi, mspec in enumerate(cfg.models):
            model_seed = derive_seed(cfg.seed, 302, n, mi)
            t0 = time.perf_counter()
            model, meta = _model_from_spec(factor, mspec, model_seed, dense_singvals)
            build_time = time.perf_counter() - t0
            result, solve_time = _timed_solve(
                model, fs, cfg.solver, cfg.projection, cfg.warmup, cfg.repetitions
            )
            if n <= MAX_ORACLE_DIM:
                inst = QPInstance(Q=2.0 * model.covariance(), c=np.zeros(n), fs=fs)
                oracle_val = solve_exact(inst).value
                model_gap = objective_gap(result.objective, oracle_val)
                inst_full = QPInstance(Q=2.0 * baseline.covariance(), c=np.zeros(n), fs=fs)
                f_full_star = solve_exact(inst_full).value
            else:
                model_gap = None
                f_full_star = f_full_ref
            full_gap = objective_gap(objective(baseline, result.x), f_full_star)
            grad_time = _median_gradient_time(model, result.x)
            rows.append(
                {
                    "model": mspec.label(),
                    "n": n,
                    "T": T,
                    "columns": model.columns,
                    "seed": model_seed,
                    "panel_seed": panel_seed,
                    "model_gap": model_gap,
                    "full_model_gap": full_gap,
                    "iterations": result.iterations,
                    "build_time_s": build_time,
                    "solve_time_s": solve_time,
                    "total_time_s": build_time + solve_time,
                    "grad_us_per_iter": grad_time,
                }
            )
    return BenchReport(
        kind="solver",
        rows=rows,
        summary=[],
        environment=environment_metadata(),
        seed_ledger={"master_seed": cfg.seed, "derivation": "splitmix64 chain"},
    )


def _median_gradient_time(model: FactorModel, x: np.ndarray, reps: int = 100) -> float:
    """Median microseconds per gradient evaluation."""
    times = np.empty(reps)
    for i in range(reps):
        t0 = time.perf_counter_ns()
        gradient(model, x)
        times[i] = time.perf_counter_ns() - t0
    return float(np.median(times)) / 1e3


# ---------------------------------------------------------------------------
# Real-panel run
# ---------------------------------------------------------------------------


def run_real_panel(cfg: ExperimentConfig) -> BenchReport:
    """Train on the leading segment of a CSV panel, evaluate on the rest.

    The expected-return vector comes from the raw training means, the target
    from their configured percentile, and the reported statistics are the
    annualized mean and volatility of the fixed-weight portfolio's
    per-interval test returns.
    """
    if cfg.panel_path is None:
        raise ArgumentError("real-panel run needs panel_path")
    panel = load_panel(cfg.panel_path)
    split = int(panel.T * cfg.split_fraction)
    if split < 2 or panel.T - split < 2:
        raise DimensionError(
            f"split at {split} leaves too few columns (T={panel.T}); need >= 2 on each side"
        )
    train = panel.returns[:, :split]
    test = panel.returns[:, split:]
    factor = center_and_factor(ReturnPanel(asset_ids=panel.asset_ids, returns=train))
    fs = feasible_from_factor(factor, cfg.r_target_percentile)
    baseline = build_baseline(factor)
    ref, ref_time = _timed_solve(
        baseline, fs, cfg.solver, cfg.projection, cfg.warmup, cfg.repetitions
    )
    f_full_star = ref.objective
    dense_singvals = np.linalg.svd(factor.L, compute_uv=False) if any(
        m.eta is not None for m in cfg.models
    ) else None
    rows = []
    for mi, mspec in enumerate(cfg.models):
        model_seed = derive_seed(cfg.seed, 401, mi)
        if mspec.kind == "baseline":
            model, build_time = baseline, 0.0
            result, solve_time = ref, ref_time
        else:
            t0 = time.perf_counter()
            model, _ = _model_from_spec(factor, mspec, model_seed, dense_singvals)
            build_time = time.perf_counter() - t0
            result, solve_time = _timed_solve(
                model, fs, cfg.solver, cfg.projection, cfg.warmup, cfg.repetitions
            )
        full_gap = objective_gap(objective(baseline, result.x), f_full_star)
        stats = annualize(result.x @ test)
        rows.append(
            {
                "model": mspec.label(),
                "n": panel.n,
                "T_train": split,
                "T_test": panel.T - split,
                "columns": model.columns,
                "seed": model_seed,
                "r_target": fs.R_target,
                "r_target_percentile": cfg.r_target_percentile,
                "full_model_gap": full_gap,
                "iterations": result.iterations,
                "portfolio": stats.to_dict(),
                "build_time_s": build_time,
                "solve_time_s": solve_time,
                "total_time_s": build_time + solve_time,
            }
        )
    return BenchReport(
        kind="real",
        rows=rows,
        summary=[],
        environment=environment_metadata(),
        seed_ledger={"master_seed": cfg.seed, "derivation": "splitmix64 chain"},
    )
