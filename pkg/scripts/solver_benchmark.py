#!/usr/bin/env python3
"""Solver benchmark across problem sizes.

Small sizes carry exact same-model gaps against the enumeration oracle;
larger sizes are timing rows. Timings follow the warmup + repeated-median
protocol with the lighter residual-check stride.
"""

import argparse

from strmv.bench import ExperimentConfig, ModelSpec, run_solver_benchmark
from strmv.panel import SyntheticSpec
from strmv.solver import SolverConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", type=int, nargs="+", default=[10, 12, 100, 600])
    ap.add_argument("--t-over-n", type=int, default=4)
    ap.add_argument("--reps", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="solver_report.json")
    args = ap.parse_args()

    cfg = ExperimentConfig(
        synthetic=SyntheticSpec(n=8, T=32, singular_decay=0.8, noise_floor=0.02, seed=0),
        models=[
            ModelSpec(kind="baseline"),
            ModelSpec(kind="sketch", sketch_kind="countsketch", eta=0.95, s_over_ell=2.0),
            ModelSpec(kind="str", sketch_kind="countsketch", eta=0.95, s_over_ell=2.0),
        ],
        sizes=args.sizes,
        T_over_n=args.t_over_n,
        solver=SolverConfig(tol=1e-8, max_iters=20_000, residual_check_stride=5),
        repetitions=args.reps,
        warmup=1,
        seed=args.seed,
    )
    report = run_solver_benchmark(cfg)
    report.save(args.out)
    hdr = f"{'model':>22} {'n':>5} {'cols':>6} {'build(s)':>9} {'solve(s)':>9} {'gap':>10} {'grad us':>8}"
    print(hdr)
    for row in report.rows:
        gap = f"{row['model_gap']:.2e}" if row["model_gap"] is not None else "n/a"
        print(
            f"{row['model']:>22} {row['n']:>5} {row['columns']:>6} "
            f"{row['build_time_s']:>9.3f} {row['solve_time_s']:>9.3f} {gap:>10} "
            f"{row['grad_us_per_iter']:>8.1f}"
        )
    print(f"report written to {args.out}")


if __name__ == "__main__":
    main()
