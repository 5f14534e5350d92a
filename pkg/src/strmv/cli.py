"""Command-line interface.

Subcommands: synth, spectrum, project, solve, bench {approx,rate,solver,real}.
Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.

numpy is imported lazily so that --threads can pin the BLAS thread count
before any linear algebra library initializes.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3

_THREAD_VARS = (
    "OMP_NUM_THREADS",
    "OPENBLAS_NUM_THREADS",
    "MKL_NUM_THREADS",
    "NUMEXPR_NUM_THREADS",
)


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage problems; the CLI contract says 1.
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _build_parser() -> _Parser:
    parser = _Parser(prog="strmv", description=__doc__.splitlines()[0])
    threads_parent = argparse.ArgumentParser(add_help=False)
    threads_parent.add_argument(
        "--threads", type=int, default=None, help="pin BLAS/OpenMP thread count"
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add_parser(name, **kw):
        return sub.add_parser(name, parents=[threads_parent], **kw)

    p = add_parser("synth", help="write a synthetic panel as CSV")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--T", type=int, required=True)
    p.add_argument("--decay", type=float, default=0.5)
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--floor", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = add_parser("spectrum", help="spectral report of a panel's factor")
    p.add_argument("--panel", required=True)
    p.add_argument("--out")

    p = add_parser("project", help="project a point onto the feasible set")
    p.add_argument("--v", help="comma-separated point")
    p.add_argument("--mu", help="comma-separated expected returns")
    p.add_argument("--r-target", type=float, required=True)
    p.add_argument("--from-csv", help="CSV with header and columns v,mu")
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--out")

    p = add_parser("solve", help="single mean-variance solve")
    p.add_argument("--panel", required=True)
    p.add_argument("--model", choices=["baseline", "sketch", "str"], default="str")
    p.add_argument("--sketch", choices=["gaussian_jl", "countsketch"], default="gaussian_jl")
    p.add_argument("--s", type=int, help="sketch width (default: rule-sized)")
    p.add_argument("--kappa-target", type=float, default=1e3)
    p.add_argument("--r-target", type=float)
    p.add_argument("--r-target-percentile", type=float, default=60.0)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--max-iters", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.add_argument("--residual-csv", help="write the residual trace as CSV")

    p = add_parser("bench", help="experiment harness")
    p.add_argument("experiment", choices=["approx", "rate", "solver", "real"])
    p.add_argument("--config", help="JSON experiment config")
    p.add_argument("--seed", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--out")
    p.add_argument("--csv-out", help="also write the rows as a flat CSV table")
    p.add_argument("--trace-out", help="rate experiment: per-iteration CSV traces")

    return parser


def _emit(payload: dict, out_path) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True)
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _parse_vector(text: str):
    import numpy as np

    try:
        return np.array([float(tok) for tok in text.split(",") if tok.strip() != ""])
    except ValueError as exc:
        from .errors import ArgumentError

        raise ArgumentError(f"bad vector {text!r}: {exc}") from None


def _cmd_synth(args) -> int:
    from .panel import SyntheticSpec, generate_synthetic, save_panel

    spec = SyntheticSpec(
        n=args.n,
        T=args.T,
        singular_decay=args.decay,
        leading_scale=args.scale,
        noise_floor=args.floor,
        seed=args.seed,
    )
    save_panel(generate_synthetic(spec), args.out)
    return EXIT_OK


def _cmd_spectrum(args) -> int:
    import numpy as np

    from .panel import center_and_factor, load_panel
    from .spectrum import report_from_singular_values

    factor = center_and_factor(load_panel(args.panel))
    singvals = np.linalg.svd(factor.L, compute_uv=False)
    _emit(report_from_singular_values(singvals).to_dict(), args.out)
    return EXIT_OK


def _cmd_project(args) -> int:
    import csv as _csv

    from .errors import ArgumentError
    from .projection import FeasibleSet, ProjectionConfig, project_feasible

    if args.from_csv:
        import numpy as np

        with open(args.from_csv, newline="") as fh:
            rows = list(_csv.DictReader(fh))
        if not rows or "v" not in rows[0] or "mu" not in rows[0]:
            raise ArgumentError(f"{args.from_csv} needs columns v,mu")
        v = np.array([float(r["v"]) for r in rows])
        mu = np.array([float(r["mu"]) for r in rows])
    elif args.v and args.mu:
        v = _parse_vector(args.v)
        mu = _parse_vector(args.mu)
    else:
        raise ArgumentError("provide --v and --mu, or --from-csv")
    fs = FeasibleSet(mu=mu, R_target=args.r_target)
    x, diag = project_feasible(v, fs, ProjectionConfig(tol_scalar=args.tol))
    _emit({"x": x.tolist(), "diagnostics": diag.to_dict()}, args.out)
    return EXIT_OK


def _cmd_solve(args) -> int:
    import numpy as np

    from .models import RidgePolicy, build_baseline, build_sketch, build_str
    from .panel import center_and_factor, load_panel
    from .projection import FeasibleSet, ProjectionConfig
    from .sketch import SketchConfig, recommended_sketch_size
    from .solver import SolverConfig, solve

    factor = center_and_factor(load_panel(args.panel))
    mu = factor.mean
    r_target = (
        args.r_target
        if args.r_target is not None
        else float(np.percentile(mu, args.r_target_percentile))
    )
    fs = FeasibleSet(mu=mu, R_target=r_target)
    if args.model == "baseline":
        model = build_baseline(factor)
    else:
        s = args.s or min(
            factor.columns, recommended_sketch_size(min(factor.n, 50), 0.5, 0.05)
        )
        cfg = SketchConfig(kind=args.sketch, s=s, seed=args.seed)
        if args.model == "sketch":
            model = build_sketch(factor, cfg)
        else:
            model = build_str(
                factor, cfg, ridge=RidgePolicy(kappa_target=args.kappa_target)
            )
    scfg = SolverConfig(tol=args.tol, max_iters=args.max_iters, seed=args.seed)
    result = solve(model, fs, cfg=scfg, pcfg=ProjectionConfig())
    payload = result.to_dict()
    payload["model"] = args.model
    payload["r_target"] = r_target
    payload["provenance"] = model.provenance
    if args.residual_csv:
        import csv as _csv

        with open(args.residual_csv, "w", newline="") as fh:
            writer = _csv.writer(fh)
            writer.writerow(["check", "residual"])
            for i, r in enumerate(result.residual_trace):
                writer.writerow([i, repr(float(r))])
    _emit(payload, args.out)
    return EXIT_OK


def _cmd_bench(args) -> int:
    from .bench import (
        ExperimentConfig,
        run_approximation_sweep,
        run_rate_experiment,
        run_real_panel,
        run_solver_benchmark,
    )

    if args.config:
        cfg = ExperimentConfig.from_json(args.config)
    else:
        cfg = ExperimentConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    if args.tol is not None:
        cfg.solver.tol = args.tol
    if args.experiment == "approx":
        report = run_approximation_sweep(cfg)
    elif args.experiment == "rate":
        report = run_rate_experiment(cfg, trace_path=args.trace_out)
    elif args.experiment == "solver":
        report = run_solver_benchmark(cfg)
    else:
        report = run_real_panel(cfg)
    if args.csv_out:
        from .bench import rows_to_csv

        rows_to_csv(report.rows, args.csv_out)
    _emit(report.to_dict(), args.out)
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.threads is not None:
        for var in _THREAD_VARS:
            os.environ[var] = str(args.threads)

    from .errors import (
        ArgumentError,
        DataFormatError,
        DimensionError,
        InfeasibleTargetError,
        NumericError,
    )

    handlers = {
        "synth": _cmd_synth,
        "spectrum": _cmd_spectrum,
        "project": _cmd_project,
        "solve": _cmd_solve,
        "bench": _cmd_bench,
    }
    try:
        return handlers[args.command](args)
    except ArgumentError as exc:
        print(f"strmv: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataFormatError, DimensionError, InfeasibleTargetError, FileNotFoundError) as exc:
        print(f"strmv: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericError as exc:
        print(f"strmv: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
