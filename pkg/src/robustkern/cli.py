"""Command line entry point.

Subcommands:
    fit          solve one regularized ERM problem and dump the coefficients
    metric       distances between two dataset CSVs (Kantorovich / order-p bounds)
    all-data     perturbation experiment: estimator laws and ratio paths
    single-data  contamination sweep: influence norms over the outlier grid
    influence    influence report for one outlier position
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .influence import fd_cross_check, influence_function
from .kernels import UNCONSTRAINED, rkhs_norm
from .lab import load_config, run_all_data, run_single_data
from .metrics import EmpiricalMeasure, fm_bounds, kantorovich_1d, kantorovich_ot
from .sampling import dataset_from_csv, sample_base
from .solver import ErmProblem, solve_erm


def _add_common(sub):
    sub.add_argument("config", help="YAML experiment config")
    sub.add_argument("--seed", type=int, default=None, help="override the config seed")
    sub.add_argument("--out-dir", default=None, help="output directory")
    sub.add_argument("--threads", type=int, default=None, help="worker threads")


def _load(args):
    return load_config(
        args.config,
        seed=args.seed,
        out_dir=args.out_dir,
        threads=args.threads,
    )


def cmd_fit(args) -> int:
    config = _load(args)
    data = sample_base(config.base_model(), config.n, config.seed)
    problem = ErmProblem(data, config.kernel, config.loss, config.lam, config.feasible(config.n))
    sol = solve_erm(problem, opts=config.solver_options())
    print(f"objective {sol.objective:.12g}")
    print(f"residual {sol.residual:.3e}")
    print(f"rkhs_norm {rkhs_norm(sol.f):.12g}")
    print(f"iterations {sol.iterations}")
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "fit.csv", "w") as fh:
            d = data.x.shape[1]
            fh.write(",".join(f"x_{i + 1}" for i in range(d)) + ",coeff\n")
            for i in range(data.n):
                xs = ",".join(f"{v:.17g}" for v in data.x[i])
                fh.write(f"{xs},{sol.f.coeffs[i]:.17g}\n")
    return 0


def cmd_metric(args) -> int:
    mu = EmpiricalMeasure.uniform(dataset_from_csv(args.first).z)
    nu = EmpiricalMeasure.uniform(dataset_from_csv(args.second).z)
    if mu.dim == 1:
        print(f"kantorovich_1d {kantorovich_1d(mu, nu):.12g}")
    res = kantorovich_ot(mu, nu)
    print(f"kantorovich {res.value:.12g}")
    if args.p > 1.0:
        lower, upper = fm_bounds(mu, nu, args.p)
        print(f"fm_lower {lower.value:.12g}")
        print(f"fm_upper {upper.value:.12g}")
    return 0


def cmd_all_data(args) -> int:
    config = _load(args)
    out_dir = args.out_dir or config.out_dir or "out"
    result = run_all_data(config, out_dir=out_dir)
    for j, probe in enumerate(result.probes):
        ratio = result.ratio()[j]
        print(
            f"probe {probe:g}: delta1 {result.delta1[j]:.6g} "
            f"delta2 {result.delta2:.6g} ratio {ratio:.6g}"
        )
    print(f"outputs written to {out_dir}")
    return 0


def cmd_single_data(args) -> int:
    config = _load(args)
    out_dir = args.out_dir or config.out_dir or "out"
    result = run_single_data(config, out_dir=out_dir)
    for r in result.rows:
        print(
            f"x~ {r.x_tilde:g} lambda {r.lam:g}: ||IF|| {r.if_norm:.6g} "
            f"IF(x0) {r.if_at_probe:.6g} upsilon {r.upsilon:.6g} fd_err {r.fd_error:.2e}"
        )
    print(f"outputs written to {out_dir}")
    return 0


def cmd_influence(args) -> int:
    config = _load(args)
    data = sample_base(config.base_model(), config.n, [config.seed, 0])
    problem = ErmProblem(data, config.kernel, config.loss, config.lam, UNCONSTRAINED)
    sol = solve_erm(problem, opts=config.solver_options())
    x_t = args.xtilde
    z_t = np.array([x_t, x_t**3])
    report = influence_function(problem, sol, z_t)
    fd_err = fd_cross_check(problem, report, z_t, t=config.fd_t, opts=config.solver_options())
    print(f"if_norm {rkhs_norm(report.IF):.12g}")
    print(f"if_at_probe {float(report.IF(np.array([config.probe_x0]))):.12g}")
    print(f"condition {report.system_condition:.3e}")
    print(f"fd_error {fd_err:.3e}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="robustlab", description=__doc__)
    subs = parser.add_subparsers(dest="command", required=True)

    sub = subs.add_parser("fit", help="solve one regularized ERM problem")
    _add_common(sub)
    sub.set_defaults(func=cmd_fit)

    sub = subs.add_parser("metric", help="distances between two dataset CSVs")
    sub.add_argument("first")
    sub.add_argument("second")
    sub.add_argument("--p", type=float, default=1.0, help="growth order of the weighted cost")
    sub.set_defaults(func=cmd_metric)

    sub = subs.add_parser("all-data", help="perturbation experiment over replications")
    _add_common(sub)
    sub.set_defaults(func=cmd_all_data)

    sub = subs.add_parser("single-data", help="contamination influence sweep")
    _add_common(sub)
    sub.set_defaults(func=cmd_single_data)

    sub = subs.add_parser("influence", help="influence report at one outlier")
    _add_common(sub)
    sub.add_argument("--xtilde", type=float, required=True, help="outlier input position")
    sub.set_defaults(func=cmd_influence)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
