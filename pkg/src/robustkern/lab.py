"""Experiment harness: all-data perturbation laws and single-data influence sweeps.

Replications use per-index derived seeds so results are independent of
worker count, and all CSV output is formatted deterministically so that
identical configs with identical seeds produce byte-identical files.
"""

from __future__ import annotations

import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np
import yaml

from .influence import fd_cross_check, influence_function, upsilon_bound
from .kernels import FeasibleSet, KernelSpec, UNCONSTRAINED, coeff_box, rkhs_ball, rkhs_norm
from .losses import LossSpec
from .metrics import kantorovich_1d, law_of_estimator
from .sampling import (
    BaseModel,
    TailPerturbation,
    input_kantorovich,
    sample_base,
    sample_tail_perturbed,
)
from .solver import ErmProblem, SolverOptions, solve_erm

FLOAT_FMT = "%.17g"


def _fmt(v: float) -> str:
    return FLOAT_FMT % v


@dataclass(frozen=True)
class ExperimentConfig:
    """Full experiment description; see README for the config file schema."""

    # model
    mu: float = 0.0
    sigma: float = 1.0
    response: str = "square"
    # perturbation ("tail" or "none")
    pert_kind: str = "tail"
    p: float = 0.9
    beta: float = 0.5
    # kernel / loss
    kernel: KernelSpec = field(default_factory=lambda: KernelSpec("polynomial", gamma=1.0, coef0=0.0, degree=2))
    loss: LossSpec = field(default_factory=lambda: LossSpec("squared"))
    # solver
    lam: float = 1e-3
    box: tuple | None = (-10.0, 10.0)
    ball: float | None = None
    tol: float = 1e-8
    max_iter: int = 50000
    # experiment
    n: int = 100
    m: int = 500
    probes: tuple = (-1.9, -1.0, 0.5, 1.0, 1.9)
    seed: int = 42
    out_dir: str | None = None
    threads: int = 1
    # single-data sweep
    lam_grid: tuple = (0.01, 0.1, 1.0)
    x_tilde_grid: tuple = (2.0, 2.5, 3.0)
    probe_x0: float = 0.5
    fd_t: float = 1e-4
    upsilon_t_max: float = 0.1

    def __post_init__(self):
        if self.n < 2 or self.m < 1:
            raise ValueError("need n >= 2 and m >= 1")
        if self.pert_kind not in ("tail", "none"):
            raise ValueError(f"unknown perturbation kind {self.pert_kind!r}")

    def base_model(self) -> BaseModel:
        return BaseModel(self.mu, self.sigma, self.response)

    def perturbation(self) -> TailPerturbation | None:
        if self.pert_kind == "none":
            return None
        return TailPerturbation(self.p, self.beta)

    def feasible(self, n: int) -> FeasibleSet:
        if self.box is not None:
            lo, hi = self.box
            return coeff_box(np.full(n, lo), np.full(n, hi))
        if self.ball is not None:
            return rkhs_ball(self.ball)
        return UNCONSTRAINED

    def solver_options(self) -> SolverOptions:
        return SolverOptions(tol=self.tol, max_iter=self.max_iter)


_SECTION_KEYS = {
    "model": ("mu", "sigma", "response"),
    "perturbation": ("pert_kind", "p", "beta"),
    "solver": ("lam", "box", "ball", "tol", "max_iter"),
    "experiment": (
        "n", "m", "probes", "seed", "out_dir", "threads",
        "lam_grid", "x_tilde_grid", "probe_x0", "fd_t", "upsilon_t_max",
    ),
}


def load_config(path, **overrides) -> ExperimentConfig:
    """Load an ExperimentConfig from a YAML file with sections
    model / perturbation / kernel / loss / solver / experiment."""
    with open(path) as fh:
        raw = yaml.safe_load(fh) or {}
    kwargs: dict = {}
    for section, keys in _SECTION_KEYS.items():
        block = raw.get(section) or {}
        if section == "perturbation" and "kind" in block:
            block = dict(block)
            block["pert_kind"] = block.pop("kind")
        unknown = set(block) - set(keys)
        if unknown:
            raise ValueError(f"unknown keys {sorted(unknown)} in config section {section!r}")
        kwargs.update(block)
    if "kernel" in raw and raw["kernel"]:
        kwargs["kernel"] = KernelSpec(**raw["kernel"])
    if "loss" in raw and raw["loss"]:
        kwargs["loss"] = LossSpec(**raw["loss"])
    for key in ("box", "probes", "lam_grid", "x_tilde_grid"):
        if key in kwargs and kwargs[key] is not None:
            kwargs[key] = tuple(kwargs[key])
    kwargs.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**kwargs)


def _config_dict(config: ExperimentConfig) -> dict:
    d = asdict(config)
    return d


def write_manifest(config: ExperimentConfig, out_dir: Path, wall_time: float) -> None:
    manifest = {
        "config": _config_dict(config),
        "seed": config.seed,
        "versions": {
            "python": sys.version.split()[0],
            "numpy": np.__version__,
            "scipy": __import__("scipy").__version__,
        },
        "wall_time_seconds": wall_time,
    }
    with open(out_dir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, default=str)
        fh.write("\n")


@dataclass
class AllDataResult:
    probes: np.ndarray
    f_p_values: np.ndarray  # (M, L) clean-arm estimator values per probe
    f_q_values: np.ndarray  # (M, L) perturbed-arm values
    delta1: np.ndarray  # (L,) Kantorovich distance between the two laws
    delta2: float  # d_K between the input laws (quadrature)
    config: ExperimentConfig

    def ratio(self) -> np.ndarray:
        if self.delta2 == 0.0:
            return np.full_like(self.delta1, np.nan)
        return self.delta1 / self.delta2


def _replication(config: ExperimentConfig, m_index: int):
    """One replication: draw both arms, solve both problems, probe both fits."""
    model = config.base_model()
    pert = config.perturbation()
    data_p = sample_base(model, config.n, [config.seed, m_index, 0])
    if pert is None:
        data_q = sample_base(model, config.n, [config.seed, m_index, 0])
    else:
        data_q = sample_tail_perturbed(model, pert, config.n, [config.seed, m_index, 1])
    opts = config.solver_options()
    feas = config.feasible(config.n)
    sol_p = solve_erm(ErmProblem(data_p, config.kernel, config.loss, config.lam, feas), opts=opts)
    sol_q = solve_erm(ErmProblem(data_q, config.kernel, config.loss, config.lam, feas), opts=opts)
    probes = np.asarray(config.probes, dtype=float).reshape(-1, 1)
    return sol_p.f(probes), sol_q.f(probes)


def run_all_data(config: ExperimentConfig, out_dir=None) -> AllDataResult:
    """All-data perturbation experiment: laws of the estimator at probe points.

    For each replication the clean and perturbed arms use independent
    derived streams; with the perturbation disabled the arms share a stream
    and are identical by construction.
    """
    t_start = time.perf_counter()
    indices = range(1, config.m + 1)
    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            rows = list(pool.map(lambda i: _replication(config, i), indices))
    else:
        rows = [_replication(config, i) for i in indices]
    f_p = np.vstack([r[0] for r in rows])
    f_q = np.vstack([r[1] for r in rows])
    probes = np.asarray(config.probes, dtype=float)
    delta1 = np.array(
        [
            kantorovich_1d(law_of_estimator(f_p[:, j]), law_of_estimator(f_q[:, j]))
            for j in range(probes.size)
        ]
    )
    pert = config.perturbation()
    delta2 = 0.0 if pert is None else input_kantorovich(config.base_model(), pert)
    result = AllDataResult(probes, f_p, f_q, delta1, delta2, config)
    target = out_dir or config.out_dir
    if target is not None:
        write_all_data_outputs(result, Path(target), time.perf_counter() - t_start)
    return result


def default_prefixes(m: int) -> list:
    step = max(1, m // 10)
    prefixes = list(range(step, m + 1, step))
    if prefixes[-1] != m:
        prefixes.append(m)
    return prefixes


def prefix_ratios(result: AllDataResult, m_prefixes) -> list:
    """Rows (probe, M_prefix, delta1, delta2, ratio) on growing replication prefixes."""
    rows = []
    for j, probe in enumerate(result.probes):
        for mp in m_prefixes:
            if not 1 <= mp <= result.f_p_values.shape[0]:
                raise ValueError("prefix sizes must be within the replication count")
            d1 = kantorovich_1d(
                law_of_estimator(result.f_p_values[:mp, j]),
                law_of_estimator(result.f_q_values[:mp, j]),
            )
            ratio = d1 / result.delta2 if result.delta2 > 0 else float("nan")
            rows.append((float(probe), int(mp), d1, result.delta2, ratio))
    return rows


def convergence_study(config: ExperimentConfig, m_prefixes=None) -> list:
    """Ratio paths delta1^M / delta2 on growing prefixes of one replication stream."""
    if m_prefixes is None:
        m_prefixes = default_prefixes(config.m)
    if sorted(m_prefixes) != list(m_prefixes):
        raise ValueError("prefix sizes must be increasing")
    result = run_all_data(config)
    return prefix_ratios(result, m_prefixes)


def write_all_data_outputs(result: AllDataResult, out_dir: Path, wall_time: float) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    for j, probe in enumerate(result.probes):
        with open(out_dir / f"laws_{probe:g}.csv", "w") as fh:
            fh.write("m,f_P_value,f_Q_value\n")
            for i in range(result.f_p_values.shape[0]):
                fh.write(
                    f"{i + 1},{_fmt(result.f_p_values[i, j])},{_fmt(result.f_q_values[i, j])}\n"
                )
    rows = prefix_ratios(result, default_prefixes(result.config.m))
    with open(out_dir / "ratios.csv", "w") as fh:
        fh.write("probe,M_prefix,delta1,delta2,ratio\n")
        for probe, mp, d1, d2, ratio in rows:
            fh.write(f"{_fmt(probe)},{mp},{_fmt(d1)},{_fmt(d2)},{_fmt(ratio)}\n")
    write_manifest(result.config, out_dir, wall_time)
    try:
        _plot_all_data(result, rows, out_dir)
    except Exception:  # plots are a convenience; CSV is the contract
        pass


def _plot_all_data(result: AllDataResult, ratio_rows, out_dir: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    for j, probe in enumerate(result.probes):
        fig, ax = plt.subplots(figsize=(5, 3.5))
        for vals, label in ((result.f_p_values[:, j], "clean"), (result.f_q_values[:, j], "perturbed")):
            xs = np.sort(vals)
            ax.step(xs, np.arange(1, xs.size + 1) / xs.size, where="post", label=label)
        ax.set_xlabel(f"estimator value at x = {probe:g}")
        ax.set_ylabel("empirical CDF")
        ax.legend()
        fig.tight_layout()
        fig.savefig(out_dir / f"laws_{probe:g}.svg")
        plt.close(fig)
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for probe in result.probes:
        pts = [(mp, ratio) for p, mp, _, _, ratio in ratio_rows if p == probe]
        ax.plot([q[0] for q in pts], [q[1] for q in pts], marker="o", label=f"x = {probe:g}")
    ax.set_xlabel("replications M")
    ax.set_ylabel("delta1 / delta2")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(out_dir / "ratios.svg")
    plt.close(fig)


@dataclass
class SingleDataRow:
    x_tilde: float
    y_tilde: float
    lam: float
    if_norm: float
    if_at_probe: float
    upsilon: float
    fd_error: float


@dataclass
class SingleDataResult:
    rows: list
    config: ExperimentConfig


def run_single_data(config: ExperimentConfig, out_dir=None) -> SingleDataResult:
    """Single-data contamination sweep: influence norms over (x~, lambda) grid.

    The outlier follows y~ = x~^3; the clean problem is solved per lambda on
    one dataset drawn from the noisy base model, and the influence function
    is evaluated at the probe point together with its FD cross-check and
    the gradient-gap bound Upsilon.
    """
    t_start = time.perf_counter()
    model = config.base_model()
    data = sample_base(model, config.n, [config.seed, 0])
    opts = config.solver_options()
    t_grid = np.linspace(0.0, config.upsilon_t_max, 6)
    rows = []
    for lam in config.lam_grid:
        problem = ErmProblem(data, config.kernel, config.loss, lam, UNCONSTRAINED)
        solution = solve_erm(problem, opts=opts)
        for x_t in config.x_tilde_grid:
            z_t = np.array([x_t, x_t**3])
            report = influence_function(problem, solution, z_t)
            fd_err = fd_cross_check(problem, report, z_t, t=config.fd_t, opts=opts)
            ups = upsilon_bound(problem, z_t.reshape(1, -1), t_grid=t_grid, opts=opts)
            rows.append(
                SingleDataRow(
                    x_tilde=float(x_t),
                    y_tilde=float(x_t**3),
                    lam=float(lam),
                    if_norm=rkhs_norm(report.IF),
                    if_at_probe=float(report.IF(np.array([config.probe_x0]))),
                    upsilon=float(ups.values[0]),
                    fd_error=float(fd_err),
                )
            )
    result = SingleDataResult(rows, config)
    target = out_dir or config.out_dir
    if target is not None:
        write_single_data_outputs(result, Path(target), time.perf_counter() - t_start)
    return result


def write_single_data_outputs(result: SingleDataResult, out_dir: Path, wall_time: float) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "influence.csv", "w") as fh:
        fh.write("x_tilde,y_tilde,lambda,if_norm,if_at_probe,upsilon\n")
        for r in result.rows:
            fh.write(
                f"{_fmt(r.x_tilde)},{_fmt(r.y_tilde)},{_fmt(r.lam)},"
                f"{_fmt(r.if_norm)},{_fmt(r.if_at_probe)},{_fmt(r.upsilon)}\n"
            )
    write_manifest(result.config, out_dir, wall_time)
    try:
        _plot_single_data(result, out_dir)
    except Exception:
        pass


def _plot_single_data(result: SingleDataResult, out_dir: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5, 3.5))
    lams = sorted({r.lam for r in result.rows})
    for lam in lams:
        pts = sorted((r.x_tilde, r.if_norm) for r in result.rows if r.lam == lam)
        ax.plot([q[0] for q in pts], [q[1] for q in pts], marker="o", label=f"lambda = {lam:g}")
    ax.set_xlabel("outlier position x~")
    ax.set_ylabel("influence norm")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_dir / "influence.svg")
    plt.close(fig)
