"""Influence function of the regularized kernel estimator under contamination.

The influence function at an outlier z~ solves the linearized optimality
system at the clean solution f:

    sum_i w_i c''(z_i, f(x_i)) k_{x_i} <k_{x_i}, h> + 2 lam h
        = -( c'(z~, f(x~)) k_{x~} - sum_i w_i c'(z_i, f(x_i)) k_{x_i} ),

reduced to an (N+1) x (N+1) linear system over the basis {x_1..x_N, x~} by
matching basis coefficients. The ridge term 2 lam h is part of the inverted
operator; it is what makes the system well posed for empirical measures.
A finite-difference quotient through the deterministic contamination
mixture serves as the independent cross-check and as the fallback
estimator when the loss lacks second derivatives.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import CapabilityError, ConditioningError
from .kernels import RkhsFunction, combine, cross_gram, gram_matrix, rkhs_norm
from .losses import is_nonsmooth_at, loss_grad, loss_hess
from .solver import Dataset, ErmProblem, ErmSolution, SolverOptions, solve_erm

#: Condition-number ceiling for the influence linear system.
CONDITION_LIMIT = 1e14

#: Relative interior margin required of constrained solutions.
INTERIOR_MARGIN = 1e-8


@dataclass
class InfluenceReport:
    IF: RkhsFunction  # influence function over basis {x_1..x_N, x~}
    system_condition: float
    rhs_norm: float
    fd_error: float | None = None  # relative cross-check residual, if computed


@dataclass
class UpsilonReport:
    """Grid evaluation of the gradient-gap bound Upsilon(z~)."""

    z_grid: np.ndarray  # (G, d+1) candidate outliers
    values: np.ndarray  # (G,) per-outlier sup over the t grid
    sup_value: float
    t_grid: np.ndarray
    if_ratios: np.ndarray  # ||IF||_k / Upsilon(z~) per grid point


def _check_interior(problem: ErmProblem, solution: ErmSolution) -> None:
    fs = problem.feasible
    if fs.kind == "unconstrained":
        return
    alpha = solution.f.coeffs
    if fs.kind == "coeff_box":
        lo = np.broadcast_to(fs.lower, alpha.shape)
        hi = np.broadcast_to(fs.upper, alpha.shape)
        margin = INTERIOR_MARGIN * np.maximum(1.0, np.abs(hi - lo))
        if np.any(alpha - lo < margin) or np.any(hi - alpha < margin):
            raise CapabilityError("solution on the box boundary; influence system undefined")
    else:  # rkhs_ball
        margin = INTERIOR_MARGIN * fs.radius
        if fs.radius - rkhs_norm(solution.f) < margin:
            raise CapabilityError("solution on the ball boundary; influence system undefined")


def _require_c2(problem: ErmProblem, values: np.ndarray, y: np.ndarray) -> None:
    if problem.loss.smoothness == "C0":
        raise CapabilityError(f"{problem.loss.kind} loss has no second derivative")
    if problem.loss.smoothness == "C1" and np.any(is_nonsmooth_at(problem.loss, y, values)):
        raise CapabilityError("loss not twice differentiable at a residual; cannot linearize")


def influence_function(
    problem: ErmProblem, solution: ErmSolution, z_tilde
) -> InfluenceReport:
    """Influence function of the estimator at outlier z_tilde.

    Requires a C2 loss at all residuals and a solution strictly interior to
    the feasible set (the normal-cone term then vanishes).
    """
    z_tilde = np.asarray(z_tilde, dtype=float).ravel()
    data = problem.dataset
    if z_tilde.shape[0] != data.x.shape[1] + 1:
        raise ValueError("outlier dimension must match the dataset")
    _check_interior(problem, solution)

    w = problem.atom_weights()
    f = solution.f
    vals = f(data.x)
    x_t, y_t = z_tilde[:-1], z_tilde[-1]
    val_t = f(x_t)
    _require_c2(problem, np.append(vals, val_t), np.append(data.y, y_t))

    cprime = loss_grad(problem.loss, data.y, vals)
    csecond = loss_hess(problem.loss, data.y, vals)
    cprime_t = loss_grad(problem.loss, y_t, val_t)

    basis = np.vstack([data.x, x_t.reshape(1, -1)])
    g_ext = gram_matrix(problem.kernel, basis)
    n = data.n
    d = np.zeros(n + 1)
    d[:n] = w * csecond
    a = d[:, None] * g_ext + 2.0 * problem.lam * np.eye(n + 1)
    b = np.concatenate([w * cprime, [-cprime_t]])

    cond = float(np.linalg.cond(a))
    if not np.isfinite(cond) or cond > CONDITION_LIMIT:
        raise ConditioningError(f"influence system condition {cond:.3e} exceeds limit")
    beta = np.linalg.solve(a, b)

    rhs_norm = float(np.sqrt(max(b @ g_ext @ b, 0.0)))
    return InfluenceReport(
        IF=RkhsFunction(problem.kernel, basis, beta),
        system_condition=cond,
        rhs_norm=rhs_norm,
    )


def _contaminated_problem(problem: ErmProblem, z_tilde: np.ndarray, t: float) -> ErmProblem:
    """ERM problem under (1-t) * P + t * dirac(z~) over the extended basis."""
    data = problem.dataset
    x_ext = np.vstack([data.x, z_tilde[:-1].reshape(1, -1)])
    y_ext = np.append(data.y, z_tilde[-1])
    w_ext = np.concatenate([(1.0 - t) * problem.atom_weights(), [t]])
    return replace(problem, dataset=Dataset(x_ext, y_ext), weights=w_ext)


def influence_fd(
    problem: ErmProblem,
    z_tilde,
    t_list,
    seed: int = 0,
    opts: SolverOptions | None = None,
):
    """Finite-difference quotients (f_t - f_0) / t of the contamination path.

    Works for any solvable loss; serves as the oracle for
    `influence_function` and as the estimator when C2 fails.
    Returns a list of (t, quotient RkhsFunction).
    """
    z_tilde = np.asarray(z_tilde, dtype=float).ravel()
    clean = _contaminated_problem(problem, z_tilde, 0.0)
    f0 = solve_erm(clean, seed=seed, opts=opts).f
    out = []
    for t in t_list:
        if not 0.0 < t < 1.0:
            raise ValueError("finite-difference steps must lie in (0, 1)")
        ft = solve_erm(_contaminated_problem(problem, z_tilde, t), seed=seed, opts=opts).f
        quotient = RkhsFunction(f0.kernel, f0.basis, (ft.coeffs - f0.coeffs) / t)
        out.append((float(t), quotient))
    return out


def fd_cross_check(
    problem: ErmProblem,
    report: InfluenceReport,
    z_tilde,
    t: float = 1e-4,
    opts: SolverOptions | None = None,
) -> float:
    """Relative RKHS-norm gap between the influence function and its FD quotient.

    Stores the result on the report and returns it.
    """
    (_, quotient), = influence_fd(problem, z_tilde, [t], opts=opts)
    diff = RkhsFunction(report.IF.kernel, report.IF.basis, report.IF.coeffs - quotient.coeffs)
    if_norm = rkhs_norm(report.IF)
    err = rkhs_norm(diff) / if_norm if if_norm > 0 else rkhs_norm(diff)
    report.fd_error = float(err)
    return report.fd_error


def approximate_contaminated_solution(
    clean_solution: RkhsFunction, influence: RkhsFunction, n: int
) -> RkhsFunction:
    """First-order estimate f_clean + (1/N) * IF of the contaminated solution."""
    return combine(clean_solution, influence, 1.0, 1.0 / n)


def upsilon_bound(
    problem: ErmProblem,
    z_grid,
    t_grid=None,
    seed: int = 0,
    opts: SolverOptions | None = None,
) -> UpsilonReport:
    """Gradient-gap bound Upsilon over a grid of candidate outliers.

    Upsilon(z~) = sup over t in the grid of the RKHS norm of
    E_P[c'(z, f_t(x)) k_x] - c'(z~, f_t(x~)) k_{x~}, with f_t the solution
    under the contamination mixture at level t. Also reports the empirical
    ratio ||IF||_k / Upsilon(z~) (a surrogate for the subregularity
    modulus; finite ratios are evidence of the boundedness inequality).
    """
    if t_grid is None:
        t_grid = np.linspace(0.0, 0.1, 6)
    t_grid = np.asarray(t_grid, dtype=float)
    z_grid = np.atleast_2d(np.asarray(z_grid, dtype=float))
    data = problem.dataset
    w = problem.atom_weights()
    values = np.zeros(z_grid.shape[0])
    if_ratios = np.zeros(z_grid.shape[0])
    clean_solution = solve_erm(problem, seed=seed, opts=opts)
    for gi, z_t in enumerate(z_grid):
        basis = np.vstack([data.x, z_t[:-1].reshape(1, -1)])
        g_ext = gram_matrix(problem.kernel, basis)
        best = 0.0
        for t in t_grid:
            if t == 0.0:
                ft = clean_solution.f
                vals = ft(data.x)
                val_t = ft(z_t[:-1])
            else:
                ft = solve_erm(_contaminated_problem(problem, z_t, t), seed=seed, opts=opts).f
                evals = cross_gram(problem.kernel, basis, ft.basis) @ ft.coeffs
                vals, val_t = evals[:-1], evals[-1]
            c = np.concatenate(
                [w * loss_grad(problem.loss, data.y, vals), [-loss_grad(problem.loss, z_t[-1], val_t)]]
            )
            best = max(best, float(np.sqrt(max(c @ g_ext @ c, 0.0))))
        values[gi] = best
        report = influence_function(problem, clean_solution, z_t)
        if_norm = rkhs_norm(report.IF)
        if_ratios[gi] = if_norm / best if best > 0 else (0.0 if if_norm == 0 else np.inf)
    return UpsilonReport(
        z_grid=z_grid,
        values=values,
        sup_value=float(values.max()),
        t_grid=t_grid,
        if_ratios=if_ratios,
    )
