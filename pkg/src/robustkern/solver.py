"""Regularized empirical risk minimization over a representer-form basis.

The decision variable is the coefficient vector alpha of
f = sum_j alpha_j k(x_j, .) with basis fixed to the dataset inputs. Smooth
losses are solved by projected gradient descent in the RKHS geometry with
Armijo backtracking (plus a closed-form linear solve fast path for the
squared loss); nonsmooth losses fall back to a projected subgradient method
with 1/sqrt(t) steps and an objective-gap stopping rule.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CapabilityError, ConvergenceError
from .kernels import (
    FeasibleSet,
    KernelSpec,
    RkhsFunction,
    UNCONSTRAINED,
    gram_matrix,
    project_feasible,
    rkhs_distance,
)
from .losses import LossSpec, loss_grad, loss_value


@dataclass(frozen=True)
class Dataset:
    """Samples z_i = (x_i, y_i) with uniform x-dimension."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        if x.ndim == 1:
            x = x.reshape(-1, 1)
        y = np.asarray(self.y, dtype=float).ravel()
        if x.shape[0] != y.shape[0]:
            raise ValueError("x and y must have equal length")
        if x.shape[0] == 0:
            raise ValueError("dataset must contain at least one sample")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def z(self) -> np.ndarray:
        """Samples as points of Z = X x R, laid out (x_1..x_d, y)."""
        return np.hstack([self.x, self.y.reshape(-1, 1)])


@dataclass(frozen=True)
class ErmProblem:
    """Regularized empirical risk minimization instance.

    weights: optional atom weights of the empirical measure (default
    uniform 1/N); needed for deterministic contamination mixtures.
    """

    dataset: Dataset
    kernel: KernelSpec
    loss: LossSpec
    lam: float
    feasible: FeasibleSet = UNCONSTRAINED
    weights: np.ndarray | None = None

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("regularization parameter must be nonnegative")
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=float).ravel()
            if w.shape[0] != self.dataset.n:
                raise ValueError("weights must match the dataset length")
            if np.any(w < 0):
                raise ValueError("weights must be nonnegative")
            object.__setattr__(self, "weights", w)

    def atom_weights(self) -> np.ndarray:
        if self.weights is None:
            return np.full(self.dataset.n, 1.0 / self.dataset.n)
        return self.weights


@dataclass
class ErmSolution:
    f: RkhsFunction
    objective: float
    residual: float
    iterations: int
    converged: bool


@dataclass(frozen=True)
class SolverOptions:
    tol: float = 1e-8  # optimality residual tolerance for smooth losses
    gap_tol: float = 1e-6  # objective-gap tolerance for nonsmooth losses
    max_iter: int = 50000
    method: str = "auto"  # auto | closed_form | pgd | subgradient
    armijo_factor: float = 0.5  # step halving factor in the line search
    raise_on_failure: bool = True


@dataclass(frozen=True)
class LipschitzEstimate:
    ratios: list  # (solution distance, sample distance, ratio) per pair
    max_ratio: float
    pairs_tested: int


def objective(problem: ErmProblem, f: RkhsFunction) -> float:
    """Weighted empirical risk plus lambda * ||f||_k^2."""
    if f.kernel != problem.kernel:
        raise ValueError("kernel mismatch between problem and function")
    w = problem.atom_weights()
    vals = f(problem.dataset.x)
    risk = float(np.sum(w * loss_value(problem.loss, problem.dataset.y, vals)))
    g = gram_matrix(f.kernel, f.basis)
    return risk + problem.lam * float(f.coeffs @ g @ f.coeffs)


def _objective_alpha(problem, gram, alpha) -> float:
    vals = gram @ alpha
    w = problem.atom_weights()
    risk = float(np.sum(w * loss_value(problem.loss, problem.dataset.y, vals)))
    return risk + problem.lam * float(alpha @ gram @ alpha)


def _rkhs_gradient_coeffs(problem, gram, alpha) -> np.ndarray:
    """Coefficients of grad R = sum_i w_i c'_2(z_i, f(x_i)) k_{x_i} + 2 lam f."""
    vals = gram @ alpha
    cprime = loss_grad(problem.loss, problem.dataset.y, vals)
    return problem.atom_weights() * cprime + 2.0 * problem.lam * alpha


def _natural_residual(problem, gram, alpha, step: float = 1.0) -> float:
    g = _rkhs_gradient_coeffs(problem, gram, alpha)
    probe = project_feasible(alpha - step * g, problem.feasible, gram)
    d = alpha - probe
    return float(np.sqrt(max(d @ gram @ d, 0.0))) / step


def _closed_form_squared(problem, gram):
    """Stationary coefficients of the squared loss: (W K + 2 lam I) a = W y."""
    w = problem.atom_weights()
    n = gram.shape[0]
    a = np.diag(w) @ gram + 2.0 * problem.lam * np.eye(n)
    return np.linalg.solve(a, w * problem.dataset.y)


def _lipschitz_upper(problem, gram) -> float:
    """Upper bound on the RKHS-metric curvature of the smooth objective."""
    w = problem.atom_weights()
    # risk Hessian is bounded by max_i w_i * hess_bound * ||k_xi||^2 summed;
    # a cheap safe bound uses the spectral radius of W K plus the ridge term.
    wk = np.max(np.abs(np.diag(w) @ gram).sum(axis=1))
    return wk + 2.0 * problem.lam


def _pgd(problem, gram, alpha0, opts: SolverOptions):
    """Monotone projected gradient descent with Armijo backtracking."""
    alpha = project_feasible(alpha0, problem.feasible, gram)
    obj = _objective_alpha(problem, gram, alpha)
    safe_step = 1.0 / max(_lipschitz_upper(problem, gram), 1e-12)
    step = safe_step
    it = 0
    residual = _natural_residual(problem, gram, alpha)
    while residual > opts.tol and it < opts.max_iter:
        g = _rkhs_gradient_coeffs(problem, gram, alpha)
        step = min(step * 2.0, 1e12)
        while True:
            cand = project_feasible(alpha - step * g, problem.feasible, gram)
            d = cand - alpha
            cand_obj = _objective_alpha(problem, gram, cand)
            dsq = float(d @ gram @ d)
            if cand_obj <= obj - 1e-4 * dsq / step:
                break
            if step <= safe_step:
                # objective differences are below floating-point resolution;
                # the 1/L step still contracts, so take it unconditionally
                cand = project_feasible(alpha - safe_step * g, problem.feasible, gram)
                cand_obj = _objective_alpha(problem, gram, cand)
                step = safe_step
                break
            step *= opts.armijo_factor
        alpha, obj = cand, cand_obj
        it += 1
        residual = _natural_residual(problem, gram, alpha)
    return alpha, obj, residual, it, residual <= opts.tol


def _subgradient(problem, gram, alpha0, opts: SolverOptions):
    """Projected subgradient with 1/sqrt(t) steps, tracking the best iterate."""
    alpha = project_feasible(alpha0, problem.feasible, gram)
    best = alpha.copy()
    best_obj = _objective_alpha(problem, gram, alpha)
    scale = 1.0 / max(np.sqrt(np.trace(gram) / gram.shape[0]), 1e-12)
    prev_window_best = np.inf
    converged = False
    it = 0
    window = 200
    for it in range(1, opts.max_iter + 1):
        g = _rkhs_gradient_coeffs(problem, gram, alpha)
        gnorm = np.sqrt(max(float(g @ gram @ g), 1e-30))
        alpha = project_feasible(alpha - scale / (np.sqrt(it) * gnorm) * g, problem.feasible, gram)
        obj = _objective_alpha(problem, gram, alpha)
        if obj < best_obj:
            best_obj, best = obj, alpha.copy()
        if it % window == 0:
            if prev_window_best - best_obj <= opts.gap_tol * max(1.0, abs(best_obj)):
                converged = True
                break
            prev_window_best = best_obj
    return best, best_obj, float("nan"), it, converged


def solve_erm(problem: ErmProblem, seed: int = 0, opts: SolverOptions | None = None) -> ErmSolution:
    """Solve the regularized ERM problem over the dataset basis.

    Deterministic given (problem, seed, opts). The solution basis is the
    dataset input points per the representer form.
    """
    opts = opts or SolverOptions()
    gram = gram_matrix(problem.kernel, problem.dataset.x)
    n = problem.dataset.n
    rng = np.random.default_rng(seed)
    alpha0 = np.zeros(n) if seed == 0 else 0.01 * rng.standard_normal(n)

    method = opts.method
    if method == "auto":
        if problem.loss.kind == "squared":
            method = "closed_form"
        elif problem.loss.smoothness in ("C1", "C2"):
            method = "pgd"
        else:
            method = "subgradient"

    if method == "closed_form":
        if problem.loss.kind != "squared":
            raise CapabilityError("closed-form path only available for the squared loss")
        alpha = _closed_form_squared(problem, gram)
        projected = project_feasible(alpha, problem.feasible, gram)
        if np.allclose(projected, alpha, rtol=0.0, atol=1e-12):
            residual = _natural_residual(problem, gram, alpha)
            f = RkhsFunction(problem.kernel, problem.dataset.x, alpha)
            return ErmSolution(f, _objective_alpha(problem, gram, alpha), residual, 0, True)
        # constraint active: fall back to the iterative path
        method = "pgd"

    if method == "pgd":
        if problem.loss.smoothness == "C0":
            raise CapabilityError("projected gradient requires a C1 loss")
        alpha, obj, residual, it, converged = _pgd(problem, gram, alpha0, opts)
    elif method == "subgradient":
        alpha, obj, residual, it, converged = _subgradient(problem, gram, alpha0, opts)
    else:
        raise ValueError(f"unknown solver method {opts.method!r}")

    f = RkhsFunction(problem.kernel, problem.dataset.x, alpha)
    sol = ErmSolution(f, obj, residual, it, converged)
    if not converged and opts.raise_on_failure:
        raise ConvergenceError(
            f"solver did not converge in {it} iterations (residual {residual:.3e})",
            last_solution=sol,
        )
    return sol


def optimality_residual(problem: ErmProblem, f: RkhsFunction, step: float = 1.0) -> float:
    """Natural residual ||f - Proj_F(f - step * grad)||_k / step of the SVIP.

    Zero exactly at solutions of the first-order optimality condition. The
    function must be in representer form over the dataset inputs.
    """
    if problem.loss.smoothness == "C0":
        raise CapabilityError("optimality residual requires a C1 loss")
    if f.basis.shape != problem.dataset.x.shape or not np.array_equal(f.basis, problem.dataset.x):
        raise ValueError("function basis must equal the dataset inputs")
    gram = gram_matrix(problem.kernel, problem.dataset.x)
    return _natural_residual(problem, gram, f.coeffs, step)


def estimate_lipschitz(
    kernel: KernelSpec,
    loss: LossSpec,
    lam: float,
    pair_sampler,
    num_pairs: int,
    seed: int = 0,
    p: float = 1.0,
    feasible: FeasibleSet = UNCONSTRAINED,
    opts: SolverOptions | None = None,
) -> LipschitzEstimate:
    """Empirical surrogate for the solution-map Lipschitz constant.

    `pair_sampler(rng)` must return a pair of equal-size datasets whose
    samples are matched index-by-index. For each pair the ratio of the RKHS
    distance between the two solutions to the growth-weighted sample
    distance (1/N) * sum_l max{1, ||z1_l||, ||z2_l||}^(p-1) ||z1_l - z2_l||
    is recorded; identical pairs are skipped (0/0 guard). Ratios are sorted
    before aggregation so results do not depend on evaluation order.
    """
    if lam <= 0:
        raise ValueError("estimate_lipschitz requires lam > 0")
    ratios = []
    root = np.random.SeedSequence(seed)
    for child in root.spawn(num_pairs):
        rng = np.random.default_rng(child)
        d1, d2 = pair_sampler(rng)
        if d1.n != d2.n:
            raise ValueError("paired datasets must have equal size")
        z1, z2 = d1.z, d2.z
        scale = np.maximum(
            1.0, np.maximum(np.linalg.norm(z1, axis=1), np.linalg.norm(z2, axis=1))
        ) ** (p - 1.0)
        denom = float(np.mean(scale * np.linalg.norm(z1 - z2, axis=1)))
        if denom < 1e-14:
            continue
        s1 = solve_erm(ErmProblem(d1, kernel, loss, lam, feasible), opts=opts)
        s2 = solve_erm(ErmProblem(d2, kernel, loss, lam, feasible), opts=opts)
        num = rkhs_distance(s1.f, s2.f)
        ratios.append((num, denom, num / denom))
    ratios.sort(key=lambda r: r[2])
    max_ratio = ratios[-1][2] if ratios else 0.0
    return LipschitzEstimate(ratios, max_ratio, len(ratios))
