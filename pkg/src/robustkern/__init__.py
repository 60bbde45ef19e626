"""Robust regularized kernel learning: solvers, probability metrics,
influence functions and perturbation experiments."""

from .errors import CapabilityError, CapacityError, ConditioningError, ConvergenceError
from .kernels import (
    FeasibleSet,
    KernelSpec,
    RkhsFunction,
    UNCONSTRAINED,
    coeff_box,
    combine,
    cross_gram,
    gram_matrix,
    kernel_eval,
    project_feasible,
    rkhs_ball,
    rkhs_distance,
    rkhs_eval,
    rkhs_inner,
    rkhs_norm,
)
from .losses import (
    GaugeFunction,
    LossSpec,
    gauge_psi,
    loss_grad,
    loss_hess,
    loss_value,
    moment_check,
)
from .metrics import (
    EmpiricalMeasure,
    MetricResult,
    fm_bounds,
    kantorovich_1d,
    kantorovich_ot,
    law_of_estimator,
    plan_to_csv,
)
from .solver import (
    Dataset,
    ErmProblem,
    ErmSolution,
    LipschitzEstimate,
    SolverOptions,
    estimate_lipschitz,
    objective,
    optimality_residual,
    solve_erm,
)
from .sampling import (
    BaseModel,
    MixtureModel,
    TailPerturbation,
    dataset_from_csv,
    dataset_to_csv,
    deterministic_mixture_measure,
    input_kantorovich,
    perturbed_input_cdf,
    perturbed_input_inverse_cdf,
    sample_base,
    sample_mixture,
    sample_tail_perturbed,
)
from .influence import (
    InfluenceReport,
    UpsilonReport,
    approximate_contaminated_solution,
    fd_cross_check,
    influence_fd,
    influence_function,
    upsilon_bound,
)
from .lab import (
    AllDataResult,
    ExperimentConfig,
    SingleDataResult,
    convergence_study,
    load_config,
    run_all_data,
    run_single_data,
)

__all__ = [name for name in dir() if not name.startswith("_")]

__version__ = "0.1.0"
