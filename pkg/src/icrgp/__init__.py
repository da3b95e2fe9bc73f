"""Linear-time Gaussian-process sampling via iterative charted refinement.

The package builds an implicit square root of a kernel covariance on a
hierarchy of regular grids: a small dense base factor plus per-level local
refinement filters, applied in O(n) time.  A dense exact-GP module serves as
the accuracy oracle and a structured-interpolation baseline (simplified
KISS-GP) as the runtime comparison point.
"""

from .charts import (
    AffineChart,
    Chart,
    ChartedKernel,
    GridHierarchy,
    IdentityChart,
    LogExperimentChart,
    LogSpacedChart,
    build_hierarchy,
    charted_kernel,
    log_chart_for_experiment,
)
from .exactgp import (
    CandidateReport,
    CovarianceComparison,
    SelectionResult,
    compare_covariances,
    exact_log_prob,
    exact_sample,
    implicit_covariance,
    select_refinement_params,
    spd_factor,
)
from .generate import (
    IcrModel,
    LatentVector,
    apply_sqrt,
    apply_sqrt_adjoint,
    base_size_for_target,
    build_model,
    draw_latent,
    final_size,
    inverse_transform,
    latent_from_flat,
    latent_zeros,
    nearest_base_size,
    predicted_cost,
    sample,
    standardized_log_prob,
)
from .kernels import RBF, Kernel, Matern32, evaluate, gram, kernel_from_name
from .kiss import (
    KissModel,
    build_kiss,
    cg_solve,
    kiss_covariance,
    kiss_forward_pass,
    kiss_mvm,
    lanczos_tridiag,
    slq_logdet,
)
from .refine import (
    RefinementMatrices,
    RefinementSpec,
    matrices_for_level,
    refinement_matrices,
)

__version__ = "0.1.0"

__all__ = [
    "AffineChart",
    "CandidateReport",
    "Chart",
    "ChartedKernel",
    "CovarianceComparison",
    "GridHierarchy",
    "IcrModel",
    "IdentityChart",
    "Kernel",
    "KissModel",
    "LatentVector",
    "LogExperimentChart",
    "LogSpacedChart",
    "Matern32",
    "RBF",
    "RefinementMatrices",
    "RefinementSpec",
    "SelectionResult",
    "apply_sqrt",
    "apply_sqrt_adjoint",
    "base_size_for_target",
    "build_hierarchy",
    "build_kiss",
    "build_model",
    "cg_solve",
    "charted_kernel",
    "compare_covariances",
    "draw_latent",
    "evaluate",
    "exact_log_prob",
    "exact_sample",
    "final_size",
    "gram",
    "implicit_covariance",
    "inverse_transform",
    "kernel_from_name",
    "kiss_covariance",
    "kiss_forward_pass",
    "kiss_mvm",
    "lanczos_tridiag",
    "latent_from_flat",
    "latent_zeros",
    "log_chart_for_experiment",
    "matrices_for_level",
    "nearest_base_size",
    "predicted_cost",
    "refinement_matrices",
    "sample",
    "select_refinement_params",
    "slq_logdet",
    "spd_factor",
    "standardized_log_prob",
    "__version__",
]
