"""Carleman linearization toolkit.

Lift a polynomial ODE u' = sum_j W_j u^(x j) to a linear system on the
graded tensor space (+)_(k<=N) H^(x k), certify dissipativity of the
truncation, evolve it, and measure convergence against nonlinear
oracles.  Case studies: the spectral hyperviscous Burgers equation and
relative-bound resolvent estimates.

The environment variable CARLEMAN_THREADS caps BLAS parallelism; it is
applied here, before numpy is first imported, so it only takes effect
when this package is imported early (the command-line entry point
always is).
"""

import os as _os


def _configure_threads() -> None:
    budget = _os.environ.get("CARLEMAN_THREADS")
    if not budget:
        return
    try:
        if int(budget) < 1:
            return
    except ValueError:
        return
    for var in (
        "OMP_NUM_THREADS",
        "OPENBLAS_NUM_THREADS",
        "MKL_NUM_THREADS",
        "NUMEXPR_NUM_THREADS",
        "VECLIB_MAXIMUM_THREADS",
    ):
        _os.environ.setdefault(var, budget)


_configure_threads()

__version__ = "0.1.0"

from .tensor import (  # noqa: E402
    FockVector,
    Operator,
    apply_symm_sum,
    embed,
    kron,
    kron_power,
    level_offsets,
    project_level,
    q_inner,
    q_norm,
    symm_sum,
    symm_sum_rect,
)
from .assemble import (  # noqa: E402
    CarlemanSystem,
    NonlinearSystem,
    NotStrictlyDissipative,
    assemble,
    carleman_rhs_defect,
    is_input_symmetric,
    parameter_R,
    rescale,
    split_A_B,
    symmetrize_input,
)
from .certify import (  # noqa: E402
    Certificate,
    DissipativityReport,
    KernelInclusionError,
    UnsupportedCaseError,
    assemble_Lambda1,
    certify,
    check_Lambda1,
    check_WS,
    hermitian_part,
    nonlinear_relative_bound,
    relative_bound_corollary,
)
from .semigroup import (  # noqa: E402
    EvolutionResult,
    ResolventProbe,
    contractivity_check,
    evolve,
    expm,
    fmp_scan,
    integrated_criterion,
    resolvent,
    spectral_norm,
)
from .oracle import (  # noqa: E402
    BlowupError,
    OracleSolution,
    convergence_order,
    integrate,
    logistic_closed_form,
    richardson_error,
    rk4_path,
    tensor_power_derivative_check,
)
from .convergence import (  # noqa: E402
    ConvergenceRun,
    FamilyMember,
    bound_curve,
    discretization_sweep,
    eta_bound,
    fit_ratio,
    level_sweep,
    restriction_defect,
    run_to_csv,
)
from .burgers import (  # noqa: E402
    SpectralDiscretization,
    build_discretization,
    burgers_family,
    certify_spectral,
    compute_KM,
    cross_bound_max,
    family_member,
    initial_condition,
    is_real_field,
    level_error_study,
    nesting_defect,
    pseudospectral_reference,
    viscosity_threshold,
)
from .bounds import (  # noqa: E402
    NeumannProbe,
    PerturbedResolventReport,
    RelativeBoundReport,
    a_bound,
    diagonal_lower_bound_ok,
    perturbed_resolvent_bound,
    reaction_diffusion_check,
    reaction_diffusion_system,
    ring_laplacian,
)
from .io import load_system, save_system  # noqa: E402

__all__ = [
    "__version__",
    # tensor
    "FockVector", "Operator", "apply_symm_sum", "embed", "kron", "kron_power",
    "level_offsets", "project_level", "q_inner", "q_norm", "symm_sum", "symm_sum_rect",
    # assemble
    "CarlemanSystem", "NonlinearSystem", "NotStrictlyDissipative", "assemble",
    "carleman_rhs_defect", "is_input_symmetric", "parameter_R", "rescale",
    "split_A_B", "symmetrize_input",
    # certify
    "Certificate", "DissipativityReport", "KernelInclusionError", "UnsupportedCaseError",
    "assemble_Lambda1", "certify", "check_Lambda1", "check_WS", "hermitian_part",
    "nonlinear_relative_bound", "relative_bound_corollary",
    # semigroup
    "EvolutionResult", "ResolventProbe", "contractivity_check", "evolve", "expm",
    "fmp_scan", "integrated_criterion", "resolvent", "spectral_norm",
    # oracle
    "BlowupError", "OracleSolution", "convergence_order", "integrate",
    "logistic_closed_form", "richardson_error", "rk4_path", "tensor_power_derivative_check",
    # convergence
    "ConvergenceRun", "FamilyMember", "bound_curve", "discretization_sweep",
    "eta_bound", "fit_ratio", "level_sweep", "restriction_defect", "run_to_csv",
    # burgers
    "SpectralDiscretization", "build_discretization", "burgers_family",
    "certify_spectral", "compute_KM", "cross_bound_max", "family_member",
    "initial_condition", "is_real_field", "level_error_study", "nesting_defect",
    "pseudospectral_reference", "viscosity_threshold",
    # bounds
    "NeumannProbe", "PerturbedResolventReport", "RelativeBoundReport", "a_bound",
    "diagonal_lower_bound_ok", "perturbed_resolvent_bound", "reaction_diffusion_check",
    "reaction_diffusion_system", "ring_laplacian",
    # io
    "load_system", "save_system",
]
