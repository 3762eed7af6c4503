"""hartreelab: exact and mean-field dynamics of collectively interacting qubits.

The package simulates N bosonic qubits evolving under a non-Hermitian
collective generator exactly in the symmetric subspace (in the log
domain, so N up to 10**6 is routine for the diagonal ZZ model), solves
the corresponding non-Hermitian mean-field equation, evaluates the
large-N limit of the one-particle marginal by saddle-point analysis,
and quantifies where the mean-field description breaks down.
"""

__version__ = "0.1.0"

from .states import (
    DensityMatrix,
    DickeState,
    LogComplex,
    ModelSpec,
    QubitState,
    dicke_log_binomial,
    log_sum_exp_complex,
    product_state,
)
from .dynamics import (
    CapacityError,
    CollectiveOperator,
    ZZEigenvalue,
    bbgky_rhs,
    brute_force_evolve,
    evolve_general,
    evolve_zz,
    lift_model,
    marginal,
    marginal_normalized,
    zz_eigenvalue,
)
from .hartree import (
    ClosedFormParams,
    HartreeTrajectory,
    IntegrationError,
    classify_fixed_point,
    closed_form_zz,
    hartree_matrix_rhs,
    hartree_rhs,
    integrate_hartree,
)
from .asymptotics import (
    LimitState,
    MaximizerResult,
    RateFunction,
    SingularityError,
    find_global_maximizer,
    laplace_marginal_approx,
    limit_marginal,
    limit_ode_rhs,
    maximizer_ode_rhs,
    rate_function_eval,
    second_derivative_roots,
)
from .metrics import (
    FitResult,
    convergence_infidelity,
    hartree_infidelity,
    linear_entropy,
    power_law_tail_fit,
    qubit_fidelity,
)
from .experiments import ConfigError, ExperimentConfig, RunManifest
from .verify import VerificationReport, run_verification

__all__ = [
    "__version__",
    # states
    "LogComplex", "QubitState", "DickeState", "DensityMatrix", "ModelSpec",
    "log_sum_exp_complex", "dicke_log_binomial", "product_state",
    # dynamics
    "CapacityError", "ZZEigenvalue", "CollectiveOperator", "zz_eigenvalue",
    "evolve_zz", "lift_model", "evolve_general", "marginal",
    "marginal_normalized", "bbgky_rhs", "brute_force_evolve",
    # hartree
    "IntegrationError", "HartreeTrajectory", "ClosedFormParams", "hartree_rhs",
    "hartree_matrix_rhs", "integrate_hartree", "closed_form_zz",
    "classify_fixed_point",
    # asymptotics
    "SingularityError", "RateFunction", "MaximizerResult", "LimitState",
    "rate_function_eval", "second_derivative_roots", "find_global_maximizer",
    "limit_marginal", "limit_ode_rhs", "maximizer_ode_rhs",
    "laplace_marginal_approx",
    # metrics
    "FitResult", "linear_entropy", "hartree_infidelity", "qubit_fidelity",
    "convergence_infidelity", "power_law_tail_fit",
    # experiments / verification
    "ConfigError", "ExperimentConfig", "RunManifest",
    "VerificationReport", "run_verification",
]
