"""Optimal experiment design for qubit channel estimation.

The package covers single-qubit state and channel primitives (``qubit``),
classical and quantum Fisher information (``fisher``), convex design
optimization over finite design menus (``design``), closed forms for the
phase-damping style asymmetry model (``closed_forms``), adaptive two-arm
Monte Carlo simulation (``adaptive``), and a command line front end
(``cli``).
"""

from .adaptive import (
    AdaptiveConfig,
    MseRatioResult,
    SweepResult,
    SweepRow,
    ThetaGrid,
    TrialRecord,
    arm_probabilities,
    eps_to_theta,
    estimator,
    f_hat,
    grid_sweep,
    mse_ratio,
    next_lambda,
    run_adaptive,
    run_static,
    sample_counts,
    static_mse_analytic,
    theta_to_eps,
    vratio_analytic,
)
from .closed_forms import (
    AsymmetryPoint,
    FTriple,
    asymm_lambda_star,
    asymm_m1_cr_value,
    asymm_m2_cr_value,
    asymm_singular_value,
    asymmetry_qfi,
    delta_m1_m2,
    f_values,
    pauli_optimal_a_value,
    pauli_optimal_nu_A,
    pauli_qpt_partial_inverse,
    scaling_optimal_nu,
    scheme_gap_rows,
)
from .design import (
    BinaryDesignSummary,
    Criterion,
    GammaLimitsReport,
    LownerReport,
    OptimalDesignResult,
    binary_a_optimal,
    binary_d_optimal,
    efficiency,
    evaluate_criterion,
    gamma_limits_consistency,
    gamma_optimal_diagonal,
    gamma_optimal_value,
    iid_vs_mixed_under_lowner,
    lowner_check,
    optimize_frequencies,
    project_to_simplex,
)
from .errors import (
    DegenerateModelError,
    DomainError,
    EfficiencyError,
    EstimatorError,
    NuisanceSingularError,
    QdoeError,
    SingularDesignError,
    SingularStateError,
    ValidationError,
)
from .fisher import (
    Design,
    FisherMatrix,
    MixedDesign,
    PartialFisherResult,
    ScoreSet,
    classical_fisher,
    mixed_fisher,
    optimal_pvm_single_param,
    partial_fisher,
    pseudo_inverse,
    scaling_qfi_closed_form,
    sld_operators,
    sld_qfi,
)
from .qubit import (
    AffineBlochChannel,
    ChannelFamily,
    KrausChannel,
    Povm,
    QubitState,
    asymmetry_family,
    bloch_to_density,
    born_probabilities,
    channel_family,
    density_to_bloch,
    finite_difference_partials,
    kraus_to_affine,
    linear_scaling_family,
    mix_povms,
    mix_states,
    pauli_axis_povm,
    pauli_axis_state,
    pauli_channel_family,
    restrict_family,
)

__version__ = "0.1.0"

__all__ = [
    "AdaptiveConfig",
    "AffineBlochChannel",
    "AsymmetryPoint",
    "BinaryDesignSummary",
    "ChannelFamily",
    "Criterion",
    "DegenerateModelError",
    "Design",
    "DomainError",
    "EfficiencyError",
    "EstimatorError",
    "FTriple",
    "FisherMatrix",
    "GammaLimitsReport",
    "KrausChannel",
    "LownerReport",
    "MixedDesign",
    "MseRatioResult",
    "NuisanceSingularError",
    "OptimalDesignResult",
    "PartialFisherResult",
    "Povm",
    "QdoeError",
    "QubitState",
    "ScoreSet",
    "SingularDesignError",
    "SingularStateError",
    "SweepResult",
    "SweepRow",
    "ThetaGrid",
    "TrialRecord",
    "ValidationError",
    "arm_probabilities",
    "asymm_lambda_star",
    "asymm_m1_cr_value",
    "asymm_m2_cr_value",
    "asymm_singular_value",
    "asymmetry_family",
    "asymmetry_qfi",
    "binary_a_optimal",
    "binary_d_optimal",
    "bloch_to_density",
    "born_probabilities",
    "channel_family",
    "classical_fisher",
    "delta_m1_m2",
    "density_to_bloch",
    "efficiency",
    "eps_to_theta",
    "estimator",
    "evaluate_criterion",
    "f_hat",
    "f_values",
    "finite_difference_partials",
    "gamma_limits_consistency",
    "gamma_optimal_diagonal",
    "gamma_optimal_value",
    "grid_sweep",
    "iid_vs_mixed_under_lowner",
    "kraus_to_affine",
    "linear_scaling_family",
    "lowner_check",
    "mix_povms",
    "mix_states",
    "mixed_fisher",
    "mse_ratio",
    "next_lambda",
    "optimal_pvm_single_param",
    "optimize_frequencies",
    "partial_fisher",
    "pauli_axis_povm",
    "pauli_axis_state",
    "pauli_channel_family",
    "pauli_optimal_a_value",
    "pauli_optimal_nu_A",
    "pauli_qpt_partial_inverse",
    "project_to_simplex",
    "pseudo_inverse",
    "restrict_family",
    "run_adaptive",
    "run_static",
    "sample_counts",
    "scaling_optimal_nu",
    "scaling_qfi_closed_form",
    "scheme_gap_rows",
    "sld_operators",
    "sld_qfi",
    "static_mse_analytic",
    "theta_to_eps",
    "vratio_analytic",
]
