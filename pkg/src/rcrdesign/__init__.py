"""Optimal and minimax designs for predicting individual random coefficients."""

from .covariance import INF, ZERO, TaggedCovariance
from .criteria import (
    CriterionReport,
    MseMatrix,
    SingularCriterion,
    adjusted_dispersion,
    fixed_effects_imse,
    imse_limit,
    imse_pred,
    mse_matrix,
)
from .model import (
    BasisSpec,
    Design,
    DesignError,
    PopulationSetup,
    WeightMeasure,
    evaluate_basis,
    information_matrix,
    v_matrix,
    validate_design,
)
from .simulation import (
    PredictionResult,
    SimulationPlan,
    blup,
    check_mse,
    design_matrix,
    empirical_mse,
    exact_replications,
    monte_carlo_mse,
    simulate,
)
from .solvers import (
    CASES,
    DesignFamilyBound,
    ImseWeightCriterion,
    MinimaxCase,
    SolverError,
    closed_form_minimax_weight,
    efficiency,
    efficiency_curve,
    family_criterion,
    family_design,
    grid_oracle,
    locally_optimal_weight,
    minimize_weight_1d,
    optimal_design_on_support,
    optimize_weights_fixed_support,
)

__version__ = "0.1.0"
