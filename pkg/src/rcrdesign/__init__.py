"""Design criteria, optimal weights and BLUP checks for random coefficients
regression when each individual's curve is to be predicted."""
from rcrdesign.criteria import (
    CriterionSpec,
    CriterionValue,
    d_criterion,
    d_optimality_check,
    e_criterion,
    evaluate,
    g_criterion,
    g_trace_form,
    phi_q,
    sensitivity,
)
from rcrdesign.design_opt import (
    LineModelProblem,
    NoInteriorSolution,
    dg_equivalence_probe,
    dg_search,
    majorize_to_endpoints_0a,
    majorize_to_endpoints_symmetric,
    optimize_weights,
    solve_g_weight_0a,
    solve_g_weight_symmetric,
)
from rcrdesign.kernels import BACKEND
from rcrdesign.model import (
    Design,
    DesignError,
    InfoContext,
    Interval,
    RCRModel,
    RegressionBasis,
    SingularDesignError,
    eval_basis,
    info_matrix,
    loewner_leq,
    mse_eigenstructure,
    mse_matrix,
)
from rcrdesign.prediction import ObservationSet, blup, predict_response, simulate_mse

__version__ = "0.1.0"
