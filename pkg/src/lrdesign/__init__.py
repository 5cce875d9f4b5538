"""Design densities for least-squares regression with long-memory errors."""
from .corrkernels import (
    CorrelationModel,
    LimitKernel,
    d_norm,
    h_alpha,
    h_alpha_inv,
    h_shortrange,
    h_shortrange_inv,
    limit_kernel,
    ml_eval,
    q_alpha,
    q_shortrange,
    rho_eval,
)
from .design_core import (
    LINEAR,
    LOCATION,
    THROUGH_ORIGIN,
    BasisSet,
    DesignDensity,
    Grid,
    MomentMatrices,
    criterion_eval,
    efficiency,
    moment_matrices,
    psi_matrix,
    quadrature,
    r_matrix_longrange,
    r_matrix_shortrange,
    w_matrix,
)
from .errors import AccuracyError, ConvergenceError, DomainError, SingularDesignError
from .finite_n import ConvergenceReport, FiniteDesign, convergence_report, design_points_from_density, exact_lse_covariance
from .multiparam import MaximinProblem, OptimizerOptions, efficiency_profile, maximin_design, optimize_density
from .oneparam import FixedPointSolution, density_from_multipliers, optimality_check, solve_one_param
from .shortrange import ShortRangeContext, cross_efficiency_lr_of_sr, cross_efficiency_sr_of_lr, solve_shortrange

__version__ = "0.1.0"
