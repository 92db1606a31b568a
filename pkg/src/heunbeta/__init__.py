"""Incomplete-Beta series solutions of the confluent Heun equation."""

from .che_core import (
    CheParams,
    FunctionSolution,
    ResidualReport,
    TransformedParams,
    che_residual,
    chebyshev_grid,
    exponential_factor,
    integrate_che,
    residual_report,
    sigma_roots_family_e,
    transform_exponential,
    transformed_residual,
)
from .errors import (
    ConstraintViolation,
    ConvergenceError,
    DomainError,
    HeunBetaError,
    NotTerminating,
    PivotBreakdown,
    StepBreakdown,
    StepSizeError,
    UnsupportedFamily,
)
from .expansions import (
    BetaSeries,
    Family,
    RecurrenceCoeffs,
    build_series,
    convergence_diagnostics,
    derive_family_e,
    evaluate,
    evaluate_with_derivatives,
    recurrence_coeffs,
)
from .special_functions import (
    beta_ladder,
    beta_step_up,
    gauss_2f1_row1,
    inc_beta,
    inc_beta_derivative,
)
from .termination import (
    ElementarySolution,
    FiniteBetaSum,
    SigmaPolynomial,
    TerminationCondition,
    closed_form_solution,
    detect_termination,
    family_a_crossref,
    poly_roots,
    reduce_to_elementary,
    sigma_polynomial,
    solve_family_d,
)

__version__ = "0.1.0"
