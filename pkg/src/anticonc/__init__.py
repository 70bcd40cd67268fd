"""Small-ball probabilities of weighted sums of independent variables.

Exact and Monte Carlo concentration functions, Diophantine approximation
quantities, characteristic-function integrals and the resulting bounds.
"""

from .bounds import (
    BoundConstants,
    BoundReport,
    calibrate_constants,
    theorem1_rhs,
    theorem2_rhs,
    verify_instance,
)
from .concentration import ConcentrationEstimate, levy_L, q_exact, q_exact_atomic, q_monte_carlo
from .diophantine import (
    CoefficientVector,
    DiophantineCertificate,
    alpha_1d_exact,
    alpha_multi_certified,
    b_set,
    lattice_distance,
)
from .distributions import RandomVariableModel, char_fn, q_of, sample, symmetrize
from .errors import (
    AnticoncError,
    BudgetExceeded,
    ConfigError,
    DegenerateGram,
    DegenerateSymmetrization,
    EmptyDomain,
    InfeasibleDomain,
    InvalidModel,
    InvalidP,
)
from .esseen import split_integral, step1_integral, step2_final_integral, step2_integral_atomic
from .quadrature import QuadratureSpec

__version__ = "0.1.0"
