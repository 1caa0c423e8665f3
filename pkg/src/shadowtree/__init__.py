"""Log-optimal trading under proportional transaction costs in a binomial
model, via an explicitly constructed shadow-price process."""

from .asymptotics import (
    BSLimitParams,
    ExpansionSet,
    bs_ntr_expansion,
    bs_params,
    c_series,
    g2_solve,
    g_bs,
    growth_expansion,
    lambda_taylor,
    ntr_expansion,
)
from .errors import ShadowTreeError
from .markov import (
    BoundaryChain,
    growth_rate_closed_form,
    growth_rate_stationary,
    invariant_distribution,
    transition_matrix,
)
from .model import (
    DerivedConstants,
    ModelParams,
    ValidatedModel,
    frictionless_fraction,
    frictionless_growth,
    state_price_density,
    validate,
)
from .oracle import DPConfig, SandwichReport, dp_true, sandwich_check, simulate
from .shadow import (
    PathState,
    Portfolio,
    Regime,
    ShadowFunction,
    optimality_identity_check,
    shadow_conditions_check,
    shadow_price,
    step,
)
from .solver import ShadowSolution, big_f, calibrate_integer_k, k_of_c, solve_c

__version__ = "0.1.0"

__all__ = [
    "BSLimitParams",
    "BoundaryChain",
    "DPConfig",
    "DerivedConstants",
    "ExpansionSet",
    "ModelParams",
    "PathState",
    "Portfolio",
    "Regime",
    "SandwichReport",
    "ShadowFunction",
    "ShadowSolution",
    "ShadowTreeError",
    "ValidatedModel",
    "big_f",
    "bs_ntr_expansion",
    "bs_params",
    "c_series",
    "calibrate_integer_k",
    "dp_true",
    "frictionless_fraction",
    "frictionless_growth",
    "g2_solve",
    "g_bs",
    "growth_expansion",
    "growth_rate_closed_form",
    "growth_rate_stationary",
    "invariant_distribution",
    "k_of_c",
    "lambda_taylor",
    "ntr_expansion",
    "optimality_identity_check",
    "sandwich_check",
    "shadow_conditions_check",
    "shadow_price",
    "simulate",
    "solve_c",
    "state_price_density",
    "step",
    "transition_matrix",
    "validate",
]
