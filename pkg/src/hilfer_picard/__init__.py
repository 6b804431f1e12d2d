"""Picard successive approximation for singular Hilfer fractional initial value problems."""

from .errors import (
    ConfigError,
    ConfinementError,
    DegenerateLipschitzError,
    ExprDomainError,
    ExprError,
    ExprLexError,
    ExprSyntaxError,
    HilferError,
    NonConvergenceError,
)
from .expr import compile_expr, evaluate, parse, to_source, tokenize
from .operators import caputo, differential_residual, hilfer, integral_residual, rl_derivative, rl_integral
from .picard import (
    Hypotheses,
    Problem,
    Solution,
    SolverConfig,
    bound_u,
    bound_u0,
    compute_l,
    derive_params,
    estimate_A,
    estimate_M,
    phi0,
    picard_step,
    ratio_u,
    solve,
    tail_bound,
)
from .quadrature import KernelQuadrature, frac_integral_weighted, interp_eval, jacobi_rule, make_mesh
from .special import beta, gamma, gamma_limit, log_gamma, mittag_leffler2

__version__ = "0.1.0"
