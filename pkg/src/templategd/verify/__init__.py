"""Executable checkers, bound calculators and the Rademacher estimator."""

from .bounds import (
    BoundInputs,
    BoundTerms,
    bound_values,
    corpol_k_exponent,
    default_epsilon,
    epsilon_corpol,
    epsilon_feasible,
    epsilon_one_over_T,
    gen_gap,
)
from .finite_diff import finite_diff_gradient
from .lemmas import (
    OffsetTemplate,
    check_diff_self_bound,
    check_lp_smoothness,
    check_self_bounding,
    check_tail,
    check_template_membership,
    estimate_grad_lipschitz_W,
    with_beta,
)
from .rademacher import (
    LINEAR,
    RademacherEstimate,
    RademacherQuery,
    estimate_rademacher,
    rademacher_details,
    rademacher_grid,
)
from .report import CheckReport, format_table
from .suite import run_suite, shipped_losses, shipped_tails
from .training import (
    check_norm_bound,
    check_opt_error,
    check_row_equality,
    comparator_model,
    comparator_scale,
)

__all__ = [name for name in dir() if not name.startswith("_")]
