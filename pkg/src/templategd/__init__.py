"""Gradient descent on multiclass losses defined through margin templates.

Subpackages: ``losses`` (templates, tails, losses), ``trainer`` (full-batch
GD), ``datagen`` (separable finite-support distributions), ``verify``
(checkers, bounds, Rademacher estimates) and ``harness`` (sweeps, reports,
CLI).
"""

from .datagen import (
    FiniteSupportDistribution,
    make_hard_lower_n,
    make_hard_lower_t,
    make_random_separable,
    margin_certificate_check,
    population_risk_exact,
    sample,
)
from .errors import *  # noqa: F401,F403
from .losses import (
    ExponentialTail,
    MulticlassLoss,
    PolynomialTail,
    loss_gradient_logits,
    loss_value,
    make_cross_entropy,
    make_phi_linear_tail,
    make_phi_quadratic_tail,
    make_phi_raw,
    make_sum_univariate,
    make_tail,
    model_loss_gradient,
)
from .trainer import Dataset, GDConfig, GDTrace, default_step_size, empirical_risk, gd_run

__version__ = "0.1.0"
