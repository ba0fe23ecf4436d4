"""Checks on GD trajectories against a scaled margin certificate."""

from __future__ import annotations

import numpy as np

from ..datagen import FiniteSupportDistribution
from ..errors import InvariantError, ParameterError
from ..losses import SumUnivariateTemplate, TailFunction, d_y_apply, k_factor
from ..trainer import GDTrace
from .report import CheckReport

__all__ = [
    "comparator_scale",
    "comparator_model",
    "check_opt_error",
    "check_norm_bound",
    "check_row_equality",
]

RTOL = 1e-9
ROW_TOL = 1e-12


def comparator_scale(epsilon: float, k: int, gamma: float, tail: TailFunction) -> float:
    """``rho^{-1}(epsilon / k) / gamma``."""
    if not 0 < epsilon < 0.5:
        raise ParameterError(f"epsilon must lie in (0, 1/2), got {epsilon}")
    return float(tail.rho_inverse(epsilon / k)) / gamma


def comparator_model(dist: FiniteSupportDistribution, epsilon: float, tail: TailFunction) -> np.ndarray:
    """Scaled certificate ``W*_eps = (rho^{-1}(eps/k) / gamma) W*``.

    Every support point then has margins of at least ``rho^{-1}(eps/k)``, so
    any loss dominated by ``sum_j rho`` is at most ``eps`` there. This is
    verified on the support before returning (the check only uses ``rho``,
    so it holds for every loss with this tail).

    Raises:
        ParameterError: ``epsilon`` outside ``(0, 1/2)``.
        InvariantError: the support-level guarantee fails.
    """
    scale = comparator_scale(epsilon, dist.k, dist.gamma, tail)
    W = scale * dist.certificate
    margins = d_y_apply(dist.X @ W.T, dist.y)
    dominating = np.asarray(tail.rho(margins)).sum(axis=1)
    if dominating.max() > epsilon * (1 + RTOL):
        raise InvariantError(
            f"comparator leaves tail sum {dominating.max():.6g} > epsilon={epsilon:.6g} on the support"
        )
    return W


def _precondition_eta(trace: GDTrace, beta, k, p):
    limit = 1.0 / (6.0 * beta * k_factor(k, p))
    return trace.config.eta <= limit * (1 + 1e-12), limit


def check_opt_error(trace: GDTrace, comparator, beta, k, p, epsilon) -> CheckReport:
    """``L_hat(W_T) <= ||W*_eps||_F^2 / (eta T) + 2 eps``.

    At the default step ``eta = 1/(6 beta k^(2/p))`` the first term is
    ``6 k^(2/p) beta ||W*_eps||^2 / T``. Larger steps are reported as
    skipped (outside the guarantee); the caller is responsible for
    ``L_hat(W*_eps) <= eps``.
    """
    ok, limit = _precondition_eta(trace, beta, k, p)
    if not ok:
        return CheckReport.skip("opt_error", "step size above 1/(6 beta k^(2/p))", eta=trace.config.eta, limit=limit)
    T = trace.config.T
    wnorm2 = float(np.linalg.norm(comparator)) ** 2
    bound = wnorm2 / (trace.config.eta * T) + 2.0 * epsilon
    ratio = trace.final_risk / (bound * (1 + RTOL))
    passed = ratio <= 1.0
    return CheckReport(
        "opt_error",
        passed,
        ratio,
        None if passed else {"final_risk": trace.final_risk, "bound": bound, "T": T},
        1,
        detail={"final_risk": trace.final_risk, "bound": bound},
    )


def check_norm_bound(trace: GDTrace, comparator, eta=None, epsilon=None) -> CheckReport:
    """Distance and norm bounds along the trajectory.

    At every recorded ``t``:
    ``||W_t - W*|| <= ||W*|| + 2 sqrt(eta eps t)`` and
    ``||W_t|| <= 2 ||W*|| + 2 sqrt(eta eps t)``.

    Needs the distances to ``comparator``: run ``gd_run`` with
    ``reference=comparator`` or with snapshots. Steps above
    ``1/(6 beta k^(2/p))`` are reported as skipped.
    """
    if epsilon is None:
        raise ParameterError("epsilon is required")
    eta = trace.config.eta if eta is None else eta
    comparator = np.asarray(comparator, dtype=float)
    limit = 1.0 / (6.0 * trace.beta * k_factor(trace.k, trace.p))
    if eta > limit * (1 + 1e-12):
        return CheckReport.skip("norm_bound", "step size above 1/(6 beta k^(2/p))", eta=eta, limit=limit)
    if trace.ref_dist is not None and trace.reference is not None and np.array_equal(trace.reference, comparator):
        dists = trace.ref_dist
    elif trace.snapshots:
        dists = np.array([np.linalg.norm(W - comparator) for W in trace.snapshots])
    else:
        raise ParameterError("trace has neither distances to this comparator nor snapshots")
    t = trace.t.astype(float)
    c = float(np.linalg.norm(comparator))
    slack = 2.0 * np.sqrt(eta * epsilon * t)
    r_dist = dists / ((c + slack) * (1 + RTOL))
    r_norm = trace.frob_norm / ((2 * c + slack) * (1 + RTOL))
    ratios = np.maximum(np.nan_to_num(r_dist, nan=0.0), np.nan_to_num(r_norm, nan=0.0))
    rep = CheckReport.from_ratios(
        "norm_bound",
        ratios,
        lambda i: {"t": int(trace.t[i]), "dist": float(dists[i]), "norm": float(trace.frob_norm[i])},
        {"worst_dist_ratio": float(r_dist.max()), "worst_norm_ratio": float(r_norm.max())},
    )
    return rep


def check_row_equality(trace: GDTrace) -> CheckReport:
    """All rows of every recorded iterate except the label row coincide.

    Preconditions: sum-univariate loss, a single label in the data and
    recorded snapshots. A violated precondition is reported as skipped.
    """
    if trace.loss_family != SumUnivariateTemplate.__name__:
        return CheckReport.skip("row_equality", "loss is not sum-univariate", family=trace.loss_family)
    if len(trace.labels) != 1:
        return CheckReport.skip("row_equality", "dataset labels are not all equal", labels=list(trace.labels))
    if not trace.snapshots:
        return CheckReport.skip("row_equality", "no snapshots recorded")
    y = trace.labels[0]
    ratios = []
    for W in trace.snapshots:
        rest = np.delete(W, y, axis=0)
        ratios.append(float(np.abs(rest - rest[0]).max()) / ROW_TOL)
    return CheckReport.from_ratios(
        "row_equality",
        ratios,
        lambda i: {"t": int(trace.t[i])},
        {"label": int(y), "max_deviation": max(ratios) * ROW_TOL},
    )

