"""The full checker suite over the shipped losses, plus mutation cases.

``run_suite`` returns one report per (checker, subject). Mutation cases are
run through the same checkers and their reports are inverted: a mutation
entry passes when its checker *fails*, which is what shows the checker can
detect a violation.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from ..datagen import make_hard_lower_n, make_random_separable, sample
from ..losses import (
    ExponentialTail,
    MulticlassLoss,
    PolynomialTail,
    make_cross_entropy,
    make_phi_linear_tail,
    make_phi_quadratic_tail,
    make_sum_univariate,
)
from ..trainer import GDConfig, default_step_size, gd_run
from .bounds import default_epsilon
from .lemmas import (
    OffsetTemplate,
    check_diff_self_bound,
    check_self_bounding,
    check_tail,
    check_template_membership,
    estimate_grad_lipschitz_W,
)
from .report import CheckReport
from .training import (
    check_norm_bound,
    check_opt_error,
    check_row_equality,
    comparator_model,
)

__all__ = ["shipped_tails", "shipped_losses", "run_suite", "template_reports", "training_reports", "mutation_reports"]

SUITE_KS = (2, 4, 8, 16)


def shipped_tails():
    return [ExponentialTail(1.0), PolynomialTail(0.5), PolynomialTail(1.0)]


def shipped_losses(k: int) -> list[MulticlassLoss]:
    """Losses covered by the lemma suite.

    The raw exponential sum is left out: ``exp(-x)`` is not globally smooth
    on the negative half-line, so it is not a member of the class.
    """
    exp1, poly_half, poly1 = shipped_tails()
    return [
        make_cross_entropy(k, 1.0),
        make_cross_entropy(k, 2.0),
        make_sum_univariate(k, make_phi_quadratic_tail(exp1)),
        make_sum_univariate(k, make_phi_linear_tail(exp1)),
        make_sum_univariate(k, make_phi_quadratic_tail(poly_half)),
        make_sum_univariate(k, make_phi_quadratic_tail(poly1)),
        make_sum_univariate(k, make_phi_linear_tail(poly1)),
    ]


def _named(report: CheckReport, subject: str) -> CheckReport:
    report.name = f"{report.name}[{subject}]"
    return report


def template_reports(ks=SUITE_KS, sample_count: int = 10_000, seed=0):
    out = [_named(check_tail(t, sample_count, seed), "tail") for t in shipped_tails()]
    for k in ks:
        for loss in shipped_losses(k):
            tmpl = loss.template
            out.append(_named(check_self_bounding(tmpl, sample_count, seed), loss.name + f",k={k}"))
            out.append(_named(check_diff_self_bound(tmpl, sample_count, seed), loss.name + f",k={k}"))
            out.append(_named(check_template_membership(tmpl, sample_count, seed), loss.name + f",k={k}"))
            out.append(_named(estimate_grad_lipschitz_W(loss, sample_count, seed), loss.name + f",k={k}"))
    return out


def _train_and_check(loss, dist, n, T, seed, snapshots=False):
    eta = default_step_size(loss.beta, loss.k, loss.p)
    eps = default_epsilon(loss.tail, loss.k, eta, dist.gamma, T)
    Wc = comparator_model(dist, eps, loss.tail)
    data = sample(dist, n, seed)
    trace = gd_run(loss, data, GDConfig(eta, T, record_every=max(1, T // 100), keep_snapshots=snapshots), reference=Wc)
    return trace, Wc, eps


def training_reports(ks=SUITE_KS, d: int = 20, n: int = 200, T: int = 5000, gamma: float = 1 / 8, seed=0):
    """GD runs on random separable data and on the hard instance."""
    out = []
    exp1 = ExponentialTail(1.0)
    for k in ks:
        dist = make_random_separable(d, k, gamma, support_size=4 * n, seed=np.random.SeedSequence([seed, k]))
        for loss in (make_cross_entropy(k), make_sum_univariate(k, make_phi_quadratic_tail(exp1))):
            trace, Wc, eps = _train_and_check(loss, dist, n, T, np.random.SeedSequence([seed, k, 1]))
            tag = f"{loss.name},random,k={k}"
            out.append(_named(check_opt_error(trace, Wc, loss.beta, k, loss.p, eps), tag))
            out.append(_named(check_norm_bound(trace, Wc, epsilon=eps), tag))
    for k in (2, 8):
        hard_k = make_hard_lower_n(gamma, n, k=k)
        for loss in (make_cross_entropy(k), make_sum_univariate(k, make_phi_quadratic_tail(exp1))):
            trace, Wc, eps = _train_and_check(loss, hard_k, n, T, np.random.SeedSequence([seed, k, 2]), snapshots=True)
            tag = f"{loss.name},hard_lower_n,k={k}"
            out.append(_named(check_opt_error(trace, Wc, loss.beta, k, loss.p, eps), tag))
            out.append(_named(check_norm_bound(trace, Wc, epsilon=eps), tag))
            if loss.template.__class__.__name__ == "SumUnivariateTemplate":
                out.append(_named(check_row_equality(trace), tag))
    return out


def _invert(report: CheckReport, subject: str) -> CheckReport:
    """A mutation entry passes when the checker flagged the mutation."""
    caught = (not report.passed) and not report.skipped
    return CheckReport(
        f"mutation:{report.name}[{subject}]",
        caught,
        0.0 if caught else math.inf,
        None if caught else {"checker_passed_with_ratio": report.worst_ratio},
        report.samples_used,
        detail={"checker_worst_ratio": report.worst_ratio},
    )


def mutation_reports(sample_count: int = 10_000, seed=0):
    """Each checker against a constructed falsification case."""
    out = []
    exp1 = ExponentialTail(1.0)
    quad = make_sum_univariate(4, make_phi_quadratic_tail(exp1))
    ce = make_cross_entropy(4)
    out.append(_invert(check_self_bounding(quad.template, sample_count, seed, beta=quad.beta / 2), "beta/2"))
    out.append(_invert(check_diff_self_bound(quad.template, sample_count, seed, beta=quad.beta / 100), "beta/100"))
    out.append(_invert(check_template_membership(OffsetTemplate(ce.template, 1.0), sample_count, seed), "offset+1"))
    out.append(_invert(estimate_grad_lipschitz_W(make_cross_entropy(2), sample_count, seed, beta=1 / 100), "beta/100"))
    out.append(_invert(check_tail(ExponentialTail(2.0), sample_count, seed), "rho(0)<1"))

    dist = make_random_separable(10, 4, 1 / 8, 100, seed=seed)
    eta = default_step_size(ce.beta, 4, ce.p)
    trace = gd_run(ce, sample(dist, 100, seed), GDConfig(eta, 500, record_every=50, keep_snapshots=True))
    zero = np.zeros_like(trace.final_W)
    out.append(_invert(check_opt_error(trace, zero, ce.beta, 4, ce.p, 1e-9), "comparator=0"))
    out.append(_invert(check_norm_bound(trace, zero, epsilon=1e-12), "comparator=0"))

    hard = make_hard_lower_n(1 / 8, 100, k=4)
    trace = gd_run(quad, sample(hard, 100, seed), GDConfig(default_step_size(quad.beta, 4, 2.0), 200, record_every=20, keep_snapshots=True))
    bent = [W.copy() for W in trace.snapshots]
    bent[-1][2] += 1e-6
    out.append(_invert(check_row_equality(dataclasses.replace(trace, snapshots=bent)), "perturbed row"))
    return out


def run_suite(sample_count: int = 10_000, seed=0, ks=SUITE_KS, T: int = 5000):
    """All template, training and mutation reports."""
    return (
        template_reports(ks, sample_count, seed)
        + training_reports(ks, T=T, seed=seed)
        + mutation_reports(sample_count, seed)
    )
