"""Sampled checks of the smoothness-type inequalities for templates and losses.

Sampling design (shared by every check here; 10^4 samples by default):

* a deterministic grid along the coordinate axes and the all-ones diagonal,
  ``t in [-20, 20]``;
* half of the remaining points uniform in the box ``[-20, 20]^{k-1}``;
* the other half uniform in ``[-2, 2]^{k-1}``, where curvature is largest.

Pairs ``(u, v)`` use ``v = u + s w`` with ``w`` a random unit direction and
``s`` log-uniform in ``[1e-3, 10]``, plus a quarter of independent pairs.
All draws come from ``numpy.random.PCG64(seed)``.

Every inequality ``lhs <= bound`` is reported through the ratio
``lhs / (bound * (1 + 1e-9))``; the relative slack absorbs round-off at
exact equality cases such as ``u = v``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from ..errors import ParameterError
from ..losses import (
    LossTemplate,
    MulticlassLoss,
    TailFunction,
    k_factor,
    lp_norm,
)
from .report import CheckReport

__all__ = [
    "sample_points",
    "sample_pairs",
    "check_self_bounding",
    "check_diff_self_bound",
    "check_lp_smoothness",
    "check_template_membership",
    "estimate_grad_lipschitz_W",
    "check_tail",
    "with_beta",
    "OffsetTemplate",
]

RTOL = 1e-9
BOX = 20.0
INNER = 2.0
DECAY_TS = (1.0, 10.0, 100.0, 1000.0)


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


def _ratio(lhs, bound):
    lhs = np.asarray(lhs, dtype=float)
    bound = np.asarray(bound, dtype=float) * (1.0 + RTOL)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        r = np.where(bound > 0, lhs / np.where(bound > 0, bound, 1.0), np.where(lhs > 0, np.inf, 0.0))
    return r


def _check_count(n):
    if int(n) != n or n < 1:
        raise ParameterError(f"sample count must be a positive integer, got {n}")
    return int(n)


def sample_points(dim: int, count: int, seed=0, box: float = BOX, inner: float = INNER):
    """Grid + wide box + inner box sample of ``count`` points in R^dim."""
    count = _check_count(count)
    rng = _rng(seed)
    ts = np.linspace(-box, box, 41)
    dirs = np.vstack([np.eye(dim), np.ones((1, dim))])
    grid = (ts[:, None, None] * dirs[None]).reshape(-1, dim)
    grid = grid[: count // 5]
    rest = count - len(grid)
    wide = rng.uniform(-box, box, size=(rest // 2, dim))
    narrow = rng.uniform(-inner, inner, size=(rest - rest // 2, dim))
    return np.vstack([grid, wide, narrow])


def sample_pairs(dim: int, count: int, seed=0):
    """Pairs ``(u, v)``: mostly local perturbations, a quarter independent."""
    count = _check_count(count)
    rng = _rng(seed)
    u = sample_points(dim, count, rng)
    n_far = count // 4
    w = rng.standard_normal((count, dim))
    w /= np.linalg.norm(w, axis=1, keepdims=True)
    s = np.exp(rng.uniform(math.log(1e-3), math.log(10.0), size=count))
    v = u + s[:, None] * w
    v[:n_far] = sample_points(dim, max(n_far, 1), rng)[:n_far]
    return u, v


def with_beta(template: LossTemplate, beta: float) -> LossTemplate:
    """Copy of ``template`` with a different declared smoothness constant."""
    return replace(template, beta=float(beta))


@dataclass(frozen=True)
class OffsetTemplate(LossTemplate):
    """``base(u) + offset``: a template that does not decay along rays."""

    base: LossTemplate
    offset: float = 1.0

    @property
    def dim(self):
        return self.base.dim

    @property
    def p(self):
        return self.base.p

    @property
    def beta(self):
        return self.base.beta

    @property
    def tail(self):
        return self.base.tail

    def value(self, u):
        return self.base.value(u) + self.offset

    def gradient(self, u):
        return self.base.gradient(u)


def _witness(**arrays):
    def pick(i):
        return {k: np.asarray(v)[i].tolist() for k, v in arrays.items()}

    return pick


def check_self_bounding(template: LossTemplate, sample_count: int = 10_000, seed=0, beta=None):
    """``||grad f(u)||_q^2 <= 2 beta f(u)`` at sampled ``u``.

    Args:
        template: template with declared ``p`` and ``beta``.
        sample_count: number of points.
        seed: sampling seed.
        beta: overrides the declared constant (used for falsification runs).
    """
    beta = template.beta if beta is None else beta
    u = sample_points(template.dim, sample_count, seed)
    f = np.asarray(template.value(u))
    g = lp_norm(template.gradient(u), template.q)
    ratios = _ratio(g * g, 2.0 * beta * f)
    return CheckReport.from_ratios(
        "self_bounding", ratios, _witness(u=u, value=f, grad_norm=g), {"beta": beta, "q": template.q}
    )


def check_diff_self_bound(template: LossTemplate, pair_count: int = 10_000, seed=0, beta=None):
    """``(f(u) - f(v))^2 <= 6 beta max(f(u), f(v)) ||u - v||_p^2`` on sampled pairs."""
    beta = template.beta if beta is None else beta
    u, v = sample_pairs(template.dim, pair_count, seed)
    fu = np.asarray(template.value(u))
    fv = np.asarray(template.value(v))
    dist = lp_norm(u - v, template.p)
    ratios = _ratio((fu - fv) ** 2, 6.0 * beta * np.maximum(fu, fv) * dist * dist)
    return CheckReport.from_ratios("diff_self_bound", ratios, _witness(u=u, v=v), {"beta": beta})


def check_lp_smoothness(template: LossTemplate, pair_count: int = 10_000, seed=0, beta=None):
    """``||grad f(u) - grad f(v)||_q <= beta ||u - v||_p`` on sampled pairs."""
    beta = template.beta if beta is None else beta
    u, v = sample_pairs(template.dim, pair_count, seed)
    lhs = lp_norm(template.gradient(u) - template.gradient(v), template.q)
    ratios = _ratio(lhs, beta * lp_norm(u - v, template.p))
    return CheckReport.from_ratios("lp_smoothness", ratios, _witness(u=u, v=v), {"beta": beta})


def _nonnegativity(template, u):
    f = np.asarray(template.value(u))
    # values down to -1e-12 count as round-off
    ratios = np.maximum(-f, 0.0) / 1e-12
    return CheckReport.from_ratios("nonnegativity", ratios, _witness(u=u, value=f))


def _midpoint_convexity(template, u, v):
    fm = np.asarray(template.value(0.5 * (u + v)))
    avg = 0.5 * (np.asarray(template.value(u)) + np.asarray(template.value(v)))
    # additive slack for values that cancel to ~0
    ratios = _ratio(fm, avg + 1e-12)
    return CheckReport.from_ratios("midpoint_convexity", ratios, _witness(u=u, v=v))


def _positive_points(dim, count, seed):
    return np.abs(sample_points(dim, count, seed))


def _tail_domination(template, u):
    f = np.asarray(template.value(u))
    dom = template.tail.rho(u).sum(axis=-1)
    return CheckReport.from_ratios("tail_domination", _ratio(f, dom), _witness(u=u, value=f))


def _ray_decay(template, count, seed):
    rng = _rng(seed)
    u = rng.uniform(0.5, 5.0, size=(count, template.dim))
    vals = np.stack([np.asarray(template.value(t * u)) for t in DECAY_TS], axis=1)
    # nonincreasing along the ray, and at the far end below the tail envelope
    steps = _ratio(vals[:, 1:], vals[:, :-1] + 1e-300).max(axis=1)
    far = _ratio(vals[:, -1], template.tail.rho(DECAY_TS[-1] * u).sum(axis=-1))
    ratios = np.maximum(steps, far)
    return CheckReport.from_ratios(
        "ray_decay", ratios, _witness(u=u, values=vals), {"t": list(DECAY_TS)}
    )


def check_template_membership(template, sample_count: int = 10_000, seed=0, beta=None):
    """Full membership suite for the tailed template class.

    Runs nonnegativity, midpoint convexity, L_p smoothness with the declared
    constant, domination by ``sum_j rho(u_j)`` on the positive orthant and
    decay along positive rays (``t in {1, 10, 100, 1000}``). Accepts either a
    template or a ``MulticlassLoss``.
    """
    if isinstance(template, MulticlassLoss):
        template = template.template
    ss = np.random.SeedSequence(seed).spawn(5)
    u = sample_points(template.dim, sample_count, ss[0])
    a, b = sample_pairs(template.dim, sample_count, ss[1])
    pos = _positive_points(template.dim, sample_count, ss[2])
    subs = [
        _nonnegativity(template, u),
        _midpoint_convexity(template, a, b),
        check_lp_smoothness(template, sample_count, ss[3], beta),
        _tail_domination(template, pos),
        _ray_decay(template, sample_count, ss[4]),
    ]
    failed = [s for s in subs if not s.passed]
    witness = None
    if failed:
        witness = {"check": failed[0].name, "input": failed[0].witness}
    return CheckReport(
        "template_membership",
        not failed,
        max(s.worst_ratio for s in subs),
        witness,
        sum(s.samples_used for s in subs),
        detail={s.name: {"passed": s.passed, "worst_ratio": s.worst_ratio} for s in subs},
    )


def estimate_grad_lipschitz_W(loss: MulticlassLoss, sample_count: int = 10_000, seed=0, d: int = 5, beta=None):
    """Sampled ratio ``||grad l(W) - grad l(W')||_F / (3 beta k^(2/p) ||W - W'||_F)``.

    ``x`` is drawn in the unit ball with a third of the draws on the sphere
    (the worst case); ``p = inf`` uses ``k^(2/k)``.
    """
    sample_count = _check_count(sample_count)
    beta = loss.beta if beta is None else beta
    k = loss.k
    rng = _rng(seed)
    x = rng.standard_normal((sample_count, d))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    radius = rng.random(sample_count) ** (1.0 / d)
    radius[: sample_count // 3] = 1.0
    x *= radius[:, None]
    y = rng.integers(0, k, size=sample_count)
    scale = np.exp(rng.uniform(math.log(0.1), math.log(10.0), size=sample_count))
    W = rng.standard_normal((sample_count, k, d)) * (scale / math.sqrt(k * d))[:, None, None]
    step = np.exp(rng.uniform(math.log(1e-3), math.log(3.0), size=sample_count))
    D = rng.standard_normal((sample_count, k, d))
    D *= (step / np.linalg.norm(D.reshape(sample_count, -1), axis=1))[:, None, None]
    W2 = W + D
    # grad_W l = outer(g, x), so the difference has norm ||g - g'|| ||x||
    _, g1 = loss.value_and_logit_grad(np.einsum("nkd,nd->nk", W, x), y)
    _, g2 = loss.value_and_logit_grad(np.einsum("nkd,nd->nk", W2, x), y)
    lhs = np.linalg.norm(g1 - g2, axis=1) * np.linalg.norm(x, axis=1)
    bound_const = 3.0 * beta * k_factor(k, loss.p)
    ratios = _ratio(lhs, bound_const * step)
    return CheckReport.from_ratios(
        "grad_lipschitz_W",
        ratios,
        _witness(W=W, W2=W2, x=x, y=y),
        {"bound_constant": bound_const, "max_observed_constant": float(np.max(ratios)) * bound_const},
    )


def check_tail(tail: TailFunction, sample_count: int = 10_000, seed=0):
    """Tail-function definition: nonnegative, decreasing, convex, 1-Lipschitz,
    beta-smooth on ``[0, inf)``, ``rho(0) >= 1`` and ``|rho'(0)| >= 1/2``;
    also checks that ``rho_inverse`` inverts ``rho``."""
    sample_count = _check_count(sample_count)
    rng = _rng(seed)
    x = np.sort(np.concatenate([np.linspace(0.0, 50.0, sample_count // 2), rng.exponential(5.0, sample_count - sample_count // 2)]))
    r, dr = np.asarray(tail.rho(x)), np.asarray(tail.rho_prime(x))
    subs = {}
    subs["nonnegative"] = _ratio(np.maximum(-r, 0.0), 1e-300)
    subs["decreasing"] = np.where(dr < 0, 0.0, np.inf)
    subs["convex"] = np.where(np.diff(dr) >= -1e-15, 0.0, np.inf)
    subs["lipschitz"] = _ratio(np.abs(dr), 1.0)
    xs = rng.exponential(3.0, sample_count)
    xt = xs + np.exp(rng.uniform(math.log(1e-3), math.log(3.0), sample_count))
    subs["smooth"] = _ratio(np.abs(tail.rho_prime(xt) - tail.rho_prime(xs)), tail.beta * (xt - xs))
    subs["rho0_at_least_1"] = np.array([_ratio(1.0, float(tail.rho(0.0)))])
    subs["slope0_at_least_half"] = np.array([_ratio(0.5, abs(float(tail.rho_prime(0.0))))])
    eps = float(tail.rho(0.0)) * np.exp(-rng.uniform(0.0, 20.0, 200))
    back = np.asarray(tail.rho(tail.rho_inverse(eps)))
    subs["inverse"] = np.abs(back - eps) / (1e-9 * eps)
    detail = {}
    worst = 0.0
    for name, ratios in subs.items():
        w = float(np.max(ratios))
        detail[name] = {"passed": w <= 1.0, "worst_ratio": w}
        worst = max(worst, w)
    failed = [n for n, v in detail.items() if not v["passed"]]
    return CheckReport(
        f"tail[{tail!r}]",
        not failed,
        worst,
        {"failed": failed} if failed else None,
        int(sum(np.size(v) for v in subs.values())),
        detail=detail,
    )
