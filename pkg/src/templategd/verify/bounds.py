"""Explicit-constant bound terms and the epsilon feasibility conditions.

Terms whose constant is only known up to polylogarithmic factors are
returned with a unit constant and flagged as order-level; they are never
asserted numerically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import ParameterError
from ..losses import ExponentialTail, MulticlassLoss, PolynomialTail, TailFunction, k_factor
from ..trainer import Dataset, empirical_risk
from ..datagen import FiniteSupportDistribution, population_risk_exact

__all__ = [
    "BoundInputs",
    "BoundTerms",
    "epsilon_feasible",
    "bound_values",
    "gen_gap",
    "epsilon_one_over_T",
    "epsilon_corpol",
    "corpol_k_exponent",
    "default_epsilon",
]

FEAS_RTOL = 1e-12


@dataclass(frozen=True)
class BoundInputs:
    """Quantities entering the risk bounds.

    ``B``, ``r`` and ``M`` are optional; when omitted the values implied by
    the other inputs are used.
    """

    rho: TailFunction
    beta: float
    p: float
    k: int
    gamma: float
    T: int
    n: int
    eta: float
    epsilon: float
    B: float | None = None
    r: float | None = None
    M: float | None = None

    def __post_init__(self):
        if not 0 < self.epsilon <= 0.5:
            raise ParameterError(f"epsilon must lie in (0, 1/2], got {self.epsilon}")
        for name in ("beta", "gamma", "T", "n", "eta"):
            val = getattr(self, name)
            if not (val > 0 and math.isfinite(val)):
                raise ParameterError(f"{name} must be positive, got {val}")
        if self.k < 2:
            raise ParameterError(f"need k >= 2, got {self.k}")
        if not (self.p >= 2 or self.p == math.inf):
            raise ParameterError(f"p must lie in [2, inf], got {self.p}")
        for name in ("B", "r", "M"):
            val = getattr(self, name)
            if val is not None and not val >= 0:
                raise ParameterError(f"{name} must be nonnegative, got {val}")

    def rho_inv(self, scale: float = 1.0) -> float:
        """``rho^{-1}(scale * epsilon / k)``."""
        return float(self.rho.rho_inverse(scale * self.epsilon / self.k))


def epsilon_feasible(inputs: BoundInputs, side: str) -> bool:
    """Feasibility of ``epsilon`` for the upper or lower bound.

    ``upper``: ``eta gamma^2 T <= rho^{-1}(eps/k)^2 / eps``;
    ``lower``: ``eta gamma^2 T >= rho^{-1}(eps/k)^2 / eps``.
    Equality counts as feasible on both sides (relative slack 1e-12).
    """
    lhs = inputs.eta * inputs.gamma**2 * inputs.T
    rhs = inputs.rho_inv() ** 2 / inputs.epsilon
    if side == "upper":
        return lhs <= rhs * (1 + FEAS_RTOL)
    if side == "lower":
        return lhs >= rhs * (1 - FEAS_RTOL)
    raise ParameterError(f"side must be 'upper' or 'lower', got {side!r}")


def corpol_k_exponent(alpha: float, p: float) -> float:
    """k-exponent ``(2/(alpha+2)) (1 + alpha/p)`` of the polynomial-tail rate."""
    inv_p = 0.0 if p == math.inf else 1.0 / p
    return 2.0 / (alpha + 2.0) * (1.0 + alpha * inv_p)


@dataclass(frozen=True)
class BoundTerms:
    """Named bound terms; ``order_level`` lists those with a symbolic constant."""

    opt: float
    gen: float
    B_eps: float
    M_eps: float
    r_eps: float
    lower_n: float
    lower_T: float
    k_factor: float
    rho_inv: float
    gen_constant: str = "C~"
    order_level: tuple = ("gen", "lower_n", "lower_T")
    extra: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "opt": self.opt,
            "gen": self.gen,
            "B_eps": self.B_eps,
            "M_eps": self.M_eps,
            "r_eps": self.r_eps,
            "lower_n": self.lower_n,
            "lower_T": self.lower_T,
            "k_factor": self.k_factor,
            "rho_inv": self.rho_inv,
            "gen_constant": self.gen_constant,
            "order_level": list(self.order_level),
            **self.extra,
        }


def _safe_inv(inputs: BoundInputs, scale: float) -> float:
    # lower-bound arguments like 256 eps / k may leave the domain of rho^{-1}
    arg = scale * inputs.epsilon / inputs.k
    if arg > float(inputs.rho.rho(0.0)):
        return float("nan")
    return inputs.rho_inv(scale)


def bound_values(inputs: BoundInputs) -> BoundTerms:
    """Explicit-constant terms of the upper and lower risk bounds.

    * opt: ``24 beta k^(2/p) rho^{-1}(eps/k)^2 / (gamma^2 T)``
    * gen: ``beta k^(2/p) rho^{-1}(eps/k)^2 / (gamma^2 n)`` times an
      unspecified polylog constant
    * ``B_eps = 4 rho^{-1}(eps/k) / gamma``,
      ``M_eps = 5 rho^{-1}(eps/k)^2 / (eta gamma^2)``,
      ``r_eps = 3 rho^{-1}(eps/k)^2 / (gamma^2 eta T)``
    * lower bounds: ``beta k rho^{-1}(256 eps/k)^2 / (gamma^2 n)`` and
      ``beta k rho^{-1}(16 eps/k)^2 / (gamma^2 T)`` (NaN when the argument
      exceeds ``rho(0)``)

    The exponent ``p = inf`` is read as ``p = k`` inside ``k^(2/p)``.
    """
    kf = k_factor(inputs.k, inputs.p)
    ri = inputs.rho_inv()
    g2 = inputs.gamma**2
    base = inputs.beta * kf * ri * ri / g2
    extra = {}
    if isinstance(inputs.rho, PolynomialTail):
        extra["corpol_k_exponent"] = corpol_k_exponent(inputs.rho.alpha, inputs.p)
    return BoundTerms(
        opt=24.0 * base / inputs.T,
        gen=base / inputs.n,
        B_eps=4.0 * ri / inputs.gamma,
        M_eps=5.0 * ri * ri / (inputs.eta * g2),
        r_eps=3.0 * ri * ri / (g2 * inputs.eta * inputs.T),
        lower_n=inputs.beta * inputs.k * _safe_inv(inputs, 256.0) ** 2 / (g2 * inputs.n),
        lower_T=inputs.beta * inputs.k * _safe_inv(inputs, 16.0) ** 2 / (g2 * inputs.T),
        k_factor=kf,
        rho_inv=ri,
        extra=extra,
    )


def epsilon_one_over_T(T: int) -> float:
    return 1.0 / T


def epsilon_corpol(k: int, eta: float, gamma: float, T: int, alpha: float) -> float:
    """``k^(2/(alpha+2)) / (eta gamma^2 T)^(alpha/(alpha+2))``."""
    return k ** (2.0 / (alpha + 2.0)) / (eta * gamma**2 * T) ** (alpha / (alpha + 2.0))


def default_epsilon(tail: TailFunction, k: int, eta: float, gamma: float, T: int, cap: float = 0.25) -> float:
    """Default policy: ``1/T`` for exponential tails, the polynomial-rate
    formula for polynomial tails, clipped to ``cap`` so that
    ``rho^{-1}(eps/k)`` stays defined."""
    if isinstance(tail, ExponentialTail):
        eps = epsilon_one_over_T(T)
    elif isinstance(tail, PolynomialTail):
        eps = epsilon_corpol(k, eta, gamma, T, tail.alpha)
    else:
        raise ParameterError(f"no default epsilon policy for {tail!r}")
    return float(min(eps, cap))


def gen_gap(loss: MulticlassLoss, W, dataset: Dataset, dist: FiniteSupportDistribution) -> float:
    """``L(W) - L_hat(W)``: exact population risk minus the sample mean."""
    W = np.asarray(W, dtype=float)
    return population_risk_exact(loss, W, dist) - empirical_risk(loss, W, dataset)
