"""Tail functions, loss templates and multiclass losses built from them.

A multiclass loss ``ell(yhat, y)`` is represented through its template
``tmpl: R^{k-1} -> R`` via ``ell(yhat, y) = tmpl(D_y yhat)`` where ``D_y``
maps a score vector to the margins ``yhat[y] - yhat[j]`` for ``j != y``.

Class indices are zero-based throughout the package: ``y`` ranges over
``0, ..., k - 1``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import (
    DimensionError,
    DomainError,
    NumericError,
    ParameterError,
    ShapeError,
    TailConstraintError,
)

__all__ = [
    "TailFunction",
    "ExponentialTail",
    "PolynomialTail",
    "UnivariatePhi",
    "LossTemplate",
    "CrossEntropyTemplate",
    "SumUnivariateTemplate",
    "MulticlassLoss",
    "make_tail",
    "make_phi_quadratic_tail",
    "make_phi_linear_tail",
    "make_phi_raw",
    "make_cross_entropy",
    "make_sum_univariate",
    "d_y_apply",
    "d_y_transpose_apply",
    "loss_value",
    "loss_gradient_logits",
    "model_loss_gradient",
    "dual_exponent",
    "effective_p",
    "k_factor",
    "lp_norm",
]


# ---------------------------------------------------------------------------
# norms and exponents


def dual_exponent(p: float) -> float:
    """Return q with 1/p + 1/q = 1 (p = inf gives q = 1)."""
    if p == math.inf:
        return 1.0
    if p <= 1:
        raise ParameterError(f"p must exceed 1, got {p}")
    return p / (p - 1.0)


def effective_p(p: float, k: int) -> float:
    """Exponent used wherever ``k**(2/p)`` appears; p = inf is read as p = k."""
    return float(k) if p == math.inf else float(p)


def k_factor(k: int, p: float) -> float:
    """``k**(2/p)`` with the p = inf -> p = k convention (so at most e)."""
    return float(k) ** (2.0 / effective_p(p, k))


def lp_norm(v, p: float, axis=-1):
    v = np.abs(np.asarray(v, dtype=float))
    if p == math.inf:
        return v.max(axis=axis)
    if p == 1:
        return v.sum(axis=axis)
    if p == 2:
        return np.sqrt((v * v).sum(axis=axis))
    return (v**p).sum(axis=axis) ** (1.0 / p)


# ---------------------------------------------------------------------------
# tail functions


class TailFunction:
    """Decay-rate object: nonnegative, decreasing, convex, smooth on [0, inf).

    Subclasses implement ``rho`` and ``rho_prime``; ``rho_inverse`` defaults
    to bisection and is overridden where a closed form exists.
    """

    name = "tail"
    #: whether rho has a meaningful analytic extension to negative arguments
    extends_to_negative = False

    @property
    def beta(self) -> float:
        raise NotImplementedError

    @property
    def lipschitz(self) -> float:
        return abs(float(self.rho_prime(0.0)))

    def rho(self, x):
        raise NotImplementedError

    def rho_prime(self, x):
        raise NotImplementedError

    def _check_inverse_domain(self, eps):
        eps = np.asarray(eps, dtype=float)
        top = float(self.rho(0.0))
        if np.any(~(eps > 0)) or np.any(eps > top * (1 + 1e-15)):
            raise DomainError(f"rho_inverse defined on (0, {top}], got {eps}")
        return eps

    def rho_inverse(self, eps):
        eps = self._check_inverse_domain(eps)
        out = np.vectorize(self._bisect_inverse, otypes=[float])(eps)
        return out if out.ndim else float(out)

    def _bisect_inverse(self, eps: float, atol: float = 1e-12) -> float:
        lo, hi = 0.0, 1.0
        while self.rho(hi) >= eps:
            hi *= 2.0
            if hi > 1e300:
                raise DomainError(f"rho never drops below {eps}")
        while hi - lo > atol * max(1.0, hi) and hi - lo > atol:
            mid = 0.5 * (lo + hi)
            if self.rho(mid) >= eps:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    def spec_dict(self) -> dict:
        return {"kind": self.name}

    def __repr__(self):
        params = ", ".join(f"{k}={v}" for k, v in self.spec_dict().items() if k != "kind")
        return f"{type(self).__name__}({params})"


class ExponentialTail(TailFunction):
    """``rho(x) = exp(-alpha x) / alpha``; alpha = 1 gives ``exp(-x)``."""

    name = "exponential"
    extends_to_negative = True

    def __init__(self, alpha: float = 1.0):
        if not alpha > 0:
            raise ParameterError(f"exponential tail needs alpha > 0, got {alpha}")
        self.alpha = float(alpha)

    @property
    def beta(self) -> float:
        return self.alpha

    @property
    def lipschitz(self) -> float:
        return 1.0

    def rho(self, x):
        return np.exp(-self.alpha * np.asarray(x, dtype=float)) / self.alpha

    def rho_prime(self, x):
        return -np.exp(-self.alpha * np.asarray(x, dtype=float))

    def rho_inverse(self, eps):
        eps = self._check_inverse_domain(eps)
        out = np.log(1.0 / (self.alpha * eps)) / self.alpha
        # rho(0) itself maps to exactly 0
        out = np.maximum(out, 0.0)
        return out if np.ndim(out) else float(out)

    def spec_dict(self):
        return {"kind": self.name, "alpha": self.alpha}


class PolynomialTail(TailFunction):
    """``rho(x) = (1 + x)**(-alpha)`` for alpha in [1/2, 1]."""

    name = "polynomial"

    def __init__(self, alpha: float = 1.0):
        if not 0.5 <= alpha <= 1.0:
            raise TailConstraintError(
                f"polynomial tail needs alpha in [1/2, 1], got {alpha}"
            )
        self.alpha = float(alpha)

    @property
    def beta(self) -> float:
        return self.alpha * (self.alpha + 1.0)

    @property
    def lipschitz(self) -> float:
        return self.alpha

    def rho(self, x):
        x = np.maximum(np.asarray(x, dtype=float), 0.0)
        return (1.0 + x) ** (-self.alpha)

    def rho_prime(self, x):
        x = np.maximum(np.asarray(x, dtype=float), 0.0)
        return -self.alpha * (1.0 + x) ** (-self.alpha - 1.0)

    def rho_inverse(self, eps):
        eps = self._check_inverse_domain(eps)
        out = np.maximum(eps ** (-1.0 / self.alpha) - 1.0, 0.0)
        return out if np.ndim(out) else float(out)

    def spec_dict(self):
        return {"kind": self.name, "alpha": self.alpha}


def make_tail(kind: str = "exponential", alpha: float = 1.0) -> TailFunction:
    """Build a tail function by name (``exponential`` or ``polynomial``)."""
    if kind in ("exponential", "exp"):
        return ExponentialTail(alpha)
    if kind in ("polynomial", "poly"):
        return PolynomialTail(alpha)
    raise ParameterError(f"unknown tail kind {kind!r}")


# ---------------------------------------------------------------------------
# univariate losses


_PHI_VARIANTS = ("quadratic-tail", "linear-tail", "raw")


@dataclass(frozen=True)
class UnivariatePhi:
    """Margin loss ``phi: R -> R`` equal to the tail on [0, inf).

    On negative inputs the ``quadratic-tail`` variant continues with the
    second-order expansion ``rho(0) + rho'(0) x + beta x^2 / 2``, the
    ``linear-tail`` variant with ``rho(0) + rho'(0) x``, and ``raw`` uses
    the tail's own analytic extension.
    """

    tail: TailFunction
    variant: str = "quadratic-tail"

    def __post_init__(self):
        if self.variant not in _PHI_VARIANTS:
            raise ParameterError(f"unknown phi variant {self.variant!r}")
        if self.variant == "raw" and not self.tail.extends_to_negative:
            raise ParameterError(f"{self.tail!r} has no extension to negative inputs")

    @property
    def beta(self) -> float:
        return self.tail.beta

    def phi(self, x):
        x = np.asarray(x, dtype=float)
        if self.variant == "raw":
            return self.tail.rho(x)
        r0 = float(self.tail.rho(0.0))
        d0 = float(self.tail.rho_prime(0.0))
        neg = np.minimum(x, 0.0)
        ext = r0 + d0 * neg
        if self.variant == "quadratic-tail":
            ext = ext + 0.5 * self.beta * neg * neg
        return np.where(x >= 0, self.tail.rho(x), ext)

    def phi_prime(self, x):
        x = np.asarray(x, dtype=float)
        if self.variant == "raw":
            return self.tail.rho_prime(x)
        d0 = float(self.tail.rho_prime(0.0))
        neg = np.minimum(x, 0.0)
        ext = d0 + (self.beta * neg if self.variant == "quadratic-tail" else 0.0 * neg)
        return np.where(x >= 0, self.tail.rho_prime(x), ext)

    __call__ = phi


def make_phi_quadratic_tail(tail: TailFunction) -> UnivariatePhi:
    return UnivariatePhi(tail, "quadratic-tail")


def make_phi_linear_tail(tail: TailFunction) -> UnivariatePhi:
    return UnivariatePhi(tail, "linear-tail")


def make_phi_raw(tail: TailFunction) -> UnivariatePhi:
    return UnivariatePhi(tail, "raw")


# ---------------------------------------------------------------------------
# templates


class LossTemplate:
    """Function on R^{k-1} with declared smoothness exponent p and constant beta.

    ``value`` and ``gradient`` accept arrays of shape ``(..., dim)``.
    """

    dim: int
    p: float
    beta: float
    tail: TailFunction

    @property
    def q(self) -> float:
        return dual_exponent(self.p)

    def value(self, u):
        raise NotImplementedError

    def gradient(self, u):
        raise NotImplementedError

    def value_and_gradient(self, u):
        return self.value(u), self.gradient(u)

    def _check(self, u):
        u = np.asarray(u, dtype=float)
        if u.shape[-1:] != (self.dim,):
            raise ShapeError(f"template expects last axis {self.dim}, got {u.shape}")
        return u


@dataclass(frozen=True)
class CrossEntropyTemplate(LossTemplate):
    """``(1/alpha) log(1 + sum_j exp(-alpha u_j))``, smooth w.r.t. L_inf."""

    dim: int
    alpha: float = 1.0
    beta: float = 1.0
    p: float = math.inf
    tail: TailFunction = field(default_factory=ExponentialTail)

    def _shifted(self, u):
        # exponents (0, -alpha u_1, ..., -alpha u_{k-1}) shifted by their max;
        # the max term (exactly 1) is dropped from `rest` so that log1p keeps
        # full relative precision when the loss is tiny
        u = self._check(u)
        lead = u.shape[:-1]
        zz = np.concatenate([np.zeros(lead + (1,)), -self.alpha * u], axis=-1).reshape(-1, self.dim + 1)
        rows = np.arange(zz.shape[0])
        top = zz.argmax(axis=-1)
        m = zz[rows, top]
        e = np.exp(zz - m[:, None])
        e[rows, top] = 0.0
        rest = e.sum(axis=-1)
        e[rows, top] = 1.0
        return m.reshape(lead), e.reshape(lead + (self.dim + 1,)), rest.reshape(lead)

    def value_and_gradient(self, u):
        m, e, rest = self._shifted(u)
        val = (m + np.log1p(rest)) / self.alpha
        return (val if np.ndim(val) else float(val)), -e[..., 1:] / (1.0 + rest)[..., None]

    def value(self, u):
        m, _, rest = self._shifted(u)
        out = (m + np.log1p(rest)) / self.alpha
        return out if np.ndim(out) else float(out)

    def gradient(self, u):
        _, e, rest = self._shifted(u)
        return -e[..., 1:] / (1.0 + rest)[..., None]


@dataclass(frozen=True)
class SumUnivariateTemplate(LossTemplate):
    """``sum_j phi(u_j)``, smooth w.r.t. L_2 with the constant of phi."""

    dim: int
    phi: UnivariatePhi
    beta: float = 1.0
    p: float = 2.0

    @property
    def tail(self) -> TailFunction:
        return self.phi.tail

    def value(self, u):
        u = self._check(u)
        out = self.phi.phi(u).sum(axis=-1)
        return out if np.ndim(out) else float(out)

    def gradient(self, u):
        return self.phi.phi_prime(self._check(u))


# ---------------------------------------------------------------------------
# D_y reduction


@lru_cache(maxsize=None)
def _others_table(k: int) -> np.ndarray:
    """Row y lists the k - 1 class indices other than y, increasing."""
    idx = np.arange(k)
    return np.stack([np.delete(idx, y) for y in range(k)])


def _check_labels(y, k):
    if k < 2:
        raise DimensionError(f"need k >= 2 classes, got {k}")
    y = np.asarray(y)
    if y.dtype.kind in "iu":
        if y.size and (y.min() < 0 or y.max() >= k):
            raise IndexError(f"class label out of range [0, {k}): {y}")
        return y
    if not np.issubdtype(y.dtype, np.integer):
        if np.any(y != np.round(y)):
            raise IndexError(f"class labels must be integers, got {y}")
        y = y.astype(np.int64)
    if np.any((y < 0) | (y >= k)):
        raise IndexError(f"class label out of range [0, {k}): {y}")
    return y


def d_y_apply(v, y):
    """Margins ``v[y] - v[j]`` for every ``j != y`` in increasing ``j``.

    ``v`` has shape ``(k,)`` or ``(n, k)``; ``y`` is an int or ``(n,)``.
    """
    v = np.asarray(v, dtype=float)
    k = v.shape[-1]
    y = _check_labels(y, k)
    others = _others_table(k)[y]
    if v.ndim == 1:
        if y.ndim:
            raise ShapeError("scalar label expected for a single score vector")
        return v[y] - v[others]
    if y.shape != v.shape[:1]:
        raise ShapeError(f"labels {y.shape} do not match scores {v.shape}")
    rows = np.arange(v.shape[0])
    return v[rows, y][:, None] - v[rows[:, None], others]


def d_y_transpose_apply(g, y):
    """Adjoint of :func:`d_y_apply`: maps ``R^{k-1}`` back to ``R^k``."""
    g = np.asarray(g, dtype=float)
    k = g.shape[-1] + 1
    y = _check_labels(y, k)
    others = _others_table(k)[y]
    out = np.zeros(g.shape[:-1] + (k,))
    if g.ndim == 1:
        if y.ndim:
            raise ShapeError("scalar label expected for a single vector")
        out[others] = -g
        out[y] = g.sum()
        return out
    if y.shape != g.shape[:1]:
        raise ShapeError(f"labels {y.shape} do not match vectors {g.shape}")
    rows = np.arange(g.shape[0])
    out[rows[:, None], others] = -g
    out[rows, y] = g.sum(axis=1)
    return out


# ---------------------------------------------------------------------------
# multiclass losses


@dataclass(frozen=True)
class MulticlassLoss:
    k: int
    template: LossTemplate
    name: str = "loss"

    def __post_init__(self):
        if self.k < 2:
            raise DimensionError(f"need k >= 2 classes, got {self.k}")
        if self.template.dim != self.k - 1:
            raise ShapeError(
                f"template dim {self.template.dim} does not match k - 1 = {self.k - 1}"
            )

    @property
    def p(self) -> float:
        return self.template.p

    @property
    def beta(self) -> float:
        return self.template.beta

    @property
    def tail(self) -> TailFunction:
        return self.template.tail

    def values(self, logits, y):
        """Per-example losses for logits ``(n, k)`` and labels ``(n,)``."""
        return self.template.value(d_y_apply(logits, y))

    def value_and_logit_grad(self, logits, y):
        u = d_y_apply(logits, y)
        vals, g = self.template.value_and_gradient(u)
        return vals, d_y_transpose_apply(g, y)

    def describe(self) -> dict:
        tmpl = self.template
        out = {"name": self.name, "k": self.k, "p": tmpl.p, "beta": tmpl.beta}
        out["tail"] = tmpl.tail.spec_dict()
        if isinstance(tmpl, CrossEntropyTemplate):
            out["family"] = "cross_entropy"
            out["alpha"] = tmpl.alpha
        elif isinstance(tmpl, SumUnivariateTemplate):
            out["family"] = "sum_univariate"
            out["variant"] = tmpl.phi.variant
        return out


def make_cross_entropy(k: int, alpha: float = 1.0) -> MulticlassLoss:
    """Temperature-scaled cross-entropy ``(1/alpha) log(1 + sum_j exp(alpha (yhat_j - yhat_y)))``.

    The template is smooth w.r.t. L_inf with constant ``max(alpha, alpha**2)``
    and is dominated by the tail ``exp(-alpha x) / alpha``.
    """
    if not alpha > 0:
        raise ParameterError(f"cross-entropy needs alpha > 0, got {alpha}")
    if k < 2:
        raise DimensionError(f"need k >= 2 classes, got {k}")
    tmpl = CrossEntropyTemplate(
        dim=k - 1,
        alpha=float(alpha),
        beta=max(alpha, alpha * alpha),
        tail=ExponentialTail(alpha),
    )
    return MulticlassLoss(k, tmpl, name=f"cross_entropy(alpha={alpha:g})")


def make_sum_univariate(k: int, phi: UnivariatePhi) -> MulticlassLoss:
    """``sum_{j != y} phi(yhat_y - yhat_j)``; template is L_2-smooth."""
    if k < 2:
        raise DimensionError(f"need k >= 2 classes, got {k}")
    tmpl = SumUnivariateTemplate(dim=k - 1, phi=phi, beta=phi.beta)
    name = f"sum_{phi.variant}({phi.tail!r})"
    return MulticlassLoss(k, tmpl, name=name)


# ---------------------------------------------------------------------------
# functional surface


def _finite_logits(logits):
    logits = np.asarray(logits, dtype=float)
    if not np.all(np.isfinite(logits)):
        raise NumericError("non-finite logits")
    return logits


def loss_value(loss: MulticlassLoss, logits, y):
    """``template(D_y logits)``; vectorized over a leading batch axis."""
    logits = _finite_logits(logits)
    if logits.shape[-1] != loss.k:
        raise ShapeError(f"expected {loss.k} logits, got shape {logits.shape}")
    return loss.template.value(d_y_apply(logits, y))


def loss_gradient_logits(loss: MulticlassLoss, logits, y):
    """Gradient of ``loss_value`` w.r.t. the logits: ``D_y^T grad template``."""
    logits = _finite_logits(logits)
    if logits.shape[-1] != loss.k:
        raise ShapeError(f"expected {loss.k} logits, got shape {logits.shape}")
    u = d_y_apply(logits, y)
    return d_y_transpose_apply(loss.template.gradient(u), y)


def model_loss_gradient(loss: MulticlassLoss, W, x, y):
    """Gradient of ``W -> loss(W x, y)``; same ``(k, d)`` layout as ``W``."""
    W = np.asarray(W, dtype=float)
    x = np.asarray(x, dtype=float)
    if W.ndim != 2 or W.shape[0] != loss.k or x.shape != (W.shape[1],):
        raise ShapeError(f"W {W.shape} and x {x.shape} incompatible with k={loss.k}")
    if np.dot(x, x) > 1.0 + 1e-12:
        warnings.warn(f"feature norm {np.linalg.norm(x):.4g} exceeds 1", stacklevel=2)
    g = loss_gradient_logits(loss, W @ x, int(y))
    return np.outer(g, x)
