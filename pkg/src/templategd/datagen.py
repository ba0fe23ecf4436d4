"""Finite-support separable distributions.

Random instances come with a margin certificate ``W*`` (``||W*||_F <= 1``)
and the two hard instances used for the lower bounds are reproduced point
for point. All labels are zero-based; the hard instances put every point in
class 0.

Seeds: every randomized operation accepts an int, a
``numpy.random.SeedSequence`` or a ``numpy.random.Generator``. Integers and
seed sequences are turned into a PCG64 generator, so streams are portable.
The sweep harness derives per-cell streams with
``SeedSequence([base_seed, cell_index, seed_index])``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .errors import (
    ConstructionError,
    FeasibilityError,
    InvariantError,
    ParameterError,
    ShapeError,
)
from .losses import MulticlassLoss, TailFunction, ExponentialTail
from .trainer import Dataset

__all__ = [
    "FiniteSupportDistribution",
    "as_generator",
    "make_random_separable",
    "make_hard_lower_n",
    "make_hard_lower_t",
    "sample",
    "population_risk_exact",
    "margin_certificate_check",
    "support_margins",
]

_TOL = 1e-12


def as_generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class FiniteSupportDistribution:
    X: np.ndarray
    y: np.ndarray
    probs: np.ndarray
    k: int
    certificate: np.ndarray
    gamma: float
    name: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X, dtype=float))
        y = np.asarray(self.y, dtype=np.int64).reshape(-1)
        probs = np.asarray(self.probs, dtype=float).reshape(-1)
        cert = np.asarray(self.certificate, dtype=float)
        m = X.shape[0]
        if y.shape != (m,) or probs.shape != (m,):
            raise ShapeError("support points, labels and probabilities disagree in length")
        if cert.shape != (self.k, X.shape[1]):
            raise ShapeError(f"certificate shape {cert.shape}, expected {(self.k, X.shape[1])}")
        if np.any(probs <= 0) or abs(probs.sum() - 1.0) > _TOL:
            raise InvariantError("probabilities must be positive and sum to 1")
        if np.any((y < 0) | (y >= self.k)):
            raise InvariantError(f"labels must lie in [0, {self.k})")
        if np.any(np.einsum("ij,ij->i", X, X) > 1.0 + _TOL):
            raise InvariantError("support points must have norm <= 1")
        for name, val in (("X", X), ("y", y), ("probs", probs), ("certificate", cert)):
            object.__setattr__(self, name, val)

    @property
    def d(self) -> int:
        return self.X.shape[1]

    @property
    def support_size(self) -> int:
        return self.X.shape[0]

    @property
    def support(self):
        return list(zip(self.X, self.y.tolist(), self.probs.tolist()))

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "params": self.params,
            "k": self.k,
            "d": self.d,
            "gamma": self.gamma,
            "support": [
                {"x": x.tolist(), "y": int(y), "prob": float(p)}
                for x, y, p in self.support
            ],
            "certificate": self.certificate.tolist(),
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, doc: dict) -> "FiniteSupportDistribution":
        sup = doc["support"]
        return cls(
            X=np.array([s["x"] for s in sup], dtype=float),
            y=np.array([s["y"] for s in sup], dtype=np.int64),
            probs=np.array([s["prob"] for s in sup], dtype=float),
            k=int(doc["k"]),
            certificate=np.array(doc["certificate"], dtype=float),
            gamma=float(doc["gamma"]),
            name=doc.get("name", "custom"),
            params=doc.get("params", {}),
        )

    @classmethod
    def from_json(cls, text: str) -> "FiniteSupportDistribution":
        return cls.from_dict(json.loads(text))


def support_margins(certificate, X, y) -> np.ndarray:
    """``min_{j != y} (W*_y - W*_j) . x`` for every point."""
    S = X @ np.asarray(certificate).T
    own = S[np.arange(len(y)), y]
    S = S.copy()
    S[np.arange(len(y)), y] = -np.inf
    return own - S.max(axis=1)


def margin_certificate_check(dist: FiniteSupportDistribution) -> float:
    """Smallest certified margin over the support.

    Raises:
        InvariantError: ``||W*||_F > 1`` or the margin falls below ``gamma``.
    """
    nrm = float(np.linalg.norm(dist.certificate))
    if nrm > 1.0 + _TOL:
        raise InvariantError(f"certificate norm {nrm:.6g} exceeds 1")
    gamma_actual = float(support_margins(dist.certificate, dist.X, dist.y).min())
    if gamma_actual < dist.gamma - _TOL:
        raise InvariantError(f"certified margin {gamma_actual:.6g} < claimed {dist.gamma:.6g}")
    return gamma_actual


def _class_anchor(Wstar, y):
    """Unit vector maximizing ``min_{j != y} (W*_y - W*_j) . x`` and its margin.

    The maximizer is the normalized min-norm point of the convex hull of the
    differences ``W*_y - W*_j``; the hull weights solve a small simplex QP.
    """
    A = Wstar[y] - np.delete(Wstar, y, axis=0)
    m = A.shape[0]
    G = A @ A.T
    res = optimize.minimize(
        lambda lam: lam @ G @ lam,
        np.full(m, 1.0 / m),
        jac=lambda lam: 2 * G @ lam,
        bounds=[(0.0, 1.0)] * m,
        constraints=[{"type": "eq", "fun": lambda lam: lam.sum() - 1.0}],
        method="SLSQP",
        options={"ftol": 1e-14, "maxiter": 500},
    )
    point = A.T @ res.x
    nrm = np.linalg.norm(point)
    if nrm == 0:
        return point, 0.0
    x = point / nrm
    return x, float((A @ x).min())


def make_random_separable(
    d: int,
    k: int,
    gamma: float,
    support_size: int,
    seed=0,
    max_tries: int = 20,
) -> FiniteSupportDistribution:
    """Random separable distribution with uniform weights over its support.

    ``W*`` has random rows of norm ``1/sqrt(k)`` (so ``||W*||_F = 1``). For
    each class the unit direction with the largest certified margin is found
    first; a support point starts uniformly in the unit ball and, if its
    margin is below ``gamma``, is mixed toward that direction just far
    enough (bisection on the mixing weight) to reach ``gamma``. Labels are
    balanced, so every class appears.

    Raises:
        ConstructionError: no certificate draw admits margin ``gamma`` for
            every class within ``max_tries`` attempts.
    """
    if not 0 < gamma < 1 / math.sqrt(2):
        raise ParameterError(f"gamma must lie in (0, 1/sqrt(2)), got {gamma}")
    if d < 2:
        raise ParameterError(f"need d >= 2, got {d}")
    if k < 2:
        raise ParameterError(f"need k >= 2, got {k}")
    if support_size < k:
        raise ParameterError(f"support_size must be >= k = {k}, got {support_size}")
    rng = as_generator(seed)
    for _ in range(max_tries):
        Wstar = rng.standard_normal((k, d))
        Wstar /= np.linalg.norm(Wstar, axis=1, keepdims=True) * math.sqrt(k)
        anchors = [_class_anchor(Wstar, y) for y in range(k)]
        # small slack so that the bisection endpoint is safely feasible
        if min(m for _, m in anchors) >= gamma * (1 + 1e-6) + _TOL:
            break
    else:
        raise ConstructionError(
            f"no certificate with margin {gamma} found in {max_tries} draws (d={d}, k={k})"
        )

    y = rng.permutation(np.arange(support_size) % k)
    X = rng.standard_normal((support_size, d))
    X *= (rng.random(support_size) ** (1.0 / d) / np.linalg.norm(X, axis=1))[:, None]
    A = np.stack([a for a, _ in anchors])[y]

    def margins(lam):
        return support_margins(Wstar, X + lam[:, None] * (A - X), y)

    lo = np.zeros(support_size)
    hi = np.where(margins(lo) >= gamma, 0.0, 1.0)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        ok = margins(mid) >= gamma
        hi = np.where(ok, mid, hi)
        lo = np.where(ok, lo, mid)
    X = X + hi[:, None] * (A - X)

    dist = FiniteSupportDistribution(
        X=X,
        y=y,
        probs=np.full(support_size, 1.0 / support_size),
        k=k,
        certificate=Wstar,
        gamma=float(gamma),
        name="random",
        params={"d": d, "k": k, "gamma": gamma, "support_size": support_size},
    )
    margin_certificate_check(dist)
    return dist


def make_hard_lower_n(gamma: float, n: int, k: int = 2) -> FiniteSupportDistribution:
    """Three-point instance whose rare third point drives the 1/n lower bound.

    Points ``(1,0,0)``, ``(-1/2, 3 gamma, 0)`` and ``(0, -1/8, 4 gamma + 1/4)``
    with probabilities ``59/64 (1 - 1/n)``, ``5/64 (1 - 1/n)`` and ``1/n``;
    all in class 0. Certificate row 0 is ``(gamma, 1/2, 1/4)``.
    """
    if not 0 < gamma <= 1 / 8:
        raise ParameterError(f"gamma must lie in (0, 1/8], got {gamma}")
    if n < 35:
        raise ParameterError(f"n must be >= 35, got {n}")
    if k < 2:
        raise ParameterError(f"need k >= 2, got {k}")
    X = np.array(
        [[1.0, 0.0, 0.0], [-0.5, 3 * gamma, 0.0], [0.0, -1 / 8, 4 * gamma + 1 / 4]]
    )
    probs = np.array([59 / 64 * (1 - 1 / n), 5 / 64 * (1 - 1 / n), 1 / n])
    cert = np.zeros((k, 3))
    cert[0] = [gamma, 0.5, 0.25]
    dist = FiniteSupportDistribution(
        X, np.zeros(3, dtype=np.int64), probs, k, cert, float(gamma),
        name="hard_lower_n", params={"gamma": gamma, "n": n, "k": k},
    )
    margin_certificate_check(dist)
    return dist


def hard_lower_t_probability(gamma, k, T, eta, epsilon, tail: TailFunction) -> float:
    """Weight of the rare point: ``rho^{-1}(16 eps / k) / (72 gamma^2 T k eta)``."""
    return float(tail.rho_inverse(16 * epsilon / k)) / (72 * gamma**2 * T * k * eta)


def make_hard_lower_t(
    gamma: float,
    k: int,
    T: int,
    eta: float,
    epsilon: float,
    tail: TailFunction | None = None,
) -> FiniteSupportDistribution:
    """Two-point instance for the 1/T lower bound.

    ``(1, 0)`` with probability ``1 - p`` and ``(-1/2, 3 gamma)`` with
    probability ``p``, both in class 0; certificate row 0 is ``(gamma, 1/2)``.

    Raises:
        FeasibilityError: ``rho^{-1}(eps/k)^2 / (gamma^2 eta T) <= eps <= 1/16``
            fails, or the resulting ``p`` exceeds ``eps``.
    """
    tail = tail or ExponentialTail()
    if not 0 < gamma <= 1 / 8:
        raise ParameterError(f"gamma must lie in (0, 1/8], got {gamma}")
    if k < 2 or T < 1 or not eta > 0:
        raise ParameterError("need k >= 2, T >= 1, eta > 0")
    if not 0 < epsilon <= 1 / 16:
        raise FeasibilityError(f"need 0 < epsilon <= 1/16, got {epsilon}")
    lhs = float(tail.rho_inverse(epsilon / k)) ** 2 / (gamma**2 * eta * T)
    if lhs > epsilon:
        raise FeasibilityError(
            f"rho^-1(eps/k)^2 / (gamma^2 eta T) = {lhs:.6g} exceeds eps = {epsilon:.6g}"
        )
    p = hard_lower_t_probability(gamma, k, T, eta, epsilon, tail)
    if p > epsilon:
        raise FeasibilityError(f"rare-point probability {p:.6g} exceeds eps = {epsilon:.6g}")
    X = np.array([[1.0, 0.0], [-0.5, 3 * gamma]])
    cert = np.zeros((k, 2))
    cert[0] = [gamma, 0.5]
    dist = FiniteSupportDistribution(
        X, np.zeros(2, dtype=np.int64), np.array([1 - p, p]), k, cert, float(gamma),
        name="hard_lower_t",
        params={"gamma": gamma, "k": k, "T": T, "eta": eta, "epsilon": epsilon, "p": p},
    )
    margin_certificate_check(dist)
    return dist


def sample(dist: FiniteSupportDistribution, n: int, seed=0) -> Dataset:
    """``n`` i.i.d. draws from the support."""
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    rng = as_generator(seed)
    idx = rng.choice(dist.support_size, size=n, p=dist.probs)
    return Dataset(dist.X[idx], dist.y[idx], dist.k)


def population_risk_exact(loss: MulticlassLoss, W, dist: FiniteSupportDistribution) -> float:
    """``sum_i prob_i loss(W x_i, y_i)`` over the support; no sampling."""
    W = np.asarray(W, dtype=float)
    if W.shape != (loss.k, dist.d) or dist.k != loss.k:
        raise ShapeError(f"W {W.shape} incompatible with k={dist.k}, d={dist.d}")
    return float(dist.probs @ loss.values(dist.X @ W.T, dist.y))
