"""Full-batch gradient descent on the empirical risk of a linear model."""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericError, ParameterError, ShapeError
from .losses import MulticlassLoss, k_factor

__all__ = [
    "Dataset",
    "GDConfig",
    "GDTrace",
    "empirical_risk",
    "empirical_risk_gradient",
    "risk_and_gradient",
    "default_step_size",
    "gd_run",
]


@dataclass(frozen=True)
class Dataset:
    """Labelled points ``X[i] in R^d`` with zero-based labels ``y[i] < k``."""

    X: np.ndarray
    y: np.ndarray
    k: int

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X, dtype=float))
        y = np.asarray(self.y, dtype=np.int64).reshape(-1)
        if X.shape[0] == 0:
            raise ParameterError("dataset must be nonempty")
        if y.shape[0] != X.shape[0]:
            raise ShapeError(f"{X.shape[0]} points but {y.shape[0]} labels")
        if self.k < 2:
            raise ParameterError(f"need k >= 2, got {self.k}")
        if np.any((y < 0) | (y >= self.k)):
            raise IndexError(f"labels must lie in [0, {self.k})")
        if np.any(np.einsum("ij,ij->i", X, X) > 1.0 + 1e-12):
            warnings.warn("some feature vectors have norm > 1", stacklevel=3)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    @property
    def points(self):
        return list(zip(self.X, self.y.tolist()))

    def compressed(self):
        """Distinct ``(x, y)`` pairs with their empirical frequencies.

        Sums over the compressed form equal dataset means exactly in exact
        arithmetic; GD uses it because samples from finite-support
        distributions repeat heavily.
        """
        key = np.concatenate([self.X, self.y[:, None].astype(float)], axis=1)
        uniq, counts = np.unique(key, axis=0, return_counts=True)
        X = np.ascontiguousarray(uniq[:, :-1])
        y = uniq[:, -1].astype(np.int64)
        return X, y, counts / self.n


def _check_shapes(loss: MulticlassLoss, W, X):
    W = np.asarray(W, dtype=float)
    if W.shape != (loss.k, X.shape[1]):
        raise ShapeError(f"W has shape {W.shape}, expected {(loss.k, X.shape[1])}")
    return W


def risk_and_gradient(loss: MulticlassLoss, W, X, y, weights=None):
    """Weighted risk ``sum_i w_i loss(W x_i, y_i)`` and its gradient in ``W``.

    Uniform weights ``1/n`` when ``weights`` is None.
    """
    W = _check_shapes(loss, W, X)
    logits = X @ W.T
    vals, glog = loss.value_and_logit_grad(logits, y)
    if weights is None:
        risk = float(vals.mean())
        grad = glog.T @ X / X.shape[0]
    else:
        risk = float(weights @ vals)
        grad = (glog * weights[:, None]).T @ X
    return risk, grad


def empirical_risk(loss: MulticlassLoss, W, dataset: Dataset) -> float:
    """Mean loss of the linear model ``W`` over the dataset."""
    W = _check_shapes(loss, W, dataset.X)
    return float(np.mean(loss.values(dataset.X @ W.T, dataset.y)))


def empirical_risk_gradient(loss: MulticlassLoss, W, dataset: Dataset) -> np.ndarray:
    return risk_and_gradient(loss, W, dataset.X, dataset.y)[1]


def default_step_size(beta: float, k: int, p: float) -> float:
    """``1 / (6 beta k^(2/p))``, reading p = inf as p = k."""
    if not beta > 0:
        raise ParameterError(f"beta must be positive, got {beta}")
    if k < 2:
        raise ParameterError(f"need k >= 2, got {k}")
    if not (p >= 2 or p == math.inf):
        raise ParameterError(f"p must lie in [2, inf], got {p}")
    return 1.0 / (6.0 * beta * k_factor(k, p))


@dataclass(frozen=True)
class GDConfig:
    eta: float
    T: int
    record_every: int = 1
    seed: int = 0
    keep_snapshots: bool = False

    def __post_init__(self):
        if not (self.eta > 0 and math.isfinite(self.eta)):
            raise ParameterError(f"eta must be positive, got {self.eta}")
        if int(self.T) != self.T or self.T < 1:
            raise ParameterError(f"T must be a positive integer, got {self.T}")
        if int(self.record_every) != self.record_every or self.record_every < 1:
            raise ParameterError(f"record_every must be >= 1, got {self.record_every}")


@dataclass
class GDTrace:
    """Recorded iterates of one GD run.

    ``t`` is one-based: ``t = 1`` is the initial point ``W_1 = 0`` and the
    run ends at ``W_T`` after ``T - 1`` updates.
    """

    config: GDConfig
    t: np.ndarray
    frob_norm: np.ndarray
    emp_risk: np.ndarray
    final_W: np.ndarray
    k: int
    p: float
    beta: float
    labels: tuple = ()
    loss_family: str = ""
    ref_dist: np.ndarray | None = None
    reference: np.ndarray | None = None
    snapshots: list = field(default_factory=list)

    @property
    def final_risk(self) -> float:
        return float(self.emp_risk[-1])

    @property
    def iterates(self):
        return list(zip(self.t.tolist(), self.frob_norm.tolist(), self.emp_risk.tolist()))

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "frob_norm", "empirical_risk"])
            for t, nrm, risk in self.iterates:
                w.writerow([t, repr(nrm), repr(risk)])


def _recorded(t: int, T: int, every: int) -> bool:
    return t == 1 or t == T or (t - 1) % every == 0


def gd_run(loss: MulticlassLoss, dataset: Dataset, config: GDConfig, reference=None) -> GDTrace:
    """Run ``W_{t+1} = W_t - eta grad L(W_t)`` from ``W_1 = 0`` up to ``W_T``.

    Args:
        loss: multiclass loss.
        dataset: training sample.
        config: step size, horizon and recording stride.
        reference: optional ``(k, d)`` matrix; if given, ``||W_t - reference||_F``
            is recorded alongside the norms.

    Raises:
        NumericError: an iterate or its risk became non-finite (``err.t`` holds
            the offending iteration).
    """
    if dataset.k != loss.k:
        raise ShapeError(f"dataset has k={dataset.k}, loss has k={loss.k}")
    X, y, w = dataset.compressed()
    W = np.zeros((loss.k, dataset.d))
    if reference is not None:
        reference = _check_shapes(loss, reference, X)

    ts, norms, risks, dists, snaps = [], [], [], [], []
    for t in range(1, config.T + 1):
        risk, grad = risk_and_gradient(loss, W, X, y, w)
        if not (math.isfinite(risk) and np.all(np.isfinite(W))):
            raise NumericError(f"non-finite iterate at t={t}", t=t)
        if _recorded(t, config.T, config.record_every):
            ts.append(t)
            norms.append(float(np.linalg.norm(W)))
            risks.append(risk)
            if reference is not None:
                dists.append(float(np.linalg.norm(W - reference)))
            if config.keep_snapshots:
                snaps.append(W.copy())
        if t < config.T:
            W = W - config.eta * grad

    family = type(loss.template).__name__
    return GDTrace(
        config=config,
        t=np.array(ts, dtype=np.int64),
        frob_norm=np.array(norms),
        emp_risk=np.array(risks),
        final_W=W,
        k=loss.k,
        p=loss.p,
        beta=loss.beta,
        labels=tuple(np.unique(dataset.y).tolist()),
        loss_family=family,
        ref_dist=np.array(dists) if reference is not None else None,
        reference=reference,
        snapshots=snaps,
    )
