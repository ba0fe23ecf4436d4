"""Empirical Rademacher complexity of the localized class.

The class is ``F_{B,r} = {(x, y) -> loss(W x, y) : ||W||_F <= B, L_hat(W) <= r}``
over a fixed sample. For each sign vector the supremum of
``(1/n) sum_i sigma_i loss(W x_i, y_i)`` is approximated by projected
normalized-gradient ascent with restarts, so every returned value is a lower
estimate of the true complexity.

Feasibility is kept by two projections: radial scaling onto the Frobenius
ball, then (if the risk cap is violated) bisection along the segment toward
an anchor point that minimizes ``L_hat`` over the ball. Both sets are convex,
so the segment stays feasible. A penalty mode is available as an
alternative; its iterates are only scored once retracted to feasibility.

Seeding: the search for a given sign pattern uses
``SeedSequence([seed, pattern_bits, n])``, so the Monte Carlo mode and the
exact enumeration mode (``n <= 4``) evaluate identical suprema on every
pattern they share.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import ParameterError
from ..losses import MulticlassLoss, k_factor
from ..trainer import Dataset

__all__ = [
    "RademacherQuery",
    "RademacherEstimate",
    "estimate_rademacher",
    "rademacher_details",
    "rademacher_grid",
    "LINEAR",
]

LINEAR = "linear"
MAX_EXACT_N = 4
_BISECT_ITERS = 20


@dataclass(frozen=True)
class RademacherQuery:
    """Inputs of one estimate.

    ``loss = "linear"`` swaps in the calibration class ``x -> <w, x>`` with
    ``||w|| <= B`` (no risk cap), whose supremum is known in closed form.
    """

    loss: MulticlassLoss | str
    dataset: Dataset
    B: float
    r: float = math.inf
    draws: int = 64
    restarts: int = 8
    ascent_steps: int = 200
    mode: str = "projection"
    step_scale: float = 0.1
    penalty: float = 100.0

    def __post_init__(self):
        if not self.B >= 0:
            raise ParameterError(f"B must be nonnegative, got {self.B}")
        if not self.r >= 0:
            raise ParameterError(f"r must be nonnegative, got {self.r}")
        if int(self.draws) != self.draws or self.draws < 1:
            raise ParameterError(f"draws must be >= 1, got {self.draws}")
        if self.restarts < 1 or self.ascent_steps < 1:
            raise ParameterError("restarts and ascent_steps must be >= 1")
        if self.mode not in ("projection", "penalty"):
            raise ParameterError(f"mode must be 'projection' or 'penalty', got {self.mode!r}")
        if isinstance(self.loss, str) and self.loss != LINEAR:
            raise ParameterError(f"unknown class {self.loss!r}")

    @property
    def n(self) -> int:
        return self.dataset.n


@dataclass
class RademacherEstimate:
    value: float
    stderr: float
    per_draw: np.ndarray
    patterns: np.ndarray
    exact: bool
    empty: bool = False
    diagnostics: dict = field(default_factory=dict)

    def __float__(self):
        return self.value


class _Objective:
    """Per-sample losses and gradients for a batch of models ``W[m]``."""

    def __init__(self, query: RademacherQuery):
        self.X = query.dataset.X
        self.y = query.dataset.y
        self.n = query.dataset.n
        self.linear = isinstance(query.loss, str)
        self.loss = None if self.linear else query.loss
        self.shape = (1 if self.linear else self.loss.k, self.X.shape[1])

    def _logits(self, W):
        return np.swapaxes(W @ self.X.T, 1, 2)

    def losses(self, W):
        """``(m, n)`` losses for models of shape ``(m, k, d)``."""
        logits = self._logits(W)
        if self.linear:
            return logits[..., 0]
        m = W.shape[0]
        y = np.tile(self.y, m)
        return self.loss.values(logits.reshape(m * self.n, -1), y).reshape(m, self.n)

    def losses_and_grads(self, W):
        logits = self._logits(W)
        if self.linear:
            return logits[..., 0], np.ones_like(logits)
        m = W.shape[0]
        vals, G = self.loss.value_and_logit_grad(logits.reshape(m * self.n, -1), np.tile(self.y, m))
        return vals.reshape(m, self.n), G.reshape(m, self.n, -1)

    def weighted_grad(self, G, w):
        """``sum_i w[m, i] grad_W loss_i`` for every model ``m``."""
        return np.swapaxes(G * w[:, :, None], 1, 2) @ self.X

    def smoothness(self) -> float:
        if self.linear:
            return 1.0
        return 3.0 * self.loss.beta * k_factor(self.loss.k, self.loss.p)


def _norms(W):
    return np.sqrt((W * W).sum(axis=(1, 2)))


def _project_ball(W, B):
    nrm = _norms(W)
    scale = np.where(nrm > B, B / np.maximum(nrm, 1e-300), 1.0)
    return W * scale[:, None, None]


class _Searcher:
    """Projected ascent for many chains at once over one class ``F_{B,r}``."""

    def __init__(self, query: RademacherQuery, obj: _Objective, B: float, r: float):
        self.q, self.obj, self.B, self.r = query, obj, B, r
        self.capped = not obj.linear and math.isfinite(r)
        self.anchor, self.anchor_risk = self._find_anchor()
        self.empty = self.capped and self.anchor_risk > r

    def risk(self, W):
        return self.obj.losses(W).mean(axis=1)

    def _find_anchor(self):
        W = np.zeros((1,) + self.obj.shape)
        if not self.capped:
            return W[0], float(self.risk(W)[0])
        # projected normalized descent on L_hat with decaying steps
        uniform = np.full((1, self.obj.n), 1.0 / self.obj.n)
        eta = 1.0 / self.obj.smoothness()
        best, best_risk = W[0], float(self.risk(W)[0])
        for t in range(400):
            _, G = self.obj.losses_and_grads(W)
            grad = self.obj.weighted_grad(G, uniform)
            gn = float(_norms(grad)[0])
            if gn == 0:
                break
            step = max(eta * gn, 0.5 * self.B / math.sqrt(t + 1))
            W = _project_ball(W - step * grad / gn, self.B)
            risk = float(self.risk(W)[0])
            if risk < best_risk:
                best, best_risk = W[0].copy(), risk
            if best_risk <= 0.5 * self.r:
                break
        return best, best_risk

    def retract(self, W):
        """Ball projection, then bisection toward the anchor where the cap fails."""
        W = _project_ball(W, self.B)
        if not self.capped:
            return W
        bad = self.risk(W) > self.r
        if not bad.any():
            return W
        D = W[bad] - self.anchor
        lo = np.zeros(len(D))
        hi = np.ones(len(D))
        for _ in range(_BISECT_ITERS):
            mid = 0.5 * (lo + hi)
            ok = self.risk(self.anchor + mid[:, None, None] * D) <= self.r
            lo = np.where(ok, mid, lo)
            hi = np.where(ok, hi, mid)
        W = W.copy()
        W[bad] = self.anchor + lo[:, None, None] * D
        return W

    def ascend(self, W, sigma):
        """Run every chain ``W[m]`` with signs ``sigma[m]``; best value and point per chain."""
        q, obj = self.q, self.obj
        step = q.step_scale * self.B / math.sqrt(q.ascent_steps)
        w_sig = sigma / obj.n
        uniform = np.full_like(w_sig, 1.0 / obj.n)
        mu = q.penalty / max(self.r, 1e-12)
        best_v = (sigma * obj.losses(W)).mean(axis=1)
        best_W = W.copy()
        checkpoint = None
        mark = q.ascent_steps - max(1, q.ascent_steps // 10)
        for s in range(q.ascent_steps):
            vals, G = obj.losses_and_grads(W)
            grad = obj.weighted_grad(G, w_sig)
            if q.mode == "penalty" and self.capped:
                excess = np.maximum(vals.mean(axis=1) - self.r, 0.0)
                grad = grad - (2 * mu * excess)[:, None, None] * obj.weighted_grad(G, uniform)
            gn = _norms(grad)
            moving = gn > 0
            W = W + step * grad / np.where(moving, gn, 1.0)[:, None, None]
            if q.mode == "projection":
                W = self.retract(W)
                cand = W
            else:
                W = _project_ball(W, self.B)
                cand = self.retract(W)
            v = (sigma * obj.losses(cand)).mean(axis=1)
            better = v > best_v
            best_v = np.where(better, v, best_v)
            best_W[better] = cand[better]
            if s == mark:
                checkpoint = best_v.copy()
        if checkpoint is None:
            checkpoint = best_v
        converged = (best_v - checkpoint) <= 1e-3 * np.maximum(np.abs(best_v), 1e-12)
        return best_v, best_W, converged


def _pattern_bits(sigma) -> int:
    return int(sum(1 << i for i, s in enumerate(sigma) if s > 0))


def _pattern_seed(seed, sigma):
    return np.random.SeedSequence([int(seed), _pattern_bits(sigma), len(sigma)])


def _starts(searcher: _Searcher, sigma, seed):
    """Anchor plus ``restarts - 1`` random ball points for one sign pattern."""
    rng = np.random.Generator(np.random.PCG64(_pattern_seed(seed, sigma)))
    shape = searcher.obj.shape
    size = shape[0] * shape[1]
    Z = rng.standard_normal((searcher.q.restarts - 1,) + shape)
    radius = searcher.B * rng.random(len(Z)) ** (1.0 / size)
    Z *= (radius / np.maximum(_norms(Z), 1e-300))[:, None, None]
    return np.concatenate([searcher.anchor[None], Z])


def _sup_batch(searcher: _Searcher, patterns, seed, warm=None):
    """Approximate suprema for every sign pattern (rows of ``patterns``).

    ``warm`` optionally adds feasible starting points per pattern, shape
    ``(P, w, k, d)``. Returns values ``(P,)``, maximizers ``(P, k, d)`` and
    the number of chains that did not converge.
    """
    P = len(patterns)
    starts = np.stack([_starts(searcher, s, seed) for s in patterns])
    if warm is not None and warm.shape[1]:
        starts = np.concatenate([warm, starts], axis=1)
    S = starts.shape[1]
    flat = starts.reshape((P * S,) + searcher.obj.shape)
    flat = searcher.retract(flat)
    sigma = np.repeat(np.asarray(patterns, dtype=float), S, axis=0)
    v, W, conv = searcher.ascend(flat, sigma)
    v = v.reshape(P, S)
    W = W.reshape((P, S) + searcher.obj.shape)
    pick = v.argmax(axis=1)
    return v[np.arange(P), pick], W[np.arange(P), pick], int((~conv).sum()), P * S


def _all_patterns(n):
    bits = np.arange(2**n)[:, None] >> np.arange(n)[None, :] & 1
    return np.where(bits == 1, 1.0, -1.0)


def _draw_patterns(n, draws, seed):
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), 0x5EED])))
    return np.where(rng.random((draws, n)) < 0.5, -1.0, 1.0)


def rademacher_details(query: RademacherQuery, seed=0, exact: bool | None = None) -> RademacherEstimate:
    """Estimate with standard error and ascent diagnostics.

    Args:
        query: class and sample description.
        seed: base seed for sign draws and restarts.
        exact: enumerate all ``2^n`` sign patterns (only for ``n <= 4``);
            defaults to Monte Carlo with ``query.draws`` patterns.
    """
    n = query.n
    exact = bool(exact)
    if exact and n > MAX_EXACT_N:
        raise ParameterError(f"exact enumeration needs n <= {MAX_EXACT_N}, got {n}")
    patterns = _all_patterns(n) if exact else _draw_patterns(n, query.draws, seed)
    if query.B == 0:
        # a single function: the average over signs vanishes
        zeros = np.zeros(len(patterns))
        return RademacherEstimate(0.0, 0.0, zeros, patterns, exact)
    obj = _Objective(query)
    searcher = _Searcher(query, obj, query.B, query.r)
    if searcher.empty:
        zeros = np.zeros(len(patterns))
        return RademacherEstimate(0.0, 0.0, zeros, patterns, exact, empty=True,
                                  diagnostics={"anchor_risk": searcher.anchor_risk})
    # duplicate patterns share one search
    keys = [_pattern_bits(sig) for sig in patterns]
    uniq = sorted(set(keys), key=keys.index)
    first = {key: keys.index(key) for key in uniq}
    sups, _, nonconv, n_runs = _sup_batch(searcher, patterns[[first[u] for u in uniq]], seed)
    lookup = dict(zip(uniq, sups))
    vals = np.array([lookup[key] for key in keys])
    # the true complexity of a nonempty class is >= 0, so clipping keeps a lower estimate
    value = max(float(vals.mean()), 0.0)
    stderr = 0.0 if exact or len(vals) < 2 else float(vals.std(ddof=1) / math.sqrt(len(vals)))
    diag = {"nonconverged_runs": nonconv, "runs": n_runs, "anchor_risk": searcher.anchor_risk}
    return RademacherEstimate(value, stderr, vals, patterns, exact, diagnostics=diag)


def estimate_rademacher(query: RademacherQuery, seed=0, exact: bool | None = None) -> float:
    """Lower estimate of the empirical Rademacher complexity of ``F_{B,r}``."""
    return rademacher_details(query, seed, exact).value


def rademacher_grid(query: RademacherQuery, Bs, rs, seed=0, exact: bool | None = None) -> np.ndarray:
    """Estimates on a ``(B, r)`` grid that are monotone by construction.

    The sign patterns and restart seeds are shared across cells; cells are
    visited in increasing ``B`` and ``r``, and the best points found for the
    two smaller neighbours (feasible in the larger class) seed the search.
    Each per-pattern supremum is therefore nondecreasing along both axes.

    Returns:
        Array of shape ``(len(Bs), len(rs))`` indexed like the sorted inputs.
    """
    Bs = np.sort(np.asarray(Bs, dtype=float))
    rs = np.sort(np.asarray(rs, dtype=float))
    n = query.n
    exact = bool(exact)
    patterns = _all_patterns(n) if exact else _draw_patterns(n, query.draws, seed)
    obj = _Objective(query)
    out = np.zeros((len(Bs), len(rs)))
    best = {}  # (i, j) -> (values, maximizers), one entry per pattern
    for i, B in enumerate(Bs):
        for j, r in enumerate(rs):
            if B == 0:
                continue
            searcher = _Searcher(query, obj, B, r)
            if searcher.empty:
                continue
            prev = [best[key] for key in ((i - 1, j), (i, j - 1)) if key in best]
            warm = np.stack([W for _, W in prev], axis=1) if prev else None
            v, W, _, _ = _sup_batch(searcher, patterns, seed, warm)
            for pv, PW in prev:
                # neighbours are feasible here, so their values are valid lower bounds
                take = pv > v
                v = np.where(take, pv, v)
                W[take] = PW[take]
            best[(i, j)] = (v, W)
            out[i, j] = max(float(v.mean()), 0.0)
    return out
