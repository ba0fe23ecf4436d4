"""Central finite differences, the oracle behind every gradient test."""

from __future__ import annotations

import numpy as np

from ..errors import NumericError, ParameterError

__all__ = ["finite_diff_gradient"]


def finite_diff_gradient(f, point, h: float = 1e-6) -> np.ndarray:
    """Approximate the gradient of ``f`` at ``point`` coordinate by coordinate.

    Args:
        f: real-valued function of an array shaped like ``point``.
        point: evaluation point (any shape; the gradient has the same shape).
        h: step; the truncation error is ``O(h^2)``.

    Returns:
        ``(f(p + h e_i) - f(p - h e_i)) / (2h)`` for every coordinate ``i``.

    Raises:
        ParameterError: ``h <= 0``.
        NumericError: ``f`` returned a non-finite value.
    """
    if not h > 0:
        raise ParameterError(f"step h must be positive, got {h}")
    p = np.array(point, dtype=float)
    flat = p.reshape(-1)
    grad = np.empty_like(flat)
    for i in range(flat.size):
        old = flat[i]
        flat[i] = old + h
        fp = float(f(p))
        flat[i] = old - h
        fm = float(f(p))
        flat[i] = old
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise NumericError(f"non-finite function value near coordinate {i}")
        grad[i] = (fp - fm) / (2.0 * h)
    return grad.reshape(p.shape)
