"""Log-log slope fits over seed-averaged sweep cells."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from ..errors import FitError, ParameterError
from .sweep import SweepResult, seed_means

__all__ = ["ScalingFit", "fit_scaling", "fit_loglog"]

AXES = ("k", "T", "n")


@dataclass(frozen=True)
class ScalingFit:
    slope: float
    stderr: float
    intercept: float
    x: tuple
    y: tuple

    @property
    def n_points(self) -> int:
        return len(self.x)


def fit_loglog(x, y) -> ScalingFit:
    """Least-squares slope of ``log y`` against ``log x``.

    Raises:
        FitError: fewer than three distinct ``x`` or a nonpositive value.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(np.unique(x)) < 3:
        raise FitError(f"need at least 3 distinct x values, got {len(np.unique(x))}")
    if np.any(x <= 0) or np.any(~(y > 0)):
        raise FitError("log-log fit needs positive x and y")
    res = stats.linregress(np.log(x), np.log(y))
    stderr = float(res.stderr) if math.isfinite(res.stderr) else 0.0
    return ScalingFit(float(res.slope), stderr, float(res.intercept), tuple(x.tolist()), tuple(y.tolist()))


def fit_scaling(result, x_axis: str, y: str = "pop_risk", transform: str = "loglog") -> ScalingFit:
    """Slope of the seed-averaged ``y`` versus ``x_axis`` on log-log axes.

    ``result`` is a ``SweepResult`` or a list of row dicts; rows with a
    non-ok status are ignored. The other grid axes are averaged over, so
    callers should pass results in which they are fixed.
    """
    if x_axis not in AXES:
        raise ParameterError(f"x_axis must be one of {AXES}, got {x_axis!r}")
    if transform != "loglog":
        raise ParameterError(f"unsupported transform {transform!r}")
    if not isinstance(result, SweepResult):
        rows = [dict(r) for r in result]
        for r in rows:
            r.setdefault("status", "ok")
        result = SweepResult(rows)
    xs, means, _ = seed_means(result, x_axis, y)
    return fit_loglog(xs, means)
