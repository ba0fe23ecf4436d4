"""Result record shared by all checkers."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

__all__ = ["CheckReport", "format_table"]

PASS, FAIL, SKIPPED = "pass", "fail", "skipped"


def _plain(obj):
    """Make numpy containers JSON friendly."""
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


@dataclass
class CheckReport:
    """Outcome of one sampled or exact inequality check.

    ``worst_ratio`` is the largest observed ``lhs / bound``; for inequality
    checks ``passed`` holds exactly when it is at most 1. A check whose
    precondition fails is ``skipped``: it neither passes nor fails.
    """

    name: str
    passed: bool
    worst_ratio: float
    witness: dict | None = None
    samples_used: int = 0
    skipped: bool = False
    detail: dict = field(default_factory=dict)

    @property
    def status(self) -> str:
        if self.skipped:
            return SKIPPED
        return PASS if self.passed else FAIL

    @classmethod
    def from_ratios(cls, name, ratios, witnesses=None, detail=None):
        """Build a report from per-sample ratios; the witness is the argmax."""
        ratios = np.asarray(ratios, dtype=float).reshape(-1)
        if ratios.size == 0:
            return cls(name, True, 0.0, samples_used=0, detail=detail or {})
        ratios = np.where(np.isnan(ratios), np.inf, ratios)
        i = int(np.argmax(ratios))
        worst = float(ratios[i])
        passed = worst <= 1.0
        witness = None
        if not passed and witnesses is not None:
            witness = witnesses(i) if callable(witnesses) else witnesses[i]
        return cls(name, passed, worst, witness, int(ratios.size), detail=detail or {})

    @classmethod
    def skip(cls, name, reason, **detail):
        return cls(name, False, float("nan"), skipped=True, detail={"reason": reason, **detail})

    def to_dict(self) -> dict:
        out = _plain(asdict(self))
        out["status"] = self.status
        return out

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def format_table(reports) -> str:
    """Fixed-width pass/fail table, one line per report."""
    reports = list(reports)
    width = max([len(r.name) for r in reports] + [5])
    lines = [f"{'check':<{width}}  status   worst_ratio  samples"]
    for r in reports:
        ratio = "-" if r.skipped else f"{r.worst_ratio:.4g}"
        lines.append(f"{r.name:<{width}}  {r.status:<7}  {ratio:>11}  {r.samples_used:>7}")
    return "\n".join(lines)
