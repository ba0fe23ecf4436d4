"""Experiment configuration: TOML schema and the validated ``ExperimentSpec``.

Schema (keys marked * are required)::

    label = "name used in CSV headers and plot legends"
    output = "results/run.csv"

    [loss]                      # *
    family = "cross_entropy"    # * or "sum_univariate"
    alpha = 1.0                 # cross-entropy temperature
    variant = "quadratic-tail"  # sum_univariate: quadratic-tail | linear-tail | raw
    [loss.tail]                 # sum_univariate only (cross-entropy uses exp(alpha))
    kind = "exponential"        # or "polynomial"
    alpha = 1.0

    [distribution]              # *
    kind = "random"             # * random | hard_lower_n | hard_lower_t
    d = 20                      # random only
    support_size = 2000         # random only
    seed = 0                    # random only; one distribution per k

    [grid]                      # *
    k = [4, 8]                  # *
    T = [1000]                  # *
    n = [1000]                  # *
    pairing = "product"         # or "zip": T and n matched elementwise

    gamma = 0.125               # *

    [seeds]
    count = 1
    base = 0

    [epsilon]
    policy = "default"          # default | one_over_T | corpol_formula | explicit
    value = 0.01                # explicit only

    [feasibility]
    side = "upper"              # upper | lower (default: lower for hard instances)
    on_infeasible = "skip"      # skip | flag (flag runs the cell anyway)
"""

from __future__ import annotations

import itertools
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from ..datagen import make_hard_lower_n, make_hard_lower_t, make_random_separable
from ..errors import ConfigError, TemplateGDError
from ..losses import (
    ExponentialTail,
    MulticlassLoss,
    TailFunction,
    UnivariatePhi,
    make_cross_entropy,
    make_sum_univariate,
    make_tail,
)
from ..verify.bounds import default_epsilon, epsilon_corpol, epsilon_one_over_T

__all__ = ["ExperimentSpec", "Cell", "load_config", "spec_from_dict"]

FAMILIES = ("cross_entropy", "sum_univariate")
DIST_KINDS = ("random", "hard_lower_n", "hard_lower_t")
EPS_POLICIES = ("default", "one_over_T", "corpol_formula", "explicit")


@dataclass(frozen=True)
class Cell:
    index: int
    k: int
    T: int
    n: int


@dataclass(frozen=True)
class ExperimentSpec:
    ks: tuple
    Ts: tuple
    ns: tuple
    gamma: float
    loss_family: str = "cross_entropy"
    loss_alpha: float = 1.0
    variant: str = "quadratic-tail"
    tail_kind: str = "exponential"
    tail_alpha: float = 1.0
    dist_kind: str = "random"
    d: int = 20
    support_size: int = 2000
    dist_seed: int = 0
    pairing: str = "product"
    seed_count: int = 1
    base_seed: int = 0
    eps_policy: str = "default"
    eps_value: float | None = None
    side: str | None = None
    on_infeasible: str = "skip"
    label: str = "experiment"
    output: str = "results.csv"

    def __post_init__(self):
        for name in ("ks", "Ts", "ns"):
            vals = tuple(int(v) for v in getattr(self, name))
            if not vals:
                raise ConfigError(f"grid.{name[:-1]} must be nonempty")
            object.__setattr__(self, name, vals)
        if min(self.ks) < 2:
            raise ConfigError("grid.k values must be >= 2")
        if min(self.Ts) < 1 or min(self.ns) < 1:
            raise ConfigError("grid.T and grid.n values must be >= 1")
        if self.loss_family not in FAMILIES:
            raise ConfigError(f"loss.family must be one of {FAMILIES}, got {self.loss_family!r}")
        if self.dist_kind not in DIST_KINDS:
            raise ConfigError(f"distribution.kind must be one of {DIST_KINDS}, got {self.dist_kind!r}")
        if self.eps_policy not in EPS_POLICIES:
            raise ConfigError(f"epsilon.policy must be one of {EPS_POLICIES}, got {self.eps_policy!r}")
        if self.eps_policy == "explicit" and self.eps_value is None:
            raise ConfigError("epsilon.value is required for the explicit policy")
        if self.pairing not in ("product", "zip"):
            raise ConfigError(f"grid.pairing must be 'product' or 'zip', got {self.pairing!r}")
        if self.pairing == "zip" and len(self.Ts) != len(self.ns):
            raise ConfigError("grid.pairing = 'zip' needs T and n lists of equal length")
        if self.side not in (None, "upper", "lower"):
            raise ConfigError(f"feasibility.side must be 'upper' or 'lower', got {self.side!r}")
        if self.on_infeasible not in ("skip", "flag"):
            raise ConfigError(f"feasibility.on_infeasible must be 'skip' or 'flag', got {self.on_infeasible!r}")
        if self.seed_count < 1:
            raise ConfigError("seeds.count must be >= 1")
        if not 0 < self.gamma < 1:
            raise ConfigError(f"gamma must lie in (0, 1), got {self.gamma}")
        try:
            self.make_loss(self.ks[0])
        except TemplateGDError as err:
            raise ConfigError(f"invalid loss: {err}") from err

    @property
    def feasibility_side(self) -> str:
        if self.side is not None:
            return self.side
        return "upper" if self.dist_kind == "random" else "lower"

    def cells(self):
        if self.pairing == "zip":
            tn = list(zip(self.Ts, self.ns))
        else:
            tn = list(itertools.product(self.Ts, self.ns))
        combos = [(k, T, n) for k in self.ks for T, n in tn]
        return [Cell(i, k, T, n) for i, (k, T, n) in enumerate(combos)]

    def tail(self) -> TailFunction:
        if self.loss_family == "cross_entropy":
            return ExponentialTail(self.loss_alpha)
        return make_tail(self.tail_kind, self.tail_alpha)

    def make_loss(self, k: int) -> MulticlassLoss:
        if self.loss_family == "cross_entropy":
            return make_cross_entropy(k, self.loss_alpha)
        return make_sum_univariate(k, UnivariatePhi(self.tail(), self.variant))

    def epsilon(self, k, eta, T) -> float:
        tail = self.tail()
        if self.eps_policy == "explicit":
            return float(self.eps_value)
        if self.eps_policy == "one_over_T":
            return epsilon_one_over_T(T)
        if self.eps_policy == "corpol_formula":
            return float(min(epsilon_corpol(k, eta, self.gamma, T, tail.alpha), 0.25))
        return default_epsilon(tail, k, eta, self.gamma, T)

    def make_distribution(self, cell: Cell, eta: float, epsilon: float):
        if self.dist_kind == "random":
            seed = np.random.SeedSequence([self.dist_seed, cell.k])
            return make_random_separable(self.d, cell.k, self.gamma, self.support_size, seed)
        if self.dist_kind == "hard_lower_n":
            return make_hard_lower_n(self.gamma, cell.n, k=cell.k)
        return make_hard_lower_t(self.gamma, cell.k, cell.T, eta, epsilon, self.tail())

    def to_dict(self) -> dict:
        return asdict(self)


def _get(table, key, default=None, required=False, where=""):
    if key in table:
        return table[key]
    if required:
        raise ConfigError(f"missing required key {where}{key}")
    return default


def spec_from_dict(doc: dict) -> ExperimentSpec:
    """Validate a parsed TOML document and build the spec."""
    known = {"label", "output", "loss", "distribution", "grid", "gamma", "seeds", "epsilon", "feasibility"}
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    loss = _get(doc, "loss", required=True)
    dist = _get(doc, "distribution", required=True)
    grid = _get(doc, "grid", required=True)
    tail = loss.get("tail", {})
    seeds = doc.get("seeds", {})
    eps = doc.get("epsilon", {})
    feas = doc.get("feasibility", {})
    try:
        return ExperimentSpec(
            ks=tuple(_get(grid, "k", required=True, where="grid.")),
            Ts=tuple(_get(grid, "T", required=True, where="grid.")),
            ns=tuple(_get(grid, "n", required=True, where="grid.")),
            gamma=float(_get(doc, "gamma", required=True)),
            loss_family=_get(loss, "family", required=True, where="loss."),
            loss_alpha=float(loss.get("alpha", 1.0)),
            variant=loss.get("variant", "quadratic-tail"),
            tail_kind=tail.get("kind", "exponential"),
            tail_alpha=float(tail.get("alpha", 1.0)),
            dist_kind=_get(dist, "kind", required=True, where="distribution."),
            d=int(dist.get("d", 20)),
            support_size=int(dist.get("support_size", 2000)),
            dist_seed=int(dist.get("seed", 0)),
            pairing=grid.get("pairing", "product"),
            seed_count=int(seeds.get("count", 1)),
            base_seed=int(seeds.get("base", 0)),
            eps_policy=eps.get("policy", "default"),
            eps_value=eps.get("value"),
            side=feas.get("side"),
            on_infeasible=feas.get("on_infeasible", "skip"),
            label=str(doc.get("label", "experiment")),
            output=str(doc.get("output", "results.csv")),
        )
    except (TypeError, ValueError) as err:
        if isinstance(err, ConfigError):
            raise
        raise ConfigError(str(err)) from err


def load_config(path) -> ExperimentSpec:
    """Read and validate a TOML experiment file."""
    path = Path(path)
    try:
        with path.open("rb") as fh:
            doc = tomllib.load(fh)
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}") from err
    except tomllib.TOMLDecodeError as err:
        raise ConfigError(f"malformed config {path}: {err}") from err
    return spec_from_dict(doc)

