"""Sweep execution over the (k, T, n) grid with CSV persistence.

CSV layout (schema version 1): a comment line
``# schema_version=1 label=... base_seed=... loss=...``, then a header row

    schema_version,k,T,n,gamma,seed,eta,emp_risk,pop_risk,frob_norm,bound_opt,bound_gen,status

and one row per (cell, seed) in cell order. Floats are written with
``repr`` so values round-trip exactly. ``status`` is ``ok``,
``flagged:infeasible`` (ran outside the feasibility region on request),
``skipped:infeasible`` or ``error:<exception type>``. Wall-clock times go to a
sidecar ``<name>.timing.csv`` so the main file is byte-reproducible.

Per-(cell, seed) randomness comes from
``SeedSequence([base_seed, cell_index, seed_index])``.
"""

from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..datagen import population_risk_exact, sample
from ..errors import ConfigError, TemplateGDError
from ..trainer import GDConfig, default_step_size, gd_run
from ..verify.bounds import BoundInputs, bound_values, epsilon_feasible
from .config import ExperimentSpec

__all__ = ["SCHEMA_VERSION", "COLUMNS", "SweepResult", "run_sweep", "read_csv", "write_csv"]

SCHEMA_VERSION = 1
COLUMNS = (
    "schema_version", "k", "T", "n", "gamma", "seed", "eta",
    "emp_risk", "pop_risk", "frob_norm", "bound_opt", "bound_gen", "status",
)
_INT_COLS = {"schema_version", "k", "T", "n", "seed"}
_FLOAT_COLS = {"gamma", "eta", "emp_risk", "pop_risk", "frob_norm", "bound_opt", "bound_gen"}
NAN = float("nan")


@dataclass
class SweepResult:
    """Rows of a sweep (dicts keyed by ``COLUMNS``) plus provenance."""

    rows: list = field(default_factory=list)
    label: str = "experiment"
    meta: dict = field(default_factory=dict)
    path: Path | None = None

    def ok_rows(self):
        return [r for r in self.rows if r["status"] in ("ok", "flagged:infeasible")]

    def __len__(self):
        return len(self.rows)


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _header_line(label, meta) -> str:
    parts = [f"schema_version={SCHEMA_VERSION}", f"label={str(label).replace(' ', '_')}"]
    parts += [f"{k}={v}" for k, v in meta.items()]
    return "# " + " ".join(parts) + "\n"


def _row_line(row) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerow([_fmt(row[c]) for c in COLUMNS])
    return buf.getvalue()


def write_csv(result: SweepResult, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        fh.write(_header_line(result.label, result.meta))
        fh.write(",".join(COLUMNS) + "\n")
        for row in result.rows:
            fh.write(_row_line(row))
    return path


def _parse_header(line: str):
    label, meta = "experiment", {}
    for token in line.lstrip("#").split():
        if "=" in token:
            key, val = token.split("=", 1)
            if key == "label":
                label = val
            elif key != "schema_version":
                meta[key] = val
    return label, meta


def read_csv(path) -> SweepResult:
    """Load a sweep CSV written by ``write_csv`` or ``run_sweep``."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as err:
        raise ConfigError(f"cannot read {path}: {err}") from err
    lines = text.splitlines()
    label, meta = "experiment", {}
    body = []
    for line in lines:
        if line.startswith("#"):
            label, meta = _parse_header(line)
        elif line.strip():
            body.append(line)
    if not body:
        raise ConfigError(f"{path} has no header row")
    reader = csv.DictReader(body)
    if tuple(reader.fieldnames or ()) != COLUMNS:
        raise ConfigError(f"{path}: unexpected columns {reader.fieldnames}")
    rows = []
    for raw in reader:
        row = {}
        for c in COLUMNS:
            v = raw[c]
            if c in _INT_COLS:
                row[c] = int(v)
            elif c in _FLOAT_COLS:
                row[c] = float(v) if v else NAN
            else:
                row[c] = v
        rows.append(row)
    return SweepResult(rows, label, meta, path)


def _cell_rows(spec: ExperimentSpec, cell, dist_cache):
    """Yield ``(row, wall_time)`` for every seed of one cell."""
    loss = spec.make_loss(cell.k)
    eta = default_step_size(loss.beta, cell.k, loss.p)
    eps = spec.epsilon(cell.k, eta, cell.T)
    inputs = BoundInputs(
        rho=loss.tail, beta=loss.beta, p=loss.p, k=cell.k, gamma=spec.gamma,
        T=cell.T, n=cell.n, eta=eta, epsilon=min(eps, 0.5),
    )
    base = {
        "schema_version": SCHEMA_VERSION, "k": cell.k, "T": cell.T, "n": cell.n,
        "gamma": float(spec.gamma), "eta": float(eta),
    }
    blank = {"emp_risk": NAN, "pop_risk": NAN, "frob_norm": NAN, "bound_opt": NAN, "bound_gen": NAN}
    feasible = epsilon_feasible(inputs, spec.feasibility_side)
    status = "ok" if feasible else "flagged:infeasible"
    if not feasible and spec.on_infeasible == "skip":
        for s in range(spec.seed_count):
            yield {**base, "seed": s, **blank, "status": "skipped:infeasible"}, 0.0
        return
    terms = bound_values(inputs)
    try:
        key = (cell.k, cell.T if spec.dist_kind == "hard_lower_t" else None,
               cell.n if spec.dist_kind == "hard_lower_n" else None)
        if key not in dist_cache:
            dist_cache[key] = spec.make_distribution(cell, eta, eps)
        dist = dist_cache[key]
    except TemplateGDError as err:
        for s in range(spec.seed_count):
            yield {**base, "seed": s, **blank, "status": f"error:{type(err).__name__}"}, 0.0
        return
    for s in range(spec.seed_count):
        t0 = time.perf_counter()
        try:
            ss = np.random.SeedSequence([spec.base_seed, cell.index, s])
            data = sample(dist, cell.n, ss)
            trace = gd_run(loss, data, GDConfig(eta, cell.T, record_every=cell.T))
            row = {
                **base, "seed": s,
                "emp_risk": trace.final_risk,
                "pop_risk": float(population_risk_exact(loss, trace.final_W, dist)),
                "frob_norm": float(trace.frob_norm[-1]),
                "bound_opt": terms.opt, "bound_gen": terms.gen,
                "status": status,
            }
        except TemplateGDError as err:
            row = {**base, "seed": s, **blank, "status": f"error:{type(err).__name__}"}
        yield row, time.perf_counter() - t0


def run_sweep(spec: ExperimentSpec, out=None, progress=None) -> SweepResult:
    """Run every (cell, seed) of ``spec``; rows are appended to ``out`` as they finish.

    Args:
        spec: validated experiment.
        out: CSV path (defaults to ``spec.output``; ``False`` keeps results in memory).
        progress: optional callable receiving each finished row.
    """
    meta = {"base_seed": spec.base_seed, "loss": spec.make_loss(spec.ks[0]).name.replace(" ", "")}
    result = SweepResult([], spec.label, meta)
    path = None if out is False else Path(out if out is not None else spec.output)
    fh = tfh = None
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        fh = path.open("w", newline="")
        fh.write(_header_line(spec.label, meta))
        fh.write(",".join(COLUMNS) + "\n")
        tfh = path.with_suffix(".timing.csv").open("w", newline="")
        tfh.write("k,T,n,seed,wall_time\n")
        result.path = path
    dist_cache = {}
    try:
        for cell in spec.cells():
            for row, wall in _cell_rows(spec, cell, dist_cache):
                result.rows.append(row)
                if fh is not None:
                    fh.write(_row_line(row))
                    fh.flush()
                    tfh.write(f"{row['k']},{row['T']},{row['n']},{row['seed']},{wall:.6f}\n")
                if progress is not None:
                    progress(row)
    finally:
        if fh is not None:
            fh.close()
            tfh.close()
    return result


def seed_means(result: SweepResult, axis: str, y: str = "pop_risk"):
    """Seed-averaged ``y`` per distinct value of ``axis`` with standard errors."""
    groups = {}
    for row in result.ok_rows():
        v = row[y]
        if isinstance(v, float) and math.isnan(v):
            continue
        groups.setdefault(row[axis], []).append(v)
    xs = sorted(groups)
    means = np.array([np.mean(groups[x]) for x in xs])
    ses = np.array([np.std(groups[x], ddof=1) / math.sqrt(len(groups[x])) if len(groups[x]) > 1 else 0.0 for x in xs])
    return np.array(xs, dtype=float), means, ses
