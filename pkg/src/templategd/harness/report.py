"""Summary tables and log-log plots from one or more sweep results.

Plots are SVG with a fixed hash salt and no date stamp, so regenerating a
report from the same CSVs reproduces every byte.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from ..errors import ConfigError, FitError  # noqa: E402
from .scaling import AXES, fit_loglog  # noqa: E402
from .sweep import SweepResult, seed_means  # noqa: E402

__all__ = ["emit_report", "SUMMARY_COLUMNS"]

SUMMARY_COLUMNS = (
    "label", "axis", "n_points", "slope", "slope_stderr",
    "median_bound_ratio", "max_bound_ratio", "rows_ok", "rows_other",
)

_RC = {
    "svg.hashsalt": "templategd",
    "svg.fonttype": "path",
    "figure.figsize": (5.0, 3.6),
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 9,
}


def _varying_axes(result: SweepResult):
    rows = result.ok_rows()
    return [a for a in AXES if len({r[a] for r in rows}) >= 2]


def _bound_ratios(result: SweepResult):
    """Observed population risk over the order-level bound (constant 1)."""
    out = []
    for r in result.ok_rows():
        bound = r["bound_opt"] + r["bound_gen"]
        if bound > 0 and not math.isnan(r["pop_risk"]):
            out.append(r["pop_risk"] / bound)
    return np.array(out)


def _summary_rows(results):
    rows = []
    for res in results:
        ratios = _bound_ratios(res)
        med = float(np.median(ratios)) if ratios.size else float("nan")
        mx = float(np.max(ratios)) if ratios.size else float("nan")
        n_ok = len(res.ok_rows())
        n_other = len(res.rows) - n_ok
        for axis in _varying_axes(res):
            xs, means, _ = seed_means(res, axis)
            try:
                fit = fit_loglog(xs, means)
                slope, se, npts = fit.slope, fit.stderr, fit.n_points
            except FitError:
                slope, se, npts = float("nan"), float("nan"), len(xs)
            rows.append([res.label, axis, npts, slope, se, med, mx, n_ok, n_other])
    return rows


def _plot_axis(results, axis, path):
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        for res in results:
            xs, means, ses = seed_means(res, axis)
            keep = means > 0
            if keep.sum() == 0:
                continue
            ax.errorbar(xs[keep], means[keep], yerr=ses[keep], marker="o", ms=3, capsize=2, label=res.label)
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.set_xlabel(axis)
        ax.set_ylabel("population risk (seed mean)")
        ax.set_title(f"risk vs {axis}")
        ax.legend(fontsize=8)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)


def emit_report(results, spec=None, outdir="report") -> list[Path]:
    """Write ``summary.csv``, ``summary.txt`` and one ``risk_vs_<axis>.svg`` per varying axis.

    Args:
        results: a ``SweepResult`` or a list of them; several results share
            each plot (one curve per label).
        spec: optional experiment spec, recorded in the text summary.
        outdir: output directory (created if missing).

    Returns:
        Paths of all files written.

    Raises:
        ConfigError: the output directory cannot be written (path included).
    """
    if isinstance(results, SweepResult):
        results = [results]
    outdir = Path(outdir)
    try:
        outdir.mkdir(parents=True, exist_ok=True)
    except OSError as err:
        raise ConfigError(f"cannot create report directory {outdir}: {err}") from err
    rows = _summary_rows(results)
    written = []
    summary = outdir / "summary.csv"
    try:
        with summary.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(SUMMARY_COLUMNS)
            for row in rows:
                w.writerow([repr(v) if isinstance(v, float) else v for v in row])
        written.append(summary)
        text = outdir / "summary.txt"
        lines = []
        if spec is not None:
            lines.append(f"spec: {spec.label}")
        lines.append(f"{'label':<28} {'axis':<4} {'slope':>9} {'+-':>8} {'median L/bound':>15}")
        for label, axis, _, slope, se, med, *_ in rows:
            lines.append(f"{label:<28} {axis:<4} {slope:>9.4f} {se:>8.4f} {med:>15.4g}")
        text.write_text("\n".join(lines) + "\n")
        written.append(text)
        axes = sorted({a for res in results for a in _varying_axes(res)}, key=AXES.index)
        for axis in axes:
            path = outdir / f"risk_vs_{axis}.svg"
            _plot_axis(results, axis, path)
            written.append(path)
    except OSError as err:
        raise ConfigError(f"cannot write report files in {outdir}: {err}") from err
    return written
