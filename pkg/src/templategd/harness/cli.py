"""Command-line entry point: ``templategd {train,sweep,verify,rademacher,report}``.

Exit codes: 0 success, 1 a check failed, 2 usage or parameter error.
"""

from __future__ import annotations

import dataclasses
import functools
import json
import sys
from pathlib import Path

import click
import numpy as np

from ..datagen import make_hard_lower_n, make_random_separable, population_risk_exact, sample
from ..errors import TemplateGDError
from ..losses import UnivariatePhi, make_cross_entropy, make_sum_univariate, make_tail
from ..trainer import GDConfig, default_step_size, gd_run
from ..verify import RademacherQuery, format_table, rademacher_details, run_suite
from .config import load_config
from .report import emit_report
from .sweep import read_csv, run_sweep

__all__ = ["cli", "main", "run_cli"]

LOSSES = ("ce", "sum-quadratic", "sum-linear", "sum-raw")


def _usage_errors(fn):
    """Turn package parameter errors into click usage errors (exit code 2)."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except TemplateGDError as err:
            raise click.UsageError(str(err)) from err

    return wrapper


def _build_loss(name, k, alpha, tail_kind, tail_alpha):
    if name == "ce":
        return make_cross_entropy(k, alpha)
    variant = {"sum-quadratic": "quadratic-tail", "sum-linear": "linear-tail", "sum-raw": "raw"}[name]
    return make_sum_univariate(k, UnivariatePhi(make_tail(tail_kind, tail_alpha), variant))


def _loss_options(fn):
    opts = [
        click.option("--loss", type=click.Choice(LOSSES), default="ce", show_default=True),
        click.option("--alpha", type=float, default=1.0, show_default=True, help="cross-entropy temperature"),
        click.option("--tail", "tail_kind", type=click.Choice(["exponential", "polynomial"]), default="exponential", show_default=True),
        click.option("--tail-alpha", type=float, default=1.0, show_default=True),
        click.option("--k", type=click.IntRange(min=2), default=4, show_default=True, help="number of classes"),
        click.option("--d", type=click.IntRange(min=2), default=10, show_default=True),
        click.option("--gamma", type=float, default=0.125, show_default=True),
        click.option("--n", type=click.IntRange(min=1), default=200, show_default=True),
        click.option("--dist", type=click.Choice(["random", "hard_lower_n"]), default="random", show_default=True),
        click.option("--support-size", type=click.IntRange(min=2), default=500, show_default=True),
        click.option("--seed", type=int, default=0, show_default=True),
    ]
    for opt in reversed(opts):
        fn = opt(fn)
    return fn


def _build_data(k, d, gamma, n, dist, support_size, seed):
    if dist == "random":
        distribution = make_random_separable(d, k, gamma, support_size, seed=np.random.SeedSequence([seed, 0]))
    else:
        distribution = make_hard_lower_n(gamma, n, k=k)
    return distribution, sample(distribution, n, np.random.SeedSequence([seed, 1]))


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
def cli():
    """Gradient descent on template-defined multiclass losses."""


@cli.command()
@_loss_options
@click.option("--T", "T", type=click.IntRange(min=1), default=1000, show_default=True, help="iterations")
@click.option("--eta", type=float, default=None, help="step size (default 1/(6 beta k^(2/p)))")
@click.option("--record-every", type=click.IntRange(min=1), default=None)
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="write the trace CSV here")
@_usage_errors
def train(loss, alpha, tail_kind, tail_alpha, k, d, gamma, n, dist, support_size, seed, T, eta, record_every, out):
    """Single GD run; prints a trace summary."""
    mloss = _build_loss(loss, k, alpha, tail_kind, tail_alpha)
    distribution, data = _build_data(k, d, gamma, n, dist, support_size, seed)
    eta = default_step_size(mloss.beta, k, mloss.p) if eta is None else eta
    every = record_every or max(1, T // 10)
    trace = gd_run(mloss, data, GDConfig(eta, T, record_every=every))
    click.echo(f"loss={mloss.name} k={k} n={n} T={T} eta={eta:.6g}")
    click.echo(f"{'t':>8} {'||W||_F':>12} {'emp_risk':>12}")
    for t, nrm, risk in trace.iterates:
        click.echo(f"{t:>8} {nrm:>12.6g} {risk:>12.6g}")
    click.echo(f"population risk: {population_risk_exact(mloss, trace.final_W, distribution):.6g}")
    if out:
        trace.to_csv(out)
        click.echo(f"trace written to {out}")


@cli.command()
@click.option("--config", "config", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="CSV path (overrides the config)")
@click.option("--seed", type=int, default=None, help="base seed (overrides the config)")
@click.option("--quiet", is_flag=True)
@_usage_errors
def sweep(config, out, seed, quiet):
    """Run the sweep described by a TOML config."""
    spec = load_config(config)
    if seed is not None:
        spec = dataclasses.replace(spec, base_seed=seed)

    def progress(row):
        if not quiet:
            click.echo(f"k={row['k']} T={row['T']} n={row['n']} seed={row['seed']} "
                       f"pop_risk={row['pop_risk']:.4g} status={row['status']}")

    result = run_sweep(spec, out=out, progress=progress)
    click.echo(f"{len(result)} rows written to {result.path}")


@cli.command()
@click.option("--samples", type=click.IntRange(min=10), default=10_000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--T", "T", type=click.IntRange(min=2), default=5000, show_default=True, help="GD horizon of the trajectory checks")
@click.option("--quick", is_flag=True, help="k in {2, 4} and T = 500")
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="write reports as JSON")
@_usage_errors
def verify(samples, seed, T, quick, out):
    """Run the full checker suite; exit 1 on any failure."""
    ks = (2, 4) if quick else (2, 4, 8, 16)
    reports = run_suite(samples, seed, ks=ks, T=500 if quick else T)
    click.echo(format_table(reports))
    failed = [r for r in reports if r.status == "fail"]
    if out:
        Path(out).write_text(json.dumps([r.to_dict() for r in reports], indent=1))
    click.echo(f"{len(reports) - len(failed)}/{len(reports)} checks without failure")
    if failed:
        sys.exit(1)


@cli.command()
@_loss_options
@click.option("--B", "B", type=click.FloatRange(min=0), required=True, help="Frobenius radius")
@click.option("--r", "r", type=click.FloatRange(min=0), default=float("inf"), help="empirical-risk cap")
@click.option("--draws", type=click.IntRange(min=1), default=64, show_default=True)
@click.option("--restarts", type=click.IntRange(min=1), default=8, show_default=True)
@click.option("--steps", type=click.IntRange(min=1), default=200, show_default=True)
@click.option("--mode", type=click.Choice(["projection", "penalty"]), default="projection", show_default=True)
@click.option("--exact", is_flag=True, help="enumerate all sign patterns (n <= 4)")
@_usage_errors
def rademacher(loss, alpha, tail_kind, tail_alpha, k, d, gamma, n, dist, support_size, seed, B, r, draws, restarts, steps, mode, exact):
    """Estimate the localized empirical Rademacher complexity."""
    mloss = _build_loss(loss, k, alpha, tail_kind, tail_alpha)
    _, data = _build_data(k, d, gamma, n, dist, support_size, seed)
    q = RademacherQuery(mloss, data, B, r, draws=draws, restarts=restarts, ascent_steps=steps, mode=mode)
    est = rademacher_details(q, seed, exact=exact)
    kind = "exact" if est.exact else "monte carlo"
    click.echo(f"rademacher ({kind}): {est.value:.6g} +- {est.stderr:.2g}")
    if est.empty:
        click.echo("class is empty at this risk cap")
    for key, val in est.diagnostics.items():
        click.echo(f"  {key}: {val}")


@cli.command()
@click.argument("csvs", nargs=-1, required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(file_okay=False), default="report", show_default=True)
@click.option("--config", "config", type=click.Path(exists=True, dir_okay=False), default=None)
@_usage_errors
def report(csvs, out, config):
    """Summary table and log-log plots from one or more sweep CSVs."""
    spec = load_config(config) if config else None
    results = [read_csv(p) for p in csvs]
    for path in emit_report(results, spec, out):
        click.echo(str(path))


def main(argv=None):
    """Console-script entry point (exits the process)."""
    cli.main(args=argv, prog_name="templategd")


def run_cli(argv) -> int:
    """Run the CLI and return its exit code instead of exiting."""
    try:
        cli.main(args=list(argv), prog_name="templategd", standalone_mode=True)
    except SystemExit as exc:
        code = exc.code
        return code if isinstance(code, int) else (0 if code is None else 1)
    return 0


if __name__ == "__main__":
    main()
