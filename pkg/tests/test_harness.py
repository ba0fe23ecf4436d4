import math
from pathlib import Path

import numpy as np
import pytest

from templategd import ConfigError, FitError
from templategd.harness import (
    COLUMNS,
    ExperimentSpec,
    SweepResult,
    emit_report,
    fit_loglog,
    fit_scaling,
    load_config,
    read_csv,
    run_sweep,
    spec_from_dict,
    write_csv,
)

ROOT = Path(__file__).resolve().parents[1]

TINY = {
    "label": "tiny run",
    "gamma": 0.125,
    "loss": {"family": "cross_entropy"},
    "distribution": {"kind": "random", "d": 6, "support_size": 40},
    "grid": {"k": [2, 3], "T": [20, 40], "n": [15]},
    "seeds": {"count": 2, "base": 3},
}


def test_log_slope_oracle():
    # y = x^0.5 on powers of two must give slope 0.5 exactly
    x = 2.0 ** np.arange(2, 7)
    assert fit_loglog(x, x**0.5).slope == pytest.approx(0.5, abs=1e-12)
    fit = fit_loglog(x, 3 * x**-1.0)
    assert fit.slope == pytest.approx(-1.0, abs=1e-12) and fit.stderr == pytest.approx(0.0, abs=1e-12)


def test_fit_errors():
    with pytest.raises(FitError):
        fit_loglog([1, 2], [1, 2])
    with pytest.raises(FitError):
        fit_loglog([1, 2, 4], [1, 0, 2])


def test_all_shipped_configs_load():
    for path in sorted((ROOT / "configs").glob("*.toml")):
        spec = load_config(path)
        assert spec.cells()


def test_config_validation():
    with pytest.raises(ConfigError):
        spec_from_dict({**TINY, "bogus": 1})
    with pytest.raises(ConfigError):
        spec_from_dict({**TINY, "grid": {"k": [1], "T": [1], "n": [1]}})
    with pytest.raises(ConfigError):
        spec_from_dict({**TINY, "grid": {"k": [2], "T": [1, 2], "n": [1], "pairing": "zip"}})
    with pytest.raises(ConfigError):
        spec_from_dict({k: v for k, v in TINY.items() if k != "loss"})
    with pytest.raises(ConfigError):
        load_config(ROOT / "does_not_exist.toml")


def test_zip_pairing_and_feasibility_side():
    spec = spec_from_dict({**TINY, "distribution": {"kind": "hard_lower_n"},
                           "grid": {"k": [2], "T": [50, 60], "n": [50, 60], "pairing": "zip"}})
    assert [(c.T, c.n) for c in spec.cells()] == [(50, 50), (60, 60)]
    assert spec.feasibility_side == "lower"


def test_sweep_round_trip_and_determinism(tmp_path):
    spec = spec_from_dict({**TINY, "feasibility": {"on_infeasible": "flag"}})
    a = run_sweep(spec, out=tmp_path / "a.csv")
    b = run_sweep(spec, out=tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert (tmp_path / "a.timing.csv").exists()
    assert len(a) == 2 * 2 * 2
    back = read_csv(tmp_path / "a.csv")
    assert back.label == "tiny_run"
    for r1, r2 in zip(a.rows, back.rows):
        for c in COLUMNS:
            assert r1[c] == r2[c] or (isinstance(r1[c], float) and math.isnan(r1[c]) and math.isnan(r2[c]))
    write_csv(back, tmp_path / "c.csv")
    assert (tmp_path / "c.csv").read_bytes() == (tmp_path / "a.csv").read_bytes()


def test_infeasible_cells_are_skipped():
    spec = spec_from_dict({**TINY, "distribution": {"kind": "hard_lower_n"},
                           "grid": {"k": [2], "T": [5], "n": [40]}})
    res = run_sweep(spec, out=False)
    assert {r["status"] for r in res.rows} == {"skipped:infeasible"}


def test_construction_errors_become_status_rows():
    spec = spec_from_dict({**TINY, "distribution": {"kind": "hard_lower_n"},
                           "grid": {"k": [2], "T": [50], "n": [10]},
                           "feasibility": {"on_infeasible": "flag"}})
    res = run_sweep(spec, out=False)
    assert {r["status"] for r in res.rows} == {"error:ParameterError"}


def test_fit_scaling_and_report(tmp_path):
    spec = spec_from_dict({**TINY, "grid": {"k": [2], "T": [10, 20, 40, 80], "n": [30]}})
    res = run_sweep(spec, out=tmp_path / "s.csv")
    fit = fit_scaling(res, "T")
    assert fit.slope < 0
    with pytest.raises(FitError):
        fit_scaling(res, "n")
    files = emit_report([res], spec, tmp_path / "rep")
    names = sorted(p.name for p in files)
    assert names == ["risk_vs_T.svg", "summary.csv", "summary.txt"]
    first = [p.read_bytes() for p in files]
    again = [p.read_bytes() for p in emit_report([res], spec, tmp_path / "rep")]
    assert first == again


def test_report_rejects_unwritable_dir(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(ConfigError):
        emit_report(SweepResult([], "x"), None, blocker / "sub")


def _rows(xs, ys, axis="k"):
    base = {"schema_version": 1, "k": 4, "T": 100, "n": 100, "gamma": 0.125, "seed": 0, "eta": 0.1,
            "emp_risk": 0.0, "frob_norm": 1.0, "bound_opt": 1.0, "bound_gen": 1.0, "status": "ok"}
    return [{**base, axis: x, "pop_risk": y} for x, y in zip(xs, ys)]


def test_fit_scaling_synthetic_rows():
    xs = [4, 8, 16, 32, 64]
    assert fit_scaling(_rows(xs, [0.3 * x for x in xs]), "k").slope == pytest.approx(1.0, abs=1e-6)
    assert fit_scaling(_rows(xs, [0.2] * 5), "k").slope == pytest.approx(0.0, abs=1e-12)
    # c log x over powers of two from 4 to 64 regresses to 0.3907, not below 0.35
    s = fit_scaling(_rows(xs, [0.5 * math.log(x) for x in xs]), "k").slope
    assert s == pytest.approx(0.39070, abs=5e-5)


def test_empty_result_gives_header_only_report(tmp_path):
    files = emit_report(SweepResult([], "empty"), None, tmp_path / "rep")
    assert [p.name for p in files] == ["summary.csv", "summary.txt"]
    assert (tmp_path / "rep" / "summary.csv").read_text().count("\n") == 1


def test_two_results_share_one_plot(tmp_path):
    a = SweepResult(_rows([4, 8, 16], [0.1, 0.2, 0.4]), "p2_hard")
    b = SweepResult(_rows([4, 8, 16], [0.1, 0.11, 0.12]), "ce")
    files = emit_report([a, b], None, tmp_path)
    svg = (tmp_path / "risk_vs_k.svg").read_text()
    assert svg.count("<g id=\"line2d_") >= 2
    assert len([p for p in files if p.suffix == ".svg"]) == 1
