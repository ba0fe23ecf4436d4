import json
from pathlib import Path

from templategd.harness.cli import run_cli

ROOT = Path(__file__).resolve().parents[1]


def test_train_prints_trace(capsys, tmp_path):
    out = tmp_path / "trace.csv"
    code = run_cli(["train", "--k", "3", "--d", "5", "--n", "30", "--T", "50", "--support-size", "40", "--out", str(out)])
    assert code == 0
    text = capsys.readouterr().out
    assert "population risk" in text and out.exists()


def test_usage_errors_exit_2(capsys):
    assert run_cli(["train", "--k", "1"]) == 2
    assert run_cli(["train", "--no-such-flag"]) == 2
    assert run_cli(["train", "--dist", "hard_lower_n", "--n", "10"]) == 2
    assert run_cli(["rademacher", "--B", "1", "--n", "8", "--exact"]) == 2


def test_sweep_and_report(tmp_path, capsys):
    csv_path = tmp_path / "smoke.csv"
    assert run_cli(["sweep", "--config", str(ROOT / "configs" / "smoke.toml"), "--out", str(csv_path), "--quiet"]) == 0
    assert csv_path.exists()
    assert run_cli(["report", str(csv_path), "--out", str(tmp_path / "rep")]) == 0
    assert (tmp_path / "rep" / "summary.csv").exists()


def test_rademacher_command(capsys):
    code = run_cli(["rademacher", "--k", "3", "--d", "4", "--n", "4", "--support-size", "20",
                    "--B", "2", "--r", "0.9", "--restarts", "2", "--steps", "30", "--exact"])
    assert code == 0
    assert "rademacher (exact)" in capsys.readouterr().out


def test_verify_quick(tmp_path, capsys):
    out = tmp_path / "reports.json"
    code = run_cli(["verify", "--quick", "--samples", "500", "--out", str(out)])
    assert code == 0
    reports = json.loads(out.read_text())
    assert reports and all(r["status"] != "fail" for r in reports)
