"""CLI checks for the fitted (main) method; they need the desk-scale dataset
and model files, whose paths arrive via environment variables."""

import os
import subprocess

import pytest

CLI = os.environ.get("VGPRICER_CLI")
DATASET = os.environ.get("VGPRICER_DATASET")
MODELS = os.environ.get("VGPRICER_MODELS")

pytestmark = pytest.mark.skipif(
    not (CLI and DATASET and MODELS and os.path.exists(DATASET) and os.path.exists(MODELS)),
    reason="fitted-method fixtures not available",
)


def run(*args, timeout=600):
    return subprocess.run([CLI, *args], capture_output=True, text=True, timeout=timeout)


def test_main_method_reference_price():
    res = run(
        "price", "--method", "main", "--r", "0.05", "--q", "0.01",
        "--T", "0.083333333333333329", "--sigma", "0.4", "--nu", "0.1", "--theta=-0.1",
        "--spot", "2900", "--strike", "3000", "--dataset", DATASET, "--model", MODELS,
    )
    assert res.returncode == 0, res.stderr
    assert abs(float(res.stdout.strip()) - 170.459) <= 1.0
    # fit diagnostics go to the diagnostic stream, not stdout
    assert "lambda=" in res.stderr and "x_star=" in res.stderr and "loss=" in res.stderr
    assert len(res.stdout.strip().splitlines()) == 1


def test_main_method_bench_column(tmp_path):
    out = tmp_path / "main_report.txt"
    res = run(
        "bench", "--tables", "2", "--methods", "main,euro", "--reps", "1",
        "--dataset", DATASET, "--model", MODELS, "--out", str(out),
    )
    assert res.returncode == 0, res.stderr
    lines = out.read_text().splitlines()
    assert lines[0] == "vgbench.v1"
    rows = [l.split("\t") for l in lines if l.startswith("row\t")]
    assert len(rows) == 12
    for f in rows:
        main_px, euro_px = float(f[10]), float(f[11])
        assert main_px >= euro_px - 1e-6  # American at least European
        assert main_px >= max(0.0, float(f[9]) - float(f[8])) - 1e-6  # and intrinsic
