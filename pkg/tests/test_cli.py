import contextlib
import csv
import io
import json
import math
import subprocess
import sys

import pytest

from chlab import cli

P_ARGS = ["--alpha", "0.3", "--beta", "0.2", "--lambda", "0.2"]

PARAMS_GOLDEN = (
    "alpha,beta,lambda,kappa,p_minus,p_plus,q_minus,q_plus,error\n"
    "0.3,0.2,0.2,0.7,1.4285714285714286,2.0000000000000004,2.5,5.0,\n"
)


def run_cli(argv):
    buf = io.StringIO()
    with contextlib.redirect_stdout(buf):
        code = cli.main(list(argv))
    return code, buf.getvalue()


def test_params_golden_output():
    code, out = run_cli(["params", *P_ARGS])
    assert code == 0
    assert out == PARAMS_GOLDEN


def test_runs_are_byte_identical(tmp_path):
    args = ["sweep", *P_ARGS, "--f", "f0", "--p-list", "1.6,1.8"]
    f1 = tmp_path / "a.csv"
    f2 = tmp_path / "b.csv"
    assert run_cli(args + ["--output", str(f1)])[0] == 0
    assert run_cli(args + ["--output", str(f2)])[0] == 0
    b1 = f1.read_bytes()
    assert b1 == f2.read_bytes()
    assert b1  # non-empty
    # file content equals what would have been printed
    code, out = run_cli(args)
    assert out.encode() == b1


def test_exit_code_contract():
    # 2: configuration problems, before any computation
    assert run_cli([])[0] == 2
    assert run_cli(["params", *P_ARGS, "--max-nodes", "8"])[0] == 2
    # 3: domain errors such as an impossible evaluation point
    assert run_cli(["apply", *P_ARGS, "--f", "f0", "--x", "-1"])[0] == 3
    assert run_cli(["params", "--alpha", "1.5", "--beta", "0.2",
                    "--lambda", "0.2"])[0] == 3
    # 4: quadrature starved of nodes
    assert run_cli(["apply", *P_ARGS, "--f", "powerlog:-0.4:0.3",
                    "--x", "0.3", "--max-nodes", "16"])[0] == 4
    # 5: a provably divergent quantity was requested pointwise
    assert run_cli(["norm", *P_ARGS, "--f", "f0", "--p", "1.2"])[0] == 5


def test_apply_csv_values():
    code, out = run_cli(["apply", *P_ARGS, "--f", "f0", "--x", "3.7"])
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 1
    assert float(rows[0]["value"]) == pytest.approx(0.9699884603140607,
                                                    rel=1e-9)
    assert rows[0]["error"] == ""
    assert "nan" not in out


def test_x_grid_is_geometric():
    code, out = run_cli(["apply", *P_ARGS, "--f", "f0",
                         "--x-grid", "1:100:3"])
    assert code == 0
    xs = [float(r["x"]) for r in csv.DictReader(io.StringIO(out))]
    assert xs == pytest.approx([1.0, 10.0, 100.0], rel=1e-12)


def test_sweep_annotates_failed_points_and_continues():
    code, out = run_cli(["sweep", *P_ARGS, "--f", "f0",
                         "--p-list", "1.2,1.8"])
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert rows[0]["error"] != ""
    assert rows[0]["ratio"] == ""  # NaN renders as an empty cell
    assert rows[1]["error"] == ""
    assert float(rows[1]["ratio"]) > 0


def test_json_envelope():
    code, out = run_cli(["sweep", *P_ARGS, "--f", "f0",
                         "--p-list", "1.2,1.8", "--format", "json"])
    assert code == 0
    doc = json.loads(out)  # would fail on bare NaN/Infinity tokens
    assert sorted(doc) == ["config", "errors", "results", "version"]
    assert doc["config"]["alpha"] == 0.3
    assert doc["results"][0]["ratio"] is None
    assert doc["results"][0]["error"].startswith("RangeError")
    assert doc["results"][1]["ratio"] > 0


def test_config_file_defaults_and_precedence(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"alpha": 0.5, "beta": 0.1, "lam": 0.1}))
    code, out = run_cli(["params", "--config", str(cfg)])
    assert code == 0
    row = next(csv.DictReader(io.StringIO(out)))
    assert float(row["alpha"]) == 0.5
    # explicit flags win over the file
    code, out = run_cli(["params", "--config", str(cfg), "--alpha", "0.3"])
    row = next(csv.DictReader(io.StringIO(out)))
    assert float(row["alpha"]) == 0.3
    assert float(row["beta"]) == 0.1
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"alhpa": 0.5}))
    assert run_cli(["params", "--config", str(bad)])[0] == 2


def test_plot_renders_png(tmp_path):
    png = tmp_path / "fig.png"
    code, _ = run_cli(["apply", *P_ARGS, "--f", "f0", "--x-grid", "1:50:8",
                       "--plot", str(png)])
    assert code == 0
    blob = png.read_bytes()
    assert blob[:8] == b"\x89PNG\r\n\x1a\n"
    assert len(blob) > 1000


def test_env_var_overrides_node_budget(monkeypatch):
    monkeypatch.setenv("CHLAB_MAX_NODES", "16")
    code, _ = run_cli(["apply", *P_ARGS, "--f", "powerlog:-0.4:0.3",
                       "--x", "0.3"])
    assert code == 4
    monkeypatch.delenv("CHLAB_MAX_NODES")
    code, _ = run_cli(["apply", *P_ARGS, "--f", "powerlog:-0.4:0.3",
                       "--x", "0.3"])
    assert code == 0


def test_gls_norm_natural_psi_via_json():
    psi = json.dumps({
        "kind": "natural", "support": [1.5, 1.9],
        "f": {"pieces": [{"lo": 0.0, "hi": 1.0, "a": 0.0,
                          "theta": 0.0, "c": 1.0}]}})
    code, out = run_cli(["gls-norm", *P_ARGS, "--f", "indicator",
                         "--psi-json", psi])
    assert code == 0
    row = next(csv.DictReader(io.StringIO(out)))
    assert float(row["value"]) == pytest.approx(1.0, rel=1e-8)
    # the natural kind cannot be spelled inline: it needs a function
    assert run_cli(["gls-norm", *P_ARGS, "--f", "indicator",
                    "--psi-kind", "natural", "--A", "1.5",
                    "--B", "1.9"])[0] == 2


def test_fit_blowup_reports_rate():
    code, out = run_cli(["fit-blowup", *P_ARGS, "--f", "f0",
                         "--p-near-pminus", "4", "--format", "json"])
    assert code == 0
    doc = json.loads(out)
    fit = doc["results"][-1]
    assert fit["kind"] == "fit"
    assert fit["fitted_exponent"] == pytest.approx(-0.6936220931, rel=1e-6)


def test_hardy_check_table():
    code, out = run_cli(["hardy-check", "--weight", "s1", "--f", "indicator",
                         "--p-list", "1.5,2.0"])
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [r["within_bound"] for r in rows] == ["true", "true"]
    assert float(rows[1]["ratio"]) == pytest.approx(math.sqrt(2.0), rel=1e-9)
    assert float(rows[1]["upper_bound"]) == pytest.approx(4.0, rel=1e-12)


def test_norm_success_row():
    code, out = run_cli(["norm", *P_ARGS, "--f", "f0", "--p", "1.6"])
    assert code == 0
    row = next(csv.DictReader(io.StringIO(out)))
    assert float(row["norm"]) == pytest.approx(0.12 ** -0.625, rel=1e-12)


def test_verify_scaling_rows():
    code, out = run_cli(["verify-scaling", *P_ARGS, "--f", "f0",
                         "--p", "1.6", "--gamma-list", "0.5,2"])
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [float(r["gamma"]) for r in rows] == [0.5, 2.0]
    for r in rows:
        assert float(r["rel_dev_image"]) < 1e-10
        # dilation moves source and image norms by the same factor here:
        # the exponent identity ties 1/p to kappa - 1 - 1/q
        assert float(r["predicted_norm_factor"]) == pytest.approx(
            float(r["predicted_image_factor"]), rel=1e-14)


def test_conjugate_sweep_smoke():
    # default p-list walks toward the upper window edge; the trailing row
    # carries the fitted blow-up rate
    code, out = run_cli(["conjugate-sweep", *P_ARGS])
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    points = [r for r in rows if r["kind"] == "point"]
    assert len(points) == 4
    assert all(float(r["ratio"]) <= float(r["upper_bound"]) for r in points)
    assert float(rows[-1]["fitted_exponent"]) == pytest.approx(-0.70221707,
                                                               rel=1e-6)
    # too few points for the fit is a reported failure, not a silent one
    assert run_cli(["conjugate-sweep", *P_ARGS,
                    "--p-list", "1.9,1.99"])[0] == 4


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "chlab.cli", "--version"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.strip().count(".") == 2  # semantic version string
