import json
import math
import subprocess
import sys

import pytest

from bmcx import cli


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def summary(capsys, *argv):
    code, out, err = run(capsys, *argv)
    assert code == 0, err
    return json.loads(out)


def check_schema(s):
    assert set(s) == set(cli.SUMMARY_FIELDS)
    for key, typ in cli.SUMMARY_FIELDS.items():
        assert isinstance(s[key], typ), key


def test_parse_valid_specs():
    ns = cli.parse_args(["exit-time", "--domain", "disk:0,0,1", "--start", "0,0", "--paths", "100000", "--seed", "42"])
    assert ns.paths == 100000 and ns.seed == 42 and ns.start == 0j
    ns = cli.parse_args(["loewner", "--driver", "sle", "--kappa", "2", "--T", "1", "--dt", "1e-4", "--out", "trace.csv"])
    assert ns.driver == "sle" and ns.kappa == 2 and ns.dt == 1e-4 and ns.out == "trace.csv"


def test_seed_from_environment(monkeypatch):
    monkeypatch.setenv("BMCX_SEED", "77")
    assert cli.parse_args(["green", "--kind", "disk", "--z", "0,0", "--w", "0.5,0"]).seed == 77
    monkeypatch.delenv("BMCX_SEED")
    assert cli.parse_args(["green", "--kind", "disk", "--z", "0,0", "--w", "0.5,0"]).seed == 0


def test_usage_errors(capsys):
    code, _, err = run(capsys, "exit-time", "--domain", "disk:0,0,-1")
    assert code == 2 and "radius must be positive" in err
    code, _, err = run(capsys, "exit-time", "--domain", "disk:0,0,1", "--bogus", "1")
    assert code == 2 and "--bogus" in err
    code, _, err = run(capsys, "exit-time", "--domain", "ellipse:1,2")
    assert code == 2 and "ellipse" in err
    # no abbreviations
    code, _, _ = run(capsys, "exit-time", "--domain", "disk:0,0,1", "--path", "10")
    assert code == 2
    code, _, err = run(capsys, "exit-time", "--domain", "disk:0,0,1", "--start", "3,0")
    assert code == 2 and "not inside" in err


def test_numeric_failure_exit_status(capsys):
    code, _, err = run(capsys, "exit-time", "--domain", "halfplane", "--start", "0,10", "--paths", "20",
                       "--max-steps", "3")
    assert code == 3 and "numeric failure" in err


def test_green_command(capsys):
    s = summary(capsys, "green", "--kind", "halfplane", "--z", "0,1", "--w", "0,2")
    check_schema(s)
    assert abs(s["mean"] - math.log(3) / math.pi) < 1e-12
    assert s["config"]["seed"] == 0


def test_exit_time_triangle(capsys):
    s = summary(capsys, "exit-time", "--domain", "triangle", "--start", "0,0", "--paths", "40000", "--seed", "3")
    check_schema(s)
    assert abs(s["mean"] - 1 / 6) <= 3 * s["stderr"]
    assert s["config"]["sim"]["boundary_tol"] == pytest.approx(1e-4 * math.sqrt(3))
    assert s["config"]["domain"] == "triangle"


@pytest.mark.parametrize("argv", [
    ["measure", "--domain", "disk:0,0,1", "--paths", "500", "--bins", "6"],
    ["measure", "--domain", "disk:0,0,1", "--paths", "500", "--method", "wos"],
    ["dirichlet", "--domain", "disk:0,0,1", "--start", "0.5,0", "--paths", "500", "--boundary", "cos(arg(z))"],
    ["occupation", "--domain", "disk:0,0,1", "--grid", "cell:0.5,0,0.1", "--paths", "500"],
    ["winding", "--n", "1", "--paths", "200"],
    ["loewner", "--driver", "zero", "--T", "1", "--dt", "1e-3", "--z", "1,1"],
    ["series", "--kind", "exit", "--coeffs", "2,1"],
    ["series", "--kind", "basel", "--n", "1000"],
    ["series", "--kind", "poisson", "--r", "0.5", "--form", "cosine"],
])
def test_every_summary_matches_schema(capsys, argv):
    check_schema(summary(capsys, *argv))


def test_series_values(capsys):
    assert summary(capsys, "series", "--kind", "exit", "--coeffs", "2,1")["mean"] == 2.5
    assert abs(summary(capsys, "series", "--kind", "arctan")["mean"] - math.pi**2 / 16) < 1e-6
    assert abs(summary(capsys, "series", "--kind", "basel")["mean"] - math.pi**2 / 6) < 1e-6


def test_dirichlet_rejects_unknown_names(capsys):
    code, _, err = run(capsys, "dirichlet", "--domain", "disk:0,0,1", "--paths", "10", "--boundary", "open('x')")
    assert code == 2 and "open" in err


def test_loewner_outputs(capsys, tmp_path):
    trace, drv = tmp_path / "trace.csv", tmp_path / "driver.csv"
    s = summary(capsys, "loewner", "--driver", "sle", "--kappa", "2", "--T", "1", "--dt", "1e-3",
                "--out", str(trace), "--driver-out", str(drv))
    assert trace.read_text().splitlines()[0] == "t,re,im"
    assert drv.read_text().splitlines()[0] == "t,lambda"
    assert s["count"] == len(trace.read_text().splitlines()) - 1
    s = summary(capsys, "loewner", "--z", "0,1", "--dt", "1e-3")
    assert "swallowed_at" in s["extra"]["g_T(z)"]


def test_csv_format_echoes_config(capsys):
    code, out, _ = run(capsys, "exit-time", "--domain", "disk:0,0,1", "--paths", "100", "--format", "csv")
    lines = out.splitlines()
    assert code == 0 and lines[0].startswith("# config ")
    cfg = json.loads(lines[0][len("# config "):])
    assert cfg["command"] == "exit-time" and cfg["seed"] == 0 and cfg["sim"]["n_paths"] == 100
    assert lines[1] == "mean,stderr,count,censored"


def test_csv_outputs_are_reproducible(capsys, tmp_path):
    files = []
    for i in range(2):
        f = tmp_path / f"run{i}.csv"
        summary(capsys, "exit-time", "--domain", "disk:0,0,1", "--paths", "700", "--seed", "9", "--out", str(f))
        files.append(f.read_bytes())
    assert files[0] == files[1]
    assert files[0].splitlines()[0] == b"path_id,exit_x,exit_y,exit_time,winding,sup_abs"
    assert len(files[0].splitlines()) == 701


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "bmcx.cli", "green", "--kind", "disk", "--z", "0,0", "--w", "0.5,0"],
                          capture_output=True, text=True, check=True)
    assert abs(json.loads(proc.stdout)["mean"] - math.log(2) / math.pi) < 1e-15
