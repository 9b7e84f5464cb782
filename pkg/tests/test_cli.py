"""End-to-end runs of the command line interface (subprocess level)."""

import json
import subprocess
import sys

import pytest

FRACTIONAL = """\
[kernel]
variant = fractional
alpha = 0.6

[measure]
n_atoms = 12

[driver]
beta = -0.3
sigma = 0.25
jumps = exponential
theta = 4.0
eta = 1.0

[grid]
dt = 0.01
steps = 100

[mc]
paths = 2048
seed = 7
u = -1.0, -0.5
t = 0.5, 1.0
n = 2, 4
w = 1.0
eps = 0.05
"""

EXPSUM = """\
[kernel]
variant = expsum
atoms = 0.5:1.0

[initial]
lambda0 = 1.0

[driver]
beta = 0.0
sigma = 0.4

[grid]
dt = 0.01
steps = 100

[mc]
paths = 4096
seed = 11
u = -1.0
t = 1.0
n = 2, 4
"""

BIASED = """\
[kernel]
variant = expsum
atoms = 0.0:0.5

[initial]
lambda0 = 1.0

[driver]
beta = -0.5
sigma = 0.6

[grid]
dt = 0.25
steps = 4

[mc]
paths = 65536
seed = 5
u = -2.0
t = 1.0
"""


def run_cli(tmp_path, *argv):
    cmd = [sys.executable, "-m", "volterra_lift", *argv]
    return subprocess.run(cmd, cwd=tmp_path, capture_output=True, text=True)


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return name


def load(tmp_path, rel):
    with open(tmp_path / rel) as f:
        return json.load(f)


def test_price_outputs(tmp_path):
    cfg = write(tmp_path, "m.ini", FRACTIONAL)
    res = run_cli(tmp_path, "price", "--config", cfg, "--out", "o")
    assert res.returncode == 0, res.stderr
    price = load(tmp_path, "o/price.json")
    assert 0.0 < price["value_lifted"] <= 1.0
    assert price["abs_diff"] < 1e-2
    sweep = (tmp_path / "o/transform_sweep.csv").read_text().splitlines()
    assert sweep[0] == "u,t,value_volterra,value_lifted,abs_diff"
    assert len(sweep) == 5  # 2 u values x 2 t values
    manifest = load(tmp_path, "o/run_manifest.json")
    for key in ("command", "config_sha256", "seed", "package_version",
                "python_version", "numpy_version", "scipy_version",
                "wall_time_s", "backend", "threads"):
        assert key in manifest
    assert manifest["command"] == "price"
    # the resolved config parses back to the same hash
    res2 = run_cli(tmp_path, "price", "--config", "o/resolved_config.ini",
                   "--out", "o2")
    assert res2.returncode == 0
    assert load(tmp_path, "o2/run_manifest.json")["config_sha256"] == \
        manifest["config_sha256"]


def test_simulate_path_csv(tmp_path):
    cfg = write(tmp_path, "m.ini", FRACTIONAL)
    res = run_cli(tmp_path, "simulate", "--config", cfg, "--out", "s")
    assert res.returncode == 0, res.stderr
    lines = (tmp_path / "s/path.csv").read_text().splitlines()
    assert lines[0] == "t,V"
    assert len(lines) == 102  # header + 101 nodes
    summary = load(tmp_path, "s/summary.json")
    assert summary["scheme"] == "hybrid"

    cfg2 = write(tmp_path, "mc.ini", FRACTIONAL + "record_coords = true\n")
    res = run_cli(tmp_path, "simulate", "--config", cfg2, "--out", "s2")
    assert res.returncode == 0, res.stderr
    header = (tmp_path / "s2/path.csv").read_text().splitlines()[0]
    assert header.startswith("t,V,lambda0") and header.endswith("lambda11")


def test_validate_pass(tmp_path):
    cfg = write(tmp_path, "m.ini", EXPSUM)
    res = run_cli(tmp_path, "validate", "--config", cfg, "--out", "v")
    assert res.returncode == 0, res.stderr
    rep = load(tmp_path, "v/validate.json")
    assert rep["pass"] is True
    assert abs(rep["z_score"]) <= 3.0
    assert rep["threshold"] == 3.0


def test_validate_failure_exit_code(tmp_path):
    # coarse grid: discretization bias far beyond the noise level
    cfg = write(tmp_path, "biased.ini", BIASED)
    res = run_cli(tmp_path, "validate", "--config", cfg, "--out", "vf")
    assert res.returncode == 3
    rep = load(tmp_path, "vf/validate.json")  # report still written
    assert rep["pass"] is False
    assert abs(rep["z_score"]) > 3.0
    assert (tmp_path / "vf/run_manifest.json").exists()


def test_converge_outputs_and_thread_invariance(tmp_path):
    cfg = write(tmp_path, "m.ini", EXPSUM)
    r1 = run_cli(tmp_path, "converge", "--config", cfg, "--out", "c1",
                 "--threads", "1")
    r2 = run_cli(tmp_path, "converge", "--config", cfg, "--out", "c2",
                 "--threads", "3")
    assert r1.returncode == 0 and r2.returncode == 0, r1.stderr + r2.stderr
    body1 = (tmp_path / "c1/converge.csv").read_bytes()
    body2 = (tmp_path / "c2/converge.csv").read_bytes()
    assert body1 == body2
    lines = body1.decode().splitlines()
    assert lines[0] == "n,mean,stderr,analytic,abs_error"
    assert len(lines) == 3


def test_config_error_exit_code(tmp_path):
    cfg = write(tmp_path, "bad.ini",
                "[kernel]\nvariant = fractional\nalpha = 1.2\n")
    res = run_cli(tmp_path, "price", "--config", cfg, "--out", "e")
    assert res.returncode == 2
    err = load(tmp_path, "e/error.json")
    assert err["message"] == "kernel.alpha must lie in (0.5, 1)"
    assert err["exit_code"] == 2
    assert not (tmp_path / "e/run_manifest.json").exists()


def test_kernel_approx(tmp_path):
    cfg = write(tmp_path, "m.ini", FRACTIONAL)
    res = run_cli(tmp_path, "kernel-approx", "--config", cfg, "--out", "k")
    assert res.returncode == 0, res.stderr
    metrics = load(tmp_path, "k/metrics.json")
    assert metrics["n_atoms"] == 12
    assert metrics["l2_error"] < 0.05
    assert (tmp_path / "k/measure.csv").exists()
    assert (tmp_path / "k/fit.csv").exists()

    # the command has no meaning for a kernel given directly as atoms
    cfg2 = write(tmp_path, "e.ini", EXPSUM)
    res2 = run_cli(tmp_path, "kernel-approx", "--config", cfg2, "--out", "k2")
    assert res2.returncode == 2


def test_resolvent_and_cone(tmp_path):
    cfg = write(tmp_path, "m.ini", EXPSUM)
    res = run_cli(tmp_path, "resolvent", "--config", cfg, "--out", "r")
    assert res.returncode == 0, res.stderr
    metrics = load(tmp_path, "r/metrics.json")
    assert metrics["identity_residual"] < 1e-8
    assert metrics["nonnegative"] is True

    res = run_cli(tmp_path, "cone-check", "--config", cfg, "--out", "cn")
    assert res.returncode == 0, res.stderr
    member = load(tmp_path, "cn/membership.json")
    assert member["member"] is True
    assert "w_grid" in member


def test_format_json_and_seed_override(tmp_path):
    cfg = write(tmp_path, "m.ini", EXPSUM)
    res = run_cli(tmp_path, "resolvent", "--config", cfg, "--out", "j",
                  "--format", "json")
    assert res.returncode == 0, res.stderr
    table = load(tmp_path, "j/resolvent.json")
    assert isinstance(table, list) and set(table[0]) == {"t", "value"}
    assert not (tmp_path / "j/resolvent.csv").exists()

    res = run_cli(tmp_path, "validate", "--config", cfg, "--out", "sd",
                  "--seed", "123")
    assert res.returncode == 0, res.stderr
    assert load(tmp_path, "sd/run_manifest.json")["seed"] == 123


def test_unknown_command_usage_error(tmp_path):
    cfg = write(tmp_path, "m.ini", EXPSUM)
    res = run_cli(tmp_path, "frobnicate", "--config", cfg)
    assert res.returncode == 2  # argparse usage failure
    assert "invalid choice" in res.stderr
