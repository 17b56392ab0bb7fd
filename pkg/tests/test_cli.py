import numpy as np
import pytest

from cmaflow.cli import main
from cmaflow.io_csv import read_node_csv, write_node_csv


BASE = """
[domain]
name = "ball"
n = 1

[grid]
h = 0.1

[problem]
name = "{problem}"

[solver]
T = {T}
snapshot_dt = {snap}
"""


def write_cfg(tmp_path, problem, T=1.0, snap=0.25, extra=""):
    p = tmp_path / "run.toml"
    p.write_text(BASE.format(problem=problem, T=T, snap=snap) + extra)
    return str(p)


def test_solve_subcommand(tmp_path):
    cfg = write_cfg(tmp_path, "manufactured_linear")
    out = tmp_path / "out"
    assert main(["solve", "--config", cfg, "--out", str(out)]) == 0
    assert (out / "run_report.txt").exists()
    assert (out / "plot.csv").exists()
    assert (out / "snapshot_000.csv").exists()
    txt = (out / "run_report.txt").read_text()
    assert "ok: True" in txt


def test_elliptic_subcommand(tmp_path):
    cfg = write_cfg(tmp_path, "decaying_to_elliptic")
    out = tmp_path / "out"
    assert main(["elliptic", "--config", cfg, "--out", str(out)]) == 0
    assert (out / "fixed_point.csv").exists()
    assert (out / "perron.csv").exists()


def test_converge_subcommand(tmp_path):
    cfg = write_cfg(tmp_path, "decaying_to_elliptic", T=3.0, snap=0.25)
    out = tmp_path / "out"
    assert main(["converge", "--config", cfg, "--out", str(out)]) == 0
    rows = (out / "convergence.csv").read_text().strip().splitlines()
    assert rows[0] == "t,e"
    assert len(rows) > 5


def test_barriers_subcommand(tmp_path):
    cfg = write_cfg(tmp_path, "manufactured_linear",
                    extra="\n[barriers]\neps = 0.4\nT = 1.0\n")
    out = tmp_path / "out"
    assert main(["barriers", "--config", cfg, "--out", str(out)]) == 0
    assert (out / "subbarrier_000.csv").exists()
    assert (out / "superbarrier_000.csv").exists()
    assert "ok: True" in (out / "barrier_report.txt").read_text()


def test_regularize_subcommand(tmp_path):
    cfg = write_cfg(tmp_path, "stationary")
    out = tmp_path / "out"
    assert main(["regularize", "--config", cfg, "--out", str(out)]) == 0
    assert (out / "profiles.csv").exists()
    assert "violations: 0" in (out / "lipschitz_report.txt").read_text()


def test_admissible_subcommand(tmp_path):
    cfg = write_cfg(tmp_path, "stationary")
    out = tmp_path / "out"
    assert main(["admissible", "--config", cfg, "--out", str(out)]) == 0
    assert (out / "witness.csv").exists()
    txt = (out / "admissible_report.txt").read_text()
    assert "verdict: witnessed" in txt


def test_analyze_subcommand_pass_and_fail(tmp_path):
    ok_cfg = write_cfg(tmp_path, "manufactured_linear", snap=0.05,
                       extra="\n[analyze]\ndirection = \"time\"\n"
                             "target = 1.0\n")
    out = tmp_path / "out"
    assert main(["analyze", "--config", ok_cfg, "--out", str(out)]) == 0
    assert (out / "modulus_report.txt").exists()
    bad_cfg = tmp_path / "bad.toml"
    bad_cfg.write_text((tmp_path / "run.toml").read_text().replace(
        "target = 1.0", "target = 5.0"))
    assert main(["analyze", "--config", str(bad_cfg),
                 "--out", str(out)]) == 2


def test_missing_config_errors(tmp_path):
    assert main(["solve", "--config", str(tmp_path / "nope.toml"),
                 "--out", str(tmp_path)]) == 1


def test_node_csv_roundtrip(tmp_path, disc_scheme_coarse):
    import cmaflow as cf
    from cmaflow.domain import abs2
    u = disc_scheme_coarse.sample(abs2)
    path = tmp_path / "u.csv"
    write_node_csv(path, u)
    v = read_node_csv(path, disc_scheme_coarse.grid)
    assert np.allclose(u.values, v.values, atol=1e-10)
