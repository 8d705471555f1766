"""Configuration parsing, deterministic result files, the ordered
parallel map, and end-to-end runs of every command-line entry point
with its documented exit codes.
"""

import json
import math

import numpy as np
import pytest

from carleson.cli import main
from carleson.config import (
    VERIFY_SUITES,
    ExperimentConfig,
    load_config,
    parse_config_text,
)
from carleson.diskio import (
    format_value,
    read_grid_bin,
    read_lattice_bin,
    write_csv,
    write_grid_bin,
    write_json,
    write_lattice_bin,
    write_lattice_csv,
)
from carleson.errors import ConfigError
from carleson.multipliers import m_grid
from carleson.operators import random_function
from carleson.kernels import make_kernel
from carleson.parallel import ordered_map


# ==================== configuration ====================


def test_config_defaults_and_derived():
    cfg = ExperimentConfig()
    fam = cfg.family()
    assert (fam.name, fam.d, fam.n) == ("sign", 1, 1)
    assert cfg.arc_params().eps1 == 0.25
    assert cfg.quad().tol == 1e-10
    assert cfg.suites() == VERIFY_SUITES
    assert ExperimentConfig(suite="rm, kappa").suites() == ("rm", "kappa")


def test_parse_config_text():
    pairs = parse_config_text(
        "q_max = 4   # trailing comment\n"
        "\n"
        "# full-line comment\n"
        "eps1 = 0.2\n"
        "budget = 0x10\n"
        "kernel = riesz\n"
    )
    assert pairs == {"q_max": 4, "eps1": 0.2, "budget": 16,
                     "kernel": "riesz"}
    with pytest.raises(ConfigError):
        parse_config_text("mystery = 3\n")
    with pytest.raises(ConfigError):
        parse_config_text("q_max = 3\nq_max = 4\n")
    with pytest.raises(ConfigError):
        parse_config_text("just words\n")
    with pytest.raises(ConfigError):
        parse_config_text("q_max = lots\n")


def test_load_config_overrides_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("q_max = 4\nseed = 7\n")
    cfg = load_config(path, {"q_max": "6"})
    assert cfg.q_max == 6 and cfg.seed == 7
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.cfg")


@pytest.mark.parametrize("bad", [
    dict(kernel="mystery"),
    dict(eps1=0.5, eps2=0.3),
    dict(j_lo=8, j_hi=6),
    dict(grid_size=96),
    dict(q_max=0),
    dict(workers=0),
    dict(suite="rm,mystery"),
    dict(fault="mystery"),
    dict(quad_resolution=1.0),      # wrapped quadrature validation
    dict(kernel="harmonic", n=1),   # wrapped kernel-family validation
])
def test_config_validation(bad):
    with pytest.raises(ConfigError):
        ExperimentConfig(**bad)


# ==================== result files ====================


def test_format_value():
    assert format_value(0.1) == "0.10000000000000001"
    assert format_value(42) == "42"
    assert format_value(True) == "1"
    assert float(format_value(math.pi)) == math.pi
    with pytest.raises(TypeError):
        format_value(1 + 2j)


def test_write_csv_round_trip(tmp_path):
    path = tmp_path / "t.csv"
    rows = [[1, 0.1], [2, -math.pi]]
    write_csv(path, ["k", "v"], rows)
    lines = path.read_text().splitlines()
    assert lines[0] == "k,v" and len(lines) == 3
    assert path.read_text().endswith("\n")
    got = [float(line.split(",")[1]) for line in lines[1:]]
    assert got == [0.1, -math.pi]
    with pytest.raises(ValueError):
        write_csv(path, ["k", "v"], [[1]])


def test_write_json_sorted(tmp_path):
    path = tmp_path / "t.json"
    write_json(path, {"zeta": 1, "alpha": 0.25})
    text = path.read_text()
    assert text.index("alpha") < text.index("zeta")
    assert json.loads(text) == {"zeta": 1, "alpha": 0.25}


def test_grid_bin_round_trip(tmp_path):
    fam = make_kernel("sign", 1, 1)
    gd = m_grid(fam, 3, 0.3, 64)
    path = tmp_path / "g.bin"
    write_grid_bin(path, gd)
    back = read_grid_bin(path)
    assert (back.n, back.N, back.j, back.lam) == (1, 64, 3, 0.3)
    assert np.array_equal(back.values, gd.values)
    path.write_bytes(path.read_bytes()[:-8])
    with pytest.raises(ConfigError):
        read_grid_bin(path)


def test_lattice_bin_and_csv_round_trip(tmp_path):
    f = random_function(2, 2, (9, 3)).translated((4, -1))
    path = tmp_path / "f.bin"
    write_lattice_bin(path, f)
    back = read_lattice_bin(path)
    assert back.center == (4, -1) and back.halfwidth == (2, 2)
    assert np.array_equal(back.values, f.values)
    cpath = tmp_path / "f.csv"
    write_lattice_csv(cpath, f)
    lines = cpath.read_text().splitlines()
    assert lines[0] == "x0,x1,re,im" and len(lines) == 1 + 25
    first = lines[1].split(",")
    assert [int(first[0]), int(first[1])] == [2, -3]
    assert complex(float(first[2]), float(first[3])) == f.values[0, 0]


# ==================== parallel map ====================


def test_ordered_map_preserves_order():
    work = lambda k: (k, sum(range((37 * k) % 11 * 1000)))
    seq = ordered_map(work, range(40), workers=1)
    par = ordered_map(work, range(40), workers=4)
    assert seq == par
    assert [r[0] for r in par] == list(range(40))


# ==================== command-line entry points ====================


def run_cli(tmp_path, name, **kv):
    out = tmp_path / "out"
    argv = [name, "--out", str(out)]
    for key, val in kv.items():
        argv += [f"--{key}", str(val)]
    return main(argv), out


def test_cmd_weyl(tmp_path):
    code, out = run_cli(tmp_path, "weyl", q_max=8)
    assert code == 0
    lines = (out / "weyl_decay.csv").read_text().splitlines()
    assert lines[0] == "q,max_abs_s" and len(lines) == 9
    summary = json.loads((out / "weyl_summary.json").read_text())
    assert summary["orthogonality_violations"] == 0
    assert summary["orthogonality_max_abs"] <= 1e-9


def test_cmd_approx(tmp_path):
    code, out = run_cli(tmp_path, "approx", j_lo=4, j_hi=4, q_max=2,
                        samples=3, seed=11)
    assert code == 0
    lines = (out / "approx_sweep.csv").read_text().splitlines()
    assert len(lines) == 1 + 2 * 3  # (j=4, q in {1,2}) x 3 samples
    summary = json.loads((out / "approx_summary.json").read_text())
    assert "4" in summary["per_j_max_bound_ratio"]


def test_cmd_approx_empty_sweep(tmp_path):
    # no admissible (j, q) groups below j = 3: header-only table, still 0
    code, out = run_cli(tmp_path, "approx", j_lo=1, j_hi=2, q_max=8)
    assert code == 0
    assert (out / "approx_sweep.csv").read_text().splitlines() == [
        "j,q,sample,delta,abs_err,bound_ratio"]


def test_cmd_phi(tmp_path):
    code, out = run_cli(tmp_path, "phi", j_lo=4, j_hi=5, profile_points=9)
    assert code == 0
    lines = (out / "phi_profile.csv").read_text().splitlines()
    assert lines[0] == "j,c_vdc" and len(lines) == 3
    assert json.loads((out / "phi_summary.json").read_text())["c_vdc_max"] > 0.0


def test_cmd_arcs_frozen_census(tmp_path):
    code, out = run_cli(tmp_path, "arcs", s_hi=3)
    assert code == 0
    lines = (out / "arc_census.csv").read_text().splitlines()
    assert lines[0] == (
        "s,q_lo,q_hi,alpha_count,triple_count,bsharp_count,range_lcm")
    assert lines[1:] == ["1,1,1,1,1,1,2", "2,2,3,4,11,4,12",
                         "3,4,7,18,108,18,840"]


def test_cmd_kappa(tmp_path):
    code, out = run_cli(tmp_path, "kappa", q_max=4, w_max=2)
    assert code == 0
    lines = (out / "kappa_gaps.csv").read_text().splitlines()
    assert len(lines) == 1 + 16
    summary = json.loads((out / "kappa_summary.json").read_text())
    assert summary["max_gap"] <= 1e-9


def test_cmd_carleson(tmp_path):
    code, out = run_cli(tmp_path, "carleson", trials=2, radius=4,
                        lambda_count=16, carleson_j=2, carleson_j2=3)
    assert code == 0
    lines = (out / "carleson_trials.csv").read_text().splitlines()
    assert len(lines) == 3
    summary = json.loads((out / "carleson_summary.json").read_text())
    assert summary["point_mass_residual_J_hi"] <= 1e-10
    assert summary["max_ratio_J_hi"] >= summary["max_ratio_J_lo"] > 0.0


def test_cmd_verify_single_suite(tmp_path, capsys):
    code, out = run_cli(tmp_path, "verify", suite="rm", samples=50)
    assert code == 0
    assert "rm: PASS" in capsys.readouterr().out
    summary = json.loads((out / "verify_summary.json").read_text())
    assert summary["rm"]["ok"] is True


def test_cmd_verify_fault_injection(tmp_path, capsys):
    code, out = run_cli(tmp_path, "verify", suite="factorization",
                        fault="chi_tilde_shrink", samples=50)
    assert code == 1
    assert "factorization: FAIL" in capsys.readouterr().out


def test_exit_code_config_error(tmp_path):
    code, _ = run_cli(tmp_path, "weyl", q_max=0)
    assert code == 2
    code, _ = run_cli(tmp_path, "weyl", q_max="lots")
    assert code == 2


def test_exit_code_budget_error(tmp_path):
    code, _ = run_cli(tmp_path, "phi", j_lo=4, j_hi=4, profile_points=9,
                      quad_node_budget=160)
    assert code == 3


def test_worker_count_never_changes_bytes(tmp_path):
    runs = {}
    for workers in (1, 4):
        out = tmp_path / f"w{workers}"
        code = main(["approx", "--out", str(out), "--j_lo", "4",
                     "--j_hi", "5", "--q_max", "2", "--samples", "2",
                     "--workers", str(workers)])
        assert code == 0
        runs[workers] = {
            p.name: p.read_bytes() for p in sorted(out.iterdir())
        }
    assert runs[1] == runs[4]
