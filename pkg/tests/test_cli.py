"""CLI: problem loading, solve outputs, error handling, exit codes, and the
small subcommands.  Everything runs in-process through main(argv)."""

import json

import numpy as np
import pytest

from fwsplit.cli import load_problem, load_solver_config, main
from fwsplit.sets import (L1Ball, PsdL1Ball, PsdTraceBall, Simplex, SymL1Ball,
                          VertexPolytope)


def _two_ball_config(c=(2.0, 0.0)):
    return {
        "sets": [{"kind": "l1_ball", "dim": 2, "beta": 1.0},
                 {"kind": "l1_ball", "dim": 2, "beta": 2.0}],
        "objective": {"kind": "squared_distance",
                      "targets": [list(c), list(c)]},
        "operator": {"kind": "intersection"},
        "lambda": 1.0,
        "solver": {"schedule": {"kind": "harmonic", "eta0": 2.0},
                   "max_outer_iters": 3000, "diagnostics_every": 100},
    }


# ---------------------------------------------------------------------------
# loaders
# ---------------------------------------------------------------------------

def test_load_problem_kinds():
    config = {
        "sets": [{"kind": "simplex", "dim": 3},
                 {"kind": "l1_ball", "dim": 3, "beta": 1.0}],
        "objective": {"kind": "squared_distance",
                      "targets": [[1, 0, 0], [1, 0, 0]]},
        "lambda": 2.0,
    }
    p = load_problem(config)
    assert isinstance(p.sets[0], Simplex)
    assert isinstance(p.sets[1], L1Ball)
    assert p.lam == 2.0
    assert p.op.out_dim == 3  # default intersection operator


def test_load_problem_matrix_sets():
    config = {
        "sets": [{"kind": "psd_l1_ball", "dim": 4, "beta": 1.0},
                 {"kind": "psd_trace_ball", "dim": 4, "beta": 1.0},
                 {"kind": "sym_l1_ball", "dim": 4, "beta": 1.0}],
        "objective": {"kind": "squared_distance",
                      "targets": [np.eye(4).tolist()] * 3},
    }
    p = load_problem(config)
    assert isinstance(p.sets[0], PsdL1Ball)
    assert isinstance(p.sets[1], PsdTraceBall)
    assert isinstance(p.sets[2], SymL1Ball)


def test_load_problem_vertex_polytope_and_matrix_operator():
    config = {
        "sets": [{"kind": "vertex_polytope",
                  "vertices": [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]},
                 {"kind": "l1_ball", "dim": 2, "beta": 1.0}],
        "objective": {"kind": "squared_distance",
                      "targets": [[0.5, 0.5], [0.5, 0.5]]},
        "operator": {"kind": "matrices",
                     "matrices": [np.eye(2).tolist(),
                                  (-np.eye(2)).tolist()]},
    }
    p = load_problem(config)
    assert isinstance(p.sets[0], VertexPolytope)
    assert p.op.out_dim == 2


def test_load_problem_unknown_kind():
    with pytest.raises(ValueError):
        load_problem({"sets": [{"kind": "cube", "dim": 2}],
                      "objective": {"kind": "squared_distance",
                                    "targets": [[0, 0]]}})


def test_load_solver_config_overrides():
    config = {"lambda": 2.0,
              "solver": {"schedule": {"kind": "constant", "eta0": 0.3},
                         "inner": "afw", "max_outer_iters": 7}}
    cfg = load_solver_config(config, budget=1.5, seed=42)
    assert cfg.schedule.kind == "constant"
    assert cfg.schedule.eta0 == 0.3
    assert cfg.inner == "afw"
    assert cfg.max_outer_iters == 7
    assert cfg.time_budget_s == 1.5
    assert cfg.seed == 42
    # default eta0 follows the lam/10 heuristic
    cfg2 = load_solver_config({"lambda": 2.0})
    assert cfg2.schedule.eta0 == pytest.approx(0.2)


# ---------------------------------------------------------------------------
# solve command end to end
# ---------------------------------------------------------------------------

def test_solve_writes_outputs(tmp_path, capsys):
    prob_file = tmp_path / "problem.json"
    prob_file.write_text(json.dumps(_two_ball_config()))
    rc = main(["--out-dir", str(tmp_path / "out"), "solve", str(prob_file)])
    assert rc == 0
    printed = json.loads(capsys.readouterr().out)
    assert set(printed) == {"objective", "feasibility", "fw_gap", "iterations"}
    result = json.loads((tmp_path / "out" / "result.json").read_text())
    # [DERIVED] projection of (2,0) onto the unit l1 ball: both blocks (1,0)
    assert np.linalg.norm(np.array(result["blocks"][0]) - [1, 0]) <= 2e-2
    header = (tmp_path / "out" / "trace.csv").read_text().splitlines()[0]
    assert header == ("t,wall_time_s,lagrangian,fw_gap,feasibility,"
                      "dual_norm,objective,drop_steps_cum")


def test_solve_missing_file_errors(tmp_path, capsys):
    rc = main(["--out-dir", str(tmp_path), "solve",
               str(tmp_path / "nope.json")])
    assert rc == 1
    err = json.loads(capsys.readouterr().err)
    assert set(err) == {"error", "message"}


def test_solve_invalid_config_errors(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"sets": [], "objective": {"kind": "nope"}}))
    rc = main(["--out-dir", str(tmp_path), "solve", str(bad)])
    assert rc == 1
    err = json.loads(capsys.readouterr().err)
    assert err["error"] in ("ValueError", "IndexError", "KeyError")


def test_budget_flag_limits_solve(tmp_path, capsys):
    config = _two_ball_config()
    config["solver"]["max_outer_iters"] = 10 ** 8
    config["solver"]["diagnostics_every"] = 1000
    prob_file = tmp_path / "problem.json"
    prob_file.write_text(json.dumps(config))
    rc = main(["--out-dir", str(tmp_path / "o"), "--budget-s", "0.5",
               "solve", str(prob_file)])
    assert rc == 0  # returns promptly instead of running 10^8 iterations


# ---------------------------------------------------------------------------
# other subcommands
# ---------------------------------------------------------------------------

def test_cov_exp_small(tmp_path, capsys):
    cfg_file = tmp_path / "cov.json"
    cfg_file.write_text(json.dumps({"d": 12, "n": 10, "n_blocks": 2,
                                    "time_budget_s": 1.0,
                                    "diagnostics_every": 50}))
    rc = main(["--out-dir", str(tmp_path / "exp"), "--seed", "1",
               "cov-exp", str(cfg_file)])
    assert rc == 0
    brief = json.loads(capsys.readouterr().out)
    assert set(brief) == {"fwal", "gfb"}
    summary = json.loads((tmp_path / "exp" / "summary.json").read_text())
    assert summary["config"]["seed"] == 1  # --seed flag reached the config
    assert (tmp_path / "exp" / "fwal_trace.csv").exists()
    assert (tmp_path / "exp" / "gfb_trace.csv").exists()


def test_bench_lmo_small(tmp_path, capsys):
    rc = main(["--out-dir", str(tmp_path), "bench-lmo",
               "--dims", "10,20", "--trials", "1"])
    assert rc == 0
    lines = (tmp_path / "bench_lmo.csv").read_text().splitlines()
    assert lines[0] == "dim,lmo_ms,proj_ms"
    assert len(lines) == 3


def test_bench_kernels_small(tmp_path, capsys):
    rc = main(["--out-dir", str(tmp_path), "bench-kernels",
               "--dims", "8", "--trials", "1"])
    assert rc == 0
    assert (tmp_path / "bench_kernels.csv").exists()


def test_verify_passes(capsys):
    rc = main(["verify"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "all checks passed" in out
    assert "FAIL" not in out
