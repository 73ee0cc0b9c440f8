"""Command-line front end.

Subcommands:
  solve <problem.json>   run the splitting solver on a problem description
  cov-exp <config.json>  covariance experiment, solver vs baseline
  bench-lmo              LMO vs projection timing on the trace ball
  bench-kernels          numba vs numpy kernel backends
  verify                 quick built-in property checks

All failures exit nonzero with a machine-readable JSON error on stderr.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import experiments, problem, sets, solver
from .kernels import BACKEND


def _build_set(spec):
    kind = spec["kind"]
    if kind == "l1_ball":
        return sets.L1Ball(spec["dim"], spec["beta"])
    if kind == "simplex":
        return sets.Simplex(spec["dim"])
    if kind == "vertex_polytope":
        return sets.VertexPolytope(np.asarray(spec["vertices"], dtype=float))
    if kind == "psd_l1_ball":
        return sets.PsdL1Ball(spec["dim"], spec["beta"],
                              diagonal_only=spec.get("psd_l1_diagonal_only",
                                                     False))
    if kind == "psd_trace_ball":
        return sets.PsdTraceBall(spec["dim"], spec["beta"])
    if kind == "sym_l1_ball":
        return sets.SymL1Ball(spec["dim"], spec["beta"])
    raise ValueError(f"unknown set kind {kind!r}")


def _build_objective(spec, shapes):
    kind = spec["kind"]
    if kind == "squared_distance":
        targets = [np.asarray(t, dtype=float) for t in spec["targets"]]
        return problem.squared_distance_objective(targets,
                                                  spec.get("weights"))
    if kind == "quadratic":
        return problem.quadratic_objective(np.asarray(spec["q"], dtype=float),
                                           np.asarray(spec["b"], dtype=float))
    if kind == "logistic":
        return problem.logistic_objective(
            np.asarray(spec["features"], dtype=float),
            np.asarray(spec["labels"], dtype=float))
    raise ValueError(f"unknown objective kind {kind!r}")


def load_problem(config):
    """Build a SplitProblem from its JSON description."""
    set_list = [_build_set(s) for s in config["sets"]]
    shapes = [s.shape for s in set_list]
    objective = _build_objective(config["objective"], shapes)
    op_spec = config.get("operator", {"kind": "intersection"})
    if op_spec["kind"] == "intersection":
        op = problem.intersection_operator(len(set_list), shapes[0])
    elif op_spec["kind"] == "matrices":
        op = problem.MatrixOperator(
            [np.asarray(a, dtype=float) for a in op_spec["matrices"]])
    else:
        raise ValueError(f"unknown operator kind {op_spec['kind']!r}")
    return problem.SplitProblem(objective, set_list, op,
                                config.get("lambda", 1.0))


def load_solver_config(config, budget=None, seed=None):
    s = config.get("solver", {})
    sched = s.get("schedule", {})
    lam = config.get("lambda", 1.0)
    eta0 = sched.get("eta0", solver.default_eta0(lam))
    schedule = solver.StepSizeSchedule(sched.get("kind", "harmonic"), eta0,
                                       sched.get("warm_steps", 0))
    return solver.SolverConfig(
        schedule=schedule,
        inner=s.get("inner", "fw"),
        max_outer_iters=s.get("max_outer_iters", 10000),
        time_budget_s=budget if budget is not None else s.get("time_budget_s"),
        stop_feasibility_tol=s.get("stop_feasibility_tol", 1e-8),
        stop_gap_tol=s.get("stop_gap_tol", 1e-8),
        diagnostics_every=s.get("diagnostics_every", 1),
        seed=seed if seed is not None else s.get("seed", 0))


def cmd_solve(args):
    config = json.loads(Path(args.problem).read_text())
    p = load_problem(config)
    cfg = load_solver_config(config, budget=args.budget_s, seed=args.seed)
    x, y, trace = solver.fwal_solve(p, cfg)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    solver.write_trace_csv(trace, out_dir / "trace.csv")
    result = {
        "objective": float(p.objective.value(x)),
        "feasibility": problem.feasibility(p, x),
        "fw_gap": trace[-1].fw_gap if trace else None,
        "iterations": trace[-1].t + 1 if trace else 0,
        "blocks": [b.tolist() for b in x.blocks],
        "dual": y.tolist(),
        "trace_csv": str(out_dir / "trace.csv"),
    }
    with open(out_dir / "result.json", "w") as fh:
        json.dump(result, fh, indent=2)
    print(json.dumps({k: result[k] for k in
                      ("objective", "feasibility", "fw_gap", "iterations")},
                     indent=2))
    return 0


def cmd_cov_exp(args):
    raw = json.loads(Path(args.config).read_text()) if args.config else {}
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.budget_s is not None:
        raw["time_budget_s"] = args.budget_s
    raw["out_dir"] = args.out_dir
    cfg = experiments.ExperimentConfig(**raw)
    summary = experiments.run_covariance_experiment(cfg)
    brief = {name: (m.get("error") or
                    {"final_objective": m["final_objective"],
                     "support_f1": m["support"]["f1"]})
             for name, m in summary["methods"].items()}
    print(json.dumps(brief, indent=2))
    return 0


def cmd_bench_lmo(args):
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = experiments.bench_lmo_vs_projection(
        args.dims, trials=args.trials, seed=args.seed or 0,
        csv_path=out / "bench_lmo.csv")
    for d, lmo_ms, proj_ms in rows:
        print(f"dim {d:5d}  lmo {lmo_ms:10.2f} ms  proj {proj_ms:10.2f} ms")
    return 0


def cmd_bench_kernels(args):
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = experiments.bench_kernels(args.dims, trials=args.trials,
                                     seed=args.seed or 0,
                                     csv_path=out / "bench_kernels.csv")
    print(f"active backend: {BACKEND}")
    for kernel, backend_name, d, ms in rows:
        print(f"{kernel:12s} {backend_name:6s} dim {d:5d}  {ms:10.3f} ms")
    return 0


def cmd_verify(args):
    """Fast self-checks of the core oracles and identities."""
    from . import linalg, steps
    rng = np.random.default_rng(args.seed or 0)
    failures = []

    def check(name, ok):
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
        if not ok:
            failures.append(name)

    a = rng.standard_normal((30, 30))
    a = 0.5 * (a + a.T)
    dec = linalg.jacobi_eig(a)
    recon = (dec.eigenvectors * dec.eigenvalues) @ dec.eigenvectors.T
    check("jacobi reconstruction",
          np.linalg.norm(a - recon) <= 1e-8 * (1 + np.linalg.norm(a)))
    theta, _ = linalg.lanczos_extreme(lambda v: a @ v, 30, "largest")
    check("lanczos vs jacobi top eigenvalue",
          abs(theta - dec.eigenvalues[0]) <= 1e-6 * (1 + abs(dec.eigenvalues[0])))

    ball = sets.L1Ball(8, 2.0)
    ok = True
    for _ in range(200):
        r = rng.standard_normal(8)
        atom = ball.lmo(r)
        best = min(v.inner(r) for v in ball.vertices())
        ok &= atom.inner(r) <= best + 1e-12
        ok &= ball.contains(atom.dense(), 1e-8)
    check("l1 LMO beats vertex enumeration", ok)

    ok = True
    for _ in range(100):
        x = rng.standard_normal(8) * 3
        px = ball.project(x)
        ok &= ball.contains(px, 1e-8)
        ok &= np.allclose(ball.project(px), px, atol=1e-8)
    check("l1 projection idempotent and feasible", ok)

    op = problem.intersection_operator(3, 5)
    ok = True
    for _ in range(100):
        x = problem.BlockVector([rng.standard_normal(5) for _ in range(3)])
        y = rng.standard_normal(op.out_dim)
        ok &= abs(op.apply(x) @ y - x.dot(op.adjoint(y))) <= 1e-10
    check("adjoint identity", ok)

    if failures:
        raise RuntimeError(f"verification failed: {failures}")
    print("all checks passed")
    return 0


def _int_list(text):
    return [int(v) for v in text.split(",")]


def main(argv=None):
    parser = argparse.ArgumentParser(prog="fwsplit")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--out-dir", default=".")
    parser.add_argument("--budget-s", type=float, default=None)
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve a problem description")
    p_solve.add_argument("problem")
    p_solve.set_defaults(func=cmd_solve)

    p_cov = sub.add_parser("cov-exp", help="covariance experiment")
    p_cov.add_argument("config", nargs="?", default=None)
    p_cov.set_defaults(func=cmd_cov_exp)

    p_bl = sub.add_parser("bench-lmo", help="LMO vs projection timings")
    p_bl.add_argument("--dims", type=_int_list, default=[100, 200, 400])
    p_bl.add_argument("--trials", type=int, default=3)
    p_bl.set_defaults(func=cmd_bench_lmo)

    p_bk = sub.add_parser("bench-kernels", help="kernel backend timings")
    p_bk.add_argument("--dims", type=_int_list, default=[50, 100, 200])
    p_bk.add_argument("--trials", type=int, default=3)
    p_bk.set_defaults(func=cmd_bench_kernels)

    p_ver = sub.add_parser("verify", help="built-in property checks")
    p_ver.set_defaults(func=cmd_verify)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
