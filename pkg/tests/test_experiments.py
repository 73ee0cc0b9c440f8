"""Covariance experiment: instance generation, support metrics, the fused
solver loop vs the generic one, summary schema, and benchmark CSV schemas."""

import json

import numpy as np
import pytest

from fwsplit.experiments import (CovarianceInstance, ExperimentConfig,
                                 bench_kernels, bench_lmo_vs_projection,
                                 build_split_problem, default_radii,
                                 fwal_k2_matrix_fast, gen_covariance_instance,
                                 run_covariance_experiment, support_metrics)
from fwsplit.solver import (SolverConfig, StepSizeSchedule, fwal_solve,
                            read_trace_csv)

# ---------------------------------------------------------------------------
# instance generation
# ---------------------------------------------------------------------------

def test_instance_shapes_and_mask():
    inst = gen_covariance_instance(20, 15, 0.5, 4, 0.6, seed=3)
    assert inst.true_cov.shape == (20, 20)
    assert inst.empirical.shape == (20, 20)
    assert inst.support_mask.dtype == bool
    # thresholding: every surviving entry exceeds the cutoff in magnitude
    nz = inst.true_cov[inst.support_mask]
    assert np.all(np.abs(nz) > 0.6)
    assert np.all(inst.true_cov[~inst.support_mask] == 0.0)
    # symmetric ground truth and empirical matrix
    assert np.array_equal(inst.true_cov, inst.true_cov.T)
    assert np.allclose(inst.empirical, inst.empirical.T, atol=1e-12)


def test_instance_determinism():
    a = gen_covariance_instance(16, 10, 0.4, 2, 0.5, seed=7)
    b = gen_covariance_instance(16, 10, 0.4, 2, 0.5, seed=7)
    assert np.array_equal(a.true_cov, b.true_cov)
    assert np.array_equal(a.empirical, b.empirical)
    c = gen_covariance_instance(16, 10, 0.4, 2, 0.5, seed=8)
    assert not np.array_equal(a.empirical, c.empirical)


def test_instance_zero_threshold_keeps_blocks():
    # threshold 0 keeps exactly the nonzero entries of the block factor
    inst = gen_covariance_instance(12, 5, 0.1, 3, 0.0, seed=0)
    assert np.array_equal(inst.support_mask, inst.true_cov != 0.0)
    # block-diagonal: entries across different blocks vanish
    assert inst.true_cov[0, 11] == 0.0


def test_instance_validation():
    with pytest.raises(ValueError):
        gen_covariance_instance(5, 10, 0.5, 3, 0.5, seed=0)  # d < 2*blocks
    with pytest.raises(ValueError):
        gen_covariance_instance(10, 0, 0.5, 2, 0.5, seed=0)


def test_empirical_matches_population_at_large_n():
    # [DERIVED] law of large numbers: empirical -> blockdiag(v v^T) + sigma^2 I
    d, sigma = 10, 0.3
    inst = gen_covariance_instance(d, 100_000, sigma, 2, 0.0, seed=1)
    # reconstruct the unthresholded factor: at threshold 0 the kept entries
    # are the block entries themselves
    population = inst.true_cov + sigma ** 2 * np.eye(d)
    assert np.max(np.abs(inst.empirical - population)) <= 0.1


# ---------------------------------------------------------------------------
# support metrics
# ---------------------------------------------------------------------------

def test_support_metrics_hand_case():
    # [DERIVED] pred {a,b}, truth {b,c}: tp=1, fp=1, fn=1 -> p=r=f1=0.5
    est = np.array([[1.0, 0.5], [0.0, 0.0]])
    truth = np.array([[False, True], [True, False]])
    p, r, f1, frac = support_metrics(est, truth, threshold=0.1)
    assert (p, r, f1, frac) == (0.5, 0.5, 0.5, 0.5)


def test_support_metrics_empty_prediction():
    est = np.zeros((3, 3))
    truth = np.eye(3, dtype=bool)
    p, r, f1, frac = support_metrics(est, truth, threshold=0.5)
    assert p == 1.0 and r == 0.0 and f1 == 0.0


def test_support_metrics_perfect():
    truth = np.eye(4, dtype=bool)
    est = np.eye(4) * 3.0
    p, r, f1, frac = support_metrics(est, truth, threshold=0.5)
    assert (p, r, f1, frac) == (1.0, 1.0, 1.0, 1.0)


def test_support_metrics_shape_mismatch():
    with pytest.raises(ValueError):
        support_metrics(np.zeros((2, 2)), np.zeros((3, 3), dtype=bool), 0.1)


# ---------------------------------------------------------------------------
# fused K=2 loop vs the generic solver
# ---------------------------------------------------------------------------

def test_fast_loop_matches_generic_solver():
    # the fused loop must reproduce the generic fwal_solve trace on the
    # covariance split (same iteration, flattened implementation).  The
    # comparison window is 200 iterations: beyond that, float reassociation
    # differences get amplified chaotically by near-tied oracle argmins,
    # while any semantic difference between the loops shows up immediately.
    inst = gen_covariance_instance(15, 20, 0.5, 3, 0.5, seed=2)
    b1, b2 = default_radii(inst)
    p = build_split_problem(inst, b1, b2, lam=1.0, lmo_tol=1e-6)
    cfg = SolverConfig(schedule=StepSizeSchedule("harmonic", 5.0), inner="fw",
                       max_outer_iters=200, stop_feasibility_tol=1e-12,
                       stop_gap_tol=1e-12, diagnostics_every=20,
                       divergence_patience=0)
    xg, yg, trg = fwal_solve(p, cfg)
    xf, yf, trf = fwal_k2_matrix_fast(inst.empirical, b1, b2, 1.0, 5.0,
                                      lmo_tol=1e-6, max_iters=200,
                                      diagnostics_every=20)
    assert len(trg) == len(trf)
    for a, b in zip(trg, trf):
        assert a.t == b.t
        for f in ("lagrangian", "fw_gap", "feasibility", "dual_norm",
                  "objective"):
            assert getattr(a, f) == pytest.approx(getattr(b, f), rel=1e-6,
                                                  abs=5e-7)
    assert (xg - xf).norm() <= 1e-5
    assert np.linalg.norm(yg - yf) <= 1e-5


def test_fast_loop_deterministic():
    inst = gen_covariance_instance(12, 10, 0.4, 2, 0.5, seed=5)
    b1, b2 = default_radii(inst)
    runs = [fwal_k2_matrix_fast(inst.empirical, b1, b2, 1.0, 10.0,
                                max_iters=200, diagnostics_every=10)
            for _ in range(2)]
    (x1, y1, t1), (x2, y2, t2) = runs
    assert np.array_equal(y1, y2)
    for a, b in zip(t1, t2):
        assert a.feasibility == b.feasibility
        assert a.lagrangian == b.lagrangian


def test_fast_loop_return_best_tracks_min_residual():
    inst = gen_covariance_instance(12, 10, 0.4, 2, 0.5, seed=5)
    b1, b2 = default_radii(inst)
    # a deliberately oscillation-prone step size so last != best
    x, y, tr = fwal_k2_matrix_fast(inst.empirical, b1, b2, 1.0, 40.0,
                                   max_iters=500, diagnostics_every=10,
                                   return_best=True)
    feas = float(np.linalg.norm(x.blocks[0] - x.blocks[1]))
    assert feas == pytest.approx(min(r.feasibility for r in tr), rel=1e-9)
    assert feas <= tr[-1].feasibility


# ---------------------------------------------------------------------------
# experiment runner
# ---------------------------------------------------------------------------

def test_experiment_summary_schema(tmp_path):
    cfg = ExperimentConfig(d=16, n=20, n_blocks=2, time_budget_s=1.5,
                           diagnostics_every=50, out_dir=str(tmp_path))
    summary = run_covariance_experiment(cfg)
    with open(tmp_path / "summary.json") as fh:
        on_disk = json.load(fh)
    assert on_disk["beta1"] == summary["beta1"]
    for method in ("fwal", "gfb"):
        rec = summary["methods"][method]
        assert "error" not in rec, rec.get("error")
        assert set(rec) == {"trace_csv", "final_objective",
                            "final_feasibility", "support",
                            "support_f1_samples"}
        assert set(rec["support"]) == {"precision", "recall", "f1",
                                       "fraction_recovered"}
        trace = read_trace_csv(tmp_path / rec["trace_csv"])
        assert len(trace) >= 1
        if method == "gfb":
            assert trace[-1].feasibility == rec["final_feasibility"]
        else:
            # fwal returns its best-residual iterate (see return_best)
            assert rec["final_feasibility"] == pytest.approx(
                min(r.feasibility for r in trace), rel=1e-9)


def test_experiment_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(time_budget_s=0.0)
    with pytest.raises(ValueError):
        ExperimentConfig(d=4, n_blocks=3)


def test_default_radii_positive():
    inst = gen_covariance_instance(10, 10, 0.2, 2, 0.3, seed=0)
    b1, b2 = default_radii(inst)
    assert b1 > 0 and b2 > 0
    assert b1 == pytest.approx(1.1 * np.sum(np.abs(inst.true_cov)))
    assert b2 == pytest.approx(1.1 * np.trace(inst.true_cov))


# ---------------------------------------------------------------------------
# benchmarks
# ---------------------------------------------------------------------------

def test_bench_lmo_vs_projection_schema(tmp_path):
    path = tmp_path / "bench.csv"
    rows = bench_lmo_vs_projection([10, 20], trials=1, csv_path=str(path))
    assert [r[0] for r in rows] == [10, 20]
    assert all(r[1] > 0 and r[2] > 0 for r in rows)
    lines = path.read_text().splitlines()
    assert lines[0] == "dim,lmo_ms,proj_ms"
    assert len(lines) == 3
    with pytest.raises(ValueError):
        bench_lmo_vs_projection([20, 10], trials=1)


def test_bench_kernels_schema(tmp_path):
    path = tmp_path / "kernels.csv"
    rows = bench_kernels([8], trials=1, csv_path=str(path))
    kernels = {r[0] for r in rows}
    assert kernels == {"jacobi_eig", "project_l1"}
    lines = path.read_text().splitlines()
    assert lines[0] == "kernel,backend,dim,median_ms"
