"""Projection-splitting baseline: KKT-certified solutions on hand problems,
fixed-point residency, feasibility of the output, and config validation."""

import numpy as np
import pytest

from fwsplit.gfb import GfbConfig, GfbDivergence, gfb_solve
from fwsplit.problem import squared_distance_objective
from fwsplit.sets import L1Ball, PsdTraceBall, Simplex, SymL1Ball


def _sq_obj(c):
    return squared_distance_objective([np.asarray(c, dtype=float)])


def test_config_validation():
    with pytest.raises(ValueError):
        GfbConfig(relaxation=0.0)
    with pytest.raises(ValueError):
        GfbConfig(relaxation=1.5)
    with pytest.raises(ValueError):
        GfbConfig(tol=0.0)
    with pytest.raises(ValueError):
        gfb_solve(_sq_obj([1.0]), [L1Ball(1, 1.0)],
                  GfbConfig(weights=[0.5, 0.5]))
    with pytest.raises(ValueError):
        gfb_solve(_sq_obj([1.0]), [L1Ball(1, 1.0)], GfbConfig(weights=[2.0]))


def test_requires_projection():
    class NoProj:
        has_projection = False
        shape = (2,)
    with pytest.raises(ValueError):
        gfb_solve(_sq_obj([1.0, 0.0]), [NoProj()], GfbConfig())


def test_boundary_optimum_kkt():
    # [DERIVED] min ||x - 2||^2 over [-1,1] (two interval-like l1 balls in
    # dim 1, radii 1 and 1.5): solution is the active boundary x = 1, with
    # KKT residual x - proj(x - grad) = 0 at the intersection
    obj = _sq_obj([2.0])
    sets = [L1Ball(1, 1.0), L1Ball(1, 1.5)]
    x, trace = gfb_solve(obj, sets, GfbConfig(max_iters=5000, tol=1e-13))
    assert x[0] == pytest.approx(1.0, abs=1e-8)
    assert trace[-1].feasibility <= 1e-8


def test_interior_optimum():
    # [TRIVIAL] target inside both sets: the unconstrained optimum is found
    c = np.array([0.2, -0.1, 0.05])
    obj = _sq_obj(c)
    sets = [L1Ball(3, 1.0), L1Ball(3, 2.0)]
    x, trace = gfb_solve(obj, sets, GfbConfig(max_iters=5000, tol=1e-13))
    assert np.linalg.norm(x - c) <= 1e-8


def test_simplex_ball_intersection():
    # [DERIVED] min ||x - c||^2 over simplex /\ l1-ball(1): the simplex is a
    # face of the unit l1 ball, so the answer is the simplex projection of c
    rng = np.random.default_rng(0)
    for _ in range(5):
        c = rng.standard_normal(4)
        obj = _sq_obj(c)
        sets = [Simplex(4), L1Ball(4, 1.0)]
        x, _ = gfb_solve(obj, sets, GfbConfig(max_iters=20000, tol=1e-14))
        from fwsplit.sets import project_simplex
        assert np.linalg.norm(x - project_simplex(c)) <= 1e-6


def test_nested_balls_match_single_projection():
    # [DERIVED] l1(1) /\ l1(2.5) = l1(1), so the solution equals the plain
    # l1-ball projection of the target, computed by the independent routine
    c = np.array([3.0, -1.0])
    obj = _sq_obj(c)
    sets = [L1Ball(2, 1.0), L1Ball(2, 2.5)]
    cfg = GfbConfig(max_iters=50000, tol=1e-13)
    x, trace = gfb_solve(obj, sets, cfg, callback=None)
    from fwsplit.sets import project_l1_ball
    assert np.linalg.norm(x - project_l1_ball(c, 1.0)) <= 1e-6


def test_matrix_intersection_feasible_output():
    # symmetric l1 ball /\ PSD trace ball at matrix scale: output is
    # feasible for both sets within tolerance
    rng = np.random.default_rng(1)
    a = rng.standard_normal((8, 8))
    target = a @ a.T / 8.0
    obj = _sq_obj(target)
    sets = [SymL1Ball(8, 0.5 * np.sum(np.abs(target))),
            PsdTraceBall(8, 0.5 * np.trace(target))]
    x, trace = gfb_solve(obj, sets, GfbConfig(max_iters=20000, tol=1e-12))
    assert trace[-1].feasibility <= 1e-6
    for s in sets:
        assert np.linalg.norm(x - s.project(x)) <= 1e-5


def test_objective_improves_over_start():
    # the trend must be downward: final objective strictly below f(x0)
    c = np.array([2.0, 2.0])
    obj = _sq_obj(c)
    sets = [L1Ball(2, 1.0), L1Ball(2, 3.0)]
    from fwsplit.problem import BlockVector
    f_start = obj.value(BlockVector([np.zeros(2)]))
    x, trace = gfb_solve(obj, sets, GfbConfig(max_iters=2000, tol=1e-13))
    assert trace[-1].objective < f_start


def test_large_step_stays_bounded():
    # projections onto compact sets keep the iterate bounded even for an
    # absurd gradient step, so the run finishes without the blow-up guard
    obj = _sq_obj([1.0, 1.0])
    sets = [L1Ball(2, 1.0)]
    x, trace = gfb_solve(obj, sets, GfbConfig(step=1e6, max_iters=200))
    assert np.all(np.isfinite(x))
    assert np.sum(np.abs(x)) <= 1.0 + 1e-8


def test_trace_schema_columns():
    obj = _sq_obj([1.0, 0.0])
    sets = [L1Ball(2, 1.0)]
    x, trace = gfb_solve(obj, sets, GfbConfig(max_iters=20,
                                              diagnostics_every=5))
    assert all(r.fw_gap == 0.0 and r.drop_steps_cum == 0 for r in trace)
    assert trace[0].t == 0
