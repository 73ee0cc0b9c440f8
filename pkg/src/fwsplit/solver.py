"""Outer loop of the splitting solver: one inner Frank-Wolfe step on the
augmented Lagrangian, then a dual ascent step y <- y + eta_t M x.

Also provides the inner-minimizer estimator (for dual-function diagnostics)
and an empirical rate fitter for convergence traces.
"""

import csv
import time
import warnings
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .problem import (BlockVector, SplitProblem, feasibility,
                      lagrangian_value)
from .steps import (ActiveSet, StepReport, afw_nondrop_step, fw_duality_gap,
                    fw_step, initial_iterate)

TRACE_COLUMNS = ["t", "wall_time_s", "lagrangian", "fw_gap", "feasibility",
                 "dual_norm", "objective", "drop_steps_cum"]


class DivergenceError(RuntimeError):
    """Feasibility blew up; the dual step size is too large.

    Carries the last iterates so callers can inspect them.
    """

    def __init__(self, message, x=None, y=None, trace=None):
        super().__init__(message)
        self.x = x
        self.y = y
        self.trace = trace


@dataclass
class StepSizeSchedule:
    """Dual step sizes: constant, harmonic 2 eta0/(t+2), or warm-started
    (constant for warm_steps iterations, then harmonic restarted at 0)."""

    kind: str = "harmonic"  # "constant" | "harmonic" | "warm"
    eta0: float = 0.1
    warm_steps: int = 0

    def __post_init__(self):
        if self.kind not in ("constant", "harmonic", "warm"):
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        if self.eta0 <= 0:
            raise ValueError("eta0 must be positive")

    def eta(self, t):
        if self.kind == "constant":
            return self.eta0
        if self.kind == "harmonic":
            return 2.0 * self.eta0 / (t + 2.0)
        if t < self.warm_steps:
            return self.eta0
        return 2.0 * self.eta0 / ((t - self.warm_steps) + 2.0)


@dataclass
class SolverConfig:
    lam: Optional[float] = None  # None: keep the problem's penalty
    schedule: StepSizeSchedule = field(default_factory=StepSizeSchedule)
    inner: str = "fw"  # "fw" | "afw"
    max_outer_iters: int = 1000
    time_budget_s: Optional[float] = None
    stop_feasibility_tol: float = 1e-8
    stop_gap_tol: float = 1e-8
    diagnostics_every: int = 1
    inner_certificate_tol: float = 1e-9
    divergence_patience: int = 2000  # iterations; <=0 disables stall check
    seed: int = 0

    def __post_init__(self):
        if self.max_outer_iters < 1:
            raise ValueError("max_outer_iters must be at least 1")
        if self.stop_feasibility_tol <= 0 or self.stop_gap_tol <= 0:
            raise ValueError("stopping tolerances must be positive")
        if self.inner not in ("fw", "afw"):
            raise ValueError(f"unknown inner step {self.inner!r}")


@dataclass
class IterateRecord:
    t: int
    wall_time_s: float
    lagrangian: float
    fw_gap: float
    feasibility: float
    dual_norm: float
    objective: float
    drop_steps_cum: int

    def row(self):
        return [self.t, self.wall_time_s, self.lagrangian, self.fw_gap,
                self.feasibility, self.dual_norm, self.objective,
                self.drop_steps_cum]


def default_eta0(lam):
    """Heuristic dual step scale; the theory's constant is not computable."""
    return lam / 10.0


def fwal_solve(p: SplitProblem, cfg: SolverConfig, callback=None):
    """Run the outer loop; returns (x, y, trace).

    ``callback(t, x, y)``, when given, fires at every recorded diagnostic.
    Raises :class:`DivergenceError` when the feasibility grows by 10x over a
    100-iteration window above its starting level, or when its running
    minimum stops improving for ``divergence_patience`` iterations while
    still far from the stopping tolerance.  Both symptoms mean the dual
    step size is too large for the problem: the feasible sets are compact,
    so a too-aggressive dual either blows the residual up to the diameter
    scale or locks the primal into a non-convergent oscillation.
    """
    if cfg.lam is not None and cfg.lam != p.lam:
        p = SplitProblem(p.objective, p.sets, p.op, cfg.lam)
    use_afw = cfg.inner == "afw"
    x, start_atom = initial_iterate(p)
    active = ActiveSet.singleton(start_atom) if use_afw else None
    y = np.zeros(p.op.out_dim)
    trace: List[IterateRecord] = []
    drop_cum = 0
    t_start = time.perf_counter()
    feas_window = []
    feas0 = None
    feas_best = np.inf
    stalled_for = 0
    for t in range(cfg.max_outer_iters):
        if use_afw:
            # full expansion re-check/resync only periodically; per-step
            # incremental updates drift on the order of machine epsilon
            x, active, rep = afw_nondrop_step(p, x, active, y,
                                              drop_cap=10 * (t + 2),
                                              check=(t % 128 == 0))
            drop_cum += rep.drop_steps_taken
        else:
            x, rep = fw_step(p, x, y)
        eta = cfg.schedule.eta(t)
        mx = p.op.apply(x)
        y = y + eta * mx
        feas = float(np.linalg.norm(mx))
        if feas0 is None:
            feas0 = feas
        feas_window.append(feas)
        if len(feas_window) > 101:
            feas_window.pop(0)
        record_now = (t % cfg.diagnostics_every == 0
                      or t == cfg.max_outer_iters - 1)
        if record_now:
            rec = IterateRecord(
                t=t,
                wall_time_s=time.perf_counter() - t_start,
                lagrangian=lagrangian_value(p, x, y),
                fw_gap=rep.fw_gap,
                feasibility=feas,
                dual_norm=float(np.linalg.norm(y)),
                objective=float(p.objective.value(x)),
                drop_steps_cum=drop_cum,
            )
            trace.append(rec)
            if callback is not None:
                callback(t, x, y)
        if feas <= cfg.stop_feasibility_tol and rep.fw_gap <= cfg.stop_gap_tol:
            if not record_now:
                trace.append(IterateRecord(
                    t, time.perf_counter() - t_start,
                    lagrangian_value(p, x, y), rep.fw_gap, feas,
                    float(np.linalg.norm(y)), float(p.objective.value(x)),
                    drop_cum))
            break
        if (len(feas_window) == 101 and feas > 10.0 * feas_window[0]
                and feas > 10.0 * feas0):
            raise DivergenceError(
                "feasibility grew 10x over 100 iterations; the dual step "
                "size eta0 is too large for this problem -- decrease it "
                "(or increase lambda)", x=x, y=y, trace=trace)
        if feas < feas_best * (1.0 - 1e-3):
            feas_best = feas
            stalled_for = 0
        else:
            stalled_for += 1
        if (cfg.divergence_patience > 0
                and stalled_for >= cfg.divergence_patience
                and feas_best > 10.0 * cfg.stop_feasibility_tol):
            raise DivergenceError(
                f"best feasibility {feas_best:.3e} has not improved for "
                f"{stalled_for} iterations; the iteration is oscillating -- "
                "the dual step size eta0 is too large for this problem, "
                "decrease it (or increase lambda)", x=x, y=y, trace=trace)
        if (cfg.time_budget_s is not None
                and time.perf_counter() - t_start > cfg.time_budget_s):
            break
    return x, y, trace


def estimate_inner_solution(p: SplitProblem, y, tol, max_steps,
                            inner="auto"):
    """Approximate argmin_x L(x, y) over the product set, with a certificate.

    Runs inner Frank-Wolfe steps (away-step variant when every set carries a
    vertex list, which converges linearly) until the FW duality gap drops
    below ``tol``.  The returned certificate is that final gap, an upper
    bound on L(x_hat, y) - d(y).
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if inner == "auto":
        inner = "afw" if all(s.has_vertex_list for s in p.sets) else "fw"
    x, start_atom = initial_iterate(p)
    active = ActiveSet.singleton(start_atom) if inner == "afw" else None
    gap = fw_duality_gap(p, x, y)
    steps = 0
    while gap > tol and steps < max_steps:
        if inner == "afw":
            x, active, rep = afw_nondrop_step(p, x, active, y,
                                              drop_cap=10 * (steps + 2))
        else:
            x, rep = fw_step(p, x, y)
        gap = rep.fw_gap if rep.gamma == 0.0 else fw_duality_gap(p, x, y)
        steps += 1
    if gap > tol:
        warnings.warn(f"inner solve stopped at gap {gap:.3e} > tol {tol:.3e} "
                      f"after {steps} steps")
    return x, float(max(gap, 0.0))


def rate_fit(values, field_name=None, window=None, t_values=None):
    """Fit log(values) against log(t) (sublinear) and t (linear).

    ``values`` may be a list of IterateRecord (then ``field_name`` picks the
    series and t comes from the records) or a plain sequence.  Returns
    (model, exponent_or_ratio, r_squared) for the better-fitting model:
    the sublinear exponent is the log-log slope, the linear ratio is the
    per-step factor exp(slope).
    """
    if len(values) > 0 and isinstance(values[0], IterateRecord):
        t = np.array([r.t + 1.0 for r in values])
        v = np.array([getattr(r, field_name) for r in values], dtype=float)
    else:
        v = np.asarray(values, dtype=float)
        t = (np.asarray(t_values, dtype=float) if t_values is not None
             else np.arange(1.0, v.size + 1.0))
    if window is not None:
        if window < 10:
            raise ValueError("window must be at least 10")
        if v.size < window:
            raise ValueError(f"need at least {window} samples, got {v.size}")
        t, v = t[-window:], v[-window:]
    if np.any(v <= 0.0):
        warnings.warn("non-positive values floored at 1e-300 before log fit")
        v = np.maximum(v, 1e-300)
    logv = np.log(v)
    sub_slope, sub_r2 = _lsq_fit(np.log(t), logv)
    lin_slope, lin_r2 = _lsq_fit(t, logv)
    if sub_r2 >= lin_r2:
        return "sublinear", float(sub_slope), float(sub_r2)
    return "linear", float(np.exp(lin_slope)), float(lin_r2)


def _lsq_fit(a, b):
    a1 = np.column_stack([a, np.ones_like(a)])
    coef, *_ = np.linalg.lstsq(a1, b, rcond=None)
    pred = a1 @ coef
    ss_res = float(np.sum((b - pred) ** 2))
    ss_tot = float(np.sum((b - np.mean(b)) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else (1.0 if ss_res == 0 else 0.0)
    return float(coef[0]), r2


def write_trace_csv(trace, path):
    """Serialize a trace with the fixed column schema."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_COLUMNS)
        for rec in trace:
            writer.writerow(rec.row())


def read_trace_csv(path):
    """Round-trip loader for trace CSVs."""
    out = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != TRACE_COLUMNS:
            raise ValueError(f"unexpected trace schema: {reader.fieldnames}")
        for row in reader:
            out.append(IterateRecord(
                t=int(row["t"]), wall_time_s=float(row["wall_time_s"]),
                lagrangian=float(row["lagrangian"]),
                fw_gap=float(row["fw_gap"]),
                feasibility=float(row["feasibility"]),
                dual_norm=float(row["dual_norm"]),
                objective=float(row["objective"]),
                drop_steps_cum=int(row["drop_steps_cum"])))
    return out
