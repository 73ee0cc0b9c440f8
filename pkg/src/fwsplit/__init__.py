"""Constraint-splitting optimization with linear minimization oracles.

Minimize a smooth convex function over several compact convex sets coupled by
a linear consistency constraint, using only one linear minimization oracle
call per set and iteration, plus a projection-based baseline for comparison.
"""

from .gfb import GfbConfig, GfbDivergence, gfb_solve
from .kernels import BACKEND
from .linalg import (ConvergenceError, EigenDecomposition, jacobi_eig,
                     lanczos_extreme)
from .problem import (BlockVector, ConsistencyOperator, IntersectionOperator,
                      MatrixOperator, SmoothObjective, SplitProblem,
                      feasibility, intersection_operator, lagrangian_grad,
                      lagrangian_value, logistic_objective,
                      operator_norm_sq, quadratic_objective,
                      squared_distance_objective)
from .sets import (Atom, L1Ball, PsdL1Ball, PsdTraceBall, Simplex, SymL1Ball,
                   VertexPolytope)
from .solver import (DivergenceError, IterateRecord, SolverConfig,
                     StepSizeSchedule, default_eta0, estimate_inner_solution,
                     fwal_solve, rate_fit, read_trace_csv, write_trace_csv)
from .steps import (ActiveSet, ProductAtom, StepReport, afw_nondrop_step,
                    fw_duality_gap, fw_step, line_search)

__version__ = "0.1.0"

__all__ = [
    "ActiveSet", "Atom", "BACKEND", "BlockVector", "ConsistencyOperator",
    "ConvergenceError", "DivergenceError", "EigenDecomposition", "GfbConfig",
    "GfbDivergence", "IntersectionOperator", "IterateRecord", "L1Ball",
    "MatrixOperator", "ProductAtom", "PsdL1Ball", "PsdTraceBall", "Simplex",
    "SmoothObjective", "SolverConfig", "SplitProblem", "StepReport",
    "StepSizeSchedule", "SymL1Ball", "VertexPolytope", "afw_nondrop_step",
    "default_eta0", "estimate_inner_solution", "feasibility",
    "fw_duality_gap", "fw_step", "fwal_solve", "gfb_solve",
    "intersection_operator", "jacobi_eig", "lagrangian_grad",
    "lagrangian_value", "lanczos_extreme", "line_search",
    "logistic_objective", "operator_norm_sq", "quadratic_objective",
    "rate_fit", "read_trace_csv", "squared_distance_objective",
    "write_trace_csv",
]
