"""Split problems: block iterates, the consistency operator, and the
augmented Lagrangian

    L(x, y) = f(x) + <y, Mx> + (lambda / 2) ||Mx||^2

evaluated over the product of the constraint sets.  Matrix-valued blocks are
handled through a flatten/unflatten isomorphism so a single operator stack
serves vector and matrix problems alike.
"""

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np


class BlockVector:
    """Ordered list of per-block arrays (vectors or symmetric matrices)."""

    __slots__ = ("blocks",)

    def __init__(self, blocks):
        self.blocks = [np.asarray(b, dtype=float) for b in blocks]

    @classmethod
    def zeros_like(cls, other):
        return cls([np.zeros_like(b) for b in other.blocks])

    @classmethod
    def zeros(cls, shapes):
        return cls([np.zeros(s) for s in shapes])

    @property
    def num_blocks(self):
        return len(self.blocks)

    @property
    def shapes(self):
        return [b.shape for b in self.blocks]

    @property
    def total_dim(self):
        return sum(b.size for b in self.blocks)

    def copy(self):
        return BlockVector([b.copy() for b in self.blocks])

    def ravel(self):
        return np.concatenate([b.ravel() for b in self.blocks])

    @classmethod
    def unravel(cls, flat, shapes):
        blocks = []
        pos = 0
        for s in shapes:
            size = int(np.prod(s))
            blocks.append(flat[pos:pos + size].reshape(s))
            pos += size
        return cls(blocks)

    def dot(self, other):
        return float(sum(np.sum(a * b) for a, b in zip(self.blocks, other.blocks)))

    def norm(self):
        return float(np.sqrt(self.dot(self)))

    def __add__(self, other):
        return BlockVector([a + b for a, b in zip(self.blocks, other.blocks)])

    def __sub__(self, other):
        return BlockVector([a - b for a, b in zip(self.blocks, other.blocks)])

    def __mul__(self, scalar):
        return BlockVector([scalar * b for b in self.blocks])

    __rmul__ = __mul__

    def axpy(self, alpha, other):
        """self += alpha * other, in place."""
        for a, b in zip(self.blocks, other.blocks):
            a += alpha * b
        return self


class ConsistencyOperator:
    """Linear map M acting on block vectors, with its adjoint."""

    out_dim: int

    def apply(self, x: BlockVector) -> np.ndarray:
        raise NotImplementedError

    def adjoint(self, y: np.ndarray) -> BlockVector:
        raise NotImplementedError


class IntersectionOperator(ConsistencyOperator):
    """Consistency map whose kernel is "all blocks equal".

    K = 2 gives M(u, v) = u - v.  For K > 2 the first block is the hub:
    Mx = (x1 - x2, ..., x1 - xK) stacked, which vanishes iff all blocks agree
    and keeps M^T M block structure simple.
    """

    def __init__(self, num_blocks, block_shape):
        if num_blocks < 2:
            raise ValueError("an intersection needs at least 2 blocks")
        self.num_blocks = num_blocks
        if np.isscalar(block_shape):
            block_shape = (int(block_shape),)
        self.block_shape = tuple(int(s) for s in block_shape)
        self.block_size = int(np.prod(self.block_shape))
        self.out_dim = (num_blocks - 1) * self.block_size

    def apply(self, x):
        hub = x.blocks[0].ravel()
        return np.concatenate([hub - x.blocks[k].ravel()
                               for k in range(1, self.num_blocks)])

    def adjoint(self, y):
        parts = y.reshape(self.num_blocks - 1, self.block_size)
        blocks = [np.sum(parts, axis=0).reshape(self.block_shape)]
        for k in range(self.num_blocks - 1):
            blocks.append((-parts[k]).reshape(self.block_shape))
        return BlockVector(blocks)


class MatrixOperator(ConsistencyOperator):
    """Explicit M = [A_1, ..., A_K] with each A_k of shape (d, d_k)."""

    def __init__(self, matrices: Sequence[np.ndarray]):
        mats = [np.asarray(a, dtype=float) for a in matrices]
        d = mats[0].shape[0]
        if any(a.shape[0] != d for a in mats):
            raise ValueError("all A_k must share the output dimension")
        self.matrices = mats
        self.out_dim = d

    def apply(self, x):
        return sum(a @ b.ravel() for a, b in zip(self.matrices, x.blocks))

    def adjoint(self, y):
        return BlockVector([a.T @ y for a in self.matrices])


def intersection_operator(num_blocks, block_shape):
    """Build the star-encoded intersection consistency operator."""
    return IntersectionOperator(num_blocks, block_shape)


def operator_norm_sq(op: ConsistencyOperator, shapes, iters=100, seed=0):
    """||M^T M|| by power iteration on x -> M^T(Mx)."""
    rng = np.random.default_rng(seed)
    x = BlockVector([rng.standard_normal(s) for s in shapes])
    x = (1.0 / max(x.norm(), 1e-300)) * x
    lam = 0.0
    for _ in range(iters):
        z = op.adjoint(op.apply(x))
        lam = z.norm()
        if lam < 1e-300:
            return 0.0
        x = (1.0 / lam) * z
    return float(lam)


@dataclass
class SmoothObjective:
    """Smooth convex objective with value/gradient oracles.

    ``curvature(x, d)`` returns the directional second derivative d^T H d;
    it is exact (and x-independent) for quadratics, which enables closed-form
    line search.
    """

    value: Callable[[BlockVector], float]
    grad: Callable[[BlockVector], BlockVector]
    lipschitz: Optional[float] = None
    strong_convexity: Optional[float] = None
    is_quadratic: bool = False
    curvature: Optional[Callable[[BlockVector, BlockVector], float]] = None


def squared_distance_objective(targets: Sequence[np.ndarray], weights=None):
    """f(x) = sum_k w_k ||x_k - c_k||^2 (Frobenius for matrix blocks).

    The default weights 1/K make f equal the average per-block square loss,
    so at consistency the value matches the single-variable loss.
    """
    targets = [np.asarray(t, dtype=float) for t in targets]
    k = len(targets)
    if weights is None:
        weights = [1.0 / k] * k
    weights = [float(w) for w in weights]

    def value(x):
        return float(sum(w * np.sum((b - t) ** 2)
                         for w, b, t in zip(weights, x.blocks, targets)))

    def grad(x):
        return BlockVector([2.0 * w * (b - t)
                            for w, b, t in zip(weights, x.blocks, targets)])

    def curvature(x, d):
        return float(sum(2.0 * w * np.sum(db ** 2)
                         for w, db in zip(weights, d.blocks)))

    return SmoothObjective(value=value, grad=grad,
                           lipschitz=2.0 * max(weights),
                           strong_convexity=2.0 * min(weights),
                           is_quadratic=True, curvature=curvature)


def quadratic_objective(q: np.ndarray, b: np.ndarray, shapes=None):
    """f(x) = 0.5 x^T Q x + b^T x on the flattened block vector."""
    q = np.asarray(q, dtype=float)
    b = np.asarray(b, dtype=float)
    w = np.linalg.eigvalsh(0.5 * (q + q.T))

    def value(x):
        flat = x.ravel()
        return float(0.5 * flat @ q @ flat + b @ flat)

    def grad(x):
        flat = x.ravel()
        g = 0.5 * (q + q.T) @ flat + b
        return BlockVector.unravel(g, x.shapes)

    def curvature(x, d):
        flat = d.ravel()
        return float(flat @ q @ flat)

    return SmoothObjective(value=value, grad=grad,
                           lipschitz=float(max(w[-1], 0.0)),
                           strong_convexity=float(max(w[0], 0.0)),
                           is_quadratic=True, curvature=curvature)


def logistic_objective(features: np.ndarray, labels: np.ndarray):
    """Mean logistic loss on the flattened block vector (non-quadratic)."""
    a = np.asarray(features, dtype=float)
    y = np.asarray(labels, dtype=float)
    n = a.shape[0]

    def margins(x):
        return y * (a @ x.ravel())

    def value(x):
        m = margins(x)
        return float(np.mean(np.logaddexp(0.0, -m)))

    def grad(x):
        m = margins(x)
        sig = 1.0 / (1.0 + np.exp(m))
        g = -(a.T @ (sig * y)) / n
        return BlockVector.unravel(g, x.shapes)

    lip = float(np.linalg.norm(a, 2) ** 2 / (4.0 * n))
    return SmoothObjective(value=value, grad=grad, lipschitz=lip,
                           is_quadratic=False)


@dataclass
class SplitProblem:
    """Objective + constraint blocks + consistency operator + penalty."""

    objective: SmoothObjective
    sets: List
    op: ConsistencyOperator
    lam: float = 1.0

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError("lambda must be positive")

    @property
    def shapes(self):
        return [s.shape for s in self.sets]


def lagrangian_value(p: SplitProblem, x: BlockVector, y: np.ndarray) -> float:
    """f(x) + <y, Mx> + (lambda/2) ||Mx||^2."""
    mx = p.op.apply(x)
    if mx.shape != y.shape:
        raise ValueError(f"dual dimension mismatch: Mx {mx.shape}, y {y.shape}")
    return float(p.objective.value(x) + y @ mx + 0.5 * p.lam * (mx @ mx))


def lagrangian_grad(p: SplitProblem, x: BlockVector, y: np.ndarray) -> BlockVector:
    """grad f(x) + M^T y + lambda M^T (Mx), blockwise."""
    mx = p.op.apply(x)
    if mx.shape != y.shape:
        raise ValueError(f"dual dimension mismatch: Mx {mx.shape}, y {y.shape}")
    g = p.objective.grad(x)
    return g + p.op.adjoint(y + p.lam * mx)


def lagrangian_curvature(p: SplitProblem, x: BlockVector, d: BlockVector) -> float:
    """Directional second derivative of L(., y) along d (quadratic f only)."""
    if not p.objective.is_quadratic or p.objective.curvature is None:
        raise ValueError("exact curvature requires a quadratic objective")
    md = p.op.apply(d)
    return float(p.objective.curvature(x, d) + p.lam * (md @ md))


def feasibility(p: SplitProblem, x: BlockVector) -> float:
    """||Mx||_2, the consistency-constraint violation."""
    return float(np.linalg.norm(p.op.apply(x)))
