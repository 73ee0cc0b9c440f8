"""Constraint sets and their linear minimization oracles.

Each set exposes ``lmo`` (the only access the splitting solver needs),
``contains`` for membership checks, and a Euclidean ``project`` where the
forward-backward baseline requires one.  Oracle outputs are :class:`Atom`
objects: sparse or rank-one descriptions of extreme points, with a hashable
``key`` for active-set bookkeeping on vertex-enumerable sets.

Tie-breaking is lowest (lexicographic) index everywhere so oracle calls are
deterministic.
"""

import itertools

import numpy as np

from .kernels import project_l1 as _project_l1_kernel
from .linalg import (check_symmetric, extreme_eigpair_dense, jacobi_eig,
                     lanczos_extreme, symmetrize)

ZERO = "zero"
COORDINATE = "coordinate"
RANK_ONE = "rank_one"
DENSE = "dense"


class Atom:
    """Sparse description of an extreme point (or the zero matrix).

    kind is one of:
      - "zero":        the all-zeros point of the given shape
      - "coordinate":  value * e_index, a signed coordinate vector
      - "rank_one":    scale * u u^T for a unit vector u (symmetric matrix)
      - "dense":       an explicit array

    ``key`` identifies the atom inside an active set; rank-one atoms use a
    content-based key so bitwise-equal oracle outputs share one entry.
    """

    __slots__ = ("kind", "shape", "index", "value", "scale", "u", "array", "key")

    def __init__(self, kind, shape, index=None, value=None, scale=None, u=None,
                 array=None, key=None):
        self.kind = kind
        self.shape = tuple(shape)
        self.index = index
        self.value = value
        self.scale = scale
        self.u = u
        self.array = array
        self.key = key

    @classmethod
    def zero(cls, shape, key=(ZERO,)):
        return cls(ZERO, shape, key=key)

    @classmethod
    def coordinate(cls, index, value, dim, key=None):
        return cls(COORDINATE, (dim,), index=index, value=float(value), key=key)

    @classmethod
    def rank_one(cls, scale, u):
        u = np.asarray(u, dtype=float)
        nrm = np.linalg.norm(u)
        if abs(nrm - 1.0) > 1e-10:
            raise ValueError(f"rank-one factor must be unit norm, got {nrm}")
        # content-based key: bitwise-equal factors collapse to one active-set
        # entry, distinct ones stay separate (still a valid convex expansion)
        key = (RANK_ONE, float(scale), u.tobytes())
        return cls(RANK_ONE, (u.size, u.size), scale=float(scale), u=u, key=key)

    @classmethod
    def dense_point(cls, array, key=None):
        array = np.asarray(array, dtype=float)
        return cls(DENSE, array.shape, array=array, key=key)

    def dense(self):
        """Materialize the atom as a full array."""
        if self.kind == ZERO:
            return np.zeros(self.shape)
        if self.kind == COORDINATE:
            out = np.zeros(self.shape)
            out[self.index] = self.value
            return out
        if self.kind == RANK_ONE:
            return self.scale * np.outer(self.u, self.u)
        return self.array.copy()

    def inner(self, g):
        """<atom, g> (Frobenius inner product for matrix atoms)."""
        if self.kind == ZERO:
            return 0.0
        if self.kind == COORDINATE:
            return self.value * float(g[self.index])
        if self.kind == RANK_ONE:
            return self.scale * float(self.u @ g @ self.u)
        return float(np.sum(self.array * g))

    def add_to(self, out, weight):
        """out += weight * atom, in place."""
        if self.kind == ZERO:
            return
        if self.kind == COORDINATE:
            out[self.index] += weight * self.value
        elif self.kind == RANK_ONE:
            out += (weight * self.scale) * np.outer(self.u, self.u)
        else:
            out += weight * self.array

    def __repr__(self):
        return f"Atom({self.kind}, shape={self.shape}, key={self.key})"


class ConstraintSet:
    """Compact convex set accessed through its linear minimization oracle."""

    has_projection = False
    has_vertex_list = False

    @property
    def shape(self):
        raise NotImplementedError

    @property
    def diameter(self):
        """Euclidean diameter (an upper bound is fine for step-size heuristics)."""
        raise NotImplementedError

    def lmo(self, grad) -> Atom:
        raise NotImplementedError

    def contains(self, point, tol=1e-8) -> bool:
        raise NotImplementedError

    def project(self, point):
        raise NotImplementedError(f"{type(self).__name__} has no projection")

    def vertices(self):
        raise NotImplementedError(f"{type(self).__name__} has no vertex list")

    def initial_atom(self) -> Atom:
        """Deterministic starting vertex: the LMO at the zero direction."""
        return self.lmo(np.zeros(self.shape))


# ---------------------------------------------------------------------------
# vector sets
# ---------------------------------------------------------------------------

class L1Ball(ConstraintSet):
    """{x in R^dim : ||x||_1 <= beta}."""

    has_projection = True
    has_vertex_list = True

    def __init__(self, dim, beta):
        if beta <= 0:
            raise ValueError("beta must be positive")
        if dim < 1:
            raise ValueError("dim must be at least 1")
        self.dim = dim
        self.beta = float(beta)

    @property
    def shape(self):
        return (self.dim,)

    @property
    def diameter(self):
        return 2.0 * self.beta

    def lmo(self, grad):
        return lmo_l1_ball(grad, self.beta)

    def contains(self, point, tol=1e-8):
        return float(np.sum(np.abs(point))) <= self.beta + tol

    def project(self, point):
        return project_l1_ball(np.asarray(point, dtype=float), self.beta)

    def vertices(self):
        out = []
        for i in range(self.dim):
            for sign in (1.0, -1.0):
                out.append(Atom.coordinate(i, sign * self.beta, self.dim,
                                           key=(COORDINATE, i, sign)))
        return out


class Simplex(ConstraintSet):
    """Probability simplex {x >= 0, sum x = 1}."""

    has_projection = True
    has_vertex_list = True

    def __init__(self, dim):
        if dim < 1:
            raise ValueError("dim must be at least 1")
        self.dim = dim

    @property
    def shape(self):
        return (self.dim,)

    @property
    def diameter(self):
        return np.sqrt(2.0)

    def lmo(self, grad):
        return lmo_simplex(grad)

    def contains(self, point, tol=1e-8):
        p = np.asarray(point, dtype=float)
        return bool(np.min(p) >= -tol and abs(np.sum(p) - 1.0) <= tol)

    def project(self, point):
        return project_simplex(np.asarray(point, dtype=float))

    def vertices(self):
        return [Atom.coordinate(i, 1.0, self.dim, key=(COORDINATE, i, 1.0))
                for i in range(self.dim)]


class VertexPolytope(ConstraintSet):
    """Convex hull of an explicit vertex list."""

    has_vertex_list = True

    def __init__(self, vertex_array):
        v = np.asarray(vertex_array, dtype=float)
        if v.ndim != 2 or v.shape[0] < 1:
            raise ValueError("need a (n_vertices, dim) array with >= 1 vertex")
        self.vertex_array = v

    @property
    def shape(self):
        return (self.vertex_array.shape[1],)

    @property
    def diameter(self):
        v = self.vertex_array
        if v.shape[0] == 1:
            return 1.0  # degenerate singleton; positive by contract
        d2 = np.sum((v[:, None, :] - v[None, :, :]) ** 2, axis=-1)
        return float(np.sqrt(np.max(d2)))

    def lmo(self, grad):
        return lmo_vertex_polytope(self.vertex_array, grad)

    def contains(self, point, tol=1e-8):
        # fast path: the point is (numerically) one of the vertices
        p = np.asarray(point, dtype=float)
        v = self.vertex_array
        vertex_dist = np.sqrt(np.sum((v - p[None, :]) ** 2, axis=-1))
        if float(np.min(vertex_dist)) <= tol:
            return True
        # hull membership via accelerated projected gradient on the weights
        n = v.shape[0]
        w = np.full(n, 1.0 / n)
        z = w.copy()
        gram = v @ v.T
        target = v @ p
        lip = max(np.linalg.norm(gram, 2), 1e-12)
        t_acc = 1.0
        goal = max(tol, 1e-7)
        for _ in range(20000):
            g = gram @ z - target
            w_next = project_simplex(z - g / lip)
            t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t_acc * t_acc))
            z = w_next + ((t_acc - 1.0) / t_next) * (w_next - w)
            w, t_acc = w_next, t_next
            if np.linalg.norm(w @ v - p) <= goal:
                return True
        return bool(np.linalg.norm(w @ v - p) <= goal)

    def vertices(self):
        return [Atom.dense_point(self.vertex_array[i], key=(DENSE, i))
                for i in range(self.vertex_array.shape[0])]


# ---------------------------------------------------------------------------
# symmetric-matrix sets
# ---------------------------------------------------------------------------

class PsdL1Ball(ConstraintSet):
    """Entry-sparsity matrix set with the experiment's published oracle.

    The oracle returns beta * (E_ij + E_ji) / 2 at the most negative entry of
    D + D^T, or the zero atom when no entry is negative.  The convex hull of
    these atoms is {S symmetric, S >= 0 entrywise, ||S||_1 <= beta}, which is
    what ``contains`` checks.  ``diagonal_only=True`` restricts the atoms to
    beta * E_ii (whose hull is PSD).
    """

    has_vertex_list = True

    def __init__(self, dim, beta, diagonal_only=False):
        if beta <= 0:
            raise ValueError("beta must be positive")
        self.dim = dim
        self.beta = float(beta)
        self.diagonal_only = diagonal_only

    @property
    def shape(self):
        return (self.dim, self.dim)

    @property
    def diameter(self):
        return 2.0 * self.beta  # upper bound; atoms all have ||.||_F <= beta

    def lmo(self, grad):
        return lmo_psd_l1(grad, self.beta, diagonal_only=self.diagonal_only)

    def contains(self, point, tol=1e-8):
        s = np.asarray(point, dtype=float)
        scale = 1.0 + np.max(np.abs(s))
        if np.max(np.abs(s - s.T)) > 1e-8 * scale:
            return False
        if float(np.min(s)) < -tol:
            return False
        if self.diagonal_only and float(np.max(np.abs(s - np.diag(np.diag(s))))) > tol:
            return False
        return float(np.sum(np.abs(s))) <= self.beta + tol

    def vertices(self):
        out = [Atom.zero((self.dim, self.dim))]
        for i in range(self.dim):
            js = [i] if self.diagonal_only else range(i, self.dim)
            for j in js:
                out.append(_pair_atom(i, j, self.beta, self.dim))
        return out


class PsdTraceBall(ConstraintSet):
    """{S PSD, trace(S) <= beta} — the PSD trace-norm ball.

    The oracle needs only the most negative eigenpair of the direction; the
    projection requires a full eigendecomposition.  ``lmo_method`` is
    ``"lanczos"`` (matvec-only), ``"dense"`` (direct LAPACK subset solve), or
    ``"auto"``: dense up to dimension 256, where the direct solver beats a
    cold iterative one, and lanczos beyond.
    """

    has_projection = True

    _AUTO_DENSE_MAX_DIM = 256

    def __init__(self, dim, beta, lmo_tol=1e-8, lanczos_seed=0,
                 lmo_method="auto"):
        if beta <= 0:
            raise ValueError("beta must be positive")
        if lmo_method not in ("auto", "dense", "lanczos"):
            raise ValueError(f"unknown lmo method {lmo_method!r}")
        self.dim = dim
        self.beta = float(beta)
        self.lmo_tol = lmo_tol
        self.lanczos_seed = lanczos_seed
        if lmo_method == "auto":
            lmo_method = ("dense" if dim <= self._AUTO_DENSE_MAX_DIM
                          else "lanczos")
        self.lmo_method = lmo_method
        self._warm = None  # eigenvector of the previous LMO call

    @property
    def shape(self):
        return (self.dim, self.dim)

    @property
    def diameter(self):
        return 2.0 * self.beta

    def lmo(self, grad):
        atom = lmo_psd_trace(grad, self.beta, tol=self.lmo_tol,
                             seed=self.lanczos_seed, v0=self._warm,
                             method=self.lmo_method)
        # successive solver directions change slowly, so the previous
        # eigenvector is an excellent Lanczos start for the next call
        self._warm = atom.u if atom.kind == RANK_ONE else None
        return atom

    def contains(self, point, tol=1e-8):
        s = np.asarray(point, dtype=float)
        scale = 1.0 + np.max(np.abs(s))
        if np.max(np.abs(s - s.T)) > 1e-8 * scale:
            return False
        w = jacobi_eig(symmetrize(s)).eigenvalues
        if float(w[-1]) < -tol:
            return False
        return float(np.trace(s)) <= self.beta + tol

    def project(self, point):
        return project_trace_ball_psd(point, self.beta)

    def initial_atom(self):
        return Atom.zero((self.dim, self.dim))


class SymL1Ball(ConstraintSet):
    """{S symmetric : ||S||_1 <= beta} with signed sparse atoms.

    Used by the projection baseline (entrywise soft thresholding) and as a
    signed counterpart of :class:`PsdL1Ball` in toy problems.
    """

    has_projection = True
    has_vertex_list = True

    def __init__(self, dim, beta):
        if beta <= 0:
            raise ValueError("beta must be positive")
        self.dim = dim
        self.beta = float(beta)

    @property
    def shape(self):
        return (self.dim, self.dim)

    @property
    def diameter(self):
        return 2.0 * self.beta

    def lmo(self, grad):
        d = check_symmetric(grad, tol=1e-8)
        b = d + d.T
        flat = np.abs(b).ravel()
        idx = int(np.argmax(flat))
        i, j = divmod(idx, self.dim)
        if i > j:
            i, j = j, i
        sign = -1.0 if b[i, j] > 0 else 1.0
        atom = _pair_atom(i, j, sign * self.beta, self.dim)
        return atom

    def contains(self, point, tol=1e-8):
        s = np.asarray(point, dtype=float)
        scale = 1.0 + np.max(np.abs(s))
        if np.max(np.abs(s - s.T)) > 1e-8 * scale:
            return False
        return float(np.sum(np.abs(s))) <= self.beta + tol

    def project(self, point):
        s = symmetrize(point)
        flat = project_l1_ball(s.ravel(), self.beta)
        return symmetrize(flat.reshape(s.shape))

    def vertices(self):
        out = []
        for i in range(self.dim):
            for j in range(i, self.dim):
                for sign in (1.0, -1.0):
                    out.append(_pair_atom(i, j, sign * self.beta, self.dim))
        return out


def _pair_atom(i, j, scale, dim):
    """scale * (E_ij + E_ji) / 2 as a dense atom with a sparse-pair key."""
    m = np.zeros((dim, dim))
    if i == j:
        m[i, i] = scale
    else:
        m[i, j] = 0.5 * scale
        m[j, i] = 0.5 * scale
    return Atom.dense_point(m, key=("pair", i, j, 1.0 if scale >= 0 else -1.0))


# ---------------------------------------------------------------------------
# oracle functions (set classes delegate here)
# ---------------------------------------------------------------------------

def lmo_l1_ball(r, beta):
    """Signed-coordinate vertex of the l1 ball minimizing <., r>.

    Ties break at the lowest index; the zero direction returns +beta * e_0.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    r = np.asarray(r, dtype=float)
    if r.size == 0:
        raise ValueError("empty direction vector")
    i = int(np.argmax(np.abs(r)))
    value = beta if r[i] == 0.0 else -beta * np.sign(r[i])
    sign = 1.0 if value >= 0 else -1.0
    return Atom.coordinate(i, value, r.size, key=(COORDINATE, i, sign))


def lmo_simplex(r):
    """Simplex vertex e_i with i = argmin r_i, lowest-index tie-break."""
    r = np.asarray(r, dtype=float)
    if r.size == 0:
        raise ValueError("empty direction vector")
    i = int(np.argmin(r))
    return Atom.coordinate(i, 1.0, r.size, key=(COORDINATE, i, 1.0))


def lmo_vertex_polytope(vertices, r):
    """Vertex of an explicit list minimizing <v, r>, lowest-index tie-break."""
    v = np.asarray(vertices, dtype=float)
    r = np.asarray(r, dtype=float)
    if v.shape[1] != r.size:
        raise ValueError(f"dimension mismatch: vertices {v.shape}, r {r.shape}")
    i = int(np.argmin(v @ r))
    return Atom.dense_point(v[i], key=(DENSE, i))


def lmo_psd_l1(d, beta1, diagonal_only=False):
    """Sparse-entry oracle beta1 (E_ij + E_ji)/2 at argmin of D_ij + D_ji.

    Returns the zero atom when every candidate value is >= 0 (zero belongs to
    the set and then minimizes the linear form).
    """
    if beta1 <= 0:
        raise ValueError("beta1 must be positive")
    d = check_symmetric(d, tol=1e-8)
    b = d + d.T
    if diagonal_only:
        diag = np.diag(b)
        i = int(np.argmin(diag))
        if diag[i] >= 0:
            return Atom.zero(d.shape)
        return _pair_atom(i, i, beta1, d.shape[0])
    idx = int(np.argmin(b.ravel()))  # row-major argmin = lexicographic tie-break
    i, j = divmod(idx, d.shape[0])
    if b[i, j] >= 0:
        return Atom.zero(d.shape)
    if i > j:
        i, j = j, i
    return _pair_atom(i, j, beta1, d.shape[0])


def lmo_psd_trace(d, beta2, tol=1e-8, seed=0, v0=None, method="lanczos"):
    """Trace-ball oracle: beta2 u u^T at the most negative eigenvalue of D.

    When D is PSD (within tol) the zero matrix minimizes the linear form.
    ``method`` picks the eigensolver: ``"lanczos"`` (matvec-only, wins
    asymptotically; ``v0`` warm-starts it, e.g. with the previous call's
    eigenvector when directions change slowly) or ``"dense"`` (direct LAPACK
    subset solve, faster at desk-scale dimensions).
    """
    if beta2 <= 0:
        raise ValueError("beta2 must be positive")
    d = check_symmetric(d, tol=1e-8)
    ds = symmetrize(d)
    if method == "dense":
        theta, u = extreme_eigpair_dense(ds, which="smallest")
    elif method == "lanczos":
        theta, u = lanczos_extreme(lambda v: ds @ v, ds.shape[0],
                                   which="smallest",
                                   max_iter=4 * ds.shape[0] + 20, tol=tol,
                                   seed=seed, v0=v0)
    else:
        raise ValueError(f"unknown lmo method {method!r}")
    if theta >= -tol:
        return Atom.zero(d.shape)
    return Atom.rank_one(beta2, u)


def project_l1_ball(x, beta):
    """Euclidean projection onto {||z||_1 <= beta} (sort and soft-threshold)."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    return _project_l1_kernel(np.ascontiguousarray(x, dtype=float), float(beta))


def project_simplex(x):
    """Euclidean projection onto the probability simplex."""
    u = np.sort(x)[::-1]
    css = np.cumsum(u) - 1.0
    ks = np.arange(1, x.size + 1)
    rho = np.nonzero(u - css / ks > 0)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(x - theta, 0.0)


def project_trace_ball_psd(s, beta2):
    """Projection onto {S PSD, trace <= beta2}.

    Eigendecompose, clamp the spectrum at zero, then project the eigenvalues
    onto the simplex-scaled l1 ball (trace = l1 norm on the PSD cone) and
    reassemble with the same eigenvectors.
    """
    if beta2 <= 0:
        raise ValueError("beta2 must be positive")
    s = symmetrize(s)
    w, v = jacobi_eig(s)
    w = np.maximum(w, 0.0)
    if w.sum() > beta2:
        w = project_l1_ball(w, beta2)
        w = np.maximum(w, 0.0)
    return symmetrize((v * w) @ v.T)


def contains(constraint_set, point, tol=1e-8):
    """Membership of ``point`` in ``constraint_set`` within tolerance ``tol``."""
    return constraint_set.contains(point, tol=tol)


def product_vertices(sets):
    """All product atoms of the per-block vertex lists (test support)."""
    per_block = [s.vertices() for s in sets]
    return list(itertools.product(*per_block))
