"""Inner-loop step routines: one classic Frank-Wolfe step with line search,
and one away-step Frank-Wolfe non-drop step with active-set bookkeeping.

The product of the per-block constraint sets is treated as a single feasible
set whose atoms are tuples of per-block vertices; the linear minimization
oracle decomposes blockwise.
"""

from dataclasses import dataclass

import numpy as np

from .problem import (BlockVector, SplitProblem, lagrangian_curvature,
                      lagrangian_grad, lagrangian_value)

GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0
WEIGHT_EPS = 1e-14


@dataclass
class StepReport:
    kind: str  # "fw" or "away"
    gamma: float
    gamma_max: float
    drop_steps_taken: int
    fw_gap: float
    away_gap: float = 0.0


class ProductAtom:
    """Tuple of per-block atoms; a vertex of the product polytope."""

    __slots__ = ("atoms", "key")

    def __init__(self, atoms):
        self.atoms = tuple(atoms)
        keys = tuple(a.key for a in self.atoms)
        self.key = None if any(k is None for k in keys) else keys

    def inner(self, g: BlockVector) -> float:
        return float(sum(a.inner(b) for a, b in zip(self.atoms, g.blocks)))

    def to_block_vector(self) -> BlockVector:
        return BlockVector([a.dense() for a in self.atoms])

    def add_to(self, x: BlockVector, weight: float):
        for a, b in zip(self.atoms, x.blocks):
            a.add_to(b, weight)


class ActiveSet:
    """Atoms with positive weights whose convex combination is the iterate."""

    def __init__(self):
        self._entries = {}  # key -> [ProductAtom, weight]

    @classmethod
    def singleton(cls, atom: ProductAtom):
        active = cls()
        if atom.key is None:
            raise ValueError("active-set atoms need an identity key")
        active._entries[atom.key] = [atom, 1.0]
        return active

    def __len__(self):
        return len(self._entries)

    def __contains__(self, key):
        return key in self._entries

    def items(self):
        return [(atom, w) for atom, w in self._entries.values()]

    def weight(self, key):
        return self._entries[key][1]

    def total_weight(self):
        return float(sum(w for _, w in self._entries.values()))

    def reconstruct(self, shapes) -> BlockVector:
        x = BlockVector.zeros(shapes)
        for atom, w in self._entries.values():
            atom.add_to(x, w)
        return x

    def check_consistent(self, x: BlockVector, tol=1e-8):
        """Raise if the weighted expansion does not reproduce ``x``."""
        total = self.total_weight()
        if abs(total - 1.0) > 1e-10:
            raise ValueError(f"active-set weights sum to {total}, expected 1")
        err = (self.reconstruct(x.shapes) - x).norm()
        if err > tol:
            raise ValueError(f"active set reconstructs iterate with error {err:.3e}")

    def scale_all(self, factor):
        for entry in self._entries.values():
            entry[1] *= factor

    def add_weight(self, atom: ProductAtom, delta):
        entry = self._entries.get(atom.key)
        if entry is None:
            self._entries[atom.key] = [atom, delta]
        else:
            entry[1] += delta

    def drop(self, key):
        del self._entries[key]

    def prune(self):
        dead = [k for k, (_, w) in self._entries.items() if w <= WEIGHT_EPS]
        for k in dead:
            del self._entries[k]
        return dead

    def argmax_inner(self, g: BlockVector):
        """Active atom maximizing <g, v> (the away-direction candidate)."""
        best_key, best_val = None, -np.inf
        for key, (atom, _) in self._entries.items():
            val = atom.inner(g)
            if val > best_val:
                best_key, best_val = key, val
        atom, w = self._entries[best_key]
        return atom, w, best_val


def blockwise_lmo(p: SplitProblem, grad: BlockVector) -> ProductAtom:
    return ProductAtom([s.lmo(g) for s, g in zip(p.sets, grad.blocks)])


def initial_iterate(p: SplitProblem):
    """Deterministic starting vertex: per-block LMO at the zero direction."""
    atom = ProductAtom([s.initial_atom() for s in p.sets])
    return atom.to_block_vector(), atom


def line_search(phi, gamma_max, mode="golden_section", tol=1e-10,
                deriv0=None, curvature=None):
    """argmin of a convex 1-D slice phi on [0, gamma_max].

    ``exact_quadratic`` uses the parabola vertex: from (deriv0, curvature)
    when given, otherwise fitted through three samples.  ``golden_section``
    brackets the minimizer to within tol * gamma_max.  Both return a step
    that does not increase phi.
    """
    if gamma_max <= 0:
        raise ValueError("gamma_max must be positive")
    if mode == "exact_quadratic":
        if deriv0 is not None and curvature is not None:
            if curvature <= 0.0:
                # flat or linear slice: an endpoint is optimal
                return gamma_max if deriv0 < 0 else 0.0
            return float(np.clip(-deriv0 / curvature, 0.0, gamma_max))
        h = 0.5 * gamma_max
        f0, f1, f2 = phi(0.0), phi(h), phi(gamma_max)
        for v in (f0, f1, f2):
            if not np.isfinite(v):
                raise FloatingPointError("non-finite objective in line search")
        denom = f0 - 2.0 * f1 + f2
        if denom <= 0.0:
            candidates = [(f0, 0.0), (f1, h), (f2, gamma_max)]
            return min(candidates)[1]
        vertex = h * (3.0 * f0 - 4.0 * f1 + f2) / (2.0 * denom)
        return float(np.clip(vertex, 0.0, gamma_max))
    if mode != "golden_section":
        raise ValueError(f"unknown line-search mode {mode!r}")
    lo, hi = 0.0, gamma_max
    x1 = hi - GOLDEN * (hi - lo)
    x2 = lo + GOLDEN * (hi - lo)
    f1, f2 = phi(x1), phi(x2)
    while hi - lo > tol * gamma_max:
        if not (np.isfinite(f1) and np.isfinite(f2)):
            raise FloatingPointError("non-finite objective in line search")
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - GOLDEN * (hi - lo)
            f1 = phi(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + GOLDEN * (hi - lo)
            f2 = phi(x2)
    gamma = 0.5 * (lo + hi)
    # never accept an increase over standing still
    return gamma if phi(gamma) <= phi(0.0) else 0.0


def _search_along(p, x, y, d, gamma_max):
    """Line search for L(x + gamma d, y) using the problem's structure."""
    grad = lagrangian_grad(p, x, y)
    slope = grad.dot(d)
    if p.objective.is_quadratic:
        curv = lagrangian_curvature(p, x, d)
        return line_search(None, gamma_max, mode="exact_quadratic",
                           deriv0=slope, curvature=curv)
    phi = lambda g: lagrangian_value(p, x + g * d, y)
    return line_search(phi, gamma_max, mode="golden_section", tol=1e-10)


def fw_step(p: SplitProblem, x: BlockVector, y: np.ndarray):
    """One classic Frank-Wolfe step on L(., y) with line search on [0, 1]."""
    grad = lagrangian_grad(p, x, y)
    atom = blockwise_lmo(p, grad)
    s = atom.to_block_vector()
    d = s - x
    gap = -grad.dot(d)  # <grad, x - s> >= 0 at non-optimal points
    if gap <= 0.0:
        return x.copy(), StepReport("fw", 0.0, 1.0, 0, max(gap, 0.0))
    gamma = _search_along(p, x, y, d, 1.0)
    x_new = x + gamma * d
    return x_new, StepReport("fw", gamma, 1.0, 0, gap)


def afw_nondrop_step(p: SplitProblem, x: BlockVector, active: ActiveSet,
                     y: np.ndarray, drop_cap=1000, check=True):
    """Away-step Frank-Wolfe, looping over drop steps until a non-drop step.

    A drop step is an away step whose line search hits the maximal step,
    evicting the away atom.  ``drop_cap`` is a safety bound on the internal
    loop; hitting it means the active-set invariants are broken and raises.

    Returns the new iterate, the updated active set, and a report whose
    ``drop_steps_taken`` counts the drop steps consumed by this call.

    ``check`` re-verifies the active-set expansion of ``x`` up front; it
    costs a full reconstruction, so hot loops that maintain the pair
    themselves disable it.
    """
    if check:
        active.check_consistent(x)
    drops = 0
    while True:
        grad = lagrangian_grad(p, x, y)
        s_atom = blockwise_lmo(p, grad)
        if s_atom.key is None:
            raise ValueError("away-step FW needs vertex-identifiable atoms")
        s = s_atom.to_block_vector()
        fw_gap = grad.dot(x) - s_atom.inner(grad)
        v_atom, v_weight, v_val = active.argmax_inner(grad)
        away_gap = v_val - grad.dot(x)

        if fw_gap <= 0.0 and away_gap <= 0.0:
            return x, active, StepReport("fw", 0.0, 1.0, drops,
                                         max(fw_gap, 0.0), max(away_gap, 0.0))

        if fw_gap >= away_gap:
            kind = "fw"
            d = s - x
            gamma_max = 1.0
        else:
            kind = "away"
            if v_weight >= 1.0 - 1e-14:
                # singleton active set: x = v, so the away gap is zero and the
                # branch above would have been taken; guard anyway
                kind = "fw"
                d = s - x
                gamma_max = 1.0
            else:
                d = x - v_atom.to_block_vector()
                gamma_max = v_weight / (1.0 - v_weight)

        gamma = _search_along(p, x, y, d, gamma_max)
        x = x + gamma * d

        if kind == "fw":
            if gamma >= 1.0 - 1e-14:
                active = ActiveSet.singleton(s_atom)
                x = s
            else:
                active.scale_all(1.0 - gamma)
                active.add_weight(s_atom, gamma)
                active.prune()
                if check:
                    x = active.reconstruct(x.shapes)  # keep expansion exact
            return x, active, StepReport("fw", gamma, gamma_max, drops,
                                         fw_gap, away_gap)

        is_drop = gamma >= gamma_max - 1e-14
        if is_drop:
            gamma = gamma_max
            active.scale_all(1.0 + gamma)
            # weight of v becomes (1+gamma) w_v - gamma = 0 at gamma = w/(1-w)
            active.drop(v_atom.key)
            active.prune()
            if check:
                x = active.reconstruct(x.shapes)  # kill drift at eviction
            drops += 1
            if drops > drop_cap:
                raise RuntimeError(
                    f"drop-step cap {drop_cap} exceeded; active-set invariant bug")
            continue
        active.scale_all(1.0 + gamma)
        active.add_weight(v_atom, -gamma)
        active.prune()
        if check:
            x = active.reconstruct(x.shapes)
        return x, active, StepReport("away", gamma, gamma_max, drops,
                                     fw_gap, away_gap)


def fw_duality_gap(p: SplitProblem, x: BlockVector, y: np.ndarray) -> float:
    """<grad L(x,y), x - s> with s the blockwise LMO output."""
    grad = lagrangian_grad(p, x, y)
    atom = blockwise_lmo(p, grad)
    return float(grad.dot(x) - atom.inner(grad))
