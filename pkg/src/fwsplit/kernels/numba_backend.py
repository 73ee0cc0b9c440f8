"""Numba-compiled versions of the hot kernels.

Same rotation order and formulas as the numpy backend; only the inner loops
are written element-wise so numba can compile them to tight machine code.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def _offdiag_norm(A):
    n = A.shape[0]
    acc = 0.0
    for i in range(n):
        for j in range(n):
            if i != j:
                acc += A[i, j] * A[i, j]
    return np.sqrt(acc)


@njit(cache=True)
def _jacobi_sweeps_jit(A, tol, max_sweeps):
    n = A.shape[0]
    V = np.eye(n)
    off = _offdiag_norm(A)
    sweeps = 0
    while off > tol and sweeps < max_sweeps:
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= 1e-300:
                    continue
                tau = (A[q, q] - A[p, p]) / (2.0 * apq)
                if tau >= 0.0:
                    t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                for i in range(n):
                    aip = A[i, p]
                    aiq = A[i, q]
                    A[i, p] = c * aip - s * aiq
                    A[i, q] = s * aip + c * aiq
                for i in range(n):
                    api = A[p, i]
                    aqi = A[q, i]
                    A[p, i] = c * api - s * aqi
                    A[q, i] = s * api + c * aqi
                A[p, q] = 0.0
                A[q, p] = 0.0
                for i in range(n):
                    vip = V[i, p]
                    viq = V[i, q]
                    V[i, p] = c * vip - s * viq
                    V[i, q] = s * vip + c * viq
        sweeps += 1
        off = _offdiag_norm(A)
    return V, off, sweeps


def jacobi_sweeps(A, tol, max_sweeps):
    return _jacobi_sweeps_jit(A, tol, max_sweeps)


@njit(cache=True)
def _project_l1_jit(x, radius):
    n = x.size
    total = 0.0
    for i in range(n):
        total += abs(x[i])
    if total <= radius:
        return x.copy()
    u = np.sort(np.abs(x))[::-1]
    css = 0.0
    rho = 0
    theta = 0.0
    for k in range(n):
        css += u[k]
        if u[k] - (css - radius) / (k + 1.0) > 0.0:
            rho = k
            theta = (css - radius) / (k + 1.0)
    out = np.empty(n)
    for i in range(n):
        mag = abs(x[i]) - theta
        if mag < 0.0:
            mag = 0.0
        out[i] = mag if x[i] >= 0.0 else -mag
    return out


def project_l1(x, radius):
    return _project_l1_jit(x, radius)
