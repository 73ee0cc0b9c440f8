"""Pure-numpy implementations of the hot kernels.

Reference backend: always available, used when FWSPLIT_PURE_NUMPY=1 or when
numba is not importable.  The numba backend mirrors these routines loop for
loop; both must produce the same rotations so results agree to rounding.
"""

import numpy as np


def jacobi_sweeps(A, tol, max_sweeps):
    """Cyclic Jacobi rotations on a symmetric matrix, in place.

    Parameters
    ----------
    A : ndarray
        Symmetric matrix, overwritten with the (nearly) diagonal result.
    tol : float
        Stop when the Frobenius norm of the off-diagonal part drops below tol.
    max_sweeps : int
        Hard sweep limit.

    Returns
    -------
    V : ndarray
        Accumulated rotations, columns are eigenvector estimates.
    off : float
        Final off-diagonal Frobenius norm.
    sweeps : int
        Number of sweeps performed.
    """
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
                colp = A[:, p].copy()
                colq = A[:, q].copy()
                A[:, p] = c * colp - s * colq
                A[:, q] = s * colp + c * colq
                rowp = A[p, :].copy()
                rowq = A[q, :].copy()
                A[p, :] = c * rowp - s * rowq
                A[q, :] = s * rowp + c * rowq
                A[p, q] = 0.0
                A[q, p] = 0.0
                vp = V[:, p].copy()
                vq = V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
        sweeps += 1
        off = _offdiag_norm(A)
    return V, off, sweeps


def _offdiag_norm(A):
    d = np.diag(np.diag(A))
    return float(np.linalg.norm(A - d))


def project_l1(x, radius):
    """Euclidean projection of x onto the l1 ball of the given radius."""
    a = np.abs(x)
    if a.sum() <= radius:
        return x.copy()
    u = np.sort(a)[::-1]
    css = np.cumsum(u)
    ks = np.arange(1, x.size + 1)
    cond = u - (css - radius) / ks > 0
    rho = np.nonzero(cond)[0][-1]
    theta = (css[rho] - radius) / (rho + 1.0)
    return np.sign(x) * np.maximum(a - theta, 0.0)
