"""Eigensolver tests against hand-computed examples and numpy's eigh used
purely as an independent oracle (the library itself never calls it on the
full matrix)."""

import numpy as np
import pytest

from fwsplit.linalg import (ConvergenceError, check_symmetric, frob_inner,
                            jacobi_eig, lanczos_extreme, symmetrize)


def _random_sym(rng, n, scale=1.0):
    a = rng.standard_normal((n, n)) * scale
    return 0.5 * (a + a.T)


# ---------------------------------------------------------------------------
# jacobi_eig
# ---------------------------------------------------------------------------

def test_jacobi_diagonal_matrix():
    # [TRIVIAL] diagonal input: eigenvalues are the entries, sorted descending
    dec = jacobi_eig(np.diag([3.0, 1.0, 2.0]))
    assert np.allclose(dec.eigenvalues, [3.0, 2.0, 1.0])
    # eigenvectors are signed permutation columns
    assert np.allclose(np.abs(dec.eigenvectors),
                       np.eye(3)[:, [0, 2, 1]], atol=1e-12)


def test_jacobi_two_by_two_hand_example():
    # [DERIVED] [[2,1],[1,2]] has eigenvalues 3 and 1 with eigenvectors
    # (1,1)/sqrt(2) and (1,-1)/sqrt(2)
    dec = jacobi_eig(np.array([[2.0, 1.0], [1.0, 2.0]]))
    assert np.allclose(dec.eigenvalues, [3.0, 1.0], atol=1e-12)
    v0 = dec.eigenvectors[:, 0]
    assert abs(abs(v0 @ [1, 1]) / np.sqrt(2) - 1.0) <= 1e-12


@pytest.mark.parametrize("n", [2, 3, 10, 50, 200])
def test_jacobi_reconstruction_and_orthonormality(n):
    rng = np.random.default_rng(n)
    a = _random_sym(rng, n, scale=2.0)
    dec = jacobi_eig(a)
    recon = (dec.eigenvectors * dec.eigenvalues) @ dec.eigenvectors.T
    assert np.linalg.norm(a - recon) <= 1e-8 * (1.0 + np.linalg.norm(a))
    q = dec.eigenvectors
    assert np.linalg.norm(q.T @ q - np.eye(n)) <= 1e-8
    # sorted descending
    assert np.all(np.diff(dec.eigenvalues) <= 1e-12)


def test_jacobi_matches_numpy_oracle():
    rng = np.random.default_rng(7)
    for n in (4, 9, 33):
        a = _random_sym(rng, n)
        dec = jacobi_eig(a)
        w = np.linalg.eigvalsh(a)[::-1]  # independent oracle
        assert np.allclose(dec.eigenvalues, w, atol=1e-9)


def test_jacobi_rejects_asymmetric():
    with pytest.raises(ValueError):
        jacobi_eig(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(ValueError):
        jacobi_eig(np.zeros((2, 3)))


def test_jacobi_scale_invariance_of_tolerance():
    rng = np.random.default_rng(11)
    a = _random_sym(rng, 20)
    for scale in (1e-6, 1.0, 1e6):
        dec = jacobi_eig(scale * a)
        recon = (dec.eigenvectors * dec.eigenvalues) @ dec.eigenvectors.T
        assert (np.linalg.norm(scale * a - recon)
                <= 1e-8 * (1.0 + np.linalg.norm(scale * a)))


# ---------------------------------------------------------------------------
# lanczos_extreme
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("which", ["largest", "smallest"])
@pytest.mark.parametrize("n", [2, 5, 30, 150])
def test_lanczos_matches_jacobi(which, n):
    rng = np.random.default_rng(n + (which == "largest"))
    a = _random_sym(rng, n)
    dec = jacobi_eig(a)
    expected = dec.eigenvalues[0] if which == "largest" else dec.eigenvalues[-1]
    theta, v = lanczos_extreme(lambda u: a @ u, n, which)
    assert abs(theta - expected) <= 1e-6 * (1.0 + abs(expected))
    assert abs(np.linalg.norm(v) - 1.0) <= 1e-8
    assert np.linalg.norm(a @ v - theta * v) <= 1e-8 * (1.0 + abs(theta))


def test_lanczos_clustered_spectrum():
    # repeated extreme eigenvalue: any unit vector of the eigenspace is valid
    a = np.diag([5.0, 5.0, 1.0, 0.5])
    theta, v = lanczos_extreme(lambda u: a @ u, 4, "largest")
    assert abs(theta - 5.0) <= 1e-8
    assert np.linalg.norm(a @ v - theta * v) <= 1e-8


def test_lanczos_warm_start():
    rng = np.random.default_rng(3)
    a = _random_sym(rng, 40)
    theta0, v0 = lanczos_extreme(lambda u: a @ u, 40, "smallest")
    theta1, v1 = lanczos_extreme(lambda u: a @ u, 40, "smallest", v0=v0)
    assert abs(theta0 - theta1) <= 1e-8


def test_lanczos_deterministic():
    rng = np.random.default_rng(4)
    a = _random_sym(rng, 25)
    r1 = lanczos_extreme(lambda u: a @ u, 25, "largest", seed=42)
    r2 = lanczos_extreme(lambda u: a @ u, 25, "largest", seed=42)
    assert r1[0] == r2[0]
    assert np.array_equal(r1[1], r2[1])


def test_lanczos_validates_arguments():
    a = np.eye(3)
    with pytest.raises(ValueError):
        lanczos_extreme(lambda u: a @ u, 3, "middle")
    with pytest.raises(ValueError):
        lanczos_extreme(lambda u: a @ u, 3, "largest", max_iter=1)
    with pytest.raises(ValueError):
        lanczos_extreme(lambda u: a @ u, 3, "largest", v0=np.zeros(3))


def test_convergence_error_carries_best():
    # an operator Lanczos cannot pin down in 2 iterations at tol 0-ish
    rng = np.random.default_rng(5)
    a = _random_sym(rng, 60)
    with pytest.raises(ConvergenceError) as err:
        lanczos_extreme(lambda u: a @ u, 60, "largest", max_iter=2, tol=1e-15)
    assert err.value.best is not None
    assert err.value.residual > 0


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

def test_check_symmetric_and_symmetrize():
    a = np.array([[1.0, 2.0], [2.0, 3.0]])
    assert np.array_equal(check_symmetric(a), a)
    b = np.array([[1.0, 2.0], [0.0, 3.0]])
    with pytest.raises(ValueError):
        check_symmetric(b)
    assert np.allclose(symmetrize(b), [[1.0, 1.0], [1.0, 3.0]])


def test_frob_inner():
    a = np.array([[1.0, 2.0], [3.0, 4.0]])
    b = np.array([[5.0, 6.0], [7.0, 8.0]])
    # [TRIVIAL] 5 + 12 + 21 + 32 = 70
    assert frob_inner(a, b) == 70.0
    with pytest.raises(ValueError):
        frob_inner(a, np.zeros(3))
