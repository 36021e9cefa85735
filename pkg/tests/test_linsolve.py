import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from gmsdg.linsolve import (IndefiniteMatrixError, SparseCholesky, backward_error, eigen_residuals,
                            generalized_eig, spd_solve)

from conftest import small_system


def random_spd(rng, n, cond=10.0):
    Q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    return Q @ np.diag(np.geomspace(1.0, cond, n)) @ Q.T


def charpoly_eigenvalues(A, B):
    """Roots of ``det(A - lam B)`` by sign-change bracketing and bisection."""
    bound = np.linalg.norm(A, "fro") * np.linalg.norm(np.linalg.inv(B), "fro") * 1.01
    f = lambda t: np.linalg.det(A - t * B)
    grid = np.linspace(-bound, bound, 20001)
    vals = np.array([f(t) for t in grid])
    roots = []
    for k in np.flatnonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) <= 0):
        lo, hi = grid[k], grid[k + 1]
        flo = f(lo)
        if flo == 0:
            roots.append(lo)
            continue
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            fm = f(mid)
            if np.sign(fm) == np.sign(flo):
                lo, flo = mid, fm
            else:
                hi = mid
            if hi - lo <= 1e-15 * max(1.0, abs(mid)):
                break
        roots.append(0.5 * (lo + hi))
    return np.unique(np.round(roots, 13))


def test_identity_solve():
    b = np.arange(5.0)
    assert np.allclose(spd_solve(sp.identity(5, format="csr"), b), b)
    assert np.allclose(spd_solve(np.eye(5), b), b)


def test_two_by_two_by_hand():
    K = np.array([[2.0, 1.0], [1.0, 2.0]])
    x = spd_solve(sp.csr_matrix(K), np.ones(2))
    assert np.allclose(x, [1 / 3, 1 / 3], rtol=1e-14)


def test_fine_system_residual():
    s = small_system(2, 2)
    x = spd_solve(s.K, s.b)
    assert np.linalg.norm(s.K @ x - s.b) <= 1e-10 * np.linalg.norm(s.b)


def test_indefinite_detected():
    K = sp.csr_matrix(np.diag([1.0, -2.0, 3.0]))
    with pytest.raises(IndefiniteMatrixError):
        spd_solve(K, np.ones(3))
    with pytest.raises(IndefiniteMatrixError):
        spd_solve(K.toarray(), np.ones(3))


def test_cholesky_pivots_match_inertia(rng):
    K = random_spd(rng, 30)
    fac = SparseCholesky(sp.csc_matrix(K))
    assert np.all(fac.pivots > 0)
    assert np.prod(fac.pivots) == pytest.approx(np.linalg.det(K), rel=1e-8)


def test_solve_is_deterministic(contrast_system):
    a = spd_solve(contrast_system.K, contrast_system.b)
    b = spd_solve(contrast_system.K, contrast_system.b)
    assert np.array_equal(a, b)


def test_backward_error_zero_for_exact():
    K = np.diag([1.0, 2.0])
    assert backward_error(K, np.array([1.0, 1.0]), np.array([1.0, 2.0])) == 0.0


def test_eig_diag_example():
    p = generalized_eig(np.diag([0.0, 1.0]), np.eye(2))
    assert np.allclose(p.values, [0, 1])
    assert np.allclose(np.abs(p.vectors), np.eye(2))


def test_eig_equal_pencil(rng):
    B = random_spd(rng, 6)
    assert np.allclose(generalized_eig(B, B).values, 1.0, atol=1e-12)


def test_eig_rejects_indefinite_rhs():
    with pytest.raises(IndefiniteMatrixError):
        generalized_eig(np.eye(2), np.diag([1.0, -1.0]))
    with pytest.raises(ValueError):
        generalized_eig(np.eye(2), np.eye(3))


def test_eig_random_pair_invariants(rng):
    A = random_spd(rng, 10, 1e3)
    B = random_spd(rng, 10, 1e2)
    p = generalized_eig(A, B)
    assert np.all(np.diff(p.values) >= 0)
    assert eigen_residuals(A, B, p).max() <= 1e-8
    G = p.vectors.T @ B @ p.vectors
    assert np.abs(G - np.eye(10)).max() <= 1e-8
    rq = np.einsum("ij,ij->j", p.vectors, A @ p.vectors)
    assert np.allclose(rq, p.values, rtol=1e-8)


@pytest.mark.criterion(3, "eigen residuals, B-orthonormality, 3x3 characteristic-polynomial oracle")
@pytest.mark.parametrize("seed", range(5))
def test_eig_matches_charpoly_oracle(seed):
    rng = np.random.default_rng(seed)
    A = random_spd(rng, 3, 20.0) - (0.5 if seed % 2 else 0.0) * np.eye(3)
    B = random_spd(rng, 3, 5.0)
    lam = generalized_eig(A, B).values
    ref = charpoly_eigenvalues(A, B)
    assert len(ref) == 3
    assert np.allclose(lam, ref, rtol=1e-8, atol=1e-10)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 12), st.integers(0, 2**31 - 1))
def test_eig_invariants_property(n, seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, n))
    A = X @ X.T  # semidefinite allowed
    B = random_spd(rng, n, 100.0)
    p = generalized_eig(A, B)
    assert np.all(np.diff(p.values) >= -1e-12 * max(1.0, abs(p.values).max()))
    assert eigen_residuals(A, B, p).max() <= 1e-8
    assert np.abs(p.vectors.T @ B @ p.vectors - np.eye(n)).max() <= 1e-8
    q = generalized_eig(A, B)
    assert np.array_equal(p.values, q.values) and np.array_equal(p.vectors, q.vectors)
