"""Sparse SPD solves and dense symmetric-definite eigensolves."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.sparse.linalg import splu


class IndefiniteMatrixError(np.linalg.LinAlgError):
    """The matrix has a nonpositive pivot in a symmetric factorization."""


@dataclass(frozen=True, eq=False)
class EigenPairs:
    """Ascending eigenpairs of ``A x = lam B x`` with ``B``-orthonormal columns."""

    values: np.ndarray
    vectors: np.ndarray
    b_orthonormal: bool = True

    def __len__(self) -> int:
        return len(self.values)

    def head(self, k: int) -> "EigenPairs":
        return EigenPairs(self.values[:k], self.vectors[:, :k], self.b_orthonormal)


class SparseCholesky:
    """Sparse ``LDL^T`` without pivoting (SuperLU in symmetric mode).

    With a symmetric fill-reducing permutation the diagonal of ``U`` holds
    the pivots of ``P K P^T = L D L^T``; all positive iff ``K`` is positive
    definite.
    """

    def __init__(self, K):
        K = sp.csc_matrix(K)
        try:
            self._lu = splu(K, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                            options={"SymmetricMode": True})
        except RuntimeError as exc:
            raise IndefiniteMatrixError(f"factorization failed: {exc}") from exc
        if not np.array_equal(self._lu.perm_r, self._lu.perm_c):
            raise IndefiniteMatrixError("factorization needed off-diagonal pivoting")
        pivots = self._lu.U.diagonal()
        n_bad = int(np.count_nonzero(pivots <= 0))
        if n_bad:
            raise IndefiniteMatrixError(f"{n_bad} nonpositive pivots (min {pivots.min():.3e})")
        self.pivots = pivots
        self.K = K

    def solve(self, b):
        return self._lu.solve(np.asarray(b, dtype=float))


def backward_error(K, x, b) -> float:
    """Normwise backward error ``|b - Kx| / (|K| |x| + |b|)`` in the infinity norm."""
    r = b - K @ x
    if sp.issparse(K):
        knorm = abs(K).sum(axis=1).max()
    else:
        knorm = np.abs(K).sum(axis=1).max()
    denom = knorm * np.abs(x).max() + np.abs(b).max()
    return float(np.abs(r).max() / denom) if denom else 0.0


def spd_solve(K, b, rtol: float = 1e-10, max_refine: int = 3) -> np.ndarray:
    """Solve ``K x = b`` for symmetric positive definite ``K`` (sparse or dense).

    Accepts ``x`` once ``|Kx - b| <= rtol |b|`` or, when high contrast puts
    that below double-precision reach, once the backward error is below
    ``rtol``. Raises :class:`IndefiniteMatrixError` if ``K`` is not positive
    definite and ``RuntimeError`` if neither test passes after refinement.
    """
    b = np.asarray(b, dtype=float)
    if sp.issparse(K):
        fac = SparseCholesky(K)
        solve = fac.solve
    else:
        K = np.asarray(K, dtype=float)
        try:
            cf = sla.cho_factor(K, lower=True)
        except sla.LinAlgError as exc:
            raise IndefiniteMatrixError(str(exc)) from exc
        solve = lambda r: sla.cho_solve(cf, r)

    bnorm = np.linalg.norm(b)
    x = solve(b)
    if bnorm == 0:
        return x
    best, best_rel = x, np.inf
    for _ in range(max_refine + 1):
        r = b - K @ x
        rel = np.linalg.norm(r) / bnorm
        if rel < best_rel:
            best, best_rel = x, rel
        if rel <= rtol:
            return x
        x = x + solve(r)
    if backward_error(K, best, b) <= rtol:
        return best
    raise RuntimeError(f"relative residual {best_rel:.2e} and backward error "
                       f"{backward_error(K, best, b):.2e} above {rtol:.0e}")


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def generalized_eig(A, B) -> EigenPairs:
    """All eigenpairs of the symmetric-definite pencil ``(A, B)``, ascending.

    ``B`` is Cholesky-factored (raises :class:`IndefiniteMatrixError` if it
    is not positive definite) and the reduced standard problem is solved by
    LAPACK's tridiagonal QR.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.shape != B.shape or A.shape[0] != A.shape[1]:
        raise ValueError(f"incompatible shapes {A.shape}, {B.shape}")
    try:
        sla.cholesky(B, lower=True)
    except sla.LinAlgError as exc:
        raise IndefiniteMatrixError(f"right-hand matrix is not positive definite: {exc}") from exc
    A = 0.5 * (A + A.T)
    B = 0.5 * (B + B.T)
    values, vectors = sla.eigh(A, B, driver="gv")
    return EigenPairs(values, _fix_signs(vectors), True)


def eigen_residuals(A, B, pairs: EigenPairs) -> np.ndarray:
    """Scaled residuals ``|A x - lam B x| / (|A| + |lam| |B|)`` per pair."""
    A = np.asarray(A)
    B = np.asarray(B)
    R = A @ pairs.vectors - (B @ pairs.vectors) * pairs.values
    scale = np.linalg.norm(A, 2) + np.abs(pairs.values) * np.linalg.norm(B, 2)
    return np.linalg.norm(R, axis=0) / (scale * np.linalg.norm(pairs.vectors, axis=0))
