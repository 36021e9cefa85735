"""Local spectral coarse spaces.

Three constructions, each solved independently per coarse block:

* ``"I"``: ``a_i(psi, z) = lam m_i(psi, z)`` on the full fine space of the block;
* ``"II"``: ``a_i(psi, z) = lam (m_i + m_i^delta)(psi, z)``;
* ``"III"``: the pencil ``(Phi^T A_i Phi, Phi^T B Phi)`` on the span of the
  discrete harmonic extensions ``Phi`` of the boundary hat functions, with
  ``B`` one of ``m^delta`` (default), ``m + m^delta`` or ``m``
  (``"III-m"`` is shorthand for the last).

A :class:`SpectralDecomposition` keeps all eigenpairs of every block so
coarse spaces of any size can be cut from it without re-solving.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .fe_core import DGSystem
from .linsolve import EigenPairs, generalized_eig

METHODS = ("I", "II", "III", "III-m")
SNAPSHOT_MASSES = ("mdelta", "m+mdelta", "m")
ZERO_TOL = 1e-12


def map_blocks(fn, n: int, threads: int = 1) -> list:
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, range(n)))
    return [fn(i) for i in range(n)]


def count_small_eigenvalues(values, eta: float = 1.0, n_modes: int = 10,
                            eps: float = 1e-14, gap: float | None = None) -> int:
    """Number of leading eigenvalues that vanish asymptotically with the contrast.

    Eigenvalues below ``1e-12 * max(values)`` are exact zeros and always
    counted. Past them, the largest ratio ``lam[l+1] / max(lam[l], eps)``
    among the first ``n_modes`` values marks the cut if it exceeds
    ``gap`` (default ``max(10, sqrt(eta))``).
    """
    lam = np.asarray(values, dtype=float)
    if lam.size == 0:
        return 0
    zero_tol = ZERO_TOL * max(float(lam.max()), 0.0)
    n_zero = max(1, int(np.count_nonzero(lam <= zero_tol)))
    head = lam[:n_modes]
    threshold = max(10.0, float(np.sqrt(eta))) if gap is None else gap
    best, cut = 0.0, n_zero
    for l in range(n_zero, len(head) - 1):
        ratio = head[l + 1] / max(head[l], eps)
        if ratio > best:
            best, cut = ratio, l + 1
    return cut if best >= threshold else n_zero


@dataclass(frozen=True, eq=False)
class SnapshotSpace:
    """Per block: ``phi[i]`` is ``(N_i, M_i)``, columns are discrete harmonic
    extensions of the boundary hats (ordered as ``boundary_nodes``)."""

    phi: list[np.ndarray]
    boundary_nodes: np.ndarray
    A_snap: list[np.ndarray]
    M_snap: dict[str, list[np.ndarray]]


def harmonic_snapshots(system: DGSystem, threads: int = 1) -> SnapshotSpace:
    mesh = system.mesh
    bnd = mesh.blocks[0].boundary_nodes
    inner = mesh.blocks[0].interior_nodes

    def one(i):
        A = system.block(system.A, i)
        Mi = system.block(system.M, i)
        Md = system.block(system.Md, i)
        Phi = np.zeros((mesh.n_local, len(bnd)))
        Phi[bnd, np.arange(len(bnd))] = 1.0
        if len(inner):
            Phi[inner] = -sla.solve(A[np.ix_(inner, inner)], A[np.ix_(inner, bnd)], assume_a="pos")
        gram = lambda X: Phi.T @ X @ Phi
        return Phi, gram(A), gram(Md), gram(Mi + Md), gram(Mi)

    out = map_blocks(one, mesh.N, threads)
    return SnapshotSpace(
        phi=[o[0] for o in out],
        boundary_nodes=bnd,
        A_snap=[o[1] for o in out],
        M_snap={"mdelta": [o[2] for o in out], "m+mdelta": [o[3] for o in out], "m": [o[4] for o in out]},
    )


@dataclass(eq=False)
class SpectralDecomposition:
    """All local eigenpairs for one method.

    ``pairs[i].vectors`` are fine-grid coefficient vectors on block ``i``
    (for Method III already mapped through the snapshots), orthonormal in
    ``rhs[i]`` (the fine-space matrix of the method's right-hand form).
    """

    method: str
    system: DGSystem
    pairs: list[EigenPairs]
    lhs: list[np.ndarray]
    rhs: list[np.ndarray]
    mass_variant: str | None = None
    snapshots: SnapshotSpace | None = None
    reduced: list[EigenPairs] | None = None
    L_small: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.L_small is None:
            eta = self.system.field.eta
            self.L_small = np.array([count_small_eigenvalues(p.values, eta) for p in self.pairs])

    @property
    def n_blocks(self) -> int:
        return len(self.pairs)

    def space(self, L_add=0, L_small=None) -> "CoarseSpace":
        """Keep the ``L_small + L_add`` lowest modes per block."""
        small = self.L_small if L_small is None else np.broadcast_to(np.asarray(L_small, int), (self.n_blocks,))
        add = np.broadcast_to(np.asarray(L_add, dtype=int), (self.n_blocks,))
        if np.any(add < 0) or np.any(small < 0):
            raise ValueError("mode counts must be nonnegative")
        L = small + add
        avail = np.array([len(p) for p in self.pairs])
        if np.any(L > avail):
            i = int(np.argmax(L > avail))
            raise ValueError(f"block {i}: requested {L[i]} modes, only {avail[i]} available")
        bases = [p.vectors[:, :k] for p, k in zip(self.pairs, L)]
        kept = [p.values[:k] for p, k in zip(self.pairs, L)]
        nxt = np.array([p.values[k] if k < len(p) else np.nan for p, k in zip(self.pairs, L)])
        return CoarseSpace(self.method, bases, kept, np.array(small), np.array(add), nxt, self)


@dataclass(eq=False)
class CoarseSpace:
    method: str
    bases: list[np.ndarray]
    values: list[np.ndarray]
    L_small: np.ndarray
    L_add: np.ndarray
    next_values: np.ndarray
    decomposition: SpectralDecomposition | None = None

    @property
    def L(self) -> np.ndarray:
        return np.array([b.shape[1] for b in self.bases])

    @property
    def dim(self) -> int:
        return int(self.L.sum())

    @property
    def lambda_min(self) -> float:
        """Smallest eigenvalue left out over all blocks (nan if nothing is left out)."""
        nxt = self.next_values[np.isfinite(self.next_values)]
        return float(nxt.min()) if nxt.size else float("nan")

    @property
    def R(self) -> sp.csr_matrix:
        """Block-diagonal prolongation from coarse coefficients to broken fine vectors."""
        return sp.block_diag(self.bases, format="csr")


def decompose(system: DGSystem, method: str = "I", mass_variant: str | None = None,
              snapshots: SnapshotSpace | None = None, threads: int = 1) -> SpectralDecomposition:
    """Solve every local eigenproblem of ``method`` (see module docstring)."""
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    n = system.mesh.N
    if method in ("I", "II"):
        def one(i):
            A = system.block(system.A, i)
            B = system.block(system.M, i)
            if method == "II":
                B = B + system.block(system.Md, i)
            return A, B, generalized_eig(A, B)

        out = map_blocks(one, n, threads)
        return SpectralDecomposition(method, system, [o[2] for o in out],
                                     [o[0] for o in out], [o[1] for o in out])

    if method == "III-m":
        mass_variant = "m"
    mass_variant = mass_variant or "mdelta"
    if mass_variant not in SNAPSHOT_MASSES:
        raise ValueError(f"unknown snapshot mass {mass_variant!r}; expected one of {SNAPSHOT_MASSES}")
    snaps = snapshots if snapshots is not None else harmonic_snapshots(system, threads)
    fine_mass = {
        "mdelta": lambda i: system.block(system.Md, i),
        "m+mdelta": lambda i: system.block(system.M, i) + system.block(system.Md, i),
        "m": lambda i: system.block(system.M, i),
    }[mass_variant]

    def one(i):
        red = generalized_eig(snaps.A_snap[i], snaps.M_snap[mass_variant][i])
        fine = EigenPairs(red.values, snaps.phi[i] @ red.vectors, True)
        return system.block(system.A, i), fine_mass(i), fine, red

    out = map_blocks(one, n, threads)
    return SpectralDecomposition(method, system, [o[2] for o in out], [o[0] for o in out],
                                 [o[1] for o in out], mass_variant, snaps, [o[3] for o in out])


def method_I_space(system: DGSystem, L_add=0, L_small=None, threads: int = 1) -> CoarseSpace:
    return decompose(system, "I", threads=threads).space(L_add, L_small)


def method_II_space(system: DGSystem, L_add=0, L_small=None, threads: int = 1) -> CoarseSpace:
    return decompose(system, "II", threads=threads).space(L_add, L_small)


def method_III_space(system: DGSystem, L_add=0, mass_variant: str = "mdelta", L_small=None,
                     snapshots: SnapshotSpace | None = None, threads: int = 1) -> CoarseSpace:
    return decompose(system, "III", mass_variant, snapshots, threads).space(L_add, L_small)
