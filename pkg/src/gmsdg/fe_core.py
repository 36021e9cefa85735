"""Assembly of the symmetric interior penalty forms over the broken P1 space.

Degrees of freedom are ordered block by block (see :class:`PartitionedMesh`),
so a broken vector is a flat array of length ``N * (m+1)^2``. All integrals
are exact: P1 functions, piecewise-constant permeability, straight segments.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .coefficient import CoefficientField
from .linsolve import SparseCholesky, spd_solve
from .mesh import OUTWARD_NORMALS, OPPOSITE, PartitionedMesh, interface_weights

_MASS_TEMPLATE = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 12.0
_SEG_MASS = np.array([[2.0, 1.0], [1.0, 2.0]]) / 6.0


def p1_geometry(points: np.ndarray, triangles: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Areas ``(T,)`` and basis gradients ``(T, 3, 2)`` of P1 triangles."""
    p = points[triangles]
    J = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=2)  # columns are edge vectors
    det = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
    inv = np.empty_like(J)
    inv[:, 0, 0] = J[:, 1, 1] / det
    inv[:, 0, 1] = -J[:, 0, 1] / det
    inv[:, 1, 0] = -J[:, 1, 0] / det
    inv[:, 1, 1] = J[:, 0, 0] / det
    grads = np.empty((len(triangles), 3, 2))
    grads[:, 1] = inv[:, 0]
    grads[:, 2] = inv[:, 1]
    grads[:, 0] = -grads[:, 1] - grads[:, 2]
    return 0.5 * np.abs(det), grads


def element_stiffness(points, triangles, kappa) -> np.ndarray:
    area, grads = p1_geometry(points, triangles)
    return (kappa * area)[:, None, None] * np.einsum("tid,tjd->tij", grads, grads)


def element_mass(points, triangles, kappa) -> np.ndarray:
    area, _ = p1_geometry(points, triangles)
    return (kappa * area)[:, None, None] * _MASS_TEMPLATE


def _scatter(rows, cols, vals, n) -> sp.csr_matrix:
    return sp.coo_matrix((vals.ravel(), (rows.ravel(), cols.ravel())), shape=(n, n)).tocsr()


def _assemble_blocks(mesh: PartitionedMesh, field: CoefficientField, element_fn) -> sp.csr_matrix:
    rows, cols, vals = [], [], []
    for blk in mesh.blocks:
        Ke = element_fn(blk.points, blk.triangles, field.kappa[blk.index])
        dofs = blk.triangles + mesh.offset(blk.index)
        rows.append(np.repeat(dofs[:, :, None], 3, axis=2))
        cols.append(np.repeat(dofs[:, None, :], 3, axis=1))
        vals.append(Ke)
    return _scatter(np.concatenate(rows), np.concatenate(cols), np.concatenate(vals), mesh.n_dofs)


def assemble_energy(mesh: PartitionedMesh, field: CoefficientField) -> sp.csr_matrix:
    """Block-diagonal ``sum_i a_i``: exact P1 stiffness weighted by permeability."""
    return _assemble_blocks(mesh, field, element_stiffness)


def assemble_mass(mesh: PartitionedMesh, field: CoefficientField) -> sp.csr_matrix:
    """Block-diagonal permeability-weighted mass ``sum_i m_i``."""
    return _assemble_blocks(mesh, field, element_mass)


@dataclass(frozen=True, eq=False)
class SideTable:
    """Every (segment, side) pair: one record per term of ``sum_i sum_{E_ij}``.

    Interior segments appear twice (once from each block), boundary
    segments once. ``other`` is ``-1`` on the boundary, where the outside
    trace is zero.
    """

    own_block: np.ndarray
    own: np.ndarray          # (n, 2) global dofs of the segment on the own side
    other: np.ndarray        # (n, 2) coincident dofs on the neighbour, or -1
    tri: np.ndarray          # (n, 3) global dofs of the adjacent own triangle
    dn: np.ndarray           # (n, 3) outward normal derivative of each tri basis function
    kappa_ij: np.ndarray
    h_ij: np.ndarray
    inv_l: np.ndarray
    length: np.ndarray

    @property
    def boundary(self) -> np.ndarray:
        return self.other[:, 0] < 0

    def __len__(self) -> int:
        return len(self.own_block)


def side_table(mesh: PartitionedMesh) -> SideTable:
    if not mesh.weighted:
        raise ValueError("interface weights not populated; call interface_weights first")
    recs = {k: [] for k in SideTable.__dataclass_fields__}
    for e in mesh.interfaces:
        views = [(e.i, e.j, e.side, e.nodes_i, e.nodes_j, e.tri_i)]
        if not e.is_boundary:
            views.append((e.j, e.i, OPPOSITE[e.side], e.nodes_j, e.nodes_i, e.tri_j))
        for own_b, oth_b, side, own_nodes, oth_nodes, tri in views:
            blk = mesh.blocks[own_b]
            n = e.n_segments
            tri_local = blk.triangles[tri]
            _, grads = p1_geometry(blk.points, tri_local)
            recs["own_block"].append(np.full(n, own_b))
            recs["own"].append(own_nodes + mesh.offset(own_b))
            recs["other"].append(np.full((n, 2), -1) if oth_nodes is None else oth_nodes + mesh.offset(oth_b))
            recs["tri"].append(tri_local + mesh.offset(own_b))
            recs["dn"].append(grads @ OUTWARD_NORMALS[side])
            recs["kappa_ij"].append(e.kappa_ij)
            recs["h_ij"].append(e.h_ij)
            recs["inv_l"].append(np.full(n, 1.0 / e.l_ij))
            recs["length"].append(e.lengths)
    return SideTable(**{k: np.concatenate(v) for k, v in recs.items()})


def _side_scaling(sides: SideTable, scaling, delta: float | None = None) -> np.ndarray:
    if scaling is None:
        if delta is None:
            raise ValueError("need delta or an explicit scaling")
        sigma = delta / sides.h_ij
    elif callable(scaling):
        sigma = np.asarray(scaling(sides.h_ij), dtype=float) * np.ones(len(sides))
    else:
        sigma = np.asarray(scaling, dtype=float) * np.ones(len(sides))
    if np.any(~(sigma > 0)):
        raise ValueError("penalty scaling must be strictly positive")
    return sigma


def assemble_consistency(mesh: PartitionedMesh, field: CoefficientField | None = None,
                         sides: SideTable | None = None) -> sp.csr_matrix:
    """``sum_i s_i``: symmetric flux-times-jump terms with the P1 normal derivative
    of the triangle adjacent to each segment."""
    sides = side_table(mesh) if sides is None else sides
    c = sides.kappa_ij * sides.inv_l
    half = 0.5 * sides.length[:, None]
    # jump functional: integral of (v_other - v_own) over the segment
    w_nodes = np.concatenate([sides.own, np.where(sides.other < 0, sides.own, sides.other)], axis=1)
    w_vals = np.concatenate([-half * np.ones((1, 2)), np.where(sides.other < 0, 0.0, half)], axis=1)
    local = c[:, None, None] * w_vals[:, :, None] * sides.dn[:, None, :]
    rows = np.repeat(w_nodes[:, :, None], 3, axis=2)
    cols = np.repeat(sides.tri[:, None, :], 4, axis=1)
    n = mesh.n_dofs
    Wg = _scatter(rows, cols, local, n)
    return (Wg + Wg.T).tocsr()


def assemble_penalty(mesh: PartitionedMesh, field: CoefficientField | None = None,
                     scaling: float | Callable | None = None, delta: float = 4.0,
                     sides: SideTable | None = None) -> sp.csr_matrix:
    """``sum_i p_i`` with ``scaling`` in place of ``delta/h_ij``.

    ``scaling`` may be a number, an array over side records, or a callable
    mapping the ``h_ij`` array to per-record values. ``None`` gives the fine
    scaling ``delta / h_ij``.
    """
    sides = side_table(mesh) if sides is None else sides
    sigma = _side_scaling(sides, scaling, delta)
    c = sigma * sides.kappa_ij * sides.inv_l * sides.length
    bnd = sides.boundary
    # jump (u_other - u_own) on the two endpoints: 4 dofs, coefficients [-1,-1,+1,+1]
    nodes = np.concatenate([sides.own, np.where(bnd[:, None], sides.own, sides.other)], axis=1)
    sgn = np.concatenate([-np.ones((len(sides), 2)), np.where(bnd[:, None], 0.0, 1.0) * np.ones((1, 2))], axis=1)
    mass4 = np.tile(_SEG_MASS, (2, 2))
    local = c[:, None, None] * sgn[:, :, None] * sgn[:, None, :] * mass4
    rows = np.repeat(nodes[:, :, None], 4, axis=2)
    cols = np.repeat(nodes[:, None, :], 4, axis=1)
    return _scatter(rows, cols, local, mesh.n_dofs)


def assemble_boundary_mass(mesh: PartitionedMesh, field: CoefficientField | None = None,
                           delta: float = 4.0, sides: SideTable | None = None) -> sp.csr_matrix:
    """Block-diagonal ``sum_i m_i^delta``: own-side edge mass weighted by
    ``(1/l_ij)(delta/h_ij) kappa_ij``."""
    sides = side_table(mesh) if sides is None else sides
    c = sides.inv_l * (delta / sides.h_ij) * sides.kappa_ij * sides.length
    local = c[:, None, None] * _SEG_MASS
    rows = np.repeat(sides.own[:, :, None], 2, axis=2)
    cols = np.repeat(sides.own[:, None, :], 2, axis=1)
    return _scatter(rows, cols, local, mesh.n_dofs)


def assemble_load(mesh: PartitionedMesh, f=None) -> np.ndarray:
    """``b_k = int f phi_k``.

    ``f`` is ``None`` (f = 1), a number, or a vectorized callable ``f(x, y)``.
    Constants are integrated exactly; callables use the edge-midpoint rule,
    exact for quadratic integrands.
    """
    b = np.zeros(mesh.n_dofs)
    for blk in mesh.blocks:
        area, _ = p1_geometry(blk.points, blk.triangles)
        dofs = blk.triangles + mesh.offset(blk.index)
        if f is None or np.isscalar(f):
            value = 1.0 if f is None else float(f)
            contrib = np.repeat((value * area / 3.0)[:, None], 3, axis=1)
        else:
            p = blk.points[blk.triangles]
            # midpoint of the edge opposite vertex k
            mids = np.stack([0.5 * (p[:, 1] + p[:, 2]), 0.5 * (p[:, 2] + p[:, 0]), 0.5 * (p[:, 0] + p[:, 1])], axis=1)
            fm = np.asarray(f(mids[..., 0], mids[..., 1]), dtype=float) * np.ones(mids.shape[:2])
            # phi_k is 1/2 at the two midpoints of edges touching vertex k
            contrib = (area / 3.0)[:, None] * 0.5 * (fm.sum(axis=1, keepdims=True) - fm)
        np.add.at(b, dofs.ravel(), contrib.ravel())
    return b


@dataclass(eq=False)
class DGSystem:
    """Assembled forms on the broken space; ``K = A + S + P``."""

    mesh: PartitionedMesh
    field: CoefficientField
    delta: float
    A: sp.csr_matrix
    S: sp.csr_matrix
    P: sp.csr_matrix
    M: sp.csr_matrix
    Md: sp.csr_matrix
    b: np.ndarray
    sides: SideTable
    K: sp.csr_matrix = field(init=False)
    _factor: SparseCholesky | None = field(default=None, init=False, repr=False)

    def __post_init__(self):
        self.K = (self.A + self.S + self.P).tocsr()

    @property
    def D(self) -> sp.csr_matrix:
        """Matrix of the broken form ``d_h = sum_i (a_i + p_i)``."""
        return (self.A + self.P).tocsr()

    def penalty(self, scaling=None) -> sp.csr_matrix:
        if scaling is None:
            return self.P
        return assemble_penalty(self.mesh, scaling=scaling, delta=self.delta, sides=self.sides)

    def operator(self, scaling=None) -> sp.csr_matrix:
        """``A + S + P(scaling)``; ``None`` keeps the fine ``delta/h_ij`` penalty."""
        if scaling is None:
            return self.K
        return (self.A + self.S + self.penalty(scaling)).tocsr()

    @cached_property
    def P1(self) -> sp.csr_matrix:
        """Penalty at ``delta = 1`` (scaling ``1/h_ij``), used for interface errors."""
        return assemble_penalty(self.mesh, scaling=lambda h: 1.0 / h, sides=self.sides)

    def block(self, mat: sp.spmatrix, i: int) -> np.ndarray:
        s = self.mesh.block_slice(i)
        return mat[s, s].toarray()

    def factor(self) -> SparseCholesky:
        if self._factor is None:
            self._factor = SparseCholesky(self.K)
        return self._factor

    def solve(self) -> np.ndarray:
        """Fine reference solution ``u*_h``."""
        self.factor()
        return spd_solve(self.K, self.b)


def global_system(mesh, field, A, S, P, M, Md, b, delta: float, sides=None, check: bool = True) -> DGSystem:
    """Bundle the forms; with ``check`` the operator is factored and an
    :class:`~gmsdg.linsolve.IndefiniteMatrixError` signals that ``delta`` is
    below the stability threshold."""
    n = mesh.n_dofs
    for name, mat in (("A", A), ("S", S), ("P", P), ("M", M), ("Md", Md)):
        if mat.shape != (n, n):
            raise ValueError(f"{name} has shape {mat.shape}, expected {(n, n)}")
    if len(b) != n:
        raise ValueError(f"load vector has length {len(b)}, expected {n}")
    system = DGSystem(mesh, field, float(delta), A, S, P, M, Md, np.asarray(b, float),
                      sides if sides is not None else side_table(mesh))
    if check:
        system.factor()
    return system


def assemble_dg_system(mesh: PartitionedMesh, field: CoefficientField, delta: float = 4.0,
                       f=None, check: bool = True) -> DGSystem:
    """Populate interface weights and assemble every form for ``(mesh, field)``."""
    if delta < 0:
        raise ValueError(f"penalty parameter must be nonnegative, got {delta}")
    if not mesh.weighted:
        mesh = interface_weights(mesh, field)
    sides = side_table(mesh)
    A = assemble_energy(mesh, field)
    S = assemble_consistency(mesh, sides=sides)
    P = assemble_penalty(mesh, delta=delta, sides=sides) if delta > 0 else sp.csr_matrix((mesh.n_dofs,) * 2)
    M = assemble_mass(mesh, field)
    Md = assemble_boundary_mass(mesh, delta=delta, sides=sides)
    b = assemble_load(mesh, f)
    return global_system(mesh, field, A, S, P, M, Md, b, delta, sides=sides, check=check)
