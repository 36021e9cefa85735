"""Coarse partition of the unit square and per-block structured P1 meshes.

Blocks are numbered row-major: block ``i = by * M + bx`` covers
``[bx*H, (bx+1)*H] x [by*H, (by+1)*H]``. Inside a block, node ``k = iy*(m+1) + ix``
sits at ``origin + (ix*h, iy*h)`` and every square cell is split along the
``(h,0)-(0,h)`` diagonal, giving triangles

    lower: (ix, iy), (ix+1, iy), (ix, iy+1)
    upper: (ix+1, iy+1), (ix, iy+1), (ix+1, iy)

with element index ``2*(iy*m + ix) + {0, 1}``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

BOUNDARY = -1

SOUTH, EAST, NORTH, WEST = range(4)
SIDE_NAMES = ("south", "east", "north", "west")
OUTWARD_NORMALS = np.array([[0.0, -1.0], [1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]])
OPPOSITE = {SOUTH: NORTH, NORTH: SOUTH, EAST: WEST, WEST: EAST}


@dataclass(frozen=True, eq=False)
class SubdomainMesh:
    index: int
    origin: tuple[float, float]
    points: np.ndarray
    triangles: np.ndarray
    boundary_nodes: np.ndarray
    n_edges: int = 4

    @property
    def n_dofs(self) -> int:
        return len(self.points)

    @property
    def n_boundary(self) -> int:
        return len(self.boundary_nodes)

    @property
    def interior_nodes(self) -> np.ndarray:
        mask = np.ones(self.n_dofs, dtype=bool)
        mask[self.boundary_nodes] = False
        return np.flatnonzero(mask)


@dataclass(frozen=True, eq=False)
class InterfaceEdge:
    """One geometric coarse edge, seen from block ``i`` (and ``j`` if interior).

    Segment ``s`` joins local nodes ``nodes_i[s]`` of block ``i``; for an
    interior edge ``nodes_j[s]`` are the geometrically coincident nodes of
    block ``j`` in the same order. ``tri_i``/``tri_j`` hold the element
    adjacent to each segment on either side.
    """

    i: int
    j: int
    side: int
    nodes_i: np.ndarray
    tri_i: np.ndarray
    endpoints: np.ndarray
    nodes_j: np.ndarray | None = None
    tri_j: np.ndarray | None = None
    kappa_i: np.ndarray | None = None
    kappa_j: np.ndarray | None = None
    kappa_ij: np.ndarray | None = None
    h_ij: np.ndarray | None = None

    @property
    def is_boundary(self) -> bool:
        return self.j == BOUNDARY

    @property
    def l_ij(self) -> float:
        return 1.0 if self.is_boundary else 2.0

    @property
    def lengths(self) -> np.ndarray:
        d = self.endpoints[:, 1, :] - self.endpoints[:, 0, :]
        return np.hypot(d[:, 0], d[:, 1])

    @property
    def n_segments(self) -> int:
        return len(self.nodes_i)

    @property
    def weighted(self) -> bool:
        return self.kappa_ij is not None


@dataclass(frozen=True, eq=False)
class PartitionedMesh:
    M: int
    m: int
    blocks: list[SubdomainMesh]
    interfaces: list[InterfaceEdge]
    block_h: np.ndarray = field(default=None)

    @property
    def N(self) -> int:
        return self.M * self.M

    @property
    def H(self) -> float:
        return 1.0 / self.M

    @property
    def h(self) -> float:
        return 1.0 / (self.M * self.m)

    @property
    def n_local(self) -> int:
        return (self.m + 1) ** 2

    @property
    def n_dofs(self) -> int:
        return self.N * self.n_local

    @property
    def n_elements_local(self) -> int:
        return 2 * self.m * self.m

    def offset(self, i: int) -> int:
        return i * self.n_local

    def block_slice(self, i: int) -> slice:
        return slice(i * self.n_local, (i + 1) * self.n_local)

    def split(self, v: np.ndarray) -> np.ndarray:
        """View a broken vector as ``(N, N_i)``; rows are the blocks."""
        return np.asarray(v).reshape(self.N, self.n_local)

    def block_coords(self, i: int) -> tuple[int, int]:
        return i % self.M, i // self.M

    def edges_of(self, i: int) -> list[InterfaceEdge]:
        return [e for e in self.interfaces if e.i == i or e.j == i]

    @property
    def weighted(self) -> bool:
        return all(e.weighted for e in self.interfaces)


def _edge_nodes(m: int, side: int) -> np.ndarray:
    t = np.arange(m + 1)
    if side == SOUTH:
        return t
    if side == NORTH:
        return m * (m + 1) + t
    if side == WEST:
        return t * (m + 1)
    return t * (m + 1) + m


def _edge_triangles(m: int, side: int) -> np.ndarray:
    t = np.arange(m)
    if side == SOUTH:
        return 2 * t
    if side == WEST:
        return 2 * (t * m)
    if side == NORTH:
        return 2 * ((m - 1) * m + t) + 1
    return 2 * (t * m + m - 1) + 1


def _block_template(m: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    ix, iy = np.meshgrid(np.arange(m + 1), np.arange(m + 1))
    lattice = np.column_stack([ix.ravel(), iy.ravel()])
    cx, cy = np.meshgrid(np.arange(m), np.arange(m))
    cx, cy = cx.ravel(), cy.ravel()
    n00 = cy * (m + 1) + cx
    n10, n01, n11 = n00 + 1, n00 + m + 1, n00 + m + 2
    tris = np.empty((2 * m * m, 3), dtype=np.int64)
    tris[0::2] = np.column_stack([n00, n10, n01])
    tris[1::2] = np.column_stack([n11, n01, n10])
    boundary = np.unique(np.concatenate([_edge_nodes(m, s) for s in range(4)]))
    return lattice, tris, boundary


def build_partition(M: int, m: int) -> PartitionedMesh:
    """Split the unit square into ``M x M`` blocks with ``m x m`` cells each."""
    if int(M) != M or int(m) != m or M < 1 or m < 1:
        raise ValueError(f"M and m must be positive integers, got M={M}, m={m}")
    M, m = int(M), int(m)
    H, h = 1.0 / M, 1.0 / (M * m)
    lattice, tris, boundary = _block_template(m)

    blocks = []
    for i in range(M * M):
        bx, by = i % M, i // M
        # integer lattice first, then scale, so shared nodes coincide bitwise
        pts = np.column_stack([(bx * m + lattice[:, 0]) * h, (by * m + lattice[:, 1]) * h])
        blocks.append(SubdomainMesh(i, (bx * H, by * H), pts, tris, boundary))

    interfaces = []
    for i in range(M * M):
        bx, by = i % M, i // M
        neighbours = {
            SOUTH: i - M if by > 0 else BOUNDARY,
            EAST: i + 1 if bx < M - 1 else BOUNDARY,
            NORTH: i + M if by < M - 1 else BOUNDARY,
            WEST: i - 1 if bx > 0 else BOUNDARY,
        }
        for side in (SOUTH, EAST, NORTH, WEST):
            j = neighbours[side]
            if j != BOUNDARY and j < i:
                continue
            nodes = _edge_nodes(m, side)
            seg_i = np.column_stack([nodes[:-1], nodes[1:]])
            pts = blocks[i].points
            endpoints = np.stack([pts[seg_i[:, 0]], pts[seg_i[:, 1]]], axis=1)
            kw = {}
            if j != BOUNDARY:
                other = _edge_nodes(m, OPPOSITE[side])
                kw["nodes_j"] = np.column_stack([other[:-1], other[1:]])
                kw["tri_j"] = _edge_triangles(m, OPPOSITE[side])
            interfaces.append(
                InterfaceEdge(i=i, j=j, side=side, nodes_i=seg_i,
                              tri_i=_edge_triangles(m, side), endpoints=endpoints, **kw)
            )
    return PartitionedMesh(M, m, blocks, interfaces, np.full(M * M, h))


def harmonic_mean(a, b):
    """``2ab/(a+b)``; returns ``a`` exactly where ``a == b``."""
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return np.where(a == b, a, 2.0 * a * b / (a + b))


def interface_weights(mesh: PartitionedMesh, field, block_h=None) -> PartitionedMesh:
    """Populate per-segment ``kappa_ij`` and ``h_ij`` from the adjacent elements.

    ``field`` is anything with a ``kappa`` array of shape ``(N, 2 m^2)``.
    ``block_h`` overrides the per-block mesh sizes entering ``h_ij``.
    """
    kappa = np.asarray(field.kappa, dtype=float)
    if kappa.shape != (mesh.N, mesh.n_elements_local):
        raise ValueError(f"coefficient shape {kappa.shape} does not match mesh")
    if not np.all(kappa > 0):
        raise ValueError("permeability must be strictly positive")
    hs = mesh.block_h if block_h is None else np.broadcast_to(np.asarray(block_h, float), (mesh.N,))
    if np.any(hs <= 0):
        raise ValueError("mesh sizes must be positive")

    edges = []
    for e in mesh.interfaces:
        k_i = kappa[e.i, e.tri_i]
        if e.is_boundary:
            k_j = None
            k_ij = k_i.copy()
            h_ij = np.full(e.n_segments, hs[e.i])
        else:
            k_j = kappa[e.j, e.tri_j]
            k_ij = harmonic_mean(k_i, k_j)
            h_ij = np.full(e.n_segments, float(harmonic_mean(hs[e.i], hs[e.j])))
        edges.append(replace(e, kappa_i=k_i, kappa_j=k_j, kappa_ij=k_ij, h_ij=h_ij))
    return replace(mesh, interfaces=edges, block_h=np.array(hs, dtype=float))
