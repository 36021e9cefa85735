import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gmsdg.coefficient import constant, from_raster
from gmsdg.fe_core import p1_geometry
from gmsdg.mesh import BOUNDARY, build_partition, harmonic_mean, interface_weights


def test_smallest_mesh():
    mesh = build_partition(1, 1)
    assert mesh.N == 1
    blk = mesh.blocks[0]
    assert len(blk.triangles) == 2 and blk.n_dofs == 4
    assert len(mesh.interfaces) == 4
    assert all(e.j == BOUNDARY for e in mesh.interfaces)


def test_full_scale_sizes():
    mesh = build_partition(10, 10)
    assert mesh.N == 100
    assert mesh.h == pytest.approx(0.01) and mesh.H == pytest.approx(0.1)
    assert all(b.n_dofs == 121 for b in mesh.blocks)
    assert mesh.n_dofs == 12100


def test_two_by_two_interior_edges():
    mesh = build_partition(2, 2)
    interior = [e for e in mesh.interfaces if not e.is_boundary]
    assert len(interior) == 4
    assert all(e.n_segments == 2 for e in interior)
    assert len(mesh.interfaces) - len(interior) == 8


@pytest.mark.parametrize("M, m", [(0, 1), (1, 0), (-2, 3), (2.5, 2)])
def test_rejects_bad_sizes(M, m):
    with pytest.raises(ValueError):
        build_partition(M, m)


def test_interface_ordering_row_major():
    mesh = build_partition(3, 2)
    seen = [(e.i, e.side) for e in mesh.interfaces]
    assert seen == sorted(seen)
    pairs = [(e.i, e.j) for e in mesh.interfaces if not e.is_boundary]
    assert len(pairs) == len(set(pairs)) == 2 * 3 * 2
    assert all(j > i for i, j in pairs)


def test_blocks_tile_the_square_on_the_lattice():
    M, m = 3, 4
    mesh = build_partition(M, m)
    h = mesh.h
    total = 0.0
    for b in mesh.blocks:
        k = b.points / h
        assert np.allclose(k, np.round(k), atol=1e-12)
        area, _ = p1_geometry(b.points, b.triangles)
        assert np.allclose(area, h * h / 2, rtol=1e-12)
        total += area.sum()
        lo = b.points.min(axis=0)
        assert np.allclose(lo, b.origin) and np.allclose(b.points.max(axis=0) - lo, mesh.H)
    assert total == pytest.approx(1.0, rel=1e-12)
    origins = {tuple(np.round(np.array(b.origin) / mesh.H).astype(int)) for b in mesh.blocks}
    assert len(origins) == M * M


def test_segments_tile_each_edge_and_match_across():
    mesh = build_partition(3, 5)
    for e in mesh.interfaces:
        assert e.lengths.sum() == pytest.approx(mesh.H, abs=1e-12)
        # consecutive segments share endpoints
        assert np.allclose(e.endpoints[1:, 0], e.endpoints[:-1, 1])
        if not e.is_boundary:
            pj = mesh.blocks[e.j].points[e.nodes_j]
            assert np.array_equal(pj, e.endpoints)


def test_boundary_node_count():
    mesh = build_partition(2, 5)
    assert mesh.blocks[0].n_boundary == 4 * 5
    assert mesh.blocks[0].n_edges == 4


def test_harmonic_average_examples():
    assert harmonic_mean(1.0, 1.0) == 1.0
    assert harmonic_mean(1.0, 1e4) == pytest.approx(2e4 / (1e4 + 1), rel=1e-15)


@settings(max_examples=200, deadline=None)
@given(st.floats(1e-8, 1e8), st.floats(1e-8, 1e8))
def test_harmonic_average_bounds(a, b):
    k = float(harmonic_mean(a, b))
    lo = min(a, b)
    assert lo * (1 - 1e-12) <= k <= 2 * lo * (1 + 1e-12)


def test_interface_weights_from_neighbouring_cells():
    mesh = build_partition(2, 2)
    grid = np.ones((4, 4))
    grid[:, 2:] = 1e4  # right half
    w = interface_weights(mesh, from_raster(grid, mesh))
    for e in w.interfaces:
        assert np.all(e.h_ij == mesh.h)
        if e.is_boundary:
            expect = 1e4 if e.i in (1, 3) else 1.0
            assert np.all(e.kappa_ij == expect)
        elif {e.i, e.j} in ({0, 1}, {2, 3}):
            assert np.allclose(e.kappa_ij, 2e4 / (1e4 + 1), rtol=1e-15)
        else:
            assert np.all(e.kappa_ij == (1e4 if e.i == 1 else 1.0))


def test_interface_weights_rejects_nonpositive():
    mesh = build_partition(1, 2)
    fld = constant(mesh)
    bad = type("F", (), {"kappa": fld.kappa * 0})()
    with pytest.raises(ValueError):
        interface_weights(mesh, bad)
