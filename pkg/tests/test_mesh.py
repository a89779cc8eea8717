import numpy as np
import pytest

from rdeuler.basis import build_dofmap
from rdeuler.errors import DegenerateTriangle, NonConforming, UnmatchedPeriodicEdge
from rdeuler.mesh import (
    build_mesh,
    dual_volumes,
    read_mesh,
    shape_regularity,
    structured_square,
    write_mesh,
)


def test_single_reference_triangle():
    mesh = build_mesh([(0, 0), (1, 0), (0, 1)], [(0, 1, 2)])
    assert mesh.n_tris == 1
    assert mesh.num_internal_edges == 0
    assert mesh.num_unpaired_boundary_edges == 3
    assert mesh.areas[0] == pytest.approx(0.5, abs=1e-15)


def test_two_triangle_periodic_square():
    nodes = [(0, 0), (1, 0), (1, 1), (0, 1)]
    mesh = build_mesh(nodes, [(0, 1, 2), (0, 2, 3)], periodic=True)
    assert mesh.num_internal_edges == 1
    assert mesh.num_periodic_pairs == 2
    assert mesh.num_unpaired_boundary_edges == 0


def test_hanging_node_rejected():
    # node 4 sits halfway along the long edge (1, 2) of the right triangle
    nodes = [(0, 0), (2, 0), (2, 2), (2, 1), (3, 1)]
    tris = [(0, 1, 3), (0, 3, 2), (1, 4, 2)]
    with pytest.raises(NonConforming):
        build_mesh(nodes, tris)


def test_triple_owner_rejected():
    nodes = [(0, 0), (1, 0), (0, 1), (1, 1), (-1, 1)]
    tris = [(0, 1, 2), (1, 3, 2), (2, 0, 4)]
    # edge (0,2) owned by triangles 0 and 2; add a third owner
    tris.append((0, 2, 3))
    with pytest.raises(NonConforming):
        build_mesh(nodes, tris)


def test_degenerate_triangle_rejected():
    with pytest.raises(DegenerateTriangle):
        build_mesh([(0, 0), (1, 0), (2, 0)], [(0, 1, 2)])


def test_orientation_autofix():
    mesh = build_mesh([(0, 0), (1, 0), (0, 1)], [(0, 2, 1)])  # clockwise input
    assert mesh.areas[0] > 0
    p = mesh.nodes[mesh.tris[0]]
    a, b = p[1] - p[0], p[2] - p[0]
    assert a[0] * b[1] - a[1] * b[0] > 0


def test_unmatched_periodic_edge():
    # a non-rectangular domain cannot pair its slanted boundary
    nodes = [(0, 0), (1, 0), (0.6, 1.0)]
    with pytest.raises(UnmatchedPeriodicEdge):
        build_mesh(nodes, [(0, 1, 2)], periodic=True)


def test_shape_regularity_reference():
    mesh = build_mesh([(0, 0), (1, 0), (0, 1)], [(0, 1, 2)])
    sr = shape_regularity(mesh)
    assert sr["min"] == pytest.approx(4.0, rel=1e-14)
    assert sr["max"] == pytest.approx(4.0, rel=1e-14)


def test_shape_regularity_congruent():
    mesh = structured_square(3, side=3.0)
    sr = shape_regularity(mesh)
    assert sr["min"] == pytest.approx(sr["max"], rel=1e-13)


def test_shape_regularity_needle_reported():
    mesh = build_mesh([(0, 0), (1, 0), (0.5, 1e-6)], [(0, 1, 2)])
    sr = shape_regularity(mesh)
    assert sr["max"] == pytest.approx(2e6, rel=1e-3)


def test_dual_volumes_single_triangle():
    mesh = build_mesh([(0, 0), (1, 0), (0, 1)], [(0, 1, 2)])
    dm = build_dofmap(mesh, "s2", "lagrange", 1)
    dv = dual_volumes(mesh, dm)
    assert np.allclose(dv.c_sigma, 1.0 / 6.0, rtol=1e-14)
    assert dv.k_sigma[0] == pytest.approx(0.5 / 3.0)


def test_dual_volume_hexagon_vertex():
    # center vertex shared by 6 congruent triangles of area A -> 2A
    center = np.array([0.0, 0.0])
    ring = [
        (np.cos(a), np.sin(a)) for a in np.linspace(0, 2 * np.pi, 7)[:-1]
    ]
    nodes = [tuple(center)] + ring
    tris = [(0, 1 + i, 1 + (i + 1) % 6) for i in range(6)]
    mesh = build_mesh(nodes, tris)
    dm = build_dofmap(mesh, "s2", "lagrange", 1)
    dv = dual_volumes(mesh, dm)
    A = mesh.areas[0]
    assert np.allclose(mesh.areas, A, rtol=1e-13)
    assert dv.c_sigma[0] == pytest.approx(2 * A, rel=1e-13)


def test_dual_volumes_discontinuous():
    mesh = structured_square(2, side=1.0)
    dm = build_dofmap(mesh, "s1", "lagrange", 1)
    dv = dual_volumes(mesh, dm)
    expect = np.repeat(mesh.areas / 3.0, 3)
    assert np.allclose(dv.c_sigma, expect, rtol=1e-14)


def test_dual_volumes_partition_total_area():
    mesh = structured_square(5, side=7.0)
    for space, deg in (("s2", 1), ("s2", 2), ("s1", 2)):
        dm = build_dofmap(mesh, space, "lagrange", deg)
        dv = dual_volumes(mesh, dm)
        assert np.sum(dv.c_sigma) == pytest.approx(np.sum(mesh.areas), rel=1e-12)


def test_opposite_normals_and_polygon_closure():
    mesh = structured_square(4)
    # each triangle's length-weighted normals close up
    closure = np.einsum(
        "mk,mki->mi", mesh.elem_edge_length, mesh.elem_edge_normal
    )
    assert np.abs(closure).max() < 1e-14 * mesh.diameters.max()
    # opposite outward normals across every interface
    has_r = mesh.edge_right >= 0
    nl = mesh.elem_edge_normal[mesh.edge_left, mesh.edge_left_loc]
    nr = mesh.elem_edge_normal[
        np.maximum(mesh.edge_right, 0), mesh.edge_right_loc
    ]
    assert np.abs((nl + nr)[has_r]).max() < 1e-14


def test_periodic_pair_lengths_match():
    mesh = structured_square(4)
    per = mesh.edge_periodic
    lr = mesh.elem_edge_length[
        np.maximum(mesh.edge_right, 0), mesh.edge_right_loc
    ]
    rel = np.abs(mesh.edge_length - lr)[per] / mesh.edge_length[per]
    assert rel.max() < 1e-9


def test_mesh_file_roundtrip(tmp_path):
    mesh = structured_square(3)
    path = tmp_path / "m.txt"
    write_mesh(path, mesh)
    back = read_mesh(path)
    assert np.array_equal(back.tris, mesh.tris)
    assert np.array_equal(back.nodes, mesh.nodes)
    assert back.periodic


def test_mesh_file_rejects_garbage(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("rdmesh 2\nnodes 0\ntriangles 0\n")
    with pytest.raises(NonConforming):
        read_mesh(path)
