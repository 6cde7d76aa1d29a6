"""Meshes, quadrature rules, discrete divergences, and cell node
decompositions."""

import numpy as np
import pytest

from pcpfv import (build_cartesian, build_polygonal,
                   build_triangular, cell_decomposition, discrete_div,
                   face_quad_points, gauss_rules, load_mesh, save_mesh,
                   triangle_decomposition)
from pcpfv.errors import UnsupportedOrder


def test_gauss_q2_reference():
    quad = gauss_rules(2, 3)
    assert np.allclose(sorted(quad.zeta), [-1 / (2 * np.sqrt(3)),
                                           1 / (2 * np.sqrt(3))])
    assert np.allclose(quad.omega, [0.5, 0.5])


def test_lobatto_l3_reference():
    quad = gauss_rules(2, 3)
    assert np.allclose(sorted(quad.zeta_hat), [-0.5, 0.0, 0.5])
    order = np.argsort(quad.zeta_hat)
    assert np.allclose(quad.omega_hat[order], [1 / 6, 2 / 3, 1 / 6])
    assert quad.omega_hat_1 == pytest.approx(1 / 6)


@pytest.mark.parametrize("Q,L", [(1, 2), (2, 3), (3, 4), (5, 6), (10, 10)])
def test_quadrature_weights_sum_to_one(Q, L):
    quad = gauss_rules(Q, L)
    assert np.sum(quad.omega) == pytest.approx(1.0, rel=1e-14)
    assert np.sum(quad.omega_hat) == pytest.approx(1.0, rel=1e-14)


def test_quadrature_exactness():
    # interval [-1/2, 1/2]: Gauss-Q integrates degree 2Q-1, Lobatto-L 2L-3
    for Q, L in [(2, 3), (3, 4), (4, 5)]:
        quad = gauss_rules(Q, L)
        for k in range(2 * Q):
            exact = (0.5 ** (k + 1) - (-0.5) ** (k + 1)) / (k + 1)
            assert np.dot(quad.omega, quad.zeta ** k) == \
                pytest.approx(exact, abs=1e-15)
        for k in range(2 * L - 2):
            exact = (0.5 ** (k + 1) - (-0.5) ** (k + 1)) / (k + 1)
            assert np.dot(quad.omega_hat, quad.zeta_hat ** k) == \
                pytest.approx(exact, abs=1e-15)


def test_unsupported_orders():
    with pytest.raises(UnsupportedOrder):
        gauss_rules(0, 3)
    with pytest.raises(UnsupportedOrder):
        gauss_rules(2, 1)
    with pytest.raises(UnsupportedOrder):
        gauss_rules(11, 3)


def test_single_cell_periodic():
    mesh = build_cartesian(1, 1, boundary="periodic")
    assert mesh.n_cells == 1
    assert mesh.n_faces == 4
    assert np.all(mesh.face_neigh == 0)
    mesh.validate()


def test_4x4_measures():
    mesh = build_cartesian(4, 4)
    assert np.allclose(mesh.cell_measure, 1 / 16)
    assert np.allclose(mesh.face_measure, 1 / 4)
    mesh.validate()


def test_normal_closure_per_cell():
    for mesh in (build_cartesian(3, 5), build_triangular(3, 3)):
        for k in range(mesh.n_cells):
            faces = mesh.cell_faces[k]
            s = np.sum(mesh.face_normal[faces]
                       * mesh.face_measure[faces][:, None], axis=0)
            assert np.linalg.norm(s) <= 1e-13


def test_triangular_split():
    mesh = build_triangular(1, 1)
    assert mesh.n_cells == 2
    assert np.allclose(mesh.cell_measure, 0.5)
    # one face per triangle lies on the diagonal with normal (+-1,+-1)/sqrt(2)
    diag = [f for f in range(mesh.n_faces)
            if np.allclose(np.abs(mesh.face_normal[f]),
                           [1 / np.sqrt(2), 1 / np.sqrt(2)])]
    assert len(diag) == 2


def test_outward_normals():
    mesh = build_cartesian(2, 2)
    for f in range(mesh.n_faces):
        k = mesh.face_cell[f]
        mid = 0.5 * (mesh.face_a[f] + mesh.face_b[f])
        assert np.dot(mesh.face_normal[f], mid - mesh.centroid[k]) > 0


def test_mesh_file_round_trip(tmp_path):
    mesh = build_triangular(2, 3)
    path = tmp_path / "mesh.txt"
    save_mesh(mesh, path)
    back = load_mesh(path)
    assert np.array_equal(back.vertices, mesh.vertices)
    assert [list(c) for c in back.cells] == [list(c) for c in mesh.cells]
    back.validate()


def test_polygonal_builder():
    verts = np.array([[0, 0], [1, 0], [1, 1], [0, 1], [0.5, 1.5]])
    mesh = build_polygonal(verts, [[0, 1, 2, 3], [3, 2, 4]])
    assert mesh.n_cells == 2
    assert mesh.cell_measure[0] == pytest.approx(1.0)
    mesh.validate()


def test_face_quad_points_on_faces():
    mesh = build_cartesian(2, 2)
    quad = gauss_rules(2, 3)
    pts = face_quad_points(mesh, quad)
    assert pts.shape == (mesh.n_faces, 2, 2)
    for f in range(mesh.n_faces):
        t = mesh.face_b[f] - mesh.face_a[f]
        for x in pts[f]:
            d = x - mesh.face_a[f]
            assert abs(t[0] * d[1] - t[1] * d[0]) <= 1e-14


def test_discrete_div_constant_field():
    mesh = build_cartesian(4, 4, boundary="periodic")
    B = np.tile([0.3, -0.7, 0.2], (mesh.n_cells, 1))
    for mode in ("centered", "inner", "outer"):
        div = discrete_div(mesh, B, mode=mode)
        assert np.max(np.abs(div)) <= 1e-14


def test_discrete_div_linear_field():
    mesh = build_cartesian(8, 8, boundary="outflow")
    B = np.zeros((mesh.n_cells, 3))
    B[:, 0] = mesh.centroid[:, 0]  # B = (x, 0): exact flux integral is |I_k|
    div = discrete_div(mesh, B, mode="centered")
    interior = [k for k in range(mesh.n_cells)
                if not np.any(mesh.face_neigh[mesh.cell_faces[k]] == -1)]
    assert np.allclose(div[interior], mesh.cell_measure[interior],
                       rtol=1e-12)


def test_triangle_decomposition_properties():
    quad = gauss_rules(2, 3)
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    nodes, w, edge_mask = triangle_decomposition(pts, quad)
    assert np.sum(w) == pytest.approx(1.0, rel=1e-14)
    # linear functions are averaged exactly
    cen = pts.mean(axis=0)
    f = 1.3 + 0.7 * nodes[:, 0] - 0.2 * nodes[:, 1]
    assert np.dot(w, f) == pytest.approx(1.3 + 0.7 * cen[0] - 0.2 * cen[1],
                                         abs=1e-14)
    assert np.any(edge_mask)
    # edge-node weights merge to (2/3) * omega_hat_1 * omega_mu; for Q=2
    # both Gauss weights are 1/2 so every edge node carries 1/18
    assert np.allclose(w[edge_mask], 2 / 3 * quad.omega_hat_1 * 0.5)


def test_rectangle_decomposition_properties():
    mesh = build_cartesian(2, 2)
    quad = gauss_rules(2, 3)
    nodes, w, edge_mask = cell_decomposition(mesh, 0, quad)
    assert np.sum(w) == pytest.approx(1.0, rel=1e-14)
    cen = mesh.centroid[0]
    f = -0.4 + 1.1 * nodes[:, 0] + 0.6 * nodes[:, 1]
    assert np.dot(w, f) == pytest.approx(-0.4 + 1.1 * cen[0] + 0.6 * cen[1],
                                         abs=1e-14)
    assert np.any(edge_mask)


def test_triangle_cell_decomposition_via_mesh():
    mesh = build_triangular(2, 2)
    quad = gauss_rules(2, 3)
    for k in range(mesh.n_cells):
        nodes, w, edge_mask = cell_decomposition(mesh, k, quad)
        assert np.sum(w) == pytest.approx(1.0, rel=1e-13)
        f = nodes[:, 0] ** 1  # linear exactness
        assert np.dot(w, f) == pytest.approx(mesh.centroid[k][0], abs=1e-13)

