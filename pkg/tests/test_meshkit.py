import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from schwarzmin import contour as ct
from schwarzmin import meshkit as mk
from schwarzmin import surfaces as sf
from schwarzmin.geometry import conformal_factor, length_scale


def dense_length(p, q, m, n=10_000):
    t = (np.arange(n) + 0.5) / n
    pts = np.asarray(p) + t[:, None] * (np.asarray(q) - np.asarray(p))
    return np.mean(length_scale(pts, m)) * np.linalg.norm(np.subtract(q, p))


def dense_area(a, b, c, m, n=200):
    # midpoint rule on n^2 congruent subtriangles
    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    keep = i + j < n
    up = np.stack([(i[keep] + 1 / 3) / n, (j[keep] + 1 / 3) / n], axis=1)
    keep2 = i + j < n - 1
    dn = np.stack([(i[keep2] + 2 / 3) / n, (j[keep2] + 2 / 3) / n], axis=1)
    uv = np.vstack([up, dn])
    a, b, c = map(np.asarray, (a, b, c))
    pts = a + uv[:, :1] * (b - a) + uv[:, 1:] * (c - a)
    area = 0.5 * np.linalg.norm(np.cross(b - a, c - a))
    return area * np.mean(conformal_factor(pts, m))


def test_edge_length_matches_dense_oracle():
    p, q = [1.0, 0, 0], [1.1, 0, 0]
    assert mk.edge_length_g(p, q, 2.0) == pytest.approx(dense_length(p, q, 2.0), rel=1e-6)


def test_edge_length_flat_limits():
    p, q = np.array([0.3, 1.0, -0.2]), np.array([1.0, 0.4, 0.5])
    d = np.linalg.norm(q - p)
    assert mk.edge_length_g(p, q, 1e-9) == pytest.approx(d, rel=1e-8)
    far = np.array([1e6, 0, 0])
    assert mk.edge_length_g(far, far + [0, 1, 0], 2.0) == pytest.approx(1.0, rel=3e-6)


def test_edge_through_origin_rejected():
    with pytest.raises(mk.MeshError):
        mk.edge_length_g([-1.0, 0, 0], [1.0, 0, 0], 2.0)


def test_triangle_area_limits():
    a = np.array([1e9, 0, 0])
    assert mk.triangle_area_g(a, a + [0, 1, 0], a + [0, 0, 1], 2.0) == pytest.approx(0.5, rel=1e-8)
    s = 1e-3
    b = np.array([1.0, 0, 0])
    val = mk.triangle_area_g(b, b + [0, s, 0], b + [0, 0, s], 2.0)
    assert val / (0.5 * s * s) == pytest.approx(16.0, rel=1e-5)


@pytest.mark.parametrize("rule", ["centroid", "edge3"])
def test_triangle_rules_converge_quadratically(rule):
    a = np.array([0.9, 0.1, 0.2])
    errs = []
    for h in (0.4, 0.2, 0.1):
        b, c = a + [h, 0.3 * h, 0], a + [0.1 * h, h, 0.2 * h]
        errs.append(abs(mk.triangle_area_g(a, b, c, 2.0, rule) / dense_area(a, b, c, 2.0) - 1))
    assert errs[1] < errs[0] / 3 and errs[2] < errs[1] / 3


def test_degenerate_triangle_detected():
    with pytest.raises(mk.DegenerateTriangleError):
        mk.triangle_area_g([1.0, 0, 0], [2.0, 0, 0], [3.0, 0, 0], 2.0)


def test_mesh_area_empty_and_additive():
    empty = mk.TriMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))
    assert mk.mesh_area_g(empty, 2.0) == 0.0
    a = sf.planar_disk((3, 0, 0), (0, 0, 1), 0.5, 1)
    b = sf.planar_disk((0, 3, 1), (1, 1, 0), 0.7, 1)
    assert mk.mesh_area_g(sf.merge([a, b]), 2.0) == pytest.approx(mk.mesh_area_g(a, 2.0) + mk.mesh_area_g(b, 2.0),
                                                                 rel=1e-14)


def test_flat_disk_far_away_has_area_pi():
    disk = sf.ring_disk((1e6, 0, 0), (0, 0, 1), 1.0, 4 * 2**3)
    assert mk.mesh_area_g(disk, 2.0) == pytest.approx(np.pi, rel=1e-2)


@pytest.mark.parametrize("theta", [np.pi / 2, np.pi / 3])
def test_disk_mesh_topology_and_refinement(theta):
    c = ct.build_contour(theta, 4.0, 2.0, 4)
    m0 = mk.init_disk_mesh(c, 0)
    assert m0.euler_characteristic() == 1 and len(m0.boundary_loops) == 1
    mk.check_nondegenerate(m0.vertices, m0.triangles)
    m = m0
    for level in (1, 2):
        m = mk.refine(m)
        assert len(m.triangles) == 4**level * len(m0.triangles)
        assert m.euler_characteristic() == 1
        for v, arcs in m.arc_params.items():
            for tag, t in arcs.items():
                np.testing.assert_allclose(m.vertices[v], ct.arc_point(c, tag, t), atol=1e-12)
    assert mk.init_disk_mesh(c, 2).n_vertices == m.n_vertices


def test_export_import_round_trip(tmp_path):
    c = ct.build_contour(np.pi / 2, 3.0, 2.0, 3)
    mesh = mk.init_disk_mesh(c, 1)
    mesh.vertices += 1e-3 * np.random.default_rng(0).standard_normal(mesh.vertices.shape)
    path = tmp_path / "m.obj"
    mk.export_mesh(mesh, path)
    back = mk.import_mesh(path)
    np.testing.assert_array_equal(back.vertices, mesh.vertices)
    np.testing.assert_array_equal(back.triangles, mesh.triangles)
    np.testing.assert_array_equal(back.boundary_flags, mesh.boundary_flags)
    assert back.arc_params == mesh.arc_params


def test_empty_mesh_round_trip(tmp_path):
    empty = mk.TriMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))
    mk.export_mesh(empty, tmp_path / "e.obj")
    back = mk.import_mesh(tmp_path / "e.obj")
    assert back.n_vertices == 0 and len(back.triangles) == 0


def test_import_reports_line_number(tmp_path):
    p = tmp_path / "bad.obj"
    p.write_text("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 x\n")
    with pytest.raises(mk.MeshFormatError) as err:
        mk.import_mesh(p)
    assert err.value.lineno == 4
    p.write_text("v 0 0 0\nf 1 2 3\n")
    with pytest.raises(mk.MeshFormatError):
        mk.import_mesh(p)


def test_self_intersection_detector():
    clean = sf.planar_disk((3, 0, 0), (0, 0, 1), 1.0, 1)
    assert len(mk.self_intersections(clean)) == 0
    crossing = mk.TriMesh(
        np.array([[0, 0, 0], [2, 0, 0], [0, 2, 0], [0.5, 0.5, -1], [0.5, 0.5, 1], [1.5, 1.5, 0.2]], float) + 5,
        np.array([[0, 1, 2], [3, 4, 5]]),
    )
    assert len(mk.self_intersections(crossing)) == 1


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_distance_to_mesh_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    mesh = sf.sphere_cap(2.0, 0, 0.5)
    pts = rng.uniform(-1, 1, (20, 3)) + [0, 0, 2]
    T = mesh.triangles
    V = mesh.vertices
    brute = np.array([
        np.min(mk.point_triangle_distance(np.repeat(p[None], len(T), 0), V[T[:, 0]], V[T[:, 1]], V[T[:, 2]]))
        for p in pts
    ])
    np.testing.assert_allclose(mk.distance_to_mesh(pts, mesh, k=len(V)), brute, rtol=1e-12, atol=1e-14)


def test_point_triangle_distance_regions():
    A, B, C = np.array([[0.0, 0, 0]]), np.array([[1.0, 0, 0]]), np.array([[0.0, 1, 0]])
    cases = {(0.2, 0.2, 0.5): 0.5, (-1.0, -1.0, 0.0): np.sqrt(2), (2.0, 0.0, 0.0): 1.0, (1.0, 1.0, 0.0): np.sqrt(0.5)}
    for p, d in cases.items():
        assert mk.point_triangle_distance(np.array([p]), A, B, C)[0] == pytest.approx(d)


def test_cotan_stiffness_annihilates_constants_and_linears():
    disk = sf.planar_disk((3, 0, 0), (0, 0, 1), 1.0, 1)
    K = mk.cotan_stiffness(disk.vertices, disk.triangles)
    np.testing.assert_allclose(K @ np.ones(disk.n_vertices), 0.0, atol=1e-12)
    lin = K @ disk.vertices[:, 0]
    np.testing.assert_allclose(lin[disk.interior], 0.0, atol=1e-12)


@pytest.mark.parametrize("n", [4, 8])
def test_ring_disk_is_a_disk(n):
    d = sf.ring_disk((0, 0, 5), (0, 0, 1), 1.0, n)
    assert d.euler_characteristic() == 1 and len(d.boundary_loops) == 1
    assert np.allclose(np.linalg.norm(d.vertices[d.boundary_flags] - [0, 0, 5], axis=1), 1.0)
    assert len(mk.self_intersections(d)) == 0
