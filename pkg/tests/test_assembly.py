import numpy as np
import pytest

from schwarzmin import assembly as asb
from schwarzmin import geometry as geo
from schwarzmin import meshkit as mk
from schwarzmin import surfaces as sf

from conftest import MASS


def rect(x0, x1, y0, y1, n, z=0.0, offset=(0.0, 0.0, 3.0)):
    xs, ys = np.linspace(x0, x1, n + 1), np.linspace(y0, y1, n + 1)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    V = np.stack([X.ravel(), Y.ravel(), np.full(X.size, z)], axis=1) + offset
    T = []
    for i in range(n):
        for j in range(n):
            p, q, a, b = i * (n + 1) + j, i * (n + 1) + j + 1, (i + 1) * (n + 1) + j, (i + 1) * (n + 1) + j + 1
            T += [(p, a, b), (p, b, q)]
    return mk.TriMesh(V, np.array(T))


def test_orbit_identity_and_size(quarter_sweep):
    piece = quarter_sweep.meshes[0]
    for tau in (1, 2):
        G = geo.generate_group(tau, MASS)
        copies = asb.orbit_meshes(piece, G)
        assert len(copies) == 4 * (tau + 1)
        np.testing.assert_array_equal(copies[0].vertices, piece.vertices)
        np.testing.assert_array_equal(copies[0].triangles, piece.triangles)


def test_orbit_flips_winding_of_reflected_copies(quarter_sweep):
    piece = quarter_sweep.meshes[0]
    G = geo.generate_group(1, MASS)
    copies = asb.orbit_meshes(piece, G)
    for c, flip in zip(copies, G.surface_flip):
        expected = piece.triangles[:, ::-1] if flip else piece.triangles
        np.testing.assert_array_equal(c.triangles, expected)
    assert any(G.surface_flip) and not all(G.surface_flip)


def test_weld_two_halves_gives_disk():
    w = asb.weld([rect(-1, 0, -1, 1, 4), rect(0, 1, -1, 1, 4)], 1e-9)
    chi, b, g = asb.euler_genus(w)
    assert (chi, b, g) == (1, 1, 0)
    assert asb.is_connected(w.mesh) and asb.is_oriented(w.mesh)
    assert len(w.seam_edges) == 4  # the shared diameter


def test_weld_single_mesh_is_identity():
    m = rect(0, 1, 0, 1, 3)
    w = asb.weld([m], 1e-9)
    np.testing.assert_array_equal(w.mesh.vertices, m.vertices)
    np.testing.assert_array_equal(w.mesh.triangles, m.triangles)


def test_weld_detects_fold():
    a = rect(-1, 0, -1, 1, 2)
    b = rect(0, 1, -1, 1, 2)
    c = rect(0, 1, -1, 1, 2)
    c.vertices[:, 2] += 0.3 * c.vertices[:, 0]  # third sheet hinged on the seam
    with pytest.raises(asb.WeldError, match="fold"):
        asb.weld([a, b, c], 1e-9)


def test_weld_detects_inconsistent_orientation():
    a = rect(-1, 0, -1, 1, 2)
    b = rect(0, 1, -1, 1, 2)
    b.triangles = b.triangles[:, ::-1].copy()
    with pytest.raises(asb.WeldError, match="orientation"):
        asb.weld([a, b], 1e-9)


def test_weld_detects_gap():
    a = rect(-1, 0, -1, 1, 2)
    b = rect(0, 1, -1, 1, 2, offset=(1e-8, 0.0, 3.0))
    with pytest.raises(asb.WeldError, match="gap"):
        asb.weld([a, b], 1e-9)


def test_genus_of_reference_surfaces():
    assert asb.euler_genus(sf.icosphere(1.0, 1)) == (2, 0, 0)
    assert asb.euler_genus(rect(0, 1, 0, 1, 3)) == (1, 1, 0)


@pytest.mark.parametrize("tau", [1, 2])
def test_assembled_genus(assemblies, tau):
    w = assemblies(tau)
    chi, b, g = asb.euler_genus(w)
    assert g == tau
    assert asb.is_connected(w.mesh) and asb.is_oriented(w.mesh)


def test_symmetry_residual_identity_and_flat_double():
    ident = geo.IsometryGroup(1, MASS, [geo.IDENTITY], [False])
    m = rect(0, 1, 0, 1, 3)
    w = asb.weld([m], 1e-9)
    assert asb.symmetry_residual(w, ident) == 0.0
    # a square symmetric under the reflection across the plane y = 0
    refl = geo.reflection(geo.plane_Q(0.0))
    half = rect(0.5, 1.5, 0.0, 1.0, 4, offset=(0.0, 0.0, 0.0))
    other = mk.TriMesh(geo.apply_isometry(refl, half.vertices), half.triangles[:, ::-1])
    w2 = asb.weld([half, other], 1e-9)
    group = geo.IsometryGroup(1, MASS, [geo.IDENTITY, refl], [False, True])
    assert asb.symmetry_residual(w2, group) <= 1e-9


def test_symmetry_residual_of_assembly(assemblies):
    w = assemblies(1)
    assert asb.symmetry_residual(w, geo.generate_group(1, MASS)) <= 2 * w.weld_tolerance


def test_seams(assemblies):
    w = assemblies(1)
    rep = asb.seam_report(w, 1, MASS)
    assert rep.passed, rep
    assert len(rep.horizon_angles) == 4 and len(rep.ray_angles) == 4
