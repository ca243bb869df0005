import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from schwarzmin import contour as ct
from schwarzmin import meshkit as mk
from schwarzmin import plateau as pl
from schwarzmin import surfaces as sf
from schwarzmin.geometry import plane_Q

from conftest import MASS, fd_gradient_oracle, relative_component_error


def random_mesh(seed: int) -> mk.TriMesh:
    rng = np.random.default_rng(seed)
    theta = rng.choice([np.pi / 2, np.pi / 3, np.pi / 4])
    c = ct.build_contour(theta, rng.uniform(2.0, 6.0), MASS, 3)
    mesh = mk.init_disk_mesh(c, 1)
    I = mesh.interior
    mesh.vertices[I] += 0.02 * rng.standard_normal((len(I), 3))
    return mesh


@pytest.mark.parametrize("seed", [0, 1, 4])
def test_gradient_matches_finite_differences(seed):
    mesh = random_mesh(seed)
    G = pl.area_gradient(mesh, MASS)
    assert relative_component_error(G, fd_gradient_oracle(mesh, MASS)) < 1e-6


def test_gradient_flat_limit_is_cotangent_form():
    disk = sf.planar_disk((3, 1, 0), (0.2, 0.1, 1.0), 1.0, 1)
    disk.vertices[disk.interior] += 0.05 * np.random.default_rng(4).standard_normal((len(disk.interior), 3))
    G = pl.area_gradient(disk, 1e-12)
    K = mk.cotan_stiffness(disk.vertices, disk.triangles)
    ref = K @ disk.vertices
    I = disk.interior
    np.testing.assert_allclose(G[I], ref[I], rtol=1e-8, atol=1e-10)


def test_gradient_normal_components_vanish_on_symmetric_plane():
    # planar square in Q_0: symmetric under the reflection across Q_0
    sq = sf.planar_square((2.0, 0.0, 0.5), (1, 0, 0), (0, 0, 1), 0.7, 4)
    G = pl.area_gradient(sq, MASS)
    np.testing.assert_allclose(G @ plane_Q(0.0).n, 0.0, atol=1e-14)


def test_area_history_is_monotone_and_report_csv(tmp_path):
    c = ct.build_contour(np.pi / 2, 3.0, MASS, 4)
    mesh, rep = pl.solve_plateau(mk.init_disk_mesh(c, 0), MASS, pl.SolverConfig(refinements=1))
    assert rep.converged
    for a, b in zip(rep.level_starts[:-1], rep.level_starts[1:]):
        assert np.all(np.diff(rep.area_history[a:b]) <= 1e-14 * rep.area_history[a])
    rep.to_csv(tmp_path / "r.csv")
    rows = (tmp_path / "r.csv").read_text().splitlines()
    assert rows[0] == "iteration,area,grad_norm" and len(rows) == len(rep.area_history) + 1


def test_plane_in_Q0_is_recovered():
    sq = sf.planar_square((2.0, 0.0, 0.5), (1, 0, 0), (0, 0, 1), 0.8, 8)
    rng = np.random.default_rng(1)
    sq.vertices[sq.interior, 1] += 0.05 * rng.standard_normal(len(sq.interior))
    mesh, rep = pl.solve_plateau(sq, MASS, pl.SolverConfig(max_iterations=2000, grad_tolerance=1e-10))
    assert rep.converged
    assert np.max(np.abs(mesh.vertices @ plane_Q(0.0).n)) <= 1e-6


def test_near_euclidean_disk_has_area_pi():
    disk = sf.ring_disk((10.0, 0.0, 0.0), (0, 0, 1), 1.0, 4 * 2**3)
    x, y = disk.vertices[:, 0] - 10.0, disk.vertices[:, 1]
    disk.vertices[:, 2] += 0.2 * (1 - x * x - y * y) * np.cos(3 * np.arctan2(y, x))
    mesh, rep = pl.solve_plateau(disk, 1e-8, pl.SolverConfig(full_steps=400))
    assert rep.converged
    assert mk.mesh_area_g(mesh, 1e-8) == pytest.approx(np.pi, rel=1e-2)


def test_solution_is_contained(quarter_sweep):
    from schwarzmin.diagnostics import containment_check

    assert containment_check(quarter_sweep.meshes[0], np.pi / 2, MASS) <= 1e-8


def test_sweep_distances_decrease(quarter_sweep):
    d = quarter_sweep.distances[:3]  # R in {3, 5, 8, 12}
    assert all(b < a for a, b in zip(d, d[1:]))


def test_single_entry_sweep_equals_solve():
    res = pl.sweep_R(np.pi / 2, MASS, [3.0], n_per_arc=4, level=1)
    c = ct.build_contour(np.pi / 2, 3.0, MASS, 4)
    mesh, _ = pl.solve_plateau(mk.init_disk_mesh(c, 0), MASS, pl.SolverConfig(refinements=1))
    np.testing.assert_array_equal(res.meshes[0].vertices, mesh.vertices)


def test_solver_respects_iteration_budget():
    c = ct.build_contour(np.pi / 2, 3.0, MASS, 4)
    _, rep = pl.solve_plateau(mk.init_disk_mesh(c, 1), MASS, pl.SolverConfig(max_iterations=3))
    assert rep.iterations == 3 and rep.status == "max_iterations"


@pytest.mark.parametrize("bad", [dict(grad_tolerance=0.0), dict(backtrack=1.0), dict(armijo=0.0),
                                 dict(refinements=-1), dict(rule="simpson")])
def test_solver_config_validation(bad):
    with pytest.raises(ValueError):
        pl.SolverConfig(**bad)


def test_sweep_rejects_unsorted_radii():
    with pytest.raises(ValueError):
        pl.sweep_R(np.pi / 2, MASS, [5.0, 3.0])


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 1000), st.floats(0.05, 5.0))
def test_area_is_invariant_under_rotation_about_the_axis(seed, angle):
    from schwarzmin.geometry import apply_isometry, rotation_z

    mesh = random_mesh(seed)
    a = np.sum(pl.area_and_gradient(mesh.vertices, mesh.triangles, MASS)[0])
    W = apply_isometry(rotation_z(angle), mesh.vertices)
    assert np.sum(pl.area_and_gradient(W, mesh.triangles, MASS)[0]) == pytest.approx(a, rel=1e-12)
