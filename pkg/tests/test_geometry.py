import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from schwarzmin import geometry as geo

finite = st.floats(-50.0, 50.0, allow_nan=False)
point = st.tuples(finite, finite, finite).filter(lambda p: np.linalg.norm(p) > 1e-3)
mass = st.floats(0.01, 10.0)


def test_conformal_factor_values():
    assert geo.conformal_factor([1.0, 0, 0], 2.0) == pytest.approx(16.0, rel=1e-15)
    assert geo.conformal_factor([2.0, 0, 0], 2.0) == pytest.approx(5.0625, rel=1e-15)
    assert geo.conformal_factor([1e9, 0, 0], 2.0) == pytest.approx(1.0, abs=1e-8)


def test_conformal_factor_rejects_origin_and_bad_mass():
    with pytest.raises(geo.DomainError):
        geo.conformal_factor([0.0, 0, 0], 2.0)
    with pytest.raises(ValueError):
        geo.conformal_factor([1.0, 0, 0], 0.0)


def test_tangent_norm():
    assert geo.tangent_norm_g([1.0, 0, 0], [0, 1.0, 0], 2.0) == pytest.approx(4.0)
    assert geo.tangent_norm_g([1.0, 0, 0], [0, 0, 0], 2.0) == 0.0
    assert geo.tangent_norm_g([1e6, 0, 0], [1.0, 0, 0], 2.0) == pytest.approx(1.0, abs=3e-6)


def test_radial_ricci_values():
    assert geo.radial_ricci([1.0, 0, 0], 2.0) == pytest.approx(-0.0625)
    assert geo.radial_ricci([0.5, 0, 0], 1.0) == pytest.approx(-0.25)
    far = geo.radial_ricci([1e6, 0, 0], 2.0)
    assert -1e-15 < far < 0


def test_log_factor_gradient_matches_finite_differences():
    x = np.array([0.7, -1.3, 0.4])
    h = 1e-6
    u = lambda p: 0.5 * np.log(geo.conformal_factor(p, 2.0))
    fd = np.array([(u(x + h * e) - u(x - h * e)) / (2 * h) for e in np.eye(3)])
    np.testing.assert_allclose(geo.log_factor_gradient(x, 2.0), fd, rtol=1e-8)


def test_mean_curvature_horizon_and_planes_vanish():
    rng = np.random.default_rng(0)
    nu = rng.standard_normal((50, 3))
    nu /= np.linalg.norm(nu, axis=1)[:, None]
    x = 1.0 * nu  # horizon of m=2, outward normal
    np.testing.assert_allclose(geo.mean_curvature_conformal(-2.0 / 1.0, nu, x, 2.0), 0.0, atol=1e-14)
    # plane through the origin: x perpendicular to nu
    n = np.array([0.3, -0.4, 0.866])
    n /= np.linalg.norm(n)
    pts = rng.standard_normal((50, 3))
    pts -= np.outer(pts @ n, n)
    np.testing.assert_allclose(geo.mean_curvature_conformal(0.0, n, pts, 2.0), 0.0, atol=1e-14)


def test_mean_curvature_sphere_of_radius_two():
    # independent oracle: exp(-u)(H - 2 du/dnu) with exp(u)=9/4, du/dnu=-1/3, H=-1
    val = geo.mean_curvature_conformal(-1.0, [1.0, 0, 0], [2.0, 0, 0], 2.0)
    assert val == pytest.approx(-4.0 / 27.0, rel=1e-14)


def test_mean_curvature_rejects_non_unit_normal():
    with pytest.raises(ValueError):
        geo.mean_curvature_conformal(0.0, [2.0, 0, 0], [1.0, 0, 0], 2.0)


def test_second_form_horizon_vanishes():
    # horizon of m=2: Euclidean principal curvatures -1 each, outward normal
    x = np.array([0.0, 0.6, 0.8])
    assert geo.second_form_conformal([-1.0, -1.0], x, x, 2.0) == pytest.approx(0.0, abs=1e-14)


def test_inversion_values():
    I = geo.inversion(2.0)
    np.testing.assert_allclose(geo.apply_isometry(I, [1.0, 0, 0]), [1.0, 0, 0])
    np.testing.assert_allclose(geo.apply_isometry(I, [2.0, 0, 0]), [0.5, 0, 0])


@given(point, mass)
def test_inversion_is_involution(p, m):
    I = geo.inversion(m)
    x = np.array(p)
    np.testing.assert_allclose(geo.apply_isometry(I, geo.apply_isometry(I, x)), x, rtol=1e-12, atol=1e-12)


@given(point, mass)
def test_conformal_identity_under_inversion(p, m):
    x = np.array(p)
    Ix = geo.apply_isometry(geo.inversion(m), x)
    lhs = geo.conformal_factor(Ix, m) * (0.5 * m) ** 4 / np.linalg.norm(x) ** 4
    assert lhs == pytest.approx(geo.conformal_factor(x, m), rel=1e-12)


@given(point, st.floats(0.0, 2 * np.pi), st.floats(0.05, 1.5))
def test_reflections_and_rotations_preserve_metric_length(p, alpha, phi):
    x = np.array(p)
    v = np.array([0.3, -0.2, 0.9])
    for T in (geo.reflection(geo.plane_Q(alpha)), geo.reflection(geo.plane_P(alpha, phi)), geo.rotation_z(alpha)):
        assert geo.isometry_residual(T, 2.0, x, v) <= 1e-12


def test_inversion_isometry_residual_random():
    rng = np.random.default_rng(1)
    x = rng.uniform(-4, 4, (100, 3))
    x = x[np.linalg.norm(x, axis=1) > 0.2]
    v = rng.standard_normal(x.shape)
    assert geo.isometry_residual(geo.inversion(2.0), 2.0, x, v) <= 1e-6


@pytest.mark.parametrize("tau", [1, 2, 3])
def test_group_order_and_identity(tau):
    G = geo.generate_group(tau, 2.0)
    assert len(G) == 4 * (tau + 1)
    assert len(G.euclidean_part()) == 2 * (tau + 1)
    assert G.index_of(geo.IDENTITY) == 0


@pytest.mark.parametrize("tau", [1, 2, 3])
def test_group_is_closed(tau):
    G = geo.generate_group(tau, 2.0)
    for g in G.elements:
        for h in G.elements:
            assert G.index_of(g.then(h)) >= 0


def test_generators_reject_bad_tau():
    with pytest.raises(ValueError):
        geo.generators(0, 2.0)


@pytest.mark.parametrize("tau", [1, 2])
def test_exact_differential_matches_finite_differences(tau):
    rng = np.random.default_rng(2)
    x = rng.uniform(0.5, 3.0, (20, 3))
    v = rng.standard_normal((20, 3))
    for g in geo.generate_group(tau, 2.0).elements:
        np.testing.assert_allclose(geo.differential(g, x, v), geo.differential(g, x, v, h=1e-6), rtol=1e-6, atol=1e-7)


def test_group_elements_are_isometries():
    rng = np.random.default_rng(3)
    x = rng.uniform(-3, 3, (100, 3))
    v = rng.standard_normal((100, 3))
    for tau in (1, 2, 3):
        for g in geo.generate_group(tau, 2.0).elements:
            assert geo.isometry_residual(g, 2.0, x, v) <= 1e-6
