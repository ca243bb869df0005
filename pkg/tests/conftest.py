"""Shared, session-scoped solves.  Everything here is deterministic."""

import numpy as np
import pytest

from schwarzmin import assembly as asb
from schwarzmin import geometry as geo
from schwarzmin import plateau as pl

MASS = 2.0
SWEEP_R = [3.0, 5.0, 8.0, 12.0, 16.0]
N_PER_ARC = 6
LEVEL = 2


def pytest_report_header(config):
    return f"shared sweep: m={MASS}, R={SWEEP_R}, n_per_arc={N_PER_ARC}, level={LEVEL}"


@pytest.fixture(scope="session")
def sweeps():
    """R-sweeps keyed by tau, wedge angle pi/(tau+1)."""
    cache = {}

    def get(tau: int) -> pl.SweepResult:
        if tau not in cache:
            res = pl.sweep_R(np.pi / (tau + 1), MASS, SWEEP_R, n_per_arc=N_PER_ARC, level=LEVEL)
            assert not res.failures, res.failures
            cache[tau] = res
        return cache[tau]

    return get


@pytest.fixture(scope="session")
def quarter_sweep(sweeps):
    return sweeps(1)


@pytest.fixture(scope="session")
def assemblies(sweeps):
    """Welded surfaces keyed by (tau, R)."""
    cache = {}

    def get(tau: int, R: float = SWEEP_R[-1]) -> asb.WeldedSurface:
        key = (tau, R)
        if key not in cache:
            res = sweeps(tau)
            piece = res.meshes[res.R_list.index(R)]
            cache[key] = asb.assemble(piece, geo.generate_group(tau, MASS))
        return cache[key]

    return get


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":").split(".")[0])):
            terminalreporter.write_line(line)


def _star_area_oracle(W, star, m):
    """Metric area of the triangles ``star`` (edge-midpoint rule), written
    independently of the library and evaluated in extended precision."""
    P = W[star]
    n = np.cross(P[:, 1] - P[:, 0], P[:, 2] - P[:, 0])
    area = 0.5 * np.sqrt(np.sum(n * n, axis=1))
    total = np.zeros(len(star), dtype=W.dtype)
    for a, b in ((0, 1), (1, 2), (2, 0)):
        mid = 0.5 * (P[:, a] + P[:, b])
        r = np.sqrt(np.sum(mid * mid, axis=1))
        total = total + (1 + m / (2 * r)) ** 4 / 3
    return np.sum(area * total)


def fd_gradient_oracle(mesh, m, h=1e-6):
    """Central differences of the metric area with respect to each interior
    coordinate; only the star of the moved vertex is differenced."""
    V = mesh.vertices.astype(np.longdouble)
    G = np.zeros(V.shape, dtype=np.longdouble)
    hh = np.longdouble(h)
    for i in mesh.interior:
        star = mesh.triangles[np.any(mesh.triangles == i, axis=1)]
        for k in range(3):
            for sgn in (1, -1):
                W = V.copy()
                W[i, k] += sgn * hh
                G[i, k] += sgn * _star_area_oracle(W, star, np.longdouble(m))
    return (G / (2 * hh)).astype(float)


def relative_component_error(G, ref):
    """Largest ``|G - ref| / |ref|`` over components, with ``|ref|`` floored
    at ``1e-6 max|ref|`` so exact zeros do not divide."""
    scale = np.max(np.abs(ref))
    return float(np.max(np.abs(G - ref) / np.maximum(np.abs(ref), 1e-6 * scale)))
