"""Synthetic reference surfaces used by the checks and their detector tests."""

from __future__ import annotations

import numpy as np

from .meshkit import TriMesh, refine

_PHI = (1.0 + 5.0**0.5) / 2.0
_ICO_V = np.array(
    [
        [-1, _PHI, 0], [1, _PHI, 0], [-1, -_PHI, 0], [1, -_PHI, 0],
        [0, -1, _PHI], [0, 1, _PHI], [0, -1, -_PHI], [0, 1, -_PHI],
        [_PHI, 0, -1], [_PHI, 0, 1], [-_PHI, 0, -1], [-_PHI, 0, 1],
    ],
    dtype=float,
)
_ICO_F = np.array(
    [
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ]
)


def icosphere(radius: float, level: int, center=(0.0, 0.0, 0.0)) -> TriMesh:
    """Closed sphere: subdivided icosahedron projected to the sphere, outward winding."""
    c = np.asarray(center, dtype=float)
    mesh = TriMesh(_ICO_V / np.linalg.norm(_ICO_V, axis=1)[:, None], _ICO_F)
    for _ in range(level):
        mesh = refine(mesh)
        mesh.vertices /= np.linalg.norm(mesh.vertices, axis=1)[:, None]
    mesh.vertices = radius * mesh.vertices + c
    return mesh


def _hex_disk(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Equilateral lattice points in the unit disk with spacing 1/n, and triangles."""
    idx = {}
    pts = []
    for j in range(-n - 1, n + 2):
        for i in range(-2 * n - 2, 2 * n + 3):
            u = (i + 0.5 * j) / n
            v = j * np.sqrt(3.0) / (2.0 * n)
            if u * u + v * v <= 1.0 + 1e-12:
                idx[(i, j)] = len(pts)
                pts.append((u, v))
    tris = []
    for (i, j), k in idx.items():
        a, b, c = idx.get((i + 1, j)), idx.get((i, j + 1)), idx.get((i - 1, j + 1))
        if a is not None and b is not None:
            tris.append((k, a, b))
        if b is not None and c is not None:
            tris.append((k, b, c))
    return np.array(pts), np.array(tris, dtype=np.int64)


def sphere_cap(radius: float, level: int, half_width: float = 0.6, axis=(0.0, 0.0, 1.0)) -> TriMesh:
    """Cap of a sphere about the origin: gnomonic image of an equilateral lattice.

    The lattice has spacing ``half_width / (4 * 2**level)`` in the tangent
    plane at unit distance, so each level halves the mesh size.  Unlike a
    subdivided icosahedron the cap has no lattice defects, which keeps the
    vertex-star curvature estimates consistent.
    """
    n = 4 * 2**level
    uv, tris = _hex_disk(n)
    uv = uv * half_width
    ax = np.asarray(axis, dtype=float)
    ax /= np.linalg.norm(ax)
    e1 = np.cross(ax, [1.0, 0.0, 0.0] if abs(ax[0]) < 0.9 else [0.0, 1.0, 0.0])
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(ax, e1)
    X = ax + uv[:, :1] * e1 + uv[:, 1:] * e2
    X = radius * X / np.linalg.norm(X, axis=1)[:, None]
    return TriMesh(X, tris)


def planar_disk(center, normal, radius: float, level: int) -> TriMesh:
    """Flat disk sampled by an equilateral lattice."""
    n = 4 * 2**level
    uv, tris = _hex_disk(n)
    nrm = np.asarray(normal, dtype=float)
    nrm /= np.linalg.norm(nrm)
    e1 = np.cross(nrm, [1.0, 0.0, 0.0] if abs(nrm[0]) < 0.9 else [0.0, 1.0, 0.0])
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(nrm, e1)
    X = np.asarray(center, dtype=float) + radius * (uv[:, :1] * e1 + uv[:, 1:] * e2)
    return TriMesh(X, tris)


def polar_grid(r_in: float, r_out: float, n_r: int, n_a: int, height=None, *, angle: float = 2 * np.pi) -> TriMesh:
    """Annulus (or sector) in polar coordinates lifted by ``height(r, a)``.

    Radii are log-spaced.  With the default ``height = 0`` this is a piece of
    the equatorial plane, a plane through the origin.
    """
    closed = np.isclose(angle, 2 * np.pi)
    r = np.geomspace(r_in, r_out, n_r + 1)
    na = n_a if closed else n_a + 1
    a = np.linspace(0.0, angle, n_a + 1)[:na]
    R, A = np.meshgrid(r, a, indexing="ij")
    Z = np.zeros_like(R) if height is None else height(R, A)
    V = np.stack([R * np.cos(A), R * np.sin(A), Z], axis=-1).reshape(-1, 3)
    tris = []
    for i in range(n_r):
        for j in range(n_a):
            j1 = (j + 1) % na
            p, q, s, t = i * na + j, i * na + j1, (i + 1) * na + j, (i + 1) * na + j1
            tris += [(p, s, t), (p, t, q)]
    return TriMesh(V, np.array(tris, dtype=np.int64))


def catenoid(neck: float, half_height: float, n_t: int, n_s: int, center=(0.0, 0.0, 0.0)) -> TriMesh:
    """Euclidean catenoid ``(c cosh(t/c) cos s, c cosh(t/c) sin s, t)`` for |t| <= half_height."""
    c = neck
    t = np.linspace(-half_height, half_height, n_t + 1)
    s = np.linspace(0.0, 2 * np.pi, n_s + 1)[:-1]
    T, S = np.meshgrid(t, s, indexing="ij")
    rho = c * np.cosh(T / c)
    V = np.stack([rho * np.cos(S), rho * np.sin(S), T], axis=-1).reshape(-1, 3) + np.asarray(center, dtype=float)
    tris = []
    for i in range(n_t):
        for j in range(n_s):
            j1 = (j + 1) % n_s
            p, q, a, b = i * n_s + j, i * n_s + j1, (i + 1) * n_s + j, (i + 1) * n_s + j1
            tris += [(p, q, b), (p, b, a)]
    return TriMesh(V, np.array(tris, dtype=np.int64))


def cylinder(radius: float, half_length: float, n_t: int, n_s: int) -> TriMesh:
    """Cylinder about the x axis, so that balls about the origin cut it in
    pieces of area growing linearly in the radius."""
    t = np.linspace(-half_length, half_length, n_t + 1)
    s = np.linspace(0.0, 2 * np.pi, n_s + 1)[:-1]
    T, S = np.meshgrid(t, s, indexing="ij")
    V = np.stack([T, radius * np.cos(S), radius * np.sin(S)], axis=-1).reshape(-1, 3)
    tris = []
    for i in range(n_t):
        for j in range(n_s):
            j1 = (j + 1) % n_s
            p, q, a, b = i * n_s + j, i * n_s + j1, (i + 1) * n_s + j, (i + 1) * n_s + j1
            tris += [(p, q, b), (p, b, a)]
    return TriMesh(V, np.array(tris, dtype=np.int64))


def merge(meshes) -> TriMesh:
    """Disjoint union."""
    Vs, Ts, off = [], [], 0
    for m in meshes:
        Vs.append(m.vertices)
        Ts.append(m.triangles + off)
        off += len(m.vertices)
    if not Vs:
        return TriMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))
    return TriMesh(np.concatenate(Vs), np.concatenate(Ts))


def _frame(normal):
    nrm = np.asarray(normal, dtype=float)
    nrm /= np.linalg.norm(nrm)
    e1 = np.cross(nrm, [1.0, 0.0, 0.0] if abs(nrm[0]) < 0.9 else [0.0, 1.0, 0.0])
    e1 /= np.linalg.norm(e1)
    return e1, np.cross(nrm, e1)


def ring_disk(center, normal, radius: float, n_rings: int) -> TriMesh:
    """Flat disk from concentric rings; ring k has 6k vertices and the outer
    ring lies on the circle, so the boundary is an inscribed polygon."""
    pts = [np.zeros(2)]
    rings = [np.array([0])]
    for k in range(1, n_rings + 1):
        a = 2 * np.pi * np.arange(6 * k) / (6 * k)
        start = len(pts)
        pts.extend(np.column_stack([np.cos(a), np.sin(a)]) * (k / n_rings))
        rings.append(np.arange(start, start + 6 * k))
    pts = np.array(pts)
    tris = []
    for k in range(1, n_rings + 1):
        inner, outer = rings[k - 1], rings[k]
        ai = np.arange(len(inner)) / len(inner)
        ao = np.arange(len(outer)) / len(outer)
        i = j = 0
        # merge the two rings by angle, emitting one triangle per step
        while i < len(inner) or j < len(outer):
            ni = ai[i + 1] if i + 1 < len(inner) else 1.0
            no = ao[j + 1] if j + 1 < len(outer) else 1.0
            if j < len(outer) and (no <= ni or i >= len(inner) or k == 1):
                tris.append((inner[i % len(inner)], outer[j], outer[(j + 1) % len(outer)]))
                j += 1
            else:
                tris.append((inner[i], outer[(j) % len(outer)], inner[(i + 1) % len(inner)]))
                i += 1
            if k == 1 and j == len(outer):
                break
    e1, e2 = _frame(normal)
    X = np.asarray(center, dtype=float) + radius * (pts[:, :1] * e1 + pts[:, 1:] * e2)
    return TriMesh(X, np.array(tris, dtype=np.int64))


def planar_square(center, e1, e2, half: float, n: int) -> TriMesh:
    """``(2n+1)^2`` grid on the square ``center + s e1 + t e2``, ``|s|, |t| <= half``."""
    s = np.linspace(-half, half, 2 * n + 1)
    S, T = np.meshgrid(s, s, indexing="ij")
    X = (np.asarray(center, dtype=float) + S.reshape(-1, 1) * np.asarray(e1, dtype=float)
         + T.reshape(-1, 1) * np.asarray(e2, dtype=float))
    k = 2 * n + 1
    tris = []
    for i in range(2 * n):
        for j in range(2 * n):
            p, q, a, b = i * k + j, i * k + j + 1, (i + 1) * k + j, (i + 1) * k + j + 1
            tris += [(p, a, b), (p, b, q)] if (i + j) % 2 == 0 else [(p, a, q), (q, a, b)]
    return TriMesh(X, np.array(tris, dtype=np.int64))
