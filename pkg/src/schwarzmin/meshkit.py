"""Triangle meshes, conformal quadrature and OBJ/.bnd input-output."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from . import contour as ct
from .geometry import _check_mass, conformal_factor, length_scale

DEGENERATE_RATIO = 1e-14


class MeshError(ValueError):
    pass


class DegenerateTriangleError(MeshError):
    def __init__(self, tri_id: int):
        super().__init__(f"triangle {tri_id} is degenerate")
        self.tri_id = int(tri_id)


class MeshFormatError(MeshError):
    def __init__(self, path, lineno: int, msg: str):
        super().__init__(f"{path}:{lineno}: {msg}")
        self.lineno = lineno


# ---------------------------------------------------------------------------
# quadrature


@dataclass(frozen=True)
class QuadratureRule:
    """Triangle rule in barycentric coordinates plus a matching 1D rule."""

    name: str
    bary: tuple
    weights: tuple
    line_nodes: tuple
    line_weights: tuple

    @property
    def bary_array(self) -> np.ndarray:
        return np.array(self.bary, dtype=float)

    @property
    def weight_array(self) -> np.ndarray:
        return np.array(self.weights, dtype=float)


_GL = np.sqrt(0.6)
CENTROID = QuadratureRule("centroid", ((1 / 3, 1 / 3, 1 / 3),), (1.0,), (0.5,), (1.0,))
EDGE3 = QuadratureRule(
    "edge3",
    ((0.5, 0.5, 0.0), (0.0, 0.5, 0.5), (0.5, 0.0, 0.5)),
    (1 / 3, 1 / 3, 1 / 3),
    (0.5 * (1 - _GL), 0.5, 0.5 * (1 + _GL)),
    (5 / 18, 8 / 18, 5 / 18),
)
RULES = {"centroid": CENTROID, "edge3": EDGE3}


def get_rule(rule) -> QuadratureRule:
    if isinstance(rule, QuadratureRule):
        return rule
    try:
        return RULES[rule]
    except KeyError:
        raise ValueError(f"unknown quadrature rule {rule!r}") from None


def edge_length_g(p, q, m: float, rule="edge3"):
    """Metric length of the straight segment(s) from ``p`` to ``q``."""
    rule = get_rule(rule)
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    d = q - p
    # closest approach to the origin
    dd = np.sum(d * d, axis=-1)
    s = np.clip(-np.sum(p * d, axis=-1) / np.where(dd > 0, dd, 1.0), 0.0, 1.0)
    closest = np.linalg.norm(p + s[..., None] * d, axis=-1)
    if np.any(closest < 1e-12):
        raise MeshError("segment passes through the origin")
    total = 0.0
    for t, w in zip(rule.line_nodes, rule.line_weights):
        total = total + w * length_scale(p + t * d, m)
    return total * np.linalg.norm(d, axis=-1)


def _euclid_tri(a, b, c):
    n = np.cross(b - a, c - a)
    area = 0.5 * np.linalg.norm(n, axis=-1)
    longest = np.max(
        np.stack([np.sum((b - a) ** 2, -1), np.sum((c - b) ** 2, -1), np.sum((a - c) ** 2, -1)]), axis=0
    )
    return n, area, longest


def triangle_area_g(a, b, c, m: float, rule="edge3"):
    """Euclidean area times the quadrature mean of the conformal factor."""
    rule = get_rule(rule)
    a, b, c = (np.asarray(v, dtype=float) for v in (a, b, c))
    _, area, longest = _euclid_tri(a, b, c)
    bad = np.atleast_1d(area < DEGENERATE_RATIO * longest)
    if np.any(bad):
        raise DegenerateTriangleError(int(np.argmax(bad)))
    avg = 0.0
    for lam, w in zip(rule.bary, rule.weights):
        avg = avg + w * conformal_factor(lam[0] * a + lam[1] * b + lam[2] * c, m)
    return area * avg


# ---------------------------------------------------------------------------
# mesh container


@dataclass
class TriMesh:
    """Indexed triangle mesh.

    ``arc_params`` maps a boundary vertex index to ``{arc_tag: t}`` for every
    contour sub-arc it lies on (corners lie on two); it is empty for meshes
    that are not pinned to a contour.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    boundary_flags: np.ndarray | None = None
    boundary_loops: list | None = None
    contour: ct.Contour | None = None
    arc_params: dict = field(default_factory=dict)
    grid: np.ndarray | None = None  # (row, col) per vertex for disk grids

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float).reshape(-1, 3)
        self.triangles = np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3)
        if self.boundary_flags is None or self.boundary_loops is None:
            self.refresh_boundary()

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    def copy(self) -> "TriMesh":
        return TriMesh(
            self.vertices.copy(),
            self.triangles.copy(),
            self.boundary_flags.copy(),
            [loop.copy() for loop in self.boundary_loops],
            self.contour,
            {k: dict(v) for k, v in self.arc_params.items()},
            None if self.grid is None else self.grid.copy(),
        )

    def refresh_boundary(self) -> None:
        self.boundary_loops = boundary_loops(self.triangles)
        flags = np.zeros(len(self.vertices), dtype=bool)
        for loop in self.boundary_loops:
            flags[loop] = True
        self.boundary_flags = flags

    @property
    def interior(self) -> np.ndarray:
        return np.flatnonzero(~self.boundary_flags)

    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        return unique_edges(self.triangles)

    def euler_characteristic(self) -> int:
        e, _ = self.edges()
        used = np.unique(self.triangles)
        return int(len(used) - len(e) + len(self.triangles))


def unique_edges(triangles: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sorted unique undirected edges and their triangle counts."""
    if len(triangles) == 0:
        return np.zeros((0, 2), dtype=np.int64), np.zeros(0, dtype=np.int64)
    e = np.concatenate([triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]])
    e = np.sort(e, axis=1)
    edges, counts = np.unique(e, axis=0, return_counts=True)
    return edges, counts


def boundary_loops(triangles: np.ndarray) -> list:
    """Chain directed boundary edges into closed vertex cycles.

    At a vertex with several outgoing boundary edges (a pinch) the walk takes
    the edges in index order, which still partitions the boundary edges into
    cycles.
    """
    if len(triangles) == 0:
        return []
    directed = np.concatenate([triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]])
    key = np.sort(directed, axis=1)
    _, inv, counts = np.unique(key, axis=0, return_inverse=True, return_counts=True)
    bnd = directed[counts[inv.ravel()] == 1]
    out: dict = {}
    for a, b in bnd:
        out.setdefault(int(a), []).append(int(b))
    for v in out.values():
        v.sort()
    loops = []
    for start in sorted(out):
        while out.get(start):
            loop = [start]
            cur = out[start].pop(0)
            while cur != start:
                loop.append(cur)
                nxt = out.get(cur)
                if not nxt:
                    raise MeshError(f"open boundary chain at vertex {cur}")
                cur = nxt.pop(0)
            loops.append(np.array(loop, dtype=np.int64))
    return loops


def triangle_normals(V: np.ndarray, T: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a, b, c = V[T[:, 0]], V[T[:, 1]], V[T[:, 2]]
    n = np.cross(b - a, c - a)
    area = 0.5 * np.linalg.norm(n, axis=1)
    return n, area


def vertex_normals(V: np.ndarray, T: np.ndarray) -> np.ndarray:
    """Area-weighted unit vertex normals, following the triangle winding."""
    n, _ = triangle_normals(V, T)
    vn = np.zeros_like(V)
    for k in range(3):
        np.add.at(vn, T[:, k], n)
    nrm = np.linalg.norm(vn, axis=1, keepdims=True)
    return vn / np.where(nrm > 0, nrm, 1.0)


def check_nondegenerate(V: np.ndarray, T: np.ndarray) -> None:
    _, area, longest = _euclid_tri(V[T[:, 0]], V[T[:, 1]], V[T[:, 2]])
    bad = area < DEGENERATE_RATIO * longest
    if np.any(bad):
        raise DegenerateTriangleError(int(np.flatnonzero(bad)[0]))


def triangle_areas_g(V: np.ndarray, T: np.ndarray, m: float, rule="edge3") -> np.ndarray:
    rule = get_rule(rule)
    if len(T) == 0:
        return np.zeros(0)
    check_nondegenerate(V, T)
    P = V[T]  # (k, 3, 3)
    _, area = triangle_normals(V, T)
    avg = np.zeros(len(T))
    for lam, w in zip(rule.bary, rule.weights):
        avg += w * conformal_factor(np.einsum("i,kij->kj", np.asarray(lam), P), m)
    return area * avg


def mesh_area_g(mesh: TriMesh, m: float, rule="edge3") -> float:
    """Sum of per-triangle metric areas, in triangle order."""
    _check_mass(m)
    return float(np.sum(triangle_areas_g(mesh.vertices, mesh.triangles, m, rule)))


def mesh_area_euclid(mesh: TriMesh) -> float:
    return float(np.sum(triangle_normals(mesh.vertices, mesh.triangles)[1]))


def vertex_areas(V: np.ndarray, T: np.ndarray, tri_area: np.ndarray | None = None) -> np.ndarray:
    """One third of the star area at each vertex."""
    if tri_area is None:
        tri_area = triangle_normals(V, T)[1]
    out = np.zeros(len(V))
    for k in range(3):
        np.add.at(out, T[:, k], tri_area / 3.0)
    return out


def cotan_stiffness(V: np.ndarray, T: np.ndarray) -> sp.csr_matrix:
    """P1 stiffness matrix ``K`` with ``f @ K @ f`` the Dirichlet energy.

    In two dimensions the Dirichlet energy is conformally invariant, so the
    same matrix serves the Euclidean and the conformal metric.
    """
    n = len(V)
    P = V[T]
    nrm, area = triangle_normals(V, T)
    rows, cols, vals = [], [], []
    for k in range(3):
        i, j, o = (k + 1) % 3, (k + 2) % 3, k
        u = P[:, i] - P[:, o]
        w = P[:, j] - P[:, o]
        cot = np.sum(u * w, axis=1) / (2.0 * area)
        rows += [T[:, i], T[:, j]]
        cols += [T[:, j], T[:, i]]
        vals += [-0.5 * cot, -0.5 * cot]
    off = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)).tocsr()
    diag = -np.asarray(off.sum(axis=1)).ravel()
    return (off + sp.diags(diag)).tocsr()


# ---------------------------------------------------------------------------
# disk grid from a contour


def _grid_index(n_rows: int):
    """Vertex numbering of the triangular grid: row j has j + 1 vertices."""
    idx = {}
    k = 0
    for j in range(n_rows + 1):
        for i in range(j + 1):
            idx[(j, i)] = k
            k += 1
    return idx


def _grid_triangles(n_rows: int) -> np.ndarray:
    idx = _grid_index(n_rows)
    tris = []
    for j in range(n_rows):
        for i in range(j + 1):
            tris.append((idx[(j, i)], idx[(j + 1, i)], idx[(j + 1, i + 1)]))
            if i < j:
                tris.append((idx[(j, i)], idx[(j + 1, i + 1)], idx[(j, i + 1)]))
    return np.array(tris, dtype=np.int64)


def _boundary_arc_params(contour: ct.Contour, n_rows: int, row_t: list) -> dict:
    """``{vertex: {tag: t}}`` for the grid boundary (sides and last row)."""
    idx = _grid_index(n_rows)
    ne = contour.n_eta
    params: dict = {}

    def add(v, tag, t):
        params.setdefault(v, {})[tag] = float(t)

    for j in range(n_rows + 1):
        tag0, tagT, t = row_t[j]
        add(idx[(j, 0)], tag0, t)
        add(idx[(j, j)], tagT, t)
        if j == ne:
            # equatorial corner also starts the ray
            add(idx[(j, 0)], ct.RAY0, 0.0)
            add(idx[(j, j)], ct.RAYT, 0.0)
    for i in range(n_rows + 1):
        add(idx[(n_rows, i)], ct.CIRCLE, i / n_rows)
    return params


def _profile_chart(x: np.ndarray) -> np.ndarray:
    """(polar angle * cos(alpha), polar angle * sin(alpha), log r)."""
    r = np.linalg.norm(x, axis=1)
    pol = np.arccos(np.clip(x[:, 2] / r, -1.0, 1.0))
    alpha = np.arctan2(x[:, 1], x[:, 0])
    return np.stack([pol * np.cos(alpha), pol * np.sin(alpha), np.log(r)], axis=1)


def _from_profile_chart(c: np.ndarray) -> np.ndarray:
    pol = np.hypot(c[:, 0], c[:, 1])
    alpha = np.arctan2(c[:, 1], c[:, 0])
    r = np.exp(c[:, 2])
    return np.stack([r * np.sin(pol) * np.cos(alpha), r * np.sin(pol) * np.sin(alpha), r * np.cos(pol)], axis=1)


def harmonic_fill(V: np.ndarray, T: np.ndarray, fixed: np.ndarray) -> np.ndarray:
    """Place free vertices at the uniform-weight harmonic extension of the
    fixed ones, computed in the (polar, azimuth, log r) chart so that the
    result stays inside the wedge region."""
    n = len(V)
    e, _ = unique_edges(T)
    A = sp.coo_matrix((np.ones(2 * len(e)), (np.r_[e[:, 0], e[:, 1]], np.r_[e[:, 1], e[:, 0]])), shape=(n, n)).tocsr()
    deg = np.asarray(A.sum(axis=1)).ravel()
    L = sp.diags(deg) - A
    free = np.flatnonzero(~fixed)
    fix = np.flatnonzero(fixed)
    C = np.zeros_like(V)
    C[fix] = _profile_chart(V[fix])
    rhs = -L[free][:, fix] @ C[fix]
    sol = np.column_stack([spsolve(L[free][:, free].tocsc(), rhs[:, k]) for k in range(3)])
    C[free] = sol
    out = V.copy()
    out[free] = _from_profile_chart(C[free])
    return out


def init_disk_mesh(contour: ct.Contour, refinement_level: int = 0) -> TriMesh:
    """Disk mesh spanning the contour.

    The grid has one row per horizon/ray sample counted from the pole, row j
    holding j + 1 vertices; the last row is the outer circle.  Interior
    vertices are harmonic in the profile chart.  Each refinement level splits
    every triangle into four and re-projects new boundary vertices onto the
    exact arcs.
    """
    ne, nr = contour.n_eta, contour.n_ray
    n_rows = ne + nr
    if len(contour.arc_samples(ct.CIRCLE)) != n_rows + 1:
        raise MeshError("circle sample count must equal horizon plus ray samples")
    row_t = []
    for j in range(n_rows + 1):
        if j <= ne:
            row_t.append((ct.ETA0, ct.ETAT, j / ne))
        else:
            t = contour.arc_samples(ct.RAY0)[j - ne]
            row_t.append((ct.RAY0, ct.RAYT, t))
    idx = _grid_index(n_rows)
    V = np.zeros((len(idx), 3))
    grid = np.zeros((len(idx), 2), dtype=np.int64)
    for (j, i), k in idx.items():
        grid[k] = (j, i)
    params = _boundary_arc_params(contour, n_rows, row_t)
    for v, tp in params.items():
        tag, t = next(iter(tp.items()))
        V[v] = arc_point_for(contour, tag, t)
    T = _grid_triangles(n_rows)
    fixed = np.zeros(len(V), dtype=bool)
    fixed[list(params)] = True
    V = harmonic_fill(V, T, fixed)
    _check_simple_boundary(contour)
    mesh = TriMesh(V, T, contour=contour, arc_params=params, grid=grid)
    for _ in range(int(refinement_level)):
        mesh = refine(mesh)
    return mesh


def arc_point_for(contour: ct.Contour, tag: str, t: float) -> np.ndarray:
    return ct.arc_point(contour, tag, min(max(t, 0.0), 1.0))


def _check_simple_boundary(contour: ct.Contour) -> None:
    pts = contour.points[:-1]
    d = np.linalg.norm(pts[:, None] - pts[None], axis=-1)
    np.fill_diagonal(d, np.inf)
    if np.min(d) < 1e-12 * max(1.0, contour.R):
        raise MeshError("contour samples coincide; the sampled loop self-intersects")


def refine(mesh: TriMesh) -> TriMesh:
    """One round of 1-to-4 subdivision.

    New vertices on contour sub-arcs are moved onto the exact arc; other new
    vertices are edge midpoints.
    """
    V, T = mesh.vertices, mesh.triangles
    e = np.concatenate([T[:, [0, 1]], T[:, [1, 2]], T[:, [2, 0]]])
    key = np.sort(e, axis=1)
    edges, inv = np.unique(key, axis=0, return_inverse=True)
    inv = inv.ravel()
    nV = len(V)
    mids = 0.5 * (V[edges[:, 0]] + V[edges[:, 1]])
    newV = np.concatenate([V, mids])
    nt = len(T)
    m01, m12, m20 = (nV + inv[k * nt:(k + 1) * nt] for k in range(3))
    a, b, c = T[:, 0], T[:, 1], T[:, 2]
    newT = np.concatenate(
        [
            np.stack([a, m01, m20], 1),
            np.stack([m01, b, m12], 1),
            np.stack([m20, m12, c], 1),
            np.stack([m01, m12, m20], 1),
        ]
    )
    params = {k: dict(v) for k, v in mesh.arc_params.items()}
    if mesh.contour is not None and params:
        _, counts = np.unique(key, axis=0, return_counts=True)
        for ei in np.flatnonzero(counts == 1):
            p, q = edges[ei]
            common = set(params.get(int(p), {})) & set(params.get(int(q), {}))
            if not common:
                continue
            tag = sorted(common)[0]
            t = 0.5 * (params[int(p)][tag] + params[int(q)][tag])
            newV[nV + ei] = arc_point_for(mesh.contour, tag, t)
            params[nV + int(ei)] = {tag: t}
    grid = None
    if mesh.grid is not None:
        g2 = np.concatenate([2 * mesh.grid, mesh.grid[edges[:, 0]] + mesh.grid[edges[:, 1]]])
        grid = g2
    return TriMesh(newV, newT, contour=mesh.contour, arc_params=params, grid=grid)


def repin_boundary(mesh: TriMesh) -> float:
    """Move contour vertices back onto their exact arcs; returns the largest move."""
    if mesh.contour is None:
        return 0.0
    worst = 0.0
    for v, tp in mesh.arc_params.items():
        tag, t = next(iter(sorted(tp.items())))
        p = arc_point_for(mesh.contour, tag, t)
        worst = max(worst, float(np.linalg.norm(mesh.vertices[v] - p)))
        mesh.vertices[v] = p
    return worst


# ---------------------------------------------------------------------------
# input-output


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def export_mesh(mesh: TriMesh, path, provenance: np.ndarray | None = None) -> None:
    """Write ``path`` (OBJ) and ``path`` with suffix ``.bnd``.

    The sidecar lists one boundary vertex index (0-based) per line, followed
    by any ``tag=t`` contour memberships.  With ``provenance`` (one row per
    triangle) a ``.prov`` sidecar is written as well.
    """
    path = Path(path)
    lines = ["# schwarzmin mesh"]
    lines += [f"v {_fmt(x)} {_fmt(y)} {_fmt(z)}" for x, y, z in mesh.vertices]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in mesh.triangles]
    path.write_text("\n".join(lines) + "\n")
    bl = ["# boundary vertex indices (0-based)"]
    for v in np.flatnonzero(mesh.boundary_flags):
        extra = " ".join(f"{tag}={_fmt(t)}" for tag, t in sorted(mesh.arc_params.get(int(v), {}).items()))
        bl.append(f"{v} {extra}".rstrip())
    path.with_suffix(".bnd").write_text("\n".join(bl) + "\n")
    if provenance is not None:
        pl = ["# triangle group_element source_triangle"]
        pl += [f"{k} {int(g)} {int(s)}" for k, (g, s) in enumerate(np.asarray(provenance))]
        path.with_suffix(".prov").write_text("\n".join(pl) + "\n")


def import_mesh(path) -> TriMesh:
    """Read a mesh written by :func:`export_mesh` (any plain OBJ works too)."""
    path = Path(path)
    verts, tris = [], []
    for lineno, raw in enumerate(path.read_text().splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if parts[0] == "v":
            if len(parts) < 4:
                raise MeshFormatError(path, lineno, "vertex needs three coordinates")
            try:
                verts.append([float(p) for p in parts[1:4]])
            except ValueError:
                raise MeshFormatError(path, lineno, "bad vertex coordinate") from None
        elif parts[0] == "f":
            if len(parts) != 4:
                raise MeshFormatError(path, lineno, "only triangular faces are supported")
            try:
                face = [int(p.split("/")[0]) - 1 for p in parts[1:4]]
            except ValueError:
                raise MeshFormatError(path, lineno, "bad face index") from None
            if min(face) < 0 or max(face) >= len(verts):
                raise MeshFormatError(path, lineno, "face index out of range")
            tris.append(face)
        elif parts[0] in ("vn", "vt", "o", "g", "s", "usemtl", "mtllib"):
            continue
        else:
            raise MeshFormatError(path, lineno, f"unknown record {parts[0]!r}")
    mesh = TriMesh(np.array(verts, dtype=float).reshape(-1, 3), np.array(tris, dtype=np.int64).reshape(-1, 3))
    bnd = path.with_suffix(".bnd")
    if bnd.exists():
        flags = np.zeros(len(verts), dtype=bool)
        params = {}
        for lineno, raw in enumerate(bnd.read_text().splitlines(), 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            try:
                v = int(parts[0])
                for item in parts[1:]:
                    tag, t = item.split("=")
                    params.setdefault(v, {})[tag] = float(t)
            except ValueError:
                raise MeshFormatError(bnd, lineno, "bad boundary record") from None
            if not 0 <= v < len(verts):
                raise MeshFormatError(bnd, lineno, "boundary index out of range")
            flags[v] = True
        mesh.boundary_flags = flags
        mesh.arc_params = params
    return mesh


# ---------------------------------------------------------------------------
# intersection and distance queries


def _segment_triangle_hits(P0, P1, A, B, C, eps: float) -> np.ndarray:
    """Strict crossings of segments P0-P1 with triangles ABC (row-wise).

    Touching within ``eps`` (barycentric or segment parameter) does not count,
    so shared vertices and edges never register as hits.
    """
    d = P1 - P0
    e1 = B - A
    e2 = C - A
    h = np.cross(d, e2)
    det = np.sum(e1 * h, axis=1)
    scale = np.linalg.norm(d, axis=1) * np.linalg.norm(e1, axis=1) * np.linalg.norm(e2, axis=1)
    ok = np.abs(det) > 1e-12 * np.where(scale > 0, scale, 1.0)
    inv = np.where(ok, 1.0 / np.where(ok, det, 1.0), 0.0)
    s = P0 - A
    u = np.sum(s * h, axis=1) * inv
    q = np.cross(s, e1)
    v = np.sum(d * q, axis=1) * inv
    t = np.sum(e2 * q, axis=1) * inv
    return ok & (u > eps) & (v > eps) & (u + v < 1 - eps) & (t > eps) & (t < 1 - eps)


def triangle_pairs_intersect(VA, TA, VB, TB, pairs: np.ndarray, eps: float = 1e-9) -> np.ndarray:
    """Boolean per candidate pair ``(ia, ib)``: does an edge of one triangle
    strictly cross the other?"""
    if len(pairs) == 0:
        return np.zeros(0, dtype=bool)
    ta = VA[TA[pairs[:, 0]]]
    tb = VB[TB[pairs[:, 1]]]
    hit = np.zeros(len(pairs), dtype=bool)
    for k in range(3):
        hit |= _segment_triangle_hits(ta[:, k], ta[:, (k + 1) % 3], tb[:, 0], tb[:, 1], tb[:, 2], eps)
        hit |= _segment_triangle_hits(tb[:, k], tb[:, (k + 1) % 3], ta[:, 0], ta[:, 1], ta[:, 2], eps)
    return hit


def _candidate_pairs(VA, TA, VB, TB) -> np.ndarray:
    from scipy.spatial import cKDTree

    ca = VA[TA].mean(axis=1)
    cb = VB[TB].mean(axis=1)
    ra = np.max(np.linalg.norm(VA[TA] - ca[:, None], axis=2), axis=1)
    rb = np.max(np.linalg.norm(VB[TB] - cb[:, None], axis=2), axis=1)
    if len(ca) == 0 or len(cb) == 0:
        return np.zeros((0, 2), dtype=np.int64)
    rmax = ra.max() + rb.max()
    sdm = cKDTree(ca).sparse_distance_matrix(cKDTree(cb), rmax, output_type="ndarray")
    keep = sdm["v"] <= ra[sdm["i"]] + rb[sdm["j"]]
    pairs = np.stack([sdm["i"][keep], sdm["j"][keep]], axis=1).astype(np.int64)
    return pairs[np.lexsort((pairs[:, 1], pairs[:, 0]))]


def self_intersections(mesh: TriMesh, eps: float = 1e-9) -> np.ndarray:
    """Pairs of triangles sharing no vertex whose interiors cross."""
    V, T = mesh.vertices, mesh.triangles
    pairs = _candidate_pairs(V, T, V, T)
    pairs = pairs[pairs[:, 0] < pairs[:, 1]]
    if len(pairs):
        share = np.zeros(len(pairs), dtype=bool)
        ta, tb = T[pairs[:, 0]], T[pairs[:, 1]]
        for i in range(3):
            for j in range(3):
                share |= ta[:, i] == tb[:, j]
        pairs = pairs[~share]
    return pairs[triangle_pairs_intersect(V, T, V, T, pairs, eps)]


def cross_intersections(a: TriMesh, b: TriMesh, eps: float = 1e-9) -> np.ndarray:
    """Triangle pairs (one from each mesh) whose interiors cross."""
    pairs = _candidate_pairs(a.vertices, a.triangles, b.vertices, b.triangles)
    return pairs[triangle_pairs_intersect(a.vertices, a.triangles, b.vertices, b.triangles, pairs, eps)]


def point_triangle_distance(P: np.ndarray, A: np.ndarray, B: np.ndarray, C: np.ndarray) -> np.ndarray:
    """Row-wise Euclidean distance from points to triangles (closest-point
    region classification)."""
    ab, ac, ap = B - A, C - A, P - A
    d1 = np.sum(ab * ap, 1)
    d2 = np.sum(ac * ap, 1)
    bp = P - B
    d3 = np.sum(ab * bp, 1)
    d4 = np.sum(ac * bp, 1)
    cp = P - C
    d5 = np.sum(ab * cp, 1)
    d6 = np.sum(ac * cp, 1)
    vc = d1 * d4 - d3 * d2
    vb = d5 * d2 - d1 * d6
    va = d3 * d6 - d5 * d4
    denom = va + vb + vc
    denom = np.where(np.abs(denom) > 0, denom, 1.0)
    v = vb / denom
    w = vc / denom
    Q = A + ab * v[:, None] + ac * w[:, None]  # interior projection

    def seg(X, Y):
        e = Y - X
        ee = np.sum(e * e, 1)
        s = np.clip(np.sum((P - X) * e, 1) / np.where(ee > 0, ee, 1.0), 0, 1)
        return X + e * s[:, None]

    inside = (va >= 0) & (vb >= 0) & (vc >= 0)
    best = np.where(inside[:, None], Q, A)
    dist = np.linalg.norm(P - best, axis=1)
    for X, Y in ((A, B), (B, C), (C, A)):
        S = seg(X, Y)
        ds = np.linalg.norm(P - S, axis=1)
        better = ~inside & (ds < dist)
        dist = np.where(better, ds, dist)
    return dist


def distance_to_mesh(points: np.ndarray, mesh: TriMesh, k: int = 16) -> np.ndarray:
    """Euclidean distance from each point to the triangulated surface.

    Candidates are the triangles incident to the ``k`` nearest vertices,
    which is exact whenever the nearest surface point lies in one of them.
    """
    from scipy.spatial import cKDTree

    points = np.atleast_2d(np.asarray(points, dtype=float))
    V, T = mesh.vertices, mesh.triangles
    if len(points) == 0:
        return np.zeros(0)
    k = min(k, len(V))
    _, nn = cKDTree(V).query(points, k=k)
    nn = np.asarray(nn).reshape(len(points), -1)
    inc = vertex_triangle_table(T, len(V))
    out = np.empty(len(points))
    chunk = max(1, 200000 // (k * inc.shape[1]))
    for s0 in range(0, len(points), chunk):
        cand = inc[nn[s0:s0 + chunk]].reshape(len(nn[s0:s0 + chunk]), -1)
        valid = cand >= 0
        rows, cols = np.nonzero(valid)
        tri = V[T[cand[rows, cols]]]
        d = point_triangle_distance(points[s0:s0 + chunk][rows], tri[:, 0], tri[:, 1], tri[:, 2])
        full = np.full(cand.shape, np.inf)
        full[rows, cols] = d
        out[s0:s0 + chunk] = full.min(axis=1)
    return out


def vertex_triangle_table(T: np.ndarray, n_vertices: int) -> np.ndarray:
    """Incident triangle ids per vertex, padded with -1."""
    flat_v = T.ravel()
    flat_t = np.repeat(np.arange(len(T)), 3)
    order = np.argsort(flat_v, kind="stable")
    flat_v, flat_t = flat_v[order], flat_t[order]
    counts = np.bincount(flat_v, minlength=n_vertices)
    width = max(1, int(counts.max()) if len(counts) else 1)
    table = np.full((n_vertices, width), -1, dtype=np.int64)
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    slot = np.arange(len(flat_v)) - starts[flat_v]
    table[flat_v, slot] = flat_t
    return table
