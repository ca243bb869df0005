"""Assemble the genus-tau surface from symmetric copies of one piece."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.csgraph import connected_components
import scipy.sparse as sp
from scipy.spatial import cKDTree

from . import meshkit as mk
from .geometry import IsometryGroup, apply_isometry


class WeldError(RuntimeError):
    """A seam edge was left open or became non-manifold."""

    def __init__(self, msg: str, location=None):
        super().__init__(msg if location is None else f"{msg} near {np.round(location, 9).tolist()}")
        self.location = location


@dataclass
class WeldedSurface:
    mesh: mk.TriMesh
    provenance: np.ndarray  # per triangle: (group element id, source triangle id)
    weld_tolerance: float
    seam_edges: np.ndarray = field(default_factory=lambda: np.zeros((0, 2), dtype=np.int64))


def default_weld_tolerance(m: float) -> float:
    return 1e-6 * 0.5 * m


def orbit_meshes(piece: mk.TriMesh, group: IsometryGroup) -> list:
    """One image of ``piece`` per group element.

    Elements that reverse the surface orientation get their triangle winding
    flipped, so all copies induce one orientation on the union.
    """
    out = []
    for g, flip in zip(group.elements, group.surface_flip):
        V = apply_isometry(g, piece.vertices)
        T = piece.triangles[:, ::-1].copy() if flip else piece.triangles.copy()
        out.append(mk.TriMesh(V, T))
    return out


def weld(copies, tol: float, *, check_orientation: bool = True, gap_factor: float = 100.0) -> WeldedSurface:
    """Merge coincident vertices of the copies into one mesh.

    Vertices closer than ``tol`` are identified (transitively).  Raises
    :class:`WeldError` if an edge ends up on more than two triangles, if two
    triangles induce the same direction on a shared edge, or if two boundary
    edges are left nearly on top of each other (see :func:`weld_gaps`).
    """
    copies = list(copies)
    if not copies:
        raise ValueError("nothing to weld")
    V = np.concatenate([c.vertices for c in copies])
    offs = np.cumsum([0] + [len(c.vertices) for c in copies])
    T = np.concatenate([c.triangles + o for c, o in zip(copies, offs[:-1])])
    prov = np.concatenate(
        [np.column_stack([np.full(len(c.triangles), k), np.arange(len(c.triangles))]) for k, c in enumerate(copies)]
    ).astype(np.int64)
    # seam candidates: boundary edges of the individual copies
    copy_bnd = []
    for c, o in zip(copies, offs[:-1]):
        for loop in c.boundary_loops:
            copy_bnd.append(np.stack([loop, np.roll(loop, -1)], axis=1) + o)
    copy_bnd = np.concatenate(copy_bnd) if copy_bnd else np.zeros((0, 2), dtype=np.int64)

    pairs = cKDTree(V).query_pairs(tol, output_type="ndarray")
    n = len(V)
    if len(pairs):
        G = sp.coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
        _, label = connected_components(G, directed=False)
    else:
        label = np.arange(n)
    # representative: smallest original index per class, in first-seen order
    _, first = np.unique(label, return_index=True)
    order = np.sort(first)
    new_id = np.empty(n, dtype=np.int64)
    remap = {int(label[i]): k for k, i in enumerate(order)}
    for i in range(n):
        new_id[i] = remap[int(label[i])]
    newV = V[order]
    newT = new_id[T]
    if np.any((newT[:, 0] == newT[:, 1]) | (newT[:, 1] == newT[:, 2]) | (newT[:, 0] == newT[:, 2])):
        raise WeldError("welding collapsed a triangle; tolerance too large")

    edges, counts = mk.unique_edges(newT)
    if np.any(counts > 2):
        e = edges[np.argmax(counts > 2)]
        raise WeldError("fold: edge on more than two triangles", newV[e].mean(axis=0))
    if check_orientation:
        directed = np.concatenate([newT[:, [0, 1]], newT[:, [1, 2]], newT[:, [2, 0]]])
        _, dcount = np.unique(directed, axis=0, return_counts=True)
        if np.any(dcount > 1):
            bad = np.unique(directed, axis=0)[np.argmax(dcount > 1)]
            raise WeldError("inconsistent orientation across a seam", newV[bad].mean(axis=0))
    seam = np.sort(new_id[copy_bnd], axis=1) if len(copy_bnd) else copy_bnd
    seam = np.unique(seam, axis=0) if len(seam) else seam
    lookup = {(int(a), int(b)): int(c) for (a, b), c in zip(edges, counts)}
    interior_seams = [(a, b) for a, b in seam if lookup.get((int(a), int(b)), 0) == 2]
    welded = WeldedSurface(mk.TriMesh(newV, newT), prov, float(tol),
                           np.array(interior_seams, dtype=np.int64).reshape(-1, 2))
    gaps = weld_gaps(welded, gap_factor)
    if len(gaps):
        e = welded.mesh.edges()[0][welded.mesh.edges()[1] == 1][gaps[0, 0]]
        raise WeldError("gap: seam edge with one incident triangle", newV[e].mean(axis=0))
    return welded


def weld_gaps(surface: WeldedSurface, gap_factor: float = 100.0) -> np.ndarray:
    """Pairs of boundary edges whose endpoints match pairwise within
    ``gap_factor * tol``: copies that nearly meet but were not merged."""
    mesh = surface.mesh
    edges, counts = mesh.edges()
    bnd = edges[counts == 1]
    if len(bnd) < 2:
        return np.zeros((0, 2), dtype=np.int64)
    V = mesh.vertices
    mids = 0.5 * (V[bnd[:, 0]] + V[bnd[:, 1]])
    gap = gap_factor * surface.weld_tolerance
    pairs = cKDTree(mids).query_pairs(gap, output_type="ndarray")
    if len(pairs) == 0:
        return np.zeros((0, 2), dtype=np.int64)
    p0, p1 = V[bnd[pairs[:, 0], 0]], V[bnd[pairs[:, 0], 1]]
    q0, q1 = V[bnd[pairs[:, 1], 0]], V[bnd[pairs[:, 1], 1]]
    same = np.maximum(np.linalg.norm(p0 - q0, axis=1), np.linalg.norm(p1 - q1, axis=1))
    swap = np.maximum(np.linalg.norm(p0 - q1, axis=1), np.linalg.norm(p1 - q0, axis=1))
    return pairs[np.minimum(same, swap) <= gap]


def is_connected(mesh: mk.TriMesh) -> bool:
    e, _ = mesh.edges()
    n = mesh.n_vertices
    used = np.unique(mesh.triangles)
    G = sp.coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(n, n))
    ncomp, label = connected_components(G, directed=False)
    return len(np.unique(label[used])) == 1


def is_oriented(mesh: mk.TriMesh) -> bool:
    """Every interior edge is traversed once in each direction."""
    T = mesh.triangles
    directed = np.concatenate([T[:, [0, 1]], T[:, [1, 2]], T[:, [2, 0]]])
    _, dcount = np.unique(directed, axis=0, return_counts=True)
    edges, counts = mesh.edges()
    return bool(np.all(dcount == 1) and np.all(counts <= 2))


def euler_genus(surface) -> tuple[int, int, int]:
    """``(chi, boundary components, genus)`` of a connected oriented mesh."""
    mesh = surface.mesh if isinstance(surface, WeldedSurface) else surface
    chi = mesh.euler_characteristic()
    b = len(mesh.boundary_loops)
    twice = 2 - chi - b
    if twice % 2:
        raise ValueError(f"non-integer genus from chi={chi}, b={b}")
    return chi, b, twice // 2


def symmetry_residual(surface: WeldedSurface, group: IsometryGroup) -> float:
    """Largest vertex-to-surface distance of any group image of the vertices.

    Images landing within the weld tolerance of a vertex are settled by the
    vertex distance; the rest get exact point-to-triangle distances.
    """
    mesh = surface.mesh
    tree = cKDTree(mesh.vertices)
    worst = 0.0
    for g in group.elements:
        img = apply_isometry(g, mesh.vertices)
        d, _ = tree.query(img)
        far = d > surface.weld_tolerance
        if np.any(far):
            d[far] = np.minimum(d[far], mk.distance_to_mesh(img[far], mesh))
        worst = max(worst, float(np.max(d)))
    return worst


@dataclass
class SeamReport:
    horizon_angles: np.ndarray  # azimuths of the horizon seams (meridians)
    ray_angles: np.ndarray  # azimuths of the equatorial seam lines
    unclassified: int  # seam vertices on neither family
    pole_angle_error: float  # worst deviation of consecutive meridian angles at the poles
    ray_angle_error: float  # same for the rays at the outer truncation radius
    expected: int

    @property
    def passed(self) -> bool:
        return (
            self.unclassified == 0
            and len(self.horizon_angles) == self.expected
            and len(self.ray_angles) == self.expected
            and self.pole_angle_error <= 1e-3
            and self.ray_angle_error <= 1e-3
        )


def _angle_classes(alpha: np.ndarray, step: float, tol: float) -> np.ndarray:
    k = np.round(alpha / step)
    ok = np.abs(alpha - k * step) <= tol
    return np.unique(np.mod(k[ok], round(2 * np.pi / step)).astype(int)), ok


def seam_report(surface: WeldedSurface, tau: int, m: float, tol: float | None = None) -> SeamReport:
    """Classify seam vertices into horizon meridians and equatorial lines and
    measure the angles between consecutive seams."""
    tol = surface.weld_tolerance * 10 if tol is None else tol
    mesh = surface.mesh
    V = mesh.vertices
    step = np.pi / (tau + 1)
    sv = np.unique(surface.seam_edges.ravel())
    x = V[sv]
    r = np.linalg.norm(x, axis=1)
    alpha = np.mod(np.arctan2(x[:, 1], x[:, 0]), 2 * np.pi)
    horiz = np.abs(r - 0.5 * m) <= tol
    equat = np.abs(x[:, 2]) <= tol
    rho = np.hypot(x[:, 0], x[:, 1])
    off_axis = rho > tol
    h_cls, h_ok = _angle_classes(alpha[horiz & off_axis], step, 1e-3)
    e_only = equat & ~horiz
    e_cls, e_ok = _angle_classes(alpha[e_only], step, 1e-3)
    pole = horiz & ~off_axis
    unclassified = int(np.sum(~(horiz | equat)))
    unclassified += int(np.sum(~h_ok)) + int(np.sum(~e_ok))

    def consecutive_error(angles):
        if len(angles) < 2:
            return float("inf")
        a = np.sort(angles)
        gaps = np.diff(np.r_[a, a[0] + 2 * np.pi])
        return float(np.max(np.abs(gaps - step)))

    # meridian directions at the poles: first seam edge out of each pole
    pole_err = 0.0
    for pv in sv[pole]:
        nbrs = [b if a == pv else a for a, b in surface.seam_edges if a == pv or b == pv]
        d = V[nbrs] - V[pv]
        pole_err = max(pole_err, consecutive_error(np.mod(np.arctan2(d[:, 1], d[:, 0]), 2 * np.pi)))
    if not np.any(pole):
        pole_err = float("inf")
    rmax = r.max() if len(r) else 0.0
    outer = e_only & (np.abs(r - rmax) <= 1e-9 * max(1.0, rmax))
    ray_err = consecutive_error(alpha[outer])
    return SeamReport(h_cls * step, e_cls * step, unclassified, pole_err, ray_err, 2 * tau + 2)


def assemble(piece: mk.TriMesh, group: IsometryGroup, tol: float | None = None) -> WeldedSurface:
    tol = default_weld_tolerance(group.m) if tol is None else tol
    return weld(orbit_meshes(piece, group), tol)
