"""Numerical checks of the geometric statements about the computed surfaces.

Every check is a deterministic function of a mesh and parameters.  Results
are gathered in a :class:`DiagnosticsReport`, which serialises to CSV and to
a short text summary.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy import integrate
from scipy.spatial import cKDTree

from . import contour as ct
from . import meshkit as mk
from .geometry import (
    _check_mass,
    conformal_factor,
    length_scale,
    log_factor_gradient,
    mean_curvature_conformal,
    plane_P,
    plane_Q,
    radial_ricci,
    second_form_conformal,
)

# ---------------------------------------------------------------------------
# report


@dataclass
class DiagnosticEntry:
    check_id: str
    statement: str
    value: float
    threshold: float
    passed: bool
    provenance: str = ""
    series: list | None = None


@dataclass
class DiagnosticsReport:
    entries: list = field(default_factory=list)

    def add(self, check_id, statement, value, threshold, passed, provenance="", series=None) -> DiagnosticEntry:
        e = DiagnosticEntry(check_id, statement, float(value), float(threshold), bool(passed), provenance,
                            None if series is None else [float(s) for s in series])
        self.entries.append(e)
        return e

    @property
    def all_passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def __getitem__(self, check_id: str) -> DiagnosticEntry:
        for e in self.entries:
            if e.check_id == check_id:
                return e
        raise KeyError(check_id)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["check_id", "value", "threshold", "pass", "statement", "provenance"])
            for e in self.entries:
                w.writerow([e.check_id, f"{e.value:.17g}", f"{e.threshold:.17g}", int(e.passed), e.statement, e.provenance])

    def summary(self) -> str:
        lines = []
        for e in self.entries:
            flag = "PASS" if e.passed else "FAIL"
            lines.append(f"[{flag}] {e.check_id}: {e.value:.6g} (threshold {e.threshold:.6g}) - {e.statement}")
        n_ok = sum(e.passed for e in self.entries)
        lines.append(f"{n_ok}/{len(self.entries)} checks passed")
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# mean curvature


def euclidean_area_gradient(V: np.ndarray, T: np.ndarray) -> np.ndarray:
    nvec, area = mk.triangle_normals(V, T)
    nhat = nvec / (2.0 * area)[:, None]
    G = np.zeros_like(V)
    for k in range(3):
        b, c = V[T[:, (k + 1) % 3]], V[T[:, (k + 2) % 3]]
        np.add.at(G, T[:, k], 0.5 * np.cross(nhat, c - b))
    return G


def discrete_mean_curvature(mesh: mk.TriMesh) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Euclidean vertex mean curvature, unit vertex normals and star areas.

    The mean-curvature vector at a vertex is minus the Euclidean area
    gradient divided by one third of the star area; its component along the
    vertex normal is returned (a sphere with outward winding gives -2/r).
    """
    V, T = mesh.vertices, mesh.triangles
    G = euclidean_area_gradient(V, T)
    A = mk.vertex_areas(V, T)
    n = mk.vertex_normals(V, T)
    H = -np.sum(G * n, axis=1) / np.where(A > 0, A, 1.0)
    return H, n, A


@dataclass
class ResidualSeries:
    vertices: np.ndarray
    values: np.ndarray
    sup: float
    l2: float


def mean_curvature_residual(mesh: mk.TriMesh, m: float) -> ResidualSeries:
    """Metric mean curvature at interior vertices, with sup and L2 norms.

    The L2 norm weights by one third of the metric star areas.
    """
    m = _check_mass(m)
    H, n, _ = discrete_mean_curvature(mesh)
    idx = mesh.interior
    V = mesh.vertices
    Hg = mean_curvature_conformal(H[idx], n[idx], V[idx], m)
    Ag = mk.vertex_areas(V, mesh.triangles, mk.triangle_areas_g(V, mesh.triangles, m))[idx]
    sup = float(np.max(np.abs(Hg))) if len(idx) else 0.0
    l2 = float(np.sqrt(np.sum(Hg**2 * Ag))) if len(idx) else 0.0
    return ResidualSeries(idx, Hg, sup, l2)


def refinement_ratios(values, floor: float = 1e-12) -> list:
    """Ratios ``v[k] / v[k+1]``; a pair already below ``floor`` counts as inf."""
    out = []
    for a, b in zip(values, values[1:]):
        out.append(float("inf") if b <= floor and a <= max(floor, 10 * b) else a / b if b > 0 else float("inf"))
    return out


# ---------------------------------------------------------------------------
# second fundamental form


@dataclass
class ShapeOperatorSample:
    vertex: int
    A_g: float
    A_euc: float
    normal: np.ndarray
    kappa: np.ndarray


def vertex_adjacency(mesh: mk.TriMesh) -> sp.csr_matrix:
    e, _ = mesh.edges()
    n = mesh.n_vertices
    A = sp.coo_matrix((np.ones(2 * len(e)), (np.r_[e[:, 0], e[:, 1]], np.r_[e[:, 1], e[:, 0]])), shape=(n, n))
    return A.tocsr()


def fit_principal_curvatures(points: np.ndarray, origin: np.ndarray, normal: np.ndarray):
    """Least-squares quadric ``h = a s^2 + b s t + c t^2 + d s + e t`` over the
    tangent plane of ``normal`` through ``origin``.

    Returns ``(kappa, nu)``: principal curvatures in the convention of
    :func:`geometry.mean_curvature_conformal` and the fitted unit normal, or
    ``None`` when the neighbourhood is under-determined.
    """
    e1 = np.cross(normal, [1.0, 0.0, 0.0] if abs(normal[0]) < 0.9 else [0.0, 1.0, 0.0])
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(normal, e1)
    d = points - origin
    s, t, h = d @ e1, d @ e2, d @ normal
    M = np.column_stack([s * s, s * t, t * t, s, t])
    if len(points) < 5:
        return None
    sc = np.max(np.abs(M), axis=0)
    sc[sc == 0] = 1.0
    coef, _, rank, _ = np.linalg.lstsq(M / sc, h, rcond=None)
    if rank < 5:
        return None
    a, b, c, dd, ee = coef / sc
    g = np.array([dd, ee])
    w = np.sqrt(1.0 + g @ g)
    first = np.eye(2) + np.outer(g, g)
    second = np.array([[2 * a, b], [b, 2 * c]]) / w
    kappa = np.sort(np.real(np.linalg.eigvals(np.linalg.solve(first, second))))
    nu = (normal - dd * e1 - ee * e2) / w
    return kappa, nu


def principal_curvatures(mesh: mk.TriMesh, vertices=None, rings: int = 2) -> tuple[dict, list]:
    """Quadric-fit ``{vertex: (kappa, normal)}`` and the skipped vertices."""
    V = mesh.vertices
    A = vertex_adjacency(mesh) + sp.identity(mesh.n_vertices, format="csr")
    R = A.copy()
    for _ in range(rings - 1):
        R = R @ A
    R = R.tocsr()
    normals = mk.vertex_normals(V, mesh.triangles)
    idx = mesh.interior if vertices is None else np.asarray(vertices, dtype=np.int64)
    fits, skipped = {}, []
    for v in idx:
        nb = R.indices[R.indptr[v]:R.indptr[v + 1]]
        nb = nb[nb != v]
        fit = fit_principal_curvatures(V[nb], V[v], normals[v])
        if fit is None:
            skipped.append(int(v))
        else:
            fits[int(v)] = fit
    return fits, skipped


def second_form_norm(mesh: mk.TriMesh, m: float, rings: int = 2, vertices=None) -> tuple[list, list]:
    """Quadric-fit second fundamental form at interior vertices.

    Returns ``(samples, skipped)``; ``skipped`` lists vertices whose
    ``rings``-ring neighbourhood could not determine a quadric.
    """
    m = _check_mass(m)
    fits, skipped = principal_curvatures(mesh, vertices, rings)
    samples = []
    for v, (kappa, nu) in fits.items():
        Ag = float(second_form_conformal(kappa, nu, mesh.vertices[v], m))
        samples.append(ShapeOperatorSample(v, Ag, float(np.linalg.norm(kappa)), nu, kappa))
    return samples, skipped


def boundary_distance(mesh: mk.TriMesh, points: np.ndarray) -> np.ndarray:
    """Euclidean distance from points to the boundary polyline(s)."""
    segs = []
    for loop in mesh.boundary_loops:
        segs.append(np.stack([loop, np.roll(loop, -1)], axis=1))
    if not segs:
        return np.full(len(points), np.inf)
    S = np.concatenate(segs)
    P0, P1 = mesh.vertices[S[:, 0]], mesh.vertices[S[:, 1]]
    out = np.empty(len(points))
    chunk = max(1, 2_000_000 // max(1, len(S)))
    d = P1 - P0
    dd = np.maximum(np.sum(d * d, axis=1), 1e-300)
    for k in range(0, len(points), chunk):
        p = points[k:k + chunk, None, :]
        s = np.clip(np.sum((p - P0) * d, axis=2) / dd, 0.0, 1.0)
        out[k:k + chunk] = np.min(np.linalg.norm(p - (P0 + s[..., None] * d), axis=2), axis=1)
    return out


def curvature_sup_product(mesh: mk.TriMesh, m: float, samples=None) -> tuple[float, int]:
    """``max |A|_g * min(1, distance to boundary)`` over interior vertices,
    with the maximising vertex."""
    if samples is None:
        samples, _ = second_form_norm(mesh, m)
    if not samples:
        return 0.0, -1
    ids = np.array([s.vertex for s in samples])
    Ag = np.array([s.A_g for s in samples])
    prod = Ag * np.minimum(1.0, boundary_distance(mesh, mesh.vertices[ids]))
    k = int(np.argmax(prod))
    return float(prod[k]), int(ids[k])


# ---------------------------------------------------------------------------
# containment, ordering and slices


def containment_check(mesh: mk.TriMesh, theta: float, m: float) -> float:
    """Worst violation of the wedge-region inequalities over interior vertices
    (positive means outside)."""
    idx = mesh.interior
    if len(idx) == 0:
        return -np.inf
    return float(np.max(ct.region_violation(mesh.vertices[idx], theta, m)))


def _profile_coords(x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    r = np.linalg.norm(x, axis=1)
    pol = np.arccos(np.clip(x[:, 2] / r, -1.0, 1.0))
    alpha = np.arctan2(x[:, 1], x[:, 0])
    return r, alpha, pol


def _interpolate_polar(mesh: mk.TriMesh, q_logr: np.ndarray, q_alpha: np.ndarray, k: int = 24) -> np.ndarray:
    """Polar angle of ``mesh`` above the points ``(log r, alpha)``, located in
    the projection of its own triangles; NaN where nothing covers the point."""
    r, a, pol = _profile_coords(mesh.vertices)
    P = np.column_stack([np.log(r), a])
    T = mesh.triangles
    tri = P[T]
    cent = tri.mean(axis=1)
    Q = np.column_stack([q_logr, q_alpha])
    k = min(k, len(T))
    _, cand = cKDTree(cent).query(Q, k=k)
    cand = np.asarray(cand).reshape(len(Q), -1)
    out = np.full(len(Q), np.nan)
    A, B, C = tri[cand, 0], tri[cand, 1], tri[cand, 2]
    v0, v1, v2 = B - A, C - A, Q[:, None, :] - A
    den = v0[..., 0] * v1[..., 1] - v0[..., 1] * v1[..., 0]
    den = np.where(np.abs(den) > 1e-300, den, np.nan)
    l1 = (v2[..., 0] * v1[..., 1] - v2[..., 1] * v1[..., 0]) / den
    l2 = (v0[..., 0] * v2[..., 1] - v0[..., 1] * v2[..., 0]) / den
    l0 = 1.0 - l1 - l2
    tol = -1e-12
    inside = (l0 >= tol) & (l1 >= tol) & (l2 >= tol)
    has = inside.any(axis=1)
    first = np.argmax(inside, axis=1)
    rows = np.flatnonzero(has)
    t = cand[rows, first[rows]]
    lam = np.stack([l0[rows, first[rows]], l1[rows, first[rows]], l2[rows, first[rows]]], axis=1)
    out[rows] = np.sum(lam * pol[T[t]], axis=1)
    return out


@dataclass
class MonotonicityResult:
    passed: bool
    applicable: bool
    intersections: list  # per consecutive pair
    orderings: list  # per pair: +1 (later surface above), -1 (below), 0 (mixed)
    min_gap: list  # per pair: min polar-angle difference (signed by the ordering)
    min_separation: float  # min metric distance from interior vertices of one surface to the next


def monotonicity_check(meshes, theta: float, m: float, *, tol: float = 1e-10) -> MonotonicityResult:
    """Interior intersections and one-sided polar ordering for consecutive
    surfaces.

    A later surface lies above an earlier one when its polar angle is
    smaller at every matched ``(r, alpha)`` in the overlap.
    """
    m = _check_mass(m)
    inter, order, gaps = [], [], []
    sep = np.inf
    applicable = True
    for a, b in zip(meshes, meshes[1:]):
        if a.n_vertices == b.n_vertices and np.array_equal(a.vertices, b.vertices):
            applicable = False
            inter.append(0)
            order.append(0)
            gaps.append(0.0)
            continue
        inter.append(int(len(mk.cross_intersections(a, b))))
        ia = a.interior
        r, al, pol = _profile_coords(a.vertices[ia])
        pb = _interpolate_polar(b, np.log(r), al)
        ok = ~np.isnan(pb)
        diff = pol[ok] - pb[ok]  # > 0: b has smaller polar angle, i.e. lies above
        signif = diff[np.abs(diff) > tol]
        if len(signif) == 0:
            order.append(0)
            gaps.append(0.0)
        elif np.all(signif > 0):
            order.append(1)
            gaps.append(float(diff.min()))
        elif np.all(signif < 0):
            order.append(-1)
            gaps.append(float((-diff).min()))
        else:
            order.append(0)
            gaps.append(float(-min(signif[signif > 0].min(), -signif[signif < 0].max())))
        d = mk.distance_to_mesh(a.vertices[ia], b) * length_scale(a.vertices[ia], m)
        sep = min(sep, float(d.min()) if len(d) else np.inf)
    one_sided = all(o != 0 for o in order) and len(set(order)) <= 1
    passed = applicable and all(i == 0 for i in inter) and one_sided
    return MonotonicityResult(bool(passed), applicable, inter, order, gaps, sep)


class _DSU:
    def __init__(self, n):
        self.p = list(range(n))

    def find(self, x):
        while self.p[x] != x:
            self.p[x] = self.p[self.p[x]]
            x = self.p[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.p[max(ra, rb)] = min(ra, rb)


@dataclass
class SliceResult:
    components: int
    endpoints: list  # per component: list of endpoint coordinates
    endpoints_ok: bool
    inconclusive: bool
    points: np.ndarray  # all crossing points

    @property
    def passed(self) -> bool:
        return self.components == 1 and self.endpoints_ok and not self.inconclusive


def slice_mesh(mesh: mk.TriMesh, normal, offset: float = 0.0):
    """Cross-section with the plane ``normal . x = offset``.

    Returns ``(components, points, component_of_point, boundary_point_ids)``.
    Vertex distances below 1e-10 are pushed to 1e-9 on the positive side
    first, so every crossing is transverse.
    """
    V, T = mesh.vertices, mesh.triangles
    d = V @ np.asarray(normal, dtype=float) - offset
    d = np.where(np.abs(d) < 1e-10, 1e-9, d)
    edges, counts = mesh.edges()
    cross = np.sign(d[edges[:, 0]]) != np.sign(d[edges[:, 1]])
    eid = -np.ones(len(edges), dtype=np.int64)
    eid[cross] = np.arange(int(cross.sum()))
    ce = edges[cross]
    s = d[ce[:, 0]] / (d[ce[:, 0]] - d[ce[:, 1]])
    pts = V[ce[:, 0]] + s[:, None] * (V[ce[:, 1]] - V[ce[:, 0]])
    lookup = {(int(a), int(b)): k for k, (a, b) in enumerate(edges)}
    dsu = _DSU(len(pts))
    for tri in T:
        ids = []
        for i in range(3):
            a, b = sorted((int(tri[i]), int(tri[(i + 1) % 3])))
            e = eid[lookup[(a, b)]]
            if e >= 0:
                ids.append(e)
        for e in ids[1:]:
            dsu.union(ids[0], e)
    comp = np.array([dsu.find(i) for i in range(len(pts))], dtype=np.int64)
    labels = {c: k for k, c in enumerate(sorted(set(comp.tolist())))}
    comp = np.array([labels[c] for c in comp], dtype=np.int64)
    on_bnd = np.flatnonzero(counts[cross] == 1)
    return len(labels), pts, comp, on_bnd


def plane_slice_check(mesh: mk.TriMesh, theta: float, phi: float, m: float, *, end_tol: float = 1e-6) -> SliceResult:
    """Count the curves in which the plane P_{theta,phi} cuts the surface.

    Passes with one curve whose two ends lie on Q_0 and Q_theta.  A slice
    meeting no edge transversally is reported as inconclusive.
    """
    m = _check_mass(m)
    if not 0.0 < phi < 0.5 * np.pi:
        raise ValueError("phi must lie in (0, pi/2)")
    n = plane_P(theta, phi).n
    ncomp, pts, comp, bnd = slice_mesh(mesh, n)
    if len(pts) == 0:
        return SliceResult(0, [], False, True, pts)
    ends = []
    ok = True
    scale = max(1.0, float(np.max(np.linalg.norm(mesh.vertices, axis=1))))
    for c in range(ncomp):
        e = pts[bnd[comp[bnd] == c]]
        ends.append(e)
        on0 = np.abs(e @ plane_Q(0.0).n) < end_tol * scale
        onT = np.abs(e @ plane_Q(theta).n) < end_tol * scale
        if len(e) != 2 or not ((on0[0] and onT[1]) or (on0[1] and onT[0])):
            ok = False
    return SliceResult(ncomp, ends, ok, False, pts)


# ---------------------------------------------------------------------------
# area bound


def _clipped_area(V, T, dom: ct.WedgeDomain, m: float, depth: int) -> float:
    """Metric area of the part of the triangles inside ``dom`` by recursive
    1-to-4 subdivision of triangles that straddle its boundary; leaves are
    classified by their centroid."""
    total = 0.0
    P = V[T]
    for level in range(depth + 1):
        if len(P) == 0:
            break
        viol = dom.violation(P.reshape(-1, 3)).reshape(-1, 3)
        c = P.mean(axis=1)
        rad = np.max(np.linalg.norm(P - c[:, None], axis=2), axis=1)
        vc = dom.violation(c)
        inside = np.all(viol <= 0, axis=1) & (vc <= -rad)
        outside = vc > rad
        a, b, d = P[:, 0], P[:, 1], P[:, 2]
        if np.any(inside):
            total += float(np.sum(mk.triangle_areas_g(np.concatenate([a[inside], b[inside], d[inside]]),
                                                     np.arange(3 * inside.sum()).reshape(3, -1).T, m)))
        rest = ~inside & ~outside
        if level == depth:
            leaf = rest & (vc <= 0)
            if np.any(leaf):
                total += float(np.sum(mk.triangle_areas_g(np.concatenate([a[leaf], b[leaf], d[leaf]]),
                                                         np.arange(3 * leaf.sum()).reshape(3, -1).T, m)))
            break
        a, b, d = a[rest], b[rest], d[rest]
        ab, bd, da = 0.5 * (a + b), 0.5 * (b + d), 0.5 * (d + a)
        P = np.concatenate([np.stack(t, axis=1) for t in ((a, ab, da), (ab, b, bd), (da, bd, d), (ab, bd, da))])
    return total


def wedge_boundary_area_g(dom: ct.WedgeDomain) -> float:
    """Metric area of the five faces of the wedge domain.

    Faces: the two Q-planes, P_{theta,phi}, and the inner and outer spherical
    caps.  Planar faces are annular sectors through the origin, so their area
    is an opening angle times the radial integral of ``f(r) r``.
    """
    m, th, phi = dom.m, dom.theta, dom.phi

    def pol_max(a):
        return np.arctan2(1.0 / np.tan(phi), np.cos(a - 0.5 * th))

    radial, _ = integrate.quad(lambda r: (1 + m / (2 * r)) ** 4 * r, dom.r_inner, dom.r_outer, epsabs=0, epsrel=1e-13)
    pm0 = pol_max(0.0)
    d0 = np.array([np.sin(pm0), 0.0, np.cos(pm0)])
    dT = np.array([np.sin(pm0) * np.cos(th), np.sin(pm0) * np.sin(th), np.cos(pm0)])
    psi = np.arccos(np.clip(d0 @ dT, -1.0, 1.0))
    solid, _ = integrate.quad(lambda a: 1.0 - np.cos(pol_max(a)), 0.0, th, epsabs=0, epsrel=1e-13)
    shells = sum((1 + m / (2 * r)) ** 4 * r * r for r in (dom.r_inner, dom.r_outer))
    return float((2.0 * pm0 + psi) * radial + solid * shells)


def area_bound_check(mesh: mk.TriMesh, dom: ct.WedgeDomain, m: float, depth: int = 6) -> tuple[float, float]:
    """``(area of the surface inside dom, area of the boundary of dom)``."""
    m = _check_mass(m)
    if dom.m != m:
        raise ValueError("domain and surface use different masses")
    lhs = _clipped_area(mesh.vertices, mesh.triangles, dom, m, depth) if len(mesh.triangles) else 0.0
    return lhs, wedge_boundary_area_g(dom)


# ---------------------------------------------------------------------------
# growth, curvature totals, stability, ends


def clipped_ball_area(mesh: mk.TriMesh, m: float, r: float, *, symmetric: bool = False, metric: bool = True,
                      depth: int = 5) -> float:
    """Area of the surface inside ``|x| <= r`` (and ``|x| >= (m/2)^2 / r`` when
    ``symmetric``), by recursive subdivision of straddling triangles."""
    V, T = mesh.vertices, mesh.triangles
    r_in = (0.5 * m) ** 2 / r if symmetric else 0.0

    def viol(x):
        rr = np.linalg.norm(x, axis=-1)
        return np.maximum(rr - r, r_in - rr)

    total = 0.0
    P = V[T]
    area_fn = (lambda X, F: mk.triangle_areas_g(X, F, m)) if metric else (lambda X, F: mk.triangle_normals(X, F)[1])
    for level in range(depth + 1):
        if len(P) == 0:
            break
        vv = viol(P)
        c = P.mean(axis=1)
        rad = np.max(np.linalg.norm(P - c[:, None], axis=2), axis=1)
        vc = viol(c)
        inside = np.all(vv <= 0, axis=1) & (vc <= -rad)
        outside = vc > rad
        last = level == depth
        take = inside | (last & ~outside & (vc <= 0))
        if np.any(take):
            Q = P[take].reshape(-1, 3)
            total += float(np.sum(area_fn(Q, np.arange(len(Q)).reshape(-1, 3))))
        if last:
            break
        rest = ~inside & ~outside
        a, b, d = P[rest, 0], P[rest, 1], P[rest, 2]
        ab, bd, da = 0.5 * (a + b), 0.5 * (b + d), 0.5 * (d + a)
        P = np.concatenate([np.stack(t, axis=1) for t in ((a, ab, da), (ab, b, bd), (da, bd, d), (ab, bd, da))])
    return total


def area_growth_fit(mesh: mk.TriMesh, m: float, radii, *, metric: bool = True, symmetric: bool = False) -> float:
    """Least-squares slope of log area inside the ball of radius r against log r.

    ``symmetric=True`` replaces the ball by the shell
    ``(m/2)^2 / r <= |x| <= r``, which is invariant under the horizon
    inversion and so measures both sheets of a doubled surface over the same
    range.  ``metric=False`` measures Euclidean area.
    """
    radii = np.asarray(radii, dtype=float)
    if len(radii) < 3:
        raise ValueError("need at least three radii")
    if np.any(np.diff(radii) <= 0):
        raise ValueError("radii must increase")
    areas = np.array([clipped_ball_area(mesh, m, r, metric=metric, symmetric=symmetric) for r in radii])
    if np.any(areas <= 0):
        raise ValueError("empty ball intersection")
    slope = np.polyfit(np.log(radii), np.log(areas), 1)[0]
    return float(slope)


def g_edge_lengths(mesh: mk.TriMesh, m: float) -> np.ndarray:
    """Metric lengths of the three edges opposite each triangle corner."""
    V, T = mesh.vertices, mesh.triangles
    L = np.empty(T.shape)
    for k in range(3):
        L[:, k] = mk.edge_length_g(V[T[:, (k + 1) % 3]], V[T[:, (k + 2) % 3]], m)
    return L


def angle_defects(mesh: mk.TriMesh, m: float | None) -> np.ndarray:
    """Angle defect at every vertex from edge lengths (metric lengths when
    ``m`` is given, Euclidean otherwise); boundary vertices get ``pi`` minus
    their angle sum instead."""
    V, T = mesh.vertices, mesh.triangles
    if m is None:
        L = np.stack([np.linalg.norm(V[T[:, (k + 1) % 3]] - V[T[:, (k + 2) % 3]], axis=1) for k in range(3)], axis=1)
    else:
        L = g_edge_lengths(mesh, m)
    ang = np.empty(T.shape)
    for k in range(3):
        a, b, c = L[:, k], L[:, (k + 1) % 3], L[:, (k + 2) % 3]
        if np.any(a >= b + c) or np.any(b >= a + c) or np.any(c >= a + b):
            raise mk.MeshError("edge lengths violate the triangle inequality")
        ang[:, k] = np.arccos(np.clip((b * b + c * c - a * a) / (2 * b * c), -1.0, 1.0))
    tot = np.zeros(len(V))
    for k in range(3):
        np.add.at(tot, T[:, k], ang[:, k])
    full = np.where(mesh.boundary_flags, np.pi, 2 * np.pi)
    return full - tot


@dataclass
class TotalCurvature:
    absolute: float
    signed: float
    defects: np.ndarray


def total_curvature_g(mesh: mk.TriMesh, m: float | None) -> TotalCurvature:
    """Sum of angle defects over interior vertices (absolute and signed)."""
    d = angle_defects(mesh, m)
    idx = mesh.interior
    return TotalCurvature(float(np.sum(np.abs(d[idx]))), float(np.sum(d[idx])), d)


def radial_bumps(mesh: mk.TriMesh, centers, radii) -> list:
    """Test functions ``(1 - |x - c|^2 / rho^2)_+^2`` at the mesh vertices."""
    out = []
    for c, rho in zip(centers, radii):
        s = np.sum((mesh.vertices - np.asarray(c, dtype=float)) ** 2, axis=1) / rho**2
        out.append(np.clip(1.0 - s, 0.0, None) ** 2)
    return out


def spread_bumps(mesh: mk.TriMesh, count: int = 6) -> list:
    """Radial bumps at interior vertices far from the boundary and from each
    other, each supported inside the surface."""
    I = mesh.interior
    dist = boundary_distance(mesh, mesh.vertices[I])
    centers, radii = [], []
    for k in np.argsort(-dist, kind="stable"):
        p = mesh.vertices[I[k]]
        if all(np.linalg.norm(p - q) > 0.5 * dist[k] for q in centers):
            centers.append(p)
            radii.append(0.95 * dist[k])
        if len(centers) == count:
            break
    return radial_bumps(mesh, centers, radii)


@dataclass
class StabilityResult:
    values: np.ndarray  # Q(f) per test function
    norms: np.ndarray  # squared metric L2 norms
    min_normalized: float  # min Q(f) / ||f||^2


def stability_check(mesh: mk.TriMesh, m: float, test_functions, *, samples=None) -> StabilityResult:
    """Second-variation form with the radial Ricci lower bound.

    ``Q(f) = int |grad f|^2 - (|A|_g^2 + Ric_rad) f^2`` over the metric area.
    The Dirichlet term uses the cotangent stiffness (conformally invariant in
    two dimensions); the potential uses lumped metric vertex areas.
    """
    m = _check_mass(m)
    V, T = mesh.vertices, mesh.triangles
    K = mk.cotan_stiffness(V, T)
    Ag = mk.vertex_areas(V, T, mk.triangle_areas_g(V, T, m))
    if samples is None:
        samples, _ = second_form_norm(mesh, m)
    A2 = np.zeros(len(V))
    for s in samples:
        A2[s.vertex] = s.A_g**2
    pot = A2 + radial_ricci(V, m)
    vals, norms = [], []
    for f in test_functions:
        f = np.asarray(f, dtype=float)
        if np.any(np.abs(f[mesh.boundary_flags]) > 1e-14):
            raise ValueError("test function does not vanish on the boundary")
        vals.append(float(f @ (K @ f) - np.sum(pot * f * f * Ag)))
        norms.append(float(np.sum(f * f * Ag)))
    vals, norms = np.array(vals), np.array(norms)
    ratio = vals / np.where(norms > 0, norms, 1.0)
    return StabilityResult(vals, norms, float(ratio.min()) if len(ratio) else 0.0)


def end_asymptotics(mesh: mk.TriMesh, radii) -> np.ndarray:
    """Largest ``|z|`` over vertices in each annulus ``radii[k] <= |x| < radii[k+1]``;
    NaN for empty annuli."""
    radii = np.asarray(radii, dtype=float)
    r = np.linalg.norm(mesh.vertices, axis=1)
    out = []
    for a, b in zip(radii, radii[1:]):
        sel = (r >= a) & (r < b)
        out.append(float(np.max(np.abs(mesh.vertices[sel, 2]))) if np.any(sel) else float("nan"))
    return np.array(out)


def tail_non_increasing(series, rtol: float = 1e-12) -> bool:
    """Is the outer half of ``series`` (NaNs dropped) non-increasing?"""
    s = np.asarray(series, dtype=float)
    s = s[~np.isnan(s)]
    tail = s[len(s) // 2:]
    return bool(np.all(np.diff(tail) <= rtol * max(1.0, float(np.max(np.abs(tail))) if len(tail) else 1.0)))


# ---------------------------------------------------------------------------
# blow-up


@dataclass
class BlowupResult:
    H_sup: float  # sup |H| of the rescaled surface
    H_bound: float  # 4 / (m lambda)
    A_origin: float  # Euclidean |A| of the rescaled surface at the origin
    A_predicted: float  # (1 + m / (2|q|))^2
    lam: float
    A_corrected: float = float("nan")  # sqrt(e^{2u} + 2 (d_nu u)^2 / lam^2), valid when H_g = 0


def blowup_scaling_check(mesh: mk.TriMesh, m: float, q_vertex: int, lam: float | None = None) -> BlowupResult:
    """Rescale by ``X -> lam (X - q)`` and measure mean curvature and ``|A|``.

    With ``lam=None`` the scale is ``|A|_g`` at ``q``, as in the curvature
    estimate.  ``H_sup`` is taken over interior vertices of the rescaled mesh.
    """
    m = _check_mass(m)
    q = mesh.vertices[q_vertex].copy()
    (s,), _ = second_form_norm(mesh, m, vertices=[q_vertex])
    if lam is None:
        lam = s.A_g
    if not lam > 0:
        raise ValueError("lambda must be positive")
    scaled = mesh.copy()
    scaled.vertices = lam * (mesh.vertices - q)
    H, _, _ = discrete_mean_curvature(scaled)
    fits, _ = principal_curvatures(scaled, [q_vertex])
    kappa, _ = fits[q_vertex]
    du_n = float(log_factor_gradient(q, m) @ s.normal)
    return BlowupResult(
        float(np.max(np.abs(H[scaled.interior]))),
        4.0 / (m * lam),
        float(np.linalg.norm(kappa)),
        float(length_scale(q, m)),
        float(lam),
        float(np.sqrt(length_scale(q, m) ** 2 + 2.0 * (du_n / lam) ** 2)),
    )
