"""Discrete Plateau solver for the conformal area and the R-sweep."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.sparse.linalg import splu

from . import contour as ct
from . import meshkit as mk
from .geometry import _check_mass, conformal_factor, length_scale

log = logging.getLogger(__name__)


class SolverError(RuntimeError):
    """Line search could not decrease the area."""

    def __init__(self, iteration: int, msg: str = "line search failed"):
        super().__init__(f"{msg} at iteration {iteration}")
        self.iteration = iteration


class EmbeddednessError(RuntimeError):
    """The converged mesh has crossing non-adjacent triangles."""

    def __init__(self, pairs: np.ndarray):
        super().__init__(f"{len(pairs)} intersecting triangle pairs, first {pairs[0].tolist()}")
        self.pairs = pairs


@dataclass
class SolverConfig:
    """Parameters for :func:`solve_plateau`.

    ``grad_tolerance`` bounds the discrete conformal mean curvature (the
    normal area gradient per unit metric star area).  ``refinements`` is the
    number of 1-to-4 subdivisions performed mid-run, each after the current
    level has converged.

    Steps move vertices along their normals only, except for the first
    ``full_steps`` steps of each level, which also move them tangentially.
    Warm-started sweep entries use ``warm_full_steps`` such steps to relax
    the kink left at the previous outer circle.
    """

    max_iterations: int = 400
    grad_tolerance: float = 1e-7
    backtrack: float = 0.5
    armijo: float = 1e-4
    min_step: float = 1e-10
    refinements: int = 0
    rule: str = "edge3"
    seed: int = 0
    refactor_every: int = 10
    check_embedded: bool = True
    full_steps: int = 0
    warm_full_steps: int = 2

    def __post_init__(self):
        if not self.grad_tolerance > 0:
            raise ValueError("grad_tolerance must be positive")
        if not 0.0 < self.backtrack < 1.0:
            raise ValueError("backtrack must lie in (0, 1)")
        if not 0.0 < self.armijo < 1.0:
            raise ValueError("armijo must lie in (0, 1)")
        if self.max_iterations < 0 or self.refinements < 0:
            raise ValueError("iteration and refinement counts must be non-negative")
        mk.get_rule(self.rule)


@dataclass
class SolveReport:
    iterations: int = 0
    final_area: float = float("nan")
    final_grad_norm: float = float("nan")
    area_history: list = field(default_factory=list)
    grad_history: list = field(default_factory=list)
    status: str = "running"
    level_starts: list = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return self.status in ("converged", "stalled")

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iteration", "area", "grad_norm"])
            for k, (a, g) in enumerate(zip(self.area_history, self.grad_history)):
                w.writerow([k, f"{a:.17g}", f"{g:.17g}"])


# ---------------------------------------------------------------------------
# functional


def area_and_gradient(V: np.ndarray, T: np.ndarray, m: float, rule="edge3") -> tuple[np.ndarray, np.ndarray]:
    """Per-triangle metric areas and the full gradient (every vertex)."""
    rule = mk.get_rule(rule)
    mk.check_nondegenerate(V, T)
    P = V[T]
    nvec, area = mk.triangle_normals(V, T)
    nhat = nvec / (2.0 * area)[:, None]
    avg = np.zeros(len(T))
    grad_f = np.zeros_like(P)  # sum_q w_q lambda_qk grad f(x_q)
    for lam, w in zip(rule.bary, rule.weights):
        xq = np.einsum("i,kij->kj", np.asarray(lam), P)
        r = np.linalg.norm(xq, axis=1)
        s = 1.0 + 0.5 * m / r
        avg += w * s**4
        gf = (-2.0 * m * s**3 / r**3)[:, None] * xq
        for k in range(3):
            grad_f[:, k] += (w * lam[k]) * gf
    G = np.zeros_like(V)
    for k in range(3):
        b, c = P[:, (k + 1) % 3], P[:, (k + 2) % 3]
        dA = 0.5 * np.cross(nhat, c - b)
        np.add.at(G, T[:, k], avg[:, None] * dA + area[:, None] * grad_f[:, k])
    return area * avg, G


def area_gradient(mesh: mk.TriMesh, m: float, rule="edge3") -> np.ndarray:
    """Exact derivative of :func:`meshkit.mesh_area_g` with respect to the
    interior vertex positions; boundary rows are zero."""
    _check_mass(m)
    _, G = area_and_gradient(mesh.vertices, mesh.triangles, m, rule)
    G[mesh.boundary_flags] = 0.0
    return G


def normal_residual(V: np.ndarray, T: np.ndarray, G: np.ndarray, tri_g: np.ndarray, m: float):
    """Vertex normals, normal gradient components and the discrete metric
    mean curvature ``e^{-u} (G.n) / (A_g/3)``."""
    n = mk.vertex_normals(V, T)
    g = np.sum(G * n, axis=1)
    Ag = mk.vertex_areas(V, T, tri_g)
    H = g / (length_scale(V, m) * Ag)
    return n, g, H


# ---------------------------------------------------------------------------
# solver


def _descend_level(mesh: mk.TriMesh, m: float, cfg: SolverConfig, report: SolveReport, budget: int) -> None:
    V = mesh.vertices
    T = mesh.triangles
    free = mesh.interior
    eps = np.finfo(float).eps
    report.level_starts.append(len(report.area_history))
    tri_g, G = area_and_gradient(V, T, m, cfg.rule)
    E = float(np.sum(tri_g))
    lu = None
    it = 0
    while True:
        n, g, H = normal_residual(V, T, G, tri_g, m)
        hmax = float(np.max(np.abs(H[free]))) if len(free) else 0.0
        report.area_history.append(E)
        report.grad_history.append(hmax)
        if hmax < cfg.grad_tolerance or len(free) == 0:
            report.status = "converged"
            break
        if it >= budget:
            report.status = "max_iterations"
            break
        if lu is None or it % cfg.refactor_every == 0:
            K = mk.cotan_stiffness(V, T)
            lu = splu(K[free][:, free].tocsc())
        scale = 1.0 / length_scale(V[free], m)
        D = np.zeros_like(V)
        if it >= cfg.full_steps:
            phi = lu.solve(scale * g[free])
            D[free] = -(scale * phi)[:, None] * n[free]
        else:
            phi = lu.solve(scale[:, None] * G[free])
            D[free] = -scale[:, None] * phi
        slope = float(np.sum(G[free] * D[free]))
        if slope >= 0:
            raise SolverError(report.iterations, "non-descent direction")
        t = 1.0
        accepted = False
        while t >= cfg.min_step:
            trial = V + t * D
            try:
                tg_trial = mk.triangle_areas_g(trial, T, m, cfg.rule)
            except mk.DegenerateTriangleError:
                t *= cfg.backtrack
                continue
            E_trial = float(np.sum(tg_trial))
            if E_trial <= E + cfg.armijo * t * slope:
                accepted = True
                break
            t *= cfg.backtrack
        if not accepted:
            if abs(slope) < 64 * eps * E:
                report.status = "stalled"
                break
            raise SolverError(report.iterations)
        V[:] = trial
        tri_g, G = area_and_gradient(V, T, m, cfg.rule)
        E = float(np.sum(tri_g))
        it += 1
        report.iterations += 1
    report.final_area = E
    report.final_grad_norm = hmax


def solve_plateau(initial: mk.TriMesh, m: float, config: SolverConfig | None = None) -> tuple[mk.TriMesh, SolveReport]:
    """Minimise the metric area over interior vertices, boundary pinned.

    Each step moves interior vertices along their normals by the
    Sobolev-preconditioned normal gradient (cotangent stiffness solve) and
    backtracks until the Armijo condition holds, so the area history never
    increases.  After the last level the mesh is checked for crossing
    triangles.
    """
    m = _check_mass(m)
    cfg = config or SolverConfig()
    mesh = initial.copy()
    mk.repin_boundary(mesh)
    report = SolveReport()
    remaining = cfg.max_iterations
    for level in range(cfg.refinements + 1):
        if level:
            mesh = mk.refine(mesh)
            mk.repin_boundary(mesh)
        start = report.iterations
        _descend_level(mesh, m, cfg, report, remaining)
        remaining -= report.iterations - start
        log.debug("level %d: %d iterations, area %.12g, H %.3g", level, report.iterations - start,
                  report.final_area, report.final_grad_norm)
    if cfg.check_embedded:
        bad = mk.self_intersections(mesh)
        if len(bad):
            raise EmbeddednessError(bad)
    return mesh, report


# ---------------------------------------------------------------------------
# R-sweep


@dataclass
class SweepResult:
    R_list: list
    meshes: list
    reports: list
    distances: list  # entry k compares meshes k and k+1 inside the probe domain
    failures: dict = field(default_factory=dict)  # R -> message
    domain: ct.WedgeDomain | None = None


def default_probe_domain(theta: float, m: float) -> ct.WedgeDomain:
    """Compact wedge used for the sweep's Cauchy distances."""
    return ct.WedgeDomain(theta, np.pi / 6, 0.2 * m / 2, 2.0 * m / 2, m)


def restricted_hausdorff(a: mk.TriMesh, b: mk.TriMesh, dom: ct.WedgeDomain) -> float:
    """Symmetric vertex-to-surface Hausdorff distance, with the vertices of
    each mesh restricted to ``dom``."""
    worst = 0.0
    for p, q in ((a, b), (b, a)):
        pts = p.vertices[dom.violation(p.vertices) <= 0.0]
        if len(pts):
            worst = max(worst, float(np.max(mk.distance_to_mesh(pts, q))))
    return worst


def extend_solution(prev: mk.TriMesh, contour: ct.Contour, level: int) -> mk.TriMesh:
    """Disk mesh on ``contour`` whose first rows copy ``prev`` and whose
    remaining rows lie flat in the equatorial plane.

    Requires nested ray radii (see :func:`contour.graded_radii`), the same
    horizon sampling and the same refinement level, so that the previous grid
    is a sub-grid of the new one.
    """
    if prev.grid is None:
        raise ValueError("warm start needs a grid-structured mesh")
    new = mk.init_disk_mesh(contour, level)
    lookup = {(int(j), int(i)): k for k, (j, i) in enumerate(prev.grid)}
    rows_prev = int(prev.grid[:, 0].max())
    V = new.vertices
    for k, (j, i) in enumerate(new.grid):
        if new.boundary_flags[k]:
            continue
        key = (int(j), int(i))
        if key in lookup:
            V[k] = prev.vertices[lookup[key]]
        elif j > rows_prev:
            V[k, 2] = 0.0
            V[k] *= np.linalg.norm(new.vertices[k]) / max(np.linalg.norm(V[k]), 1e-300)
    return new


def sweep_R(
    theta: float,
    m: float,
    R_list,
    config: SolverConfig | None = None,
    *,
    n_per_arc: int = 6,
    level: int = 1,
    domain: ct.WedgeDomain | None = None,
) -> SweepResult:
    """Solve for each R in turn, warm-starting from the previous solution.

    Every mesh ends at refinement ``level`` (``config.refinements`` is
    ignored): a cold solve starts on the coarse grid and refines mid-run.
    Grids are nested: each contour reuses the previous ray radii, so the
    previous solution is copied verbatim and the new outer band starts flat.
    A failed solve is recorded in ``failures`` and the next R restarts cold.
    """
    m = _check_mass(m)
    R_list = [float(R) for R in R_list]
    if any(b <= a for a, b in zip(R_list, R_list[1:])):
        raise ValueError("R_list must be strictly increasing")
    if R_list and R_list[0] <= 0.5 * m:
        raise ValueError("all R must exceed m/2")
    cfg = config or SolverConfig()
    dom = domain or default_probe_domain(theta, m)
    res = SweepResult(R_list, [], [], [], {}, dom)
    cold_cfg = replace(cfg, refinements=level)
    warm_cfg = replace(cfg, refinements=0, full_steps=cfg.warm_full_steps)
    radii = None
    prev = None
    for R in R_list:
        radii = ct.graded_radii(m, n_per_arc, R, start=radii)
        c = ct.build_contour(theta, R, m, n_per_arc, ray_radii=radii)
        try:
            if prev is not None:
                mesh, rep = solve_plateau(extend_solution(prev, c, level), m, warm_cfg)
            else:
                mesh, rep = solve_plateau(mk.init_disk_mesh(c, 0), m, cold_cfg)
        except (SolverError, EmbeddednessError, mk.MeshError) as exc:
            log.warning("sweep R=%g failed: %s", R, exc)
            res.failures[R] = str(exc)
            mesh, rep = None, None
        if res.meshes:
            before = res.meshes[-1]
            res.distances.append(
                restricted_hausdorff(before, mesh, dom) if before is not None and mesh is not None else float("nan")
            )
        res.meshes.append(mesh)
        res.reports.append(rep)
        prev = mesh
    return res
