"""Boundary contour of the fundamental Plateau problem and wedge domains.

The contour is the closed loop

    pole -> horizon arc in Q_0 -> equatorial ray along alpha=0 -> circle of
    radius R in the equatorial plane -> ray at alpha=theta (inward) ->
    horizon arc in Q_theta (upward) -> pole

traversed counterclockwise seen from +z.  Each of the five sub-arcs has a
natural parameter ``t`` in [0, 1]: horizon arcs run from the pole to the
equator, rays from the horizon outwards, the circle from alpha=0 to theta.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .geometry import _check_mass, plane_P, plane_Q

ETA0 = "gamma0_horizon"
RAY0 = "gamma0_ray"
CIRCLE = "C"
RAYT = "gammaT_ray"
ETAT = "gammaT_horizon"
ARC_TAGS = (ETA0, RAY0, CIRCLE, RAYT, ETAT)

# profile grading: matches the horizon-arc spacing where the ray starts
RAY_GRADING = np.pi / 2


@dataclass
class Contour:
    """Sampled closed contour.

    ``points[k]`` carries ``tags[k]`` and arc parameter ``params[k]``; the
    last sample repeats the first.  ``corners`` indexes the pole, the two
    equatorial horizon points and the two outer ray ends.
    """

    theta: float
    R: float
    m: float
    points: np.ndarray
    tags: list
    params: np.ndarray
    corners: dict = field(default_factory=dict)
    ray_radii: np.ndarray | None = None

    @property
    def n_eta(self) -> int:
        return sum(1 for t in self.tags[:-1] if t == ETA0)

    @property
    def n_ray(self) -> int:
        return len(self.ray_radii) - 1

    def arc_samples(self, tag: str) -> np.ndarray:
        """Natural-order parameters of the samples on one sub-arc, endpoints included."""
        if tag in (ETA0, ETAT):
            n = self.n_eta
            return np.linspace(0.0, 1.0, n + 1)
        if tag in (RAY0, RAYT):
            return (self.ray_radii - 0.5 * self.m) / (self.R - 0.5 * self.m)
        if tag == CIRCLE:
            return np.linspace(0.0, 1.0, self.n_eta + self.n_ray + 1)
        raise ValueError(f"unknown arc tag {tag!r}")


def _arc_point(theta, R, m, tag, t):
    t = np.asarray(t, dtype=float)
    h = 0.5 * m
    if tag in (ETA0, ETAT):
        a = 0.0 if tag == ETA0 else theta
        s = 0.5 * np.pi * t
        return np.stack([h * np.sin(s) * np.cos(a), h * np.sin(s) * np.sin(a), h * np.cos(s)], axis=-1)
    if tag in (RAY0, RAYT):
        a = 0.0 if tag == RAY0 else theta
        r = h + t * (R - h)
        return np.stack([r * np.cos(a), r * np.sin(a), np.zeros_like(r)], axis=-1)
    if tag == CIRCLE:
        a = t * theta
        return np.stack([R * np.cos(a), R * np.sin(a), np.zeros_like(a)], axis=-1)
    raise ValueError(f"unknown arc tag {tag!r}")


def arc_point(contour: Contour, tag: str, t):
    """Point at arc-length fraction ``t`` of a named sub-arc."""
    if np.any((np.asarray(t) < 0.0) | (np.asarray(t) > 1.0)):
        raise ValueError("arc parameter must lie in [0, 1]")
    return _arc_point(contour.theta, contour.R, contour.m, tag, t)


def graded_radii(m: float, n_eta: int, R: float, start: np.ndarray | None = None) -> np.ndarray:
    """Ray sample radii from the horizon to ``R``.

    Spacing grows like ``r / row`` so that the row-structured disk grid has
    roughly isotropic cells.  ``start`` (an existing increasing radius list
    ending below R) is kept verbatim and extended, which makes grids for
    increasing R nested.
    """
    h = 0.5 * m
    if start is None:
        start = np.array([h])
    start = np.asarray(start, dtype=float)
    r0 = start[-1]
    if R <= r0:
        raise ValueError("R must exceed the last existing radius")
    j0 = n_eta + len(start) - 1
    k = max(1, int(round(j0 * ((R / r0) ** (1.0 / RAY_GRADING) - 1.0))))
    p = np.log(R / r0) / np.log(1.0 + k / j0)
    ext = r0 * (1.0 + np.arange(1, k + 1) / j0) ** p
    ext[-1] = R
    return np.concatenate([start, ext])


def build_contour(
    theta: float,
    R: float,
    m: float,
    n_per_arc: int,
    *,
    ray_spacing: str = "graded",
    ray_radii=None,
) -> Contour:
    """Sample the contour.

    Each horizon arc gets ``n_per_arc`` segments.  The rays get ``n_per_arc``
    uniform segments (``ray_spacing="uniform"``), a graded set
    (``"graded"``), or exactly the radii in ``ray_radii``.  The circle gets
    as many segments as a horizon arc and a ray together, which is what the
    disk grid in :mod:`meshkit` expects.
    """
    m = _check_mass(m)
    theta = float(theta)
    R = float(R)
    if not 0.0 < theta <= 0.5 * np.pi + 1e-15:
        raise ValueError("theta must lie in (0, pi/2]")
    if not R > 0.5 * m:
        raise ValueError("R must exceed the horizon radius m/2")
    if int(n_per_arc) < 2:
        raise ValueError("n_per_arc must be at least 2")
    n = int(n_per_arc)
    h = 0.5 * m
    if ray_radii is not None:
        radii = np.asarray(ray_radii, dtype=float)
        if abs(radii[0] - h) > 1e-12 * h or abs(radii[-1] - R) > 1e-12 * R or np.any(np.diff(radii) <= 0):
            raise ValueError("ray radii must increase from m/2 to R")
        radii = radii.copy()
        radii[0], radii[-1] = h, R
    elif ray_spacing == "uniform":
        radii = np.linspace(h, R, n + 1)
    elif ray_spacing == "graded":
        radii = graded_radii(m, n, R)
    else:
        raise ValueError(f"unknown ray spacing {ray_spacing!r}")

    t_eta = np.linspace(0.0, 1.0, n + 1)
    t_ray = (radii - h) / (R - h)
    t_c = np.linspace(0.0, 1.0, n + len(radii))

    pieces = [
        (ETA0, t_eta[:-1]),
        (RAY0, t_ray[:-1]),
        (CIRCLE, t_c[:-1]),
        (RAYT, t_ray[::-1][:-1]),
        (ETAT, t_eta[::-1]),
    ]
    pts, tags, params = [], [], []
    corners = {}
    for tag, ts in pieces:
        if tag == RAY0:
            corners["E0"] = len(tags)
        elif tag == CIRCLE:
            corners["R0"] = len(tags)
        elif tag == RAYT:
            corners["RT"] = len(tags)
        elif tag == ETAT:
            corners["ET"] = len(tags)
        p = _arc_point(theta, R, m, tag, ts)
        pts.append(p)
        tags.extend([tag] * len(ts))
        params.append(ts)
    corners["N"] = 0
    points = np.concatenate(pts)
    points[-1] = points[0]
    return Contour(theta, R, m, points, tags, np.concatenate(params), corners, radii)


def export_contour_csv(contour: Contour, path) -> None:
    """Write ``arc_tag, t, x, y, z`` rows, 17 significant digits."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["arc_tag", "t", "x", "y", "z"])
        for tag, t, p in zip(contour.tags, contour.params, contour.points):
            w.writerow([tag, f"{t:.17g}", *(f"{c:.17g}" for c in p)])


def read_contour_csv(path) -> tuple[list, np.ndarray, np.ndarray]:
    tags, ts, pts = [], [], []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            tags.append(row["arc_tag"])
            ts.append(float(row["t"]))
            pts.append([float(row["x"]), float(row["y"]), float(row["z"])])
    return tags, np.array(ts), np.array(pts)


# ---------------------------------------------------------------------------
# region tests


def region_violation(x, theta: float, m: float) -> np.ndarray:
    """Signed violation of the wedge region between Q_0, Q_theta, above the
    equatorial plane and outside the horizon; positive means outside."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    n0 = plane_Q(0.0).n
    nt = plane_Q(theta).n
    v = np.stack(
        [
            -(x @ n0),  # on the alpha >= 0 side of Q_0
            x @ nt,  # on the alpha <= theta side of Q_theta
            -x[:, 2],
            0.5 * m - np.linalg.norm(x, axis=1),
        ],
        axis=1,
    )
    return v.max(axis=1)


@dataclass(frozen=True)
class WedgeDomain:
    """Region between Q_0 and Q_theta, on the pole side of P_{theta,phi}, and
    between the spheres of radius ``m/2 + eps`` and ``m/2 + delta``."""

    theta: float
    phi: float
    eps: float
    delta: float
    m: float

    def __post_init__(self):
        if not 0.0 < self.phi < 0.5 * np.pi:
            raise ValueError("phi must lie in (0, pi/2)")
        if not 0.0 <= self.eps < self.delta:
            raise ValueError("need 0 <= eps < delta")
        _check_mass(self.m)

    @property
    def r_inner(self) -> float:
        return 0.5 * self.m + self.eps

    @property
    def r_outer(self) -> float:
        return 0.5 * self.m + self.delta

    def violation(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        r = np.linalg.norm(x, axis=1)
        v = np.stack(
            [
                -(x @ plane_Q(0.0).n),
                x @ plane_Q(self.theta).n,
                -(x @ plane_P(self.theta, self.phi).n),
                self.r_inner - r,
                r - self.r_outer,
            ],
            axis=1,
        )
        return v.max(axis=1)


def wedge_contains(dom: WedgeDomain, x, tol: float = 0.0):
    """Membership with every bounding inequality relaxed by ``tol``."""
    inside = dom.violation(x) <= tol
    return bool(inside[0]) if np.ndim(x) == 1 else inside
