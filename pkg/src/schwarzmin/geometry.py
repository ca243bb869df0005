"""Pointwise geometry of the doubled Schwarzschild space.

The space is R^3 minus the origin with metric ``(1 + m/(2|x|))**4`` times the
Euclidean one.  Everything here is a closed-form function of Euclidean
coordinates and the mass ``m``; functions accept single points of shape (3,)
or stacks of shape (n, 3).

Isometries are stored as ordered tuples of primitive maps (plane reflections
through the origin, rotations about the z-axis and the inversion in the
horizon sphere ``|x| = m/2``).  The tuple is applied left to right.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np


class DomainError(ValueError):
    """Raised when a point coincides with the excluded origin."""


def _check_mass(m: float) -> float:
    m = float(m)
    if not m > 0.0:
        raise ValueError(f"mass must be positive, got {m!r}")
    return m


def _radius(x: np.ndarray) -> np.ndarray:
    r = np.linalg.norm(x, axis=-1)
    if np.any(r <= 0.0):
        raise DomainError("the origin is not part of the manifold")
    return r


def horizon_radius(m: float) -> float:
    return 0.5 * _check_mass(m)


def conformal_factor(x, m: float):
    """Return ``(1 + m/(2|x|))**4`` at ``x``."""
    m = _check_mass(m)
    r = _radius(np.asarray(x, dtype=float))
    return (1.0 + m / (2.0 * r)) ** 4


def length_scale(x, m: float):
    """Square root of the conformal factor, ``exp(u) = (1 + m/(2|x|))**2``."""
    m = _check_mass(m)
    r = _radius(np.asarray(x, dtype=float))
    return (1.0 + m / (2.0 * r)) ** 2


def log_factor_gradient(x, m: float) -> np.ndarray:
    """Euclidean gradient of ``u = 2 log(1 + m/(2|x|))``."""
    m = _check_mass(m)
    x = np.asarray(x, dtype=float)
    r = _radius(x)[..., None]
    return -m * x / (r**3 * (1.0 + m / (2.0 * r)))


def tangent_norm_g(x, v, m: float):
    """Length of the vector ``v`` based at ``x`` measured in the metric."""
    v = np.asarray(v, dtype=float)
    return length_scale(x, m) * np.linalg.norm(v, axis=-1)


def radial_ricci(x, m: float):
    """Ricci curvature in the radial unit direction.

    This is the smallest eigenvalue of the Ricci tensor,
    ``-2m / (|x|^3 (1 + m/(2|x|))^6)``.
    """
    m = _check_mass(m)
    r = _radius(np.asarray(x, dtype=float))
    return -2.0 * m / (r**3 * (1.0 + m / (2.0 * r)) ** 6)


def mean_curvature_conformal(H_euc, nu, x, m: float, *, unit_tol: float = 1e-9):
    """Transform Euclidean mean curvature to mean curvature in the metric.

    Convention: the mean curvature vector is ``H * nu``, so a Euclidean sphere
    of radius r with outward normal has ``H_euc = -2/r``.  With
    ``exp(2u)`` the conformal factor the result is
    ``exp(-u) * (H_euc - 2 du/dnu)``, which vanishes on the horizon and on
    planes through the origin.

    Parameters
    ----------
    H_euc : float or (n,) array
        Euclidean mean curvature (sum of principal curvatures).
    nu : (3,) or (n, 3) array
        Euclidean unit normal.
    x : (3,) or (n, 3) array
        Base point.
    m : float
        Mass.
    """
    nu = np.asarray(nu, dtype=float)
    norms = np.linalg.norm(nu, axis=-1)
    if np.any(np.abs(norms - 1.0) > unit_tol):
        raise ValueError("normal must be a unit vector")
    du = np.sum(log_factor_gradient(x, m) * nu, axis=-1)
    return (np.asarray(H_euc, dtype=float) - 2.0 * du) / length_scale(x, m)


def second_form_conformal(kappa, nu, x, m: float):
    """Norm of the second fundamental form in the metric.

    ``kappa`` holds the Euclidean principal curvatures (shape (..., 2)) in
    the convention of :func:`mean_curvature_conformal`, so a sphere with
    outward normal has ``-1/r``.  Under the conformal change each principal
    curvature becomes ``exp(-u) * (kappa_i - du/dnu)``.
    """
    kappa = np.asarray(kappa, dtype=float)
    du = np.sum(log_factor_gradient(x, m) * np.asarray(nu, dtype=float), axis=-1)
    shifted = kappa - np.asarray(du)[..., None]
    return np.sqrt(np.sum(shifted**2, axis=-1)) / length_scale(x, m)


# ---------------------------------------------------------------------------
# totally geodesic planes and isometries


@dataclass(frozen=True)
class GeodesicPlane:
    """Plane through the origin given by its unit normal."""

    normal: tuple

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=float)
        if n.shape != (3,) or abs(np.linalg.norm(n) - 1.0) > 1e-12:
            raise ValueError("plane normal must be a unit 3-vector")
        object.__setattr__(self, "normal", tuple(float(c) for c in n))

    @property
    def n(self) -> np.ndarray:
        return np.array(self.normal)

    def signed_distance(self, x) -> np.ndarray:
        return np.asarray(x, dtype=float) @ self.n


def plane_Q(alpha: float) -> GeodesicPlane:
    """Vertical plane containing the direction ``(cos a, sin a, 0)``."""
    return GeodesicPlane((-np.sin(alpha), np.cos(alpha), 0.0))


def plane_P(alpha: float, phi: float) -> GeodesicPlane:
    """Plane obtained by tilting the equatorial plane by ``phi`` about the
    horizontal line orthogonal to the direction ``alpha/2``."""
    s = np.sin(phi)
    return GeodesicPlane((-s * np.cos(alpha / 2), -s * np.sin(alpha / 2), np.cos(phi)))


EQUATORIAL = GeodesicPlane((0.0, 0.0, 1.0))


@dataclass(frozen=True)
class PlaneReflection:
    plane: GeodesicPlane

    def apply(self, x: np.ndarray) -> np.ndarray:
        n = self.plane.n
        return x - 2.0 * (x @ n)[..., None] * n

    def push(self, x: np.ndarray, v: np.ndarray) -> np.ndarray:
        return self.apply(v)


@dataclass(frozen=True)
class RotationZ:
    angle: float

    def apply(self, x: np.ndarray) -> np.ndarray:
        c, s = np.cos(self.angle), np.sin(self.angle)
        out = x.copy()
        out[..., 0] = c * x[..., 0] - s * x[..., 1]
        out[..., 1] = s * x[..., 0] + c * x[..., 1]
        return out

    def push(self, x: np.ndarray, v: np.ndarray) -> np.ndarray:
        return self.apply(v)


@dataclass(frozen=True)
class HorizonInversion:
    m: float

    def apply(self, x: np.ndarray) -> np.ndarray:
        r2 = np.sum(x * x, axis=-1)
        if np.any(r2 <= 0.0):
            raise DomainError("cannot invert the origin")
        return (0.25 * self.m**2) * x / r2[..., None]

    def push(self, x: np.ndarray, v: np.ndarray) -> np.ndarray:
        r2 = np.sum(x * x, axis=-1)[..., None]
        xv = np.sum(x * v, axis=-1)[..., None]
        return (0.25 * self.m**2) * (v - 2.0 * xv * x / r2) / r2


Primitive = Union[PlaneReflection, RotationZ, HorizonInversion]


@dataclass(frozen=True)
class Isometry:
    """Composition of primitives, applied in list order."""

    primitives: tuple = ()
    label: str = "id"

    def __call__(self, x):
        return apply_isometry(self, x)

    def then(self, other: "Isometry") -> "Isometry":
        """Map that applies ``self`` first and ``other`` afterwards."""
        return Isometry(self.primitives + other.primitives, f"{other.label}*{self.label}")

    @property
    def inversion_count(self) -> int:
        return sum(isinstance(p, HorizonInversion) for p in self.primitives)

    @property
    def reflection_count(self) -> int:
        return sum(isinstance(p, PlaneReflection) for p in self.primitives)

    def reverses_ambient_orientation(self) -> bool:
        return (self.inversion_count + self.reflection_count) % 2 == 1


IDENTITY = Isometry((), "id")


def apply_isometry(T: Isometry, x) -> np.ndarray:
    x = np.array(x, dtype=float)
    _radius(x)
    for p in T.primitives:
        x = p.apply(x)
    return x


def reflection(plane: GeodesicPlane, label: str = "ref") -> Isometry:
    return Isometry((PlaneReflection(plane),), label)


def rotation_z(angle: float, label: str | None = None) -> Isometry:
    return Isometry((RotationZ(float(angle)),), label or f"rot({angle:.6g})")


def inversion(m: float) -> Isometry:
    return Isometry((HorizonInversion(_check_mass(m)),), "I")


def differential(T: Isometry, x, v, h: float | None = None) -> np.ndarray:
    """Push ``v`` forward through ``T`` at ``x``.

    With ``h=None`` the exact Jacobians of the primitives are chained.
    Otherwise central differences with step ``h`` (relative to
    ``max(1, |x|)``) along the unit direction of v are used.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    v = np.atleast_2d(np.asarray(v, dtype=float))
    if h is None:
        _radius(x)
        for p in T.primitives:
            v = p.push(x, v)
            x = p.apply(x)
        return v
    vn = np.linalg.norm(v, axis=-1, keepdims=True)
    safe = np.where(vn > 0, vn, 1.0)
    e = v / safe
    h = h * np.maximum(1.0, np.linalg.norm(x, axis=-1, keepdims=True))
    dv = (apply_isometry(T, x + h * e) - apply_isometry(T, x - h * e)) / (2.0 * h)
    return dv * vn


def isometry_residual(T: Isometry, m: float, points, vectors) -> float:
    """Worst relative change of metric length of tangent vectors under ``T``."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    vectors = np.atleast_2d(np.asarray(vectors, dtype=float))
    if len(points) == 0:
        raise ValueError("need at least one sample")
    before = tangent_norm_g(points, vectors, m)
    after = tangent_norm_g(apply_isometry(T, points), differential(T, points, vectors), m)
    return float(np.max(np.abs(after - before) / before))


# ---------------------------------------------------------------------------
# the symmetry group used to assemble the genus-tau surface

_PROBES = np.array(
    [
        [0.731, 0.412, 0.303],
        [-0.517, 1.093, -0.288],
        [1.571, -0.214, 0.862],
        [-0.407, -0.655, 1.377],
        [0.268, 0.193, -0.611],
    ]
)


@dataclass
class IsometryGroup:
    """Finite group of isometries found by closure of a generating set.

    ``surface_flip[i]`` records whether element i reverses the orientation
    of the fundamental piece relative to the identity copy.  Each generator
    that fixes a boundary curve of the piece acts on the surface as a
    reflection and flips it.
    """

    tau: int
    m: float
    elements: list = field(default_factory=list)
    surface_flip: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.elements)

    def index_of(self, T: Isometry, tol: float = 1e-9) -> int:
        img = apply_isometry(T, self.m * _PROBES)
        for i, g in enumerate(self.elements):
            if np.max(np.linalg.norm(apply_isometry(g, self.m * _PROBES) - img, axis=1)) < tol * self.m:
                return i
        return -1

    def euclidean_part(self) -> list:
        """Elements that are orthogonal maps (even number of inversions)."""
        out = []
        for g in self.elements:
            img = apply_isometry(g, self.m * _PROBES)
            if np.allclose(np.linalg.norm(img, axis=1), np.linalg.norm(self.m * _PROBES, axis=1), atol=1e-9):
                out.append(g)
        return out


def generators(tau: int, m: float) -> dict:
    """The three generators: a half-turn about the horizon meridian in the
    plane Q_0, a half-turn about the equatorial ray at angle pi/(tau+1), and a
    rotation by 2 pi/(tau+1) about the z-axis."""
    if int(tau) != tau or tau < 1:
        raise ValueError("tau must be a positive integer")
    theta = np.pi / (tau + 1)
    a = Isometry((HorizonInversion(_check_mass(m)), PlaneReflection(plane_Q(0.0))), "a")
    b = Isometry((PlaneReflection(plane_P(theta, 0.0)), PlaneReflection(plane_Q(theta))), "b")
    c = Isometry((RotationZ(2.0 * theta),), "c")
    return {"a": a, "b": b, "c": c}


def generate_group(tau: int, m: float, *, tol: float = 1e-9, max_rounds: int = 64) -> IsometryGroup:
    """Close ``{a, b, c}`` under composition.

    Elements are identified when they agree on a fixed set of generic probe
    points to within ``tol * m``.  The closure has ``4 * (tau + 1)`` elements:
    the dihedral group of order ``2 * (tau + 1)`` generated by ``b`` and ``c``
    together with its product with ``a``.
    """
    m = _check_mass(m)
    gens = generators(tau, m)
    flips = {"a": True, "b": True, "c": False}
    group = IsometryGroup(int(tau), m, [IDENTITY], [False])
    frontier = [0]
    for _ in range(max_rounds):
        new = []
        for i in frontier:
            for name, g in gens.items():
                cand = group.elements[i].then(g)
                flip = group.surface_flip[i] ^ flips[name]
                j = group.index_of(cand, tol)
                if j < 0:
                    group.elements.append(Isometry(cand.primitives, f"{name}.{group.elements[i].label}"))
                    group.surface_flip.append(flip)
                    new.append(len(group.elements) - 1)
                elif group.surface_flip[j] != flip:
                    raise RuntimeError("surface orientation parity is not well defined")
        if not new:
            break
        frontier = new
    else:
        raise RuntimeError("group closure did not stabilise")
    expected = 4 * (tau + 1)
    if len(group) != expected:
        raise RuntimeError(f"closure has {len(group)} elements, expected {expected}")
    return group
