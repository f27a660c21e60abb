"""3D vector, ray and primitive intersection helpers.

Right-handed coordinates, +Y up, meters. Vectors are tuple subclasses so
they hash, compare exactly and serialize trivially; the arithmetic helpers
bypass validation and only the public constructors check their inputs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

EPS = 1e-9

_new = tuple.__new__


class Vec3(tuple):
    """Immutable 3-vector of finite floats."""

    __slots__ = ()

    def __new__(cls, x: float, y: float, z: float) -> "Vec3":
        x, y, z = float(x), float(y), float(z)
        if not (math.isfinite(x) and math.isfinite(y) and math.isfinite(z)):
            raise ValueError(f"non-finite vector component in ({x}, {y}, {z})")
        return _new(cls, (x, y, z))

    def __getnewargs__(self) -> tuple:
        return tuple(self)

    @property
    def x(self) -> float:
        return self[0]

    @property
    def y(self) -> float:
        return self[1]

    @property
    def z(self) -> float:
        return self[2]

    def __add__(self, o: "Vec3") -> "Vec3":  # type: ignore[override]
        return _new(Vec3, (self[0] + o[0], self[1] + o[1], self[2] + o[2]))

    def __sub__(self, o: "Vec3") -> "Vec3":
        return _new(Vec3, (self[0] - o[0], self[1] - o[1], self[2] - o[2]))

    def __mul__(self, s: float) -> "Vec3":  # type: ignore[override]
        return _new(Vec3, (self[0] * s, self[1] * s, self[2] * s))

    __rmul__ = __mul__

    def __neg__(self) -> "Vec3":
        return _new(Vec3, (-self[0], -self[1], -self[2]))

    def dot(self, o: "Vec3") -> float:
        return self[0] * o[0] + self[1] * o[1] + self[2] * o[2]

    def cross(self, o: "Vec3") -> "Vec3":
        ax, ay, az = self
        bx, by, bz = o
        return _new(Vec3, (ay * bz - az * by, az * bx - ax * bz, ax * by - ay * bx))

    def norm(self) -> float:
        return math.sqrt(self[0] * self[0] + self[1] * self[1] + self[2] * self[2])

    def normalized(self) -> "UnitVec3":
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize a zero-length vector")
        return _new(UnitVec3, (self[0] / n, self[1] / n, self[2] / n))

    def horizontal(self) -> "Vec3":
        return _new(Vec3, (self[0], 0.0, self[2]))

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self[0]!r}, {self[1]!r}, {self[2]!r})"


class UnitVec3(Vec3):
    """Direction vector; the constructor rejects norms off 1 by more than 1e-9."""

    __slots__ = ()

    def __new__(cls, x: float, y: float, z: float) -> "UnitVec3":
        v = Vec3.__new__(cls, x, y, z)
        if abs(v.norm() - 1.0) > EPS:
            raise ValueError(f"not a unit vector: {tuple(v)} (norm {v.norm()!r})")
        return v


def vec(x: float, y: float, z: float) -> Vec3:
    """Unchecked Vec3 construction for hot loops."""
    return _new(Vec3, (x, y, z))


def unit(x: float, y: float, z: float) -> UnitVec3:
    """Normalize an arbitrary nonzero vector into a UnitVec3."""
    return Vec3(x, y, z).normalized()


ZERO = vec(0.0, 0.0, 0.0)
UP = _new(UnitVec3, (0.0, 1.0, 0.0))


class Ray(NamedTuple):
    origin: Vec3
    dir: UnitVec3

    def at(self, t: float) -> Vec3:
        o, d = self.origin, self.dir
        return _new(Vec3, (o[0] + d[0] * t, o[1] + d[1] * t, o[2] + d[2] * t))


@dataclass(frozen=True)
class Disc:
    center: Vec3
    normal: UnitVec3
    radius: float

    def __post_init__(self) -> None:
        if not self.radius > 0:
            raise ValueError(f"disc radius must be positive, got {self.radius}")


@dataclass(frozen=True)
class Sphere:
    center: Vec3
    radius: float

    def __post_init__(self) -> None:
        if not self.radius > 0:
            raise ValueError(f"sphere radius must be positive, got {self.radius}")


@dataclass(frozen=True)
class Aabb:
    min: Vec3
    max: Vec3

    def __post_init__(self) -> None:
        if any(lo > hi for lo, hi in zip(self.min, self.max)):
            raise ValueError(f"aabb min {self.min} exceeds max {self.max}")

    @property
    def center(self) -> Vec3:
        return (self.min + self.max) * 0.5


def ray_disc_intersect(ray: Ray, disc: Disc) -> Optional[Vec3]:
    """Point where ``ray`` pierces ``disc``, rim inclusive, or None."""
    o, d = ray
    c, n = disc.center, disc.normal
    denom = d[0] * n[0] + d[1] * n[1] + d[2] * n[2]
    if abs(denom) < 1e-15:
        return None
    t = ((c[0] - o[0]) * n[0] + (c[1] - o[1]) * n[1] + (c[2] - o[2]) * n[2]) / denom
    if t <= 0.0:
        return None
    px, py, pz = o[0] + d[0] * t, o[1] + d[1] * t, o[2] + d[2] * t
    dx, dy, dz = px - c[0], py - c[1], pz - c[2]
    if math.sqrt(dx * dx + dy * dy + dz * dz) > disc.radius + EPS:
        return None
    return _new(Vec3, (px, py, pz))


def ray_sphere_intersect(ray: Ray, s: Sphere) -> Optional[float]:
    """Smallest positive ray parameter hitting ``s``; tangent rays count."""
    o, d = ray
    c, r = s.center, s.radius
    ox, oy, oz = o[0] - c[0], o[1] - c[1], o[2] - c[2]
    b = ox * d[0] + oy * d[1] + oz * d[2]
    disc = b * b - (ox * ox + oy * oy + oz * oz - r * r)
    if disc < 0.0:
        # accept lines passing within r + EPS of the center
        if disc < -2.0 * r * EPS - EPS * EPS:
            return None
        disc = 0.0
    root = math.sqrt(disc)
    t = -b - root
    if t > 0.0:
        return t
    t = -b + root
    if t > 0.0:
        return t
    return None


def segment_crosses_disc(p0: Vec3, p1: Vec3, disc: Disc) -> Optional[Vec3]:
    """Point where segment p0-p1 passes through ``disc``, rim inclusive.

    Endpoints are put in canonical order first, so swapping them yields the
    bit-identical point.
    """
    if p1 < p0:
        p0, p1 = p1, p0
    c, n = disc.center, disc.normal
    dx, dy, dz = p1[0] - p0[0], p1[1] - p0[1], p1[2] - p0[2]
    denom = dx * n[0] + dy * n[1] + dz * n[2]
    if denom == 0.0:
        return None
    s = ((c[0] - p0[0]) * n[0] + (c[1] - p0[1]) * n[1] + (c[2] - p0[2]) * n[2]) / denom
    if s < 0.0 or s > 1.0:
        return None
    px, py, pz = p0[0] + dx * s, p0[1] + dy * s, p0[2] + dz * s
    ex, ey, ez = px - c[0], py - c[1], pz - c[2]
    if math.sqrt(ex * ex + ey * ey + ez * ez) > disc.radius + EPS:
        return None
    return _new(Vec3, (px, py, pz))


def sphere_aabb_overlap(s: Sphere, b: Aabb) -> bool:
    c, lo, hi = s.center, b.min, b.max
    d2 = 0.0
    for i in range(3):
        v = c[i]
        if v < lo[i]:
            d2 += (lo[i] - v) ** 2
        elif v > hi[i]:
            d2 += (v - hi[i]) ** 2
    return d2 <= (s.radius + EPS) ** 2


def sphere_sphere_overlap(a: Sphere, b: Sphere) -> bool:
    ca, cb = a.center, b.center
    dx, dy, dz = ca[0] - cb[0], ca[1] - cb[1], ca[2] - cb[2]
    return math.sqrt(dx * dx + dy * dy + dz * dz) <= a.radius + b.radius + EPS


def angle_between(u: Vec3, v: Vec3) -> float:
    """Angle in [0, pi]; atan2 form stays accurate near 0 and pi."""
    cx = u[1] * v[2] - u[2] * v[1]
    cy = u[2] * v[0] - u[0] * v[2]
    cz = u[0] * v[1] - u[1] * v[0]
    return math.atan2(math.sqrt(cx * cx + cy * cy + cz * cz), u[0] * v[0] + u[1] * v[1] + u[2] * v[2])


def perpendicular_basis(d: Vec3) -> tuple[UnitVec3, UnitVec3]:
    """Two unit vectors orthogonal to ``d`` and to each other."""
    helper = UP if abs(d[1]) < 0.9 else _new(Vec3, (1.0, 0.0, 0.0))
    e1 = d.cross(helper).normalized()
    e2 = e1.cross(d).normalized()
    return e1, e2


def rotate_about_y(v: Vec3, angle: float) -> Vec3:
    ca, sa = math.cos(angle), math.sin(angle)
    return _new(type(v), (v[0] * ca + v[2] * sa, v[1], -v[0] * sa + v[2] * ca))
