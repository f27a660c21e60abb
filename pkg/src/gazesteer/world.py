"""Ring course world: rings, obstacles, balloons, travel integration, events."""
from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Optional, Sequence, Union

from .errors import InvalidSpec
from .geometry import (
    Aabb,
    Disc,
    Ray,
    Sphere,
    UnitVec3,
    Vec3,
    ray_sphere_intersect,
    segment_crosses_disc,
    sphere_aabb_overlap,
    sphere_sphere_overlap,
    unit,
    vec,
)

FORMAT_VERSION = 1


@dataclass(frozen=True)
class Ring:
    id: int
    disc: Disc
    order_index: int


@dataclass(frozen=True)
class Obstacle:
    id: int
    shape: Union[Aabb, Sphere]


@dataclass
class Balloon:
    """Balloon target. ``alive`` is the only mutable state in a course."""

    id: int
    sphere: Sphere
    alive: bool = True


@dataclass
class Course:
    rings: list[Ring]
    obstacles: list[Obstacle] = field(default_factory=list)
    balloons: list[Balloon] = field(default_factory=list)
    start_position: Vec3 = vec(0.0, 10.0, 0.0)
    start_heading: UnitVec3 = UnitVec3(0.0, 0.0, 1.0)
    nominal_length: float = 350.0

    def __post_init__(self) -> None:
        if not self.rings:
            raise InvalidSpec("a course needs at least one ring")
        if not self.nominal_length > 0:
            raise InvalidSpec("nominal_length must be positive")
        for label, items in (("ring", self.rings), ("obstacle", self.obstacles), ("balloon", self.balloons)):
            ids = [it.id for it in items]
            if len(set(ids)) != len(ids):
                raise InvalidSpec(f"duplicate {label} ids")
        if sorted(r.order_index for r in self.rings) != list(range(len(self.rings))):
            raise InvalidSpec("ring order_index values must be 0..n-1")
        self.rings = sorted(self.rings, key=lambda r: r.order_index)

    @property
    def final_ring(self) -> Ring:
        return self.rings[-1]

    def copy(self, *, with_balloons: bool = True) -> "Course":
        """Independent copy with fresh balloon objects (alive flags reset to their current values)."""
        balloons = [Balloon(b.id, b.sphere, b.alive) for b in self.balloons] if with_balloons else []
        return Course(
            list(self.rings), list(self.obstacles), balloons,
            self.start_position, self.start_heading, self.nominal_length,
        )


class TravelState(NamedTuple):
    position: Vec3
    speed: float = 0.0
    user_radius: float = 0.3


class RingCrossed(NamedTuple):
    ring_id: int
    t: float


class RingMissed(NamedTuple):
    ring_id: int
    t: float


class CollisionEnter(NamedTuple):
    obstacle_id: int
    t: float


class CollisionExit(NamedTuple):
    obstacle_id: int
    t: float


class BalloonPopped(NamedTuple):
    balloon_id: int
    t: float


WorldEvent = Union[RingCrossed, RingMissed, CollisionEnter, CollisionExit, BalloonPopped]


def step_travel(travel: TravelState, direction: Optional[UnitVec3], speed: float, dt: float) -> TravelState:
    """One explicit Euler step along the locked direction."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    if direction is None:
        return TravelState(travel.position, speed, travel.user_radius)
    p, k = travel.position, speed * dt
    return TravelState(vec(p[0] + direction[0] * k, p[1] + direction[1] * k, p[2] + direction[2] * k), speed, travel.user_radius)


def check_ring_crossings(
    prev: Vec3, curr: Vec3, course: Course, already_crossed: set, candidates: Optional[Iterable[Ring]] = None
) -> list[int]:
    """Ids of not-yet-crossed rings whose disc the segment prev-curr passes through.

    ``candidates`` restricts the search to a subset of the course rings.
    """
    if prev == curr:
        return []
    hits = []
    for ring in course.rings if candidates is None else candidates:
        if ring.id in already_crossed:
            continue
        if segment_crosses_disc(prev, curr, ring.disc) is not None:
            hits.append(ring.id)
    return hits


def passed_ring_plane(prev: Vec3, curr: Vec3, ring: Ring, capture_radius: float) -> bool:
    """True when the segment crosses the ring plane front-to-back near the ring.

    Used to notice a ring that was flown past without going through it.
    """
    c, n = ring.disc.center, ring.disc.normal
    s0 = (prev[0] - c[0]) * n[0] + (prev[1] - c[1]) * n[1] + (prev[2] - c[2]) * n[2]
    s1 = (curr[0] - c[0]) * n[0] + (curr[1] - c[1]) * n[1] + (curr[2] - c[2]) * n[2]
    if not (s0 < 0.0 <= s1):
        return False
    f = s0 / (s0 - s1)
    px = prev[0] + (curr[0] - prev[0]) * f - c[0]
    py = prev[1] + (curr[1] - prev[1]) * f - c[1]
    pz = prev[2] + (curr[2] - prev[2]) * f - c[2]
    return math.sqrt(px * px + py * py + pz * pz) <= capture_radius


def detect_collisions(user: Sphere, obstacles: Iterable[Obstacle]) -> set[int]:
    hit = set()
    for ob in obstacles:
        shape = ob.shape
        if isinstance(shape, Aabb):
            if sphere_aabb_overlap(user, shape):
                hit.add(ob.id)
        elif sphere_sphere_overlap(user, shape):
            hit.add(ob.id)
    return hit


def try_pop_balloon(gaze: Ray, nondominant_trigger_edge: bool, balloons: Sequence[Balloon]) -> Optional[int]:
    """Pop the nearest live balloon under the gaze when the trigger was just pulled."""
    if not nondominant_trigger_edge:
        return None
    best, best_t = None, math.inf
    for b in balloons:
        if not b.alive:
            continue
        t = ray_sphere_intersect(gaze, b.sphere)
        if t is not None and t < best_t:
            best, best_t = b, t
    if best is None:
        return None
    best.alive = False
    return best.id


# ---------------------------------------------------------------- generation


@dataclass(frozen=True)
class CourseGenSpec:
    """Parameters of the procedural stand-in course.

    ``obstacles`` defaults to one per gap between consecutive rings.
    """

    rings: int = 20
    balloons: int = 30
    obstacles: Optional[int] = None
    length: float = 350.0
    ring_radius: float = 2.0
    balloon_radius: float = 0.5
    max_turn_deg: float = 8.0
    max_pitch_deg: float = 4.0
    balloon_lateral: tuple[float, float] = (2.0, 6.0)
    obstacle_lateral: tuple[float, float] = (3.0, 4.0)
    obstacle_half_size: tuple[float, float, float] = (0.75, 1.5, 0.75)
    start_position: tuple[float, float, float] = (0.0, 10.0, 0.0)

    @property
    def obstacle_count(self) -> int:
        return self.rings - 1 if self.obstacles is None else self.obstacles


def _right_of(h: Vec3) -> UnitVec3:
    r = vec(-h[2], 0.0, h[0])
    if r.norm() < 1e-9:
        return UnitVec3(-1.0, 0.0, 0.0)
    return r.normalized()


def generate_default_course(spec: CourseGenSpec = CourseGenSpec(), seed: int = 42) -> Course:
    """Deterministic course: rings at the vertices of a gently turning polyline.

    The polyline runs from the start through every ring center, with equal
    segments summing to ``spec.length``. The first segment follows the start
    heading, so a single-ring course is one straight segment.
    """
    if spec.rings < 1:
        raise InvalidSpec("rings must be >= 1")
    if spec.balloons < 0 or spec.obstacle_count < 0:
        raise InvalidSpec("balloon and obstacle counts must be >= 0")
    if spec.obstacle_count > max(spec.rings - 1, 0):
        raise InvalidSpec("at most one obstacle per gap between rings")
    if not (spec.length > 0 and spec.ring_radius > 0 and spec.balloon_radius > 0):
        raise InvalidSpec("length and radii must be positive")

    rng = random.Random(seed)
    seg = spec.length / spec.rings
    yaw, pitch = 0.0, 0.0
    turn, max_pitch = math.radians(spec.max_turn_deg), math.radians(spec.max_pitch_deg)
    start = vec(*spec.start_position)
    points = [start]
    headings: list[UnitVec3] = []
    for i in range(spec.rings):
        if i > 0:
            yaw += rng.uniform(-turn, turn)
            pitch = max(-max_pitch, min(max_pitch, pitch + rng.uniform(-max_pitch, max_pitch)))
        h = unit(math.sin(yaw) * math.cos(pitch), math.sin(pitch), math.cos(yaw) * math.cos(pitch))
        headings.append(h)
        points.append(points[-1] + h * seg)

    rings = [Ring(i, Disc(points[i + 1], headings[i], spec.ring_radius), i) for i in range(spec.rings)]

    obstacles = []
    hx, hy, hz = spec.obstacle_half_size
    obstacle_side = {}
    for j in range(spec.obstacle_count):
        # gap between ring j and ring j+1 is polyline segment j+1
        a, b = points[j + 1], points[j + 2]
        mid = (a + b) * 0.5
        side = rng.choice((-1.0, 1.0))
        obstacle_side[j + 1] = side
        c = mid + _right_of(headings[j + 1]) * (side * rng.uniform(*spec.obstacle_lateral))
        obstacles.append(Obstacle(j, Aabb(vec(c[0] - hx, c[1] - hy, c[2] - hz), vec(c[0] + hx, c[1] + hy, c[2] + hz))))

    balloons = []
    lo_s, hi_s = 0.1 * spec.length, 0.97 * spec.length
    for k in range(spec.balloons):
        s = lo_s + (k + rng.random()) * (hi_s - lo_s) / spec.balloons
        idx = min(int(s // seg), spec.rings - 1)
        frac = (s - idx * seg) / seg
        base = points[idx] + headings[idx] * (frac * seg)
        side = rng.choice((-1.0, 1.0))
        if idx in obstacle_side and abs(frac - 0.5) < 0.25:
            side = -obstacle_side[idx]
        lateral = rng.uniform(*spec.balloon_lateral)
        lift = rng.uniform(-1.0, 1.5)
        c = base + _right_of(headings[idx]) * (side * lateral) + vec(0.0, lift, 0.0)
        balloons.append(Balloon(k, Sphere(c, spec.balloon_radius)))

    return Course(rings, obstacles, balloons, start, headings[0], spec.length)


def course_polyline(course: Course) -> list[Vec3]:
    return [course.start_position] + [r.disc.center for r in course.rings]


def polyline_length(points: Sequence[Vec3]) -> float:
    return sum((b - a).norm() for a, b in zip(points, points[1:]))


# ------------------------------------------------------------- serialization


def _shape_to_dict(shape: Union[Aabb, Sphere]) -> dict:
    if isinstance(shape, Aabb):
        return {"type": "aabb", "min": list(shape.min), "max": list(shape.max)}
    return {"type": "sphere", "center": list(shape.center), "radius": shape.radius}


def _shape_from_dict(d: dict) -> Union[Aabb, Sphere]:
    if d["type"] == "aabb":
        return Aabb(Vec3(*d["min"]), Vec3(*d["max"]))
    if d["type"] == "sphere":
        return Sphere(Vec3(*d["center"]), float(d["radius"]))
    raise InvalidSpec(f"unknown obstacle shape {d['type']!r}")


def course_to_dict(course: Course) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "nominal_length": course.nominal_length,
        "start_position": list(course.start_position),
        "start_heading": list(course.start_heading),
        "rings": [
            {"id": r.id, "order_index": r.order_index, "center": list(r.disc.center),
             "normal": list(r.disc.normal), "radius": r.disc.radius}
            for r in course.rings
        ],
        "obstacles": [{"id": o.id, "shape": _shape_to_dict(o.shape)} for o in course.obstacles],
        "balloons": [
            {"id": b.id, "center": list(b.sphere.center), "radius": b.sphere.radius, "alive": b.alive}
            for b in course.balloons
        ],
    }


def course_from_dict(d: dict) -> Course:
    version = d.get("format_version")
    if version != FORMAT_VERSION:
        raise InvalidSpec(f"unsupported course format_version {version!r}")
    try:
        rings = [
            Ring(int(r["id"]), Disc(Vec3(*r["center"]), UnitVec3(*r["normal"]), float(r["radius"])), int(r["order_index"]))
            for r in d["rings"]
        ]
        obstacles = [Obstacle(int(o["id"]), _shape_from_dict(o["shape"])) for o in d.get("obstacles", [])]
        balloons = [
            Balloon(int(b["id"]), Sphere(Vec3(*b["center"]), float(b["radius"])), bool(b.get("alive", True)))
            for b in d.get("balloons", [])
        ]
        return Course(
            rings, obstacles, balloons, Vec3(*d["start_position"]), UnitVec3(*d["start_heading"]),
            float(d["nominal_length"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, InvalidSpec):
            raise
        raise InvalidSpec(f"malformed course document: {exc}") from exc


def dumps_course(course: Course) -> str:
    return json.dumps(course_to_dict(course), indent=1, sort_keys=True)


def loads_course(text: str) -> Course:
    return course_from_dict(json.loads(text))
