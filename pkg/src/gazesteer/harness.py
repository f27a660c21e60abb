"""Fixed-timestep trial runner, trial log, and objective metrics."""
from __future__ import annotations

import dataclasses
import enum
import hashlib
import json
import math
import random
from dataclasses import dataclass, field
from typing import IO, Any, Iterable, NamedTuple, Optional, Sequence

from scipy import stats as _sps

from .errors import EmptyLog, InsufficientData, InvalidSpec
from .geometry import Aabb, Sphere, UnitVec3, Vec3
from .pilot import (
    Ideal,
    Multitask,
    Noisy,
    Observation,
    PilotPolicy,
    PilotRig,
    Replay,
    fmt,
    new_pilot_state,
    pilot_step,
)
from .speed import JoystickConfig, calibrate_speed_circle, joystick_speed, speed_circle_speed
from .steering import INITIAL_STATE, DirectionSet, SteeringConfig, TargetHidden, TargetShown, update_steering
from .world import (
    BalloonPopped,
    CollisionEnter,
    CollisionExit,
    Course,
    RingCrossed,
    RingMissed,
    TravelState,
    check_ring_crossings,
    course_to_dict,
    detect_collisions,
    passed_ring_plane,
    step_travel,
    try_pop_balloon,
)

MOTION_EPS = 0.01  # m/s


class SpeedTechnique(str, enum.Enum):
    JOYSTICK = "joystick"
    SPEED_CIRCLE = "speed_circle"


class Task(str, enum.Enum):
    RINGS = "rings"
    TARGETS = "targets"


@dataclass(frozen=True)
class TrialSpec:
    course: Course
    policy: PilotPolicy
    speed_technique: SpeedTechnique = SpeedTechnique.JOYSTICK
    task: Task = Task.RINGS
    dt: float = 1.0 / 90.0
    seed: int = 0
    timeout: float = 600.0
    view_range: float = 40.0
    user_radius: float = 0.3
    miss_capture_radius: float = 10.0
    rig: PilotRig = field(default_factory=PilotRig)
    steering: SteeringConfig = field(default_factory=SteeringConfig)
    joystick: JoystickConfig = field(default_factory=JoystickConfig)

    def __post_init__(self) -> None:
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise InvalidSpec("dt must be positive")
        if not self.timeout > 0:
            raise InvalidSpec("timeout must be positive")
        if not self.user_radius > 0:
            raise InvalidSpec("user_radius must be positive")
        object.__setattr__(self, "speed_technique", SpeedTechnique(self.speed_technique))
        object.__setattr__(self, "task", Task(self.task))


class Sample(NamedTuple):
    t: float
    position: Vec3
    speed: float
    direction_set: bool
    in_collision: bool


class DiversionStart(NamedTuple):
    balloon_id: int
    t: float


class DiversionEnd(NamedTuple):
    balloon_id: int
    t: float


@dataclass
class TrialLog:
    samples: list[Sample]
    events: list
    spec_digest: str
    task: Task
    balloons_total: int
    end_time: float
    completed: bool
    timed_out: bool
    frames: Optional[list] = None
    directions: Optional[list] = None

    def diversion_intervals(self) -> list[tuple[int, float, float]]:
        """(balloon_id, start, end) with the end exclusive."""
        open_: dict[int, float] = {}
        out = []
        for e in self.events:
            if isinstance(e, DiversionStart):
                open_[e.balloon_id] = e.t
            elif isinstance(e, DiversionEnd):
                out.append((e.balloon_id, open_.pop(e.balloon_id), e.t))
        end = self.samples[-1].t if self.samples else 0.0
        out.extend((bid, t0, end) for bid, t0 in open_.items())
        return out


def _policy_to_dict(policy: PilotPolicy) -> dict:
    if isinstance(policy, Replay):
        return {"kind": "replay", "frames": len(policy.frames)}
    d = {"kind": type(policy).__name__.lower()}
    for f in dataclasses.fields(policy):
        v = getattr(policy, f.name)
        d[f.name] = _policy_to_dict(v) if f.name == "base" else v
    return d


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, tuple):
        return list(obj)
    if dataclasses.is_dataclass(obj):
        return {f.name: _jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    return obj


def spec_digest(spec: TrialSpec) -> str:
    doc = {
        "course": course_to_dict(spec.course),
        "policy": _policy_to_dict(spec.policy),
        "speed_technique": spec.speed_technique.value,
        "task": spec.task.value,
        "dt": spec.dt,
        "seed": spec.seed,
        "timeout": spec.timeout,
        "view_range": spec.view_range,
        "user_radius": spec.user_radius,
        "miss_capture_radius": spec.miss_capture_radius,
        "rig": _jsonable(spec.rig),
        "steering": _jsonable(spec.steering),
        "joystick": _jsonable(spec.joystick),
    }
    blob = json.dumps(doc, sort_keys=True, default=_jsonable).encode()
    return hashlib.sha256(blob).hexdigest()


def _bound_radius(shape) -> tuple[Vec3, float]:
    if isinstance(shape, Aabb):
        return shape.center, (shape.max - shape.min).norm() / 2.0
    return shape.center, shape.radius


def run_trial(spec: TrialSpec, *, record_frames: bool = False) -> TrialLog:
    """Simulate one trial at fixed dt until the final ring is resolved or timeout.

    Each tick: pilot -> steering -> speed controller -> travel step ->
    ring/collision/balloon detection -> log. Sample k is stamped k*dt and
    records the state after k steps; events raised by the input frame of a
    tick carry the frame time, world events carry the post-step time.
    """
    targets = spec.task is Task.TARGETS
    course = spec.course.copy(with_balloons=targets)
    rings = course.rings
    final_id = course.final_ring.id
    balloons = course.balloons
    dt = spec.dt
    rng = random.Random(spec.seed)
    pstate = new_pilot_state(spec.rig)
    steering = INITIAL_STATE
    scfg = spec.steering
    use_circle = spec.speed_technique is SpeedTechnique.SPEED_CIRCLE
    jcfg = spec.joystick
    circle = calibrate_speed_circle(spec.rig.body_neutral, spec.rig.room_forward) if use_circle else None
    v_max = circle.v_max if use_circle else jcfg.v_max
    step_max = v_max * dt

    radius = spec.user_radius
    travel = TravelState(course.start_position, 0.0, radius)
    pos = travel.position

    # broad phase: an item cannot be reached before next_k[i]
    ring_items = [(r, r.disc.center, r.disc.radius + 1e-6) for r in rings]
    ob_items = []
    for ob in course.obstacles:
        c, b = _bound_radius(ob.shape)
        ob_items.append((ob, c, b + radius + 1e-6))
    ring_next = [0] * len(ring_items)
    ob_next = [0] * len(ob_items)

    crossed: set = set()
    resolved: set = set()
    next_idx = 0
    colliding = detect_collisions(Sphere(pos, radius), course.obstacles)
    events: list = [CollisionEnter(i, 0.0) for i in sorted(colliding)]
    samples = [Sample(0.0, pos, 0.0, False, bool(colliding))]
    frames = [] if record_frames else None
    directions = [] if record_frames else None
    view2 = spec.view_range ** 2
    prev_nd = False
    k = 0
    completed = False
    end_time = None

    while k * dt < spec.timeout:
        t = k * dt
        if targets:
            in_view = []
            for b in balloons:
                if b.alive:
                    c = b.sphere.center
                    dx, dy, dz = c[0] - pos[0], c[1] - pos[1], c[2] - pos[2]
                    if dx * dx + dy * dy + dz * dz <= view2:
                        in_view.append(b)
        else:
            in_view = []
        obs = Observation(travel, steering.direction, rings[next_idx] if next_idx < len(rings) else None, in_view, t)
        before = pstate.diverting
        frame, pstate = pilot_step(spec.policy, pstate, obs, rng)
        after = pstate.diverting
        if after != before:
            if before is not None:
                events.append(DiversionEnd(before, t))
            if after is not None:
                events.append(DiversionStart(after, t))

        steering, sev = update_steering(steering, frame, scfg)
        if sev:
            events.extend(sev)
        if record_frames:
            frames.append(frame)
            directions.append(steering.direction)

        speed = speed_circle_speed(frame.tracked_body_pos, circle) if use_circle else joystick_speed(frame.joystick_axis, jcfg)

        nd = frame.nondominant_trigger
        if nd and not prev_nd and balloons:
            bid = try_pop_balloon(frame.gaze, True, balloons)
            if bid is not None:
                events.append(BalloonPopped(bid, t))
        prev_nd = nd

        travel = step_travel(travel, steering.direction, speed, dt)
        prev, pos = pos, travel.position
        k += 1
        t1 = k * dt

        if prev != pos:
            near = []
            for i, (ring, c, bound) in enumerate(ring_items):
                if ring_next[i] > k or ring.id in crossed:
                    continue
                d = math.sqrt((c[0] - pos[0]) ** 2 + (c[1] - pos[1]) ** 2 + (c[2] - pos[2]) ** 2)
                gap = d - bound - step_max
                if gap > step_max:
                    ring_next[i] = k + int(gap / step_max)
                else:
                    near.append(ring)
            if near:
                for rid in check_ring_crossings(prev, pos, course, crossed, candidates=near):
                    crossed.add(rid)
                    resolved.add(rid)
                    events.append(RingCrossed(rid, t1))
            while next_idx < len(rings) and rings[next_idx].id in resolved:
                next_idx += 1
            if next_idx < len(rings):
                nr = rings[next_idx]
                if passed_ring_plane(prev, pos, nr, spec.miss_capture_radius):
                    resolved.add(nr.id)
                    events.append(RingMissed(nr.id, t1))
                    next_idx += 1
                    while next_idx < len(rings) and rings[next_idx].id in resolved:
                        next_idx += 1

            near_obs = []
            for i, (ob, c, bound) in enumerate(ob_items):
                if ob_next[i] > k:
                    continue
                d = math.sqrt((c[0] - pos[0]) ** 2 + (c[1] - pos[1]) ** 2 + (c[2] - pos[2]) ** 2)
                gap = d - bound
                if gap > step_max:
                    ob_next[i] = k + int(gap / step_max)
                else:
                    near_obs.append(ob)
            now = detect_collisions(Sphere(pos, radius), near_obs) if near_obs else set()
            if now != colliding:
                for oid in sorted(colliding - now):
                    events.append(CollisionExit(oid, t1))
                for oid in sorted(now - colliding):
                    events.append(CollisionEnter(oid, t1))
                colliding = now

        samples.append(Sample(t1, pos, speed, steering.direction is not None, bool(colliding)))
        if final_id in resolved:
            completed = True
            end_time = t1
            break

    timed_out = not completed
    if timed_out:
        end_time = samples[-1].t
    return TrialLog(
        samples, events, spec_digest(spec), spec.task, len(balloons), end_time, completed, timed_out,
        frames, directions,
    )


# ------------------------------------------------------------------ metrics


@dataclass(frozen=True)
class TrialMetrics:
    completion_time: float
    path_length: float
    flying_pct: float
    collision_time: float
    collision_events: int
    rings_crossed: int
    rings_total: int
    rings_in_order: int
    balloons_popped: int
    balloons_total: int
    mean_speed: float
    completed: bool = True
    timed_out: bool = False

    @property
    def idle_pct(self) -> float:
        return 100.0 - self.flying_pct


NUMERIC_METRICS = (
    "completion_time", "path_length", "flying_pct", "collision_time", "collision_events",
    "rings_crossed", "rings_total", "rings_in_order", "balloons_popped", "balloons_total", "mean_speed",
)


def compute_metrics(log: TrialLog, course: Course) -> TrialMetrics:
    samples = log.samples
    if not samples:
        raise EmptyLog("trial log has no samples")
    path = 0.0
    flying = 0
    prev = samples[0].position
    for s in samples:
        p = s.position
        path += math.sqrt((p[0] - prev[0]) ** 2 + (p[1] - prev[1]) ** 2 + (p[2] - prev[2]) ** 2)
        prev = p
        if s.direction_set and abs(s.speed) > MOTION_EPS:
            flying += 1
    flying_pct = 100.0 * flying / len(samples)

    t_end = samples[-1].t
    open_: dict[int, float] = {}
    coll_time = 0.0
    coll_events = 0
    crossed = 0
    in_order = 0
    highest = -1
    popped = 0
    order = {r.id: r.order_index for r in course.rings}
    for e in log.events:
        if isinstance(e, CollisionEnter):
            open_[e.obstacle_id] = e.t
            coll_events += 1
        elif isinstance(e, CollisionExit):
            coll_time += e.t - open_.pop(e.obstacle_id)
        elif isinstance(e, RingCrossed):
            crossed += 1
            idx = order[e.ring_id]
            if idx > highest:
                in_order += 1
                highest = idx
        elif isinstance(e, BalloonPopped):
            popped += 1
    for t0 in open_.values():
        coll_time += t_end - t0

    return TrialMetrics(
        completion_time=log.end_time,
        path_length=path,
        flying_pct=flying_pct,
        collision_time=coll_time,
        collision_events=coll_events,
        rings_crossed=crossed,
        rings_total=len(course.rings),
        rings_in_order=in_order,
        balloons_popped=popped,
        balloons_total=log.balloons_total,
        mean_speed=path / t_end if t_end > 0 else 0.0,
        completed=log.completed,
        timed_out=log.timed_out,
    )


@dataclass(frozen=True)
class SummaryStat:
    n: int
    mean: float
    sd: float
    ci_low: float
    ci_high: float


def summarize(values: Sequence[float], confidence: float = 0.95) -> SummaryStat:
    """Mean, sample sd and Student-t confidence interval."""
    n = len(values)
    if n < 2:
        raise InsufficientData(f"need at least 2 values, got {n}")
    mean = math.fsum(values) / n
    sd = math.sqrt(math.fsum((v - mean) ** 2 for v in values) / (n - 1))
    half = float(_sps.t.ppf(0.5 + confidence / 2.0, n - 1)) * sd / math.sqrt(n)
    return SummaryStat(n, mean, sd, mean - half, mean + half)


def aggregate(metrics: Sequence[TrialMetrics], fields: Iterable[str] = NUMERIC_METRICS) -> dict[str, SummaryStat]:
    if len(metrics) < 2:
        raise InsufficientData(f"need at least 2 trials, got {len(metrics)}")
    return {f: summarize([float(getattr(m, f)) for m in metrics]) for f in fields}


# ------------------------------------------------------------------ export

LOG_HEADER = "# gazesteer-log v1"


def _event_line(e) -> str:
    kind = type(e).__name__
    if isinstance(e, DirectionSet):
        return ",".join(["E", fmt(e.t), kind] + [fmt(c) for c in e.direction])
    if isinstance(e, (TargetShown, TargetHidden)):
        return f"E,{fmt(e.t)},{kind}"
    return f"E,{fmt(e.t)},{kind},{e[0]}"


def write_log(log: TrialLog, fp: IO[str]) -> None:
    """Line records: ``S,t,x,y,z,speed,direction_set,in_collision`` then ``E,t,kind,...``."""
    fp.write(f"{LOG_HEADER} spec_digest={log.spec_digest} completed={int(log.completed)} "
             f"timed_out={int(log.timed_out)} end_time={fmt(log.end_time)}\n")
    for s in log.samples:
        p = s.position
        fp.write(f"S,{fmt(s.t)},{fmt(p[0])},{fmt(p[1])},{fmt(p[2])},{fmt(s.speed)},"
                 f"{int(s.direction_set)},{int(s.in_collision)}\n")
    for e in log.events:
        fp.write(_event_line(e) + "\n")
