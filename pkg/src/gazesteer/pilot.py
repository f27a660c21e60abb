"""Scripted pilots that synthesize input frames in place of a human.

A pilot sees an :class:`Observation` each tick and answers with an
:class:`InputFrame`. Three behaviours are provided:

* ``Ideal`` aims hand and gaze at the next ring center whenever the locked
  direction drifts more than the re-aim threshold from it, holds the
  dominant trigger until the lock registers, then releases and cruises.
* ``Noisy`` is the same with Gaussian angular jitter on gaze and hand and
  a reaction delay before each action.
* ``Multitask`` wraps either one and, when a balloon falls inside the
  engage cone around the cruising gaze, glances at it with the dominant
  trigger released and fires the non-dominant trigger once.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator, NamedTuple, Optional, Sequence, Union

from .errors import NonMonotonicTrace
from .frames import InputFrame
from .geometry import (
    Ray,
    UnitVec3,
    Vec3,
    angle_between,
    perpendicular_basis,
    ray_sphere_intersect,
    vec,
    _new,
)
from .world import Balloon, Ring, TravelState


@dataclass(frozen=True)
class Ideal:
    reaim_threshold: float = math.radians(2.0)


@dataclass(frozen=True)
class Noisy:
    sigma_gaze: float = 0.0
    sigma_hand: float = 0.0
    reaction_delay: float = 0.0
    reaim_threshold: float = math.radians(2.0)

    def __post_init__(self) -> None:
        if self.sigma_gaze < 0 or self.sigma_hand < 0 or self.reaction_delay < 0:
            raise ValueError("noise sigmas and reaction delay must be >= 0")


@dataclass(frozen=True)
class Multitask:
    base: Union[Ideal, Noisy] = Ideal()
    engage_cone: float = math.radians(15.0)
    dwell: float = 1.0

    def __post_init__(self) -> None:
        if not self.dwell > 0:
            raise ValueError("dwell must be positive")
        if isinstance(self.base, Multitask):
            raise ValueError("Multitask cannot wrap another Multitask")


@dataclass(frozen=True)
class Replay:
    """Plays back a recorded frame sequence, ignoring observations."""

    frames: tuple


PilotPolicy = Union[Ideal, Noisy, Multitask, Replay]

# Tuned so that 20 seeded pilots on the default course (seed 42) pass about
# 97.5% of rings and pop about 96.3% of balloons in the Targets task.
CALIBRATED_NOISY = Noisy(sigma_gaze=math.radians(0.28), sigma_hand=math.radians(1.0), reaction_delay=0.25)


@dataclass(frozen=True)
class PilotRig:
    """Body geometry of the simulated user.

    The hand sits 0.2 m right of and 0.4 m below the eyes. ``body_neutral``
    and ``room_forward`` are in the room frame used by the speed circle, and
    the pilot leans ``lean`` meters forward to cruise.
    """

    hand_right: float = 0.2
    hand_down: float = 0.4
    body_neutral: Vec3 = vec(0.0, 1.0, 0.0)
    room_forward: UnitVec3 = UnitVec3(0.0, 0.0, 1.0)
    lean: float = 0.3
    joystick_axis: float = 1.0

    @property
    def leaning_pos(self) -> Vec3:
        return self.body_neutral + self.room_forward * self.lean


class Observation(NamedTuple):
    travel: TravelState
    current_direction: Optional[UnitVec3]
    next_ring: Optional[Ring]
    alive_balloons_in_view: Sequence[Balloon]
    t: float


@dataclass
class PilotState:
    """Mutable per-trial pilot memory."""

    rig: PilotRig = field(default_factory=PilotRig)
    aiming: bool = False
    pending_at: Optional[float] = None
    diverting: Optional[int] = None
    divert_start: float = 0.0
    shot_fired: bool = False
    attempted: set = field(default_factory=set)
    replay_index: int = 0


def _perturb(d: UnitVec3, sigma: float, rng: random.Random) -> UnitVec3:
    if sigma == 0.0:
        return d
    a1, a2 = rng.gauss(0.0, sigma), rng.gauss(0.0, sigma)
    e1, e2 = perpendicular_basis(d)
    t1, t2 = math.tan(a1), math.tan(a2)
    return vec(d[0] + e1[0] * t1 + e2[0] * t2, d[1] + e1[1] * t1 + e2[1] * t2, d[2] + e1[2] * t1 + e2[2] * t2).normalized()


def _hand_origin(head: Vec3, ahead: Vec3, rig: PilotRig) -> Vec3:
    rx, rz = -ahead[2], ahead[0]
    n = math.hypot(rx, rz)
    if n < 1e-9:
        rx, rz, n = -1.0, 0.0, 1.0
    k = rig.hand_right / n
    return vec(head[0] + rx * k, head[1] - rig.hand_down, head[2] + rz * k)


def _noise_params(base: Union[Ideal, Noisy]) -> tuple[float, float, float]:
    if isinstance(base, Noisy):
        return base.sigma_gaze, base.sigma_hand, base.reaction_delay
    return 0.0, 0.0, 0.0


def _frame(t, head, gaze_dir, hand_origin, hand_dir, dominant, nondominant, rig) -> InputFrame:
    return InputFrame(
        t, head, Ray(head, gaze_dir), hand_origin, hand_dir, dominant, nondominant,
        rig.joystick_axis, rig.leaning_pos,
    )


def pilot_step(
    policy: PilotPolicy, state: PilotState, obs: Observation, rng: random.Random
) -> tuple[InputFrame, PilotState]:
    if isinstance(policy, Replay):
        frame = policy.frames[state.replay_index]
        state.replay_index += 1
        return frame, state

    mt = policy if isinstance(policy, Multitask) else None
    base = policy.base if mt is not None else policy
    sg, sh, delay = _noise_params(base)
    rig, t = state.rig, obs.t
    head = obs.travel.position
    current = obs.current_direction
    ring = obs.next_ring

    if ring is not None:
        c = ring.disc.center
        to_ring = vec(c[0] - head[0], c[1] - head[1], c[2] - head[2])
        ahead = to_ring.normalized() if to_ring.norm() > 1e-6 else ring.disc.normal
    else:
        ahead = current if current is not None else UnitVec3(0.0, 0.0, 1.0)
    hand_origin = _hand_origin(head, ahead, rig)

    def cruise() -> InputFrame:
        return _frame(t, head, _perturb(ahead, sg, rng), hand_origin, _perturb(ahead, sh, rng), False, False, rig)

    if mt is not None:
        frame = _multitask_frame(mt, state, obs, ahead, hand_origin, sg, sh, delay, rng, cruise)
        if frame is not None:
            return frame, state

    if ring is None:
        state.aiming = False
        return cruise(), state

    err = angle_between(current, ahead) if current is not None else math.inf
    if state.aiming:
        if err <= base.reaim_threshold:
            state.aiming = False
            return cruise(), state
    elif err > base.reaim_threshold:
        if state.pending_at is None:
            state.pending_at = t + delay
        if t < state.pending_at - 1e-12:
            return cruise(), state
        state.pending_at = None
        state.aiming = True
    else:
        state.pending_at = None
        return cruise(), state

    # trigger held: hand and eyes both on the ring center
    c = ring.disc.center
    to_c = vec(c[0] - hand_origin[0], c[1] - hand_origin[1], c[2] - hand_origin[2])
    hand_dir = to_c.normalized() if to_c.norm() > 1e-6 else ahead
    frame = _frame(t, head, _perturb(ahead, sg, rng), hand_origin, _perturb(hand_dir, sh, rng), True, False, rig)
    return frame, state


def _multitask_frame(mt, state, obs, ahead, hand_origin, sg, sh, delay, rng, cruise) -> Optional[InputFrame]:
    rig, t, head = state.rig, obs.t, obs.travel.position
    if state.diverting is not None:
        target = next((b for b in obs.alive_balloons_in_view if b.id == state.diverting), None)
        elapsed = t - state.divert_start
        if target is None or state.shot_fired or elapsed >= mt.dwell:
            state.diverting = None
            return cruise()
    elif not state.aiming:
        best, best_angle = None, mt.engage_cone
        for b in obs.alive_balloons_in_view:
            if b.id in state.attempted:
                continue
            c = b.sphere.center
            to_b = vec(c[0] - head[0], c[1] - head[1], c[2] - head[2])
            a = angle_between(ahead, to_b)
            if a <= best_angle:
                best, best_angle = b, a
        if best is None:
            return None
        target = best
        state.diverting, state.divert_start, state.shot_fired = best.id, t, False
        state.attempted.add(best.id)
        elapsed = 0.0
    else:
        return None

    c = target.sphere.center
    intended = vec(c[0] - head[0], c[1] - head[1], c[2] - head[2]).normalized()
    fire = elapsed >= delay - 1e-12 and ray_sphere_intersect(Ray(head, intended), target.sphere) is not None
    if fire:
        state.shot_fired = True
    return _frame(t, head, _perturb(intended, sg, rng), hand_origin, _perturb(ahead, sh, rng), False, fire, rig)


def new_pilot_state(rig: Optional[PilotRig] = None) -> PilotState:
    return PilotState(rig=rig or PilotRig())


# ------------------------------------------------------------------ traces

TRACE_FIELDS = (
    "t",
    "head_x", "head_y", "head_z",
    "gaze_ox", "gaze_oy", "gaze_oz",
    "gaze_dx", "gaze_dy", "gaze_dz",
    "hand_ox", "hand_oy", "hand_oz",
    "hand_dx", "hand_dy", "hand_dz",
    "dominant_trigger", "nondominant_trigger",
    "joystick_axis",
    "body_x", "body_y", "body_z",
)
TRACE_HEADER = "# gazesteer-trace v1 " + ",".join(TRACE_FIELDS)


def fmt(x: float) -> str:
    """17 significant digits: lossless for IEEE doubles."""
    return format(x, ".17g")


def frame_to_line(f: InputFrame) -> str:
    parts = [fmt(f.t)]
    for v in (f.head_position, f.gaze.origin, f.gaze.dir, f.hand_origin, f.hand_dir):
        parts.extend(fmt(c) for c in v)
    parts.append("1" if f.dominant_trigger else "0")
    parts.append("1" if f.nondominant_trigger else "0")
    parts.append(fmt(f.joystick_axis))
    parts.extend(fmt(c) for c in f.tracked_body_pos)
    return ",".join(parts)


def frame_from_line(line: str) -> InputFrame:
    p = line.strip().split(",")
    if len(p) != len(TRACE_FIELDS):
        raise ValueError(f"expected {len(TRACE_FIELDS)} fields, got {len(p)}")
    x = [float(s) for s in p]
    axis = x[18]
    if not -1.0 <= axis <= 1.0:
        raise ValueError(f"joystick axis {axis} outside [-1, 1]")
    return InputFrame(
        x[0], Vec3(*x[1:4]), Ray(Vec3(*x[4:7]), UnitVec3(*x[7:10])), Vec3(*x[10:13]), UnitVec3(*x[13:16]),
        p[16] == "1", p[17] == "1", axis, Vec3(*x[19:22]),
    )


def write_trace(frames: Iterable[InputFrame], fp: IO[str]) -> None:
    fp.write(TRACE_HEADER + "\n")
    for f in frames:
        fp.write(frame_to_line(f) + "\n")


def read_trace(fp: IO[str]) -> list[InputFrame]:
    return [frame_from_line(line) for line in fp if line.strip() and not line.startswith("#")]


def replay_frames(trace: Sequence[InputFrame]) -> Iterator[InputFrame]:
    """Validate ``trace`` and yield its frames unchanged."""
    frames = list(trace)
    for a, b in zip(frames, frames[1:]):
        if not b.t > a.t:
            raise NonMonotonicTrace(f"timestamp {b.t!r} does not follow {a.t!r}")
    return iter(frames)
