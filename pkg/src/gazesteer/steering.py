"""Gaze-hand direction locking.

Holding the dominant trigger shows a target disc a fixed distance along the
hand ray. While it is shown, a gaze ray that pierces the disc sets the travel
direction to the gaze direction itself. Nothing else touches the direction,
so the user can look anywhere (free look) without steering.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from .frames import InputFrame
from .geometry import Disc, UnitVec3, Vec3, ray_disc_intersect, vec, _new


@dataclass(frozen=True)
class SteeringConfig:
    target_distance: float = 5.0
    target_width: float = 1.0

    def __post_init__(self) -> None:
        if not (self.target_distance > 0 and self.target_width > 0):
            raise ValueError("target distance and width must be positive")


@dataclass(frozen=True)
class SteeringState:
    direction: Optional[UnitVec3] = None
    target_visible: bool = False
    target_disc: Optional[Disc] = None

    def __post_init__(self) -> None:
        if self.target_visible != (self.target_disc is not None):
            raise ValueError("target_visible must match presence of target_disc")


@dataclass(frozen=True)
class DirectionSet:
    direction: UnitVec3
    t: float


@dataclass(frozen=True)
class TargetShown:
    t: float


@dataclass(frozen=True)
class TargetHidden:
    t: float


SteeringEvent = Union[DirectionSet, TargetShown, TargetHidden]

INITIAL_STATE = SteeringState()
DEFAULT_CONFIG = SteeringConfig()


def target_disc_for_hand(hand_origin: Vec3, hand_dir: UnitVec3, cfg: SteeringConfig = DEFAULT_CONFIG) -> Disc:
    """Disc floating ``target_distance`` along the hand ray, facing the user."""
    k = cfg.target_distance
    center = vec(hand_origin[0] + hand_dir[0] * k, hand_origin[1] + hand_dir[1] * k, hand_origin[2] + hand_dir[2] * k)
    normal = _new(UnitVec3, (-hand_dir[0], -hand_dir[1], -hand_dir[2]))
    return Disc(center, normal, cfg.target_width / 2.0)


def update_steering(
    state: SteeringState, frame: InputFrame, cfg: SteeringConfig = DEFAULT_CONFIG
) -> tuple[SteeringState, list]:
    """Advance the locking state machine by one input frame.

    Returns the new state and the events emitted this frame. With the
    dominant trigger released the direction is returned untouched.
    """
    if not frame.dominant_trigger:
        if state.target_visible:
            return SteeringState(state.direction), [TargetHidden(frame.t)]
        return state, []

    events: list = []
    if not state.target_visible:
        events.append(TargetShown(frame.t))
    disc = target_disc_for_hand(frame.hand_origin, frame.hand_dir, cfg)
    direction = state.direction
    if ray_disc_intersect(frame.gaze, disc) is not None:
        direction = frame.gaze.dir
        events.append(DirectionSet(direction, frame.t))
    return SteeringState(direction, True, disc), events
