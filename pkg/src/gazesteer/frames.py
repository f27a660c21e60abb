"""Per-tick input sample shared by pilots, steering and the harness."""
from __future__ import annotations

from typing import NamedTuple

from .geometry import Ray, UnitVec3, Vec3


class InputFrame(NamedTuple):
    """All user inputs at one simulation tick.

    ``tracked_body_pos`` lives in the physical room frame used by the speed
    circle; every other position is in world coordinates.
    """

    t: float
    head_position: Vec3
    gaze: Ray
    hand_origin: Vec3
    hand_dir: UnitVec3
    dominant_trigger: bool
    nondominant_trigger: bool
    joystick_axis: float
    tracked_body_pos: Vec3
