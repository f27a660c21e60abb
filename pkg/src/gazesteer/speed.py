"""Speed controllers: analog joystick and the waist-level speed circle."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, fields, replace
from typing import Any, Mapping, Optional

from .errors import DegenerateHeading
from .geometry import UnitVec3, Vec3, vec

V_MAX = 5.0


@dataclass(frozen=True)
class JoystickConfig:
    v_max: float = V_MAX
    deadzone: float = 0.1

    def __post_init__(self) -> None:
        if not self.v_max > 0:
            raise ValueError("v_max must be positive")
        if not 0.0 <= self.deadzone < 1.0:
            raise ValueError("deadzone must lie in [0, 1)")


class TrackedPoint(str, enum.Enum):
    HEAD = "head"
    TORSO = "torso"


@dataclass(frozen=True)
class SpeedCircleConfig:
    """Calibrated speed circle.

    ``center`` and ``forward`` are horizontal (room frame). The circle is
    0.6 m across, so the rim sits ``half_extent`` = 0.3 m from the center.
    """

    center: Vec3 = vec(0.0, 0.0, 0.0)
    forward: UnitVec3 = UnitVec3(0.0, 0.0, 1.0)
    half_extent: float = 0.3
    dead_radius: float = 0.05
    v_max: float = V_MAX
    tracked_point: TrackedPoint = TrackedPoint.HEAD

    def __post_init__(self) -> None:
        if not 0.0 <= self.dead_radius < self.half_extent:
            raise ValueError("need 0 <= dead_radius < half_extent")
        if abs(self.forward[1]) > 1e-12:
            raise ValueError("forward must be horizontal")
        if not self.v_max > 0:
            raise ValueError("v_max must be positive")


def joystick_speed(axis: float, cfg: JoystickConfig = JoystickConfig()) -> float:
    """Signed speed from a thumbstick axis, rescaled past the dead zone."""
    a = min(1.0, max(-1.0, axis))
    mag = abs(a)
    if mag <= cfg.deadzone:
        return 0.0
    s = cfg.v_max * (mag - cfg.deadzone) / (1.0 - cfg.deadzone)
    s = min(s, cfg.v_max)
    return s if a > 0 else -s


def speed_circle_speed(tracked_pos: Vec3, cfg: SpeedCircleConfig) -> float:
    """Signed speed from the body's forward/backward displacement.

    Lateral displacement is ignored; beyond the rim the speed saturates.
    """
    c, f = cfg.center, cfg.forward
    d = (tracked_pos[0] - c[0]) * f[0] + (tracked_pos[2] - c[2]) * f[2]
    mag = abs(d)
    if mag <= cfg.dead_radius:
        return 0.0
    frac = (mag - cfg.dead_radius) / (cfg.half_extent - cfg.dead_radius)
    s = cfg.v_max if frac >= 1.0 else cfg.v_max * frac
    return s if d > 0 else -s


def calibrate_speed_circle(
    initial_pos: Vec3, heading: Vec3, overrides: Optional[Mapping[str, Any]] = None
) -> SpeedCircleConfig:
    """Anchor the circle under the user's starting position, facing ``heading``."""
    hx, hz = heading[0], heading[2]
    if math.hypot(hx, hz) < 1e-12:
        raise DegenerateHeading(f"heading {tuple(heading)} has no horizontal component")
    overrides = dict(overrides or {})
    allowed = {f.name for f in fields(SpeedCircleConfig)} - {"center", "forward"}
    unknown = set(overrides) - allowed
    if unknown:
        raise ValueError(f"unknown speed circle overrides: {sorted(unknown)}")
    forward = vec(hx, 0.0, hz).normalized()
    center = vec(initial_pos[0], 0.0, initial_pos[2])
    return replace(SpeedCircleConfig(center=center, forward=forward), **overrides)
