"""Kinematic bicycle plant with a slew-limited steering actuator.

The pose is referenced to the rear axle. Yaw and steering angles are in
degrees, counter-clockwise (left) positive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace


class ValidationError(ValueError):
    """Raised on non-finite or out-of-domain inputs."""


def wrap_deg(angle: float) -> float:
    """Wrap an angle in degrees to (-180, 180]."""
    a = math.fmod(angle, 360.0)
    if a <= -180.0:
        a += 360.0
    elif a > 180.0:
        a -= 360.0
    return a


def _check_finite(**values: float) -> None:
    for name, v in values.items():
        if not math.isfinite(v):
            raise ValidationError(f"{name} must be finite, got {v!r}")


@dataclass(frozen=True)
class VehicleState:
    x: float
    y: float
    yaw: float
    speed: float

    def __post_init__(self) -> None:
        _check_finite(x=self.x, y=self.y, yaw=self.yaw, speed=self.speed)
        if self.speed < 0:
            raise ValidationError(f"speed must be non-negative, got {self.speed}")
        object.__setattr__(self, "yaw", wrap_deg(self.yaw))


@dataclass(frozen=True)
class VehicleParams:
    wheelbase: float = 2.7
    max_steer: float = 30.0
    steer_slew: float = 1.0  # degrees per control step
    dt: float = 0.02

    def __post_init__(self) -> None:
        _check_finite(wheelbase=self.wheelbase, max_steer=self.max_steer,
                      steer_slew=self.steer_slew, dt=self.dt)
        for name in ("wheelbase", "max_steer", "steer_slew", "dt"):
            if getattr(self, name) <= 0:
                raise ValidationError(f"{name} must be positive")


@dataclass(frozen=True)
class SteeringCommand:
    angle: float


def step(state: VehicleState, cmd: SteeringCommand, params: VehicleParams) -> VehicleState:
    """Advance one timestep along the exact constant-curvature arc."""
    _check_finite(angle=cmd.angle)
    ds = state.speed * params.dt
    yaw = math.radians(state.yaw)
    dyaw = ds * math.tan(math.radians(cmd.angle)) / params.wheelbase
    if abs(dyaw) < 1e-12:
        # arc is indistinguishable from a chord; avoids overflow in 1/curvature
        return replace(state, x=state.x + ds * math.cos(yaw), y=state.y + ds * math.sin(yaw))
    x = state.x + ds * (math.sin(yaw + dyaw) - math.sin(yaw)) / dyaw
    y = state.y - ds * (math.cos(yaw + dyaw) - math.cos(yaw)) / dyaw
    return VehicleState(x, y, state.yaw + math.degrees(dyaw), state.speed)


def apply_actuator(desired: float, prev: float, params: VehicleParams) -> SteeringCommand:
    """Rate-limit the desired angle against the previous command, then clamp."""
    _check_finite(desired=desired, prev=prev)
    t = params.steer_slew
    if desired - prev > t:
        angle = prev + t
    elif prev - desired > t:
        angle = prev - t
    else:
        angle = desired
    return SteeringCommand(min(max(angle, -params.max_steer), params.max_steer))


class Actuator:
    """Stateful wrapper remembering the last issued command."""

    def __init__(self, params: VehicleParams, initial: float = 0.0):
        self.params = params
        self.prev = initial

    def __call__(self, desired: float) -> SteeringCommand:
        cmd = apply_actuator(desired, self.prev, self.params)
        self.prev = cmd.angle
        return cmd


def front_axle(state: VehicleState, params: VehicleParams) -> tuple[float, float]:
    yaw = math.radians(state.yaw)
    return (state.x + params.wheelbase * math.cos(yaw),
            state.y + params.wheelbase * math.sin(yaw))
