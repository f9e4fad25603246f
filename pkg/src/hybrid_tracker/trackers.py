"""Geometric steering laws: pure pursuit (vision / GPS) and Stanley (GPS)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from hybrid_tracker.lane_pipeline import GuidanceLine
from hybrid_tracker.path_processing import (
    GPS_METERS_PER_PIXEL,
    VISION_METERS_PER_PIXEL,
    DensePath,
    LocalPixelPath,
    lookahead_target,
    nearest_point_and_errors,
    pixel_alpha,
)
from hybrid_tracker.plant import VehicleParams, VehicleState, front_axle

MS_TO_KMH = 3.6


class NoCommand(RuntimeError):
    """The tracker has no usable path this step."""


@dataclass(frozen=True)
class PidGains:
    kp: float
    ki: float
    kd: float


@dataclass(frozen=True)
class PurePursuitParams:
    ld_base: float = 190.0       # pixels
    ld_amplitude: float = 100.0  # pixels
    ld_center: float = 20.0      # km/h
    ld_width: float = 15.0       # km/h
    pid: PidGains = field(default_factory=lambda: PidGains(5.25, 0.5, 0.03))
    integral_limit: float = 5.0  # degrees
    lookahead_formula: str = "logistic"

    def __post_init__(self) -> None:
        if self.ld_base <= 0 or self.ld_width <= 0 or self.integral_limit <= 0:
            raise ValueError("ld_base, ld_width and integral_limit must be positive")
        if self.lookahead_formula not in ("logistic", "literal"):
            raise ValueError(f"unknown lookahead_formula {self.lookahead_formula!r}")


VISION_PID = PidGains(5.25, 0.5, 0.03)
GPS_PID = PidGains(2.7, 0.13, 0.03)


@dataclass(frozen=True)
class StanleyParams:
    k: float = 1.0
    ks: float = 1.0
    k1: float = 1.0
    k2: float = 1.0

    def __post_init__(self) -> None:
        if self.k <= 0 or self.ks <= 0:
            raise ValueError("k and ks must be positive")


def lookahead_distance(v_kmh: float, p: PurePursuitParams = PurePursuitParams()) -> float:
    """Speed-dependent look-ahead distance in pixels."""
    z = (v_kmh - p.ld_center) / p.ld_width
    if p.lookahead_formula == "literal":
        # 1 / exp(-z) as printed; unbounded above
        return p.ld_base + p.ld_amplitude * (math.exp(min(z, 700.0)) - 0.5)
    if z >= 0:
        sig = 1.0 / (1.0 + math.exp(-z))
    else:
        ez = math.exp(z)
        sig = ez / (1.0 + ez)
    return p.ld_base + p.ld_amplitude * (sig - 0.5)


def pure_pursuit_angle(alpha_deg: float, ld_m: float, wheelbase: float) -> float:
    """Steering angle (deg) for bearing ``alpha_deg`` to a target ``ld_m`` away."""
    return math.degrees(math.atan(2.0 * wheelbase * math.sin(math.radians(alpha_deg)) / ld_m))


def pure_pursuit_steer(state: VehicleState, path, p: PurePursuitParams,
                       params: VehicleParams, meters_per_pixel: float | None = None) -> float:
    """Raw pure pursuit angle toward the look-ahead point of a pixel-frame path.

    ``path`` is a :class:`GuidanceLine` (vision frame) or a
    :class:`LocalPixelPath` (GPS frame).
    """
    if isinstance(path, GuidanceLine):
        if not path:
            raise NoCommand("no guidance line")
        pts = np.asarray(path.points, dtype=float)
        mpp = VISION_METERS_PER_PIXEL if meters_per_pixel is None else meters_per_pixel
    elif isinstance(path, LocalPixelPath):
        if len(path) == 0:
            raise NoCommand("empty local path")
        pts = path.points
        mpp = path.meters_per_pixel
    else:
        pts = np.asarray(path, dtype=float).reshape(-1, 2)
        if len(pts) == 0:
            raise NoCommand("empty path")
        mpp = GPS_METERS_PER_PIXEL if meters_per_pixel is None else meters_per_pixel
    ld = lookahead_distance(state.speed * MS_TO_KMH, p)
    target = lookahead_target(pts, ld)
    alpha = pixel_alpha(target)
    return pure_pursuit_angle(alpha, ld * mpp, params.wheelbase)


@dataclass
class PidFilter:
    """Steering smoother: the output integrates a PID on (raw - output).

    ``out += dt * (kp*e + ki*I + kd*de/dt)`` with ``e = raw - out``. The
    integral term ``ki*I`` is clamped to +/- ``integral_limit`` degrees.
    """

    gains: PidGains
    integral_limit: float
    output: float = 0.0
    integral: float = 0.0
    prev_error: float | None = None
    last_terms: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __call__(self, raw: float, dt: float) -> float:
        if dt <= 0:
            raise ValueError("dt must be positive")
        g = self.gains
        err = raw - self.output
        self.integral += err * dt
        if g.ki > 0:
            bound = self.integral_limit / g.ki
            self.integral = min(max(self.integral, -bound), bound)
        deriv = 0.0 if self.prev_error is None else (err - self.prev_error) / dt
        self.prev_error = err
        p_term, i_term, d_term = g.kp * err, g.ki * self.integral, g.kd * deriv
        self.last_terms = (p_term, i_term, d_term)
        self.output += dt * (p_term + i_term + d_term)
        return self.output

    def reset(self, value: float = 0.0) -> None:
        self.output = value
        self.integral = 0.0
        self.prev_error = None


def pid_filter(raw: float, dt: float, pid_state: PidFilter) -> float:
    return pid_state(raw, dt)


def stanley_angle(errors, speed: float, sp: StanleyParams) -> float:
    theta_d = math.degrees(math.atan(sp.k * errors.cross_track_e / (sp.ks + speed)))
    return sp.k1 * errors.heading_phi + sp.k2 * theta_d


def stanley_steer(state: VehicleState, dense: DensePath, sp: StanleyParams,
                  params: VehicleParams) -> float:
    """Stanley law evaluated at the front axle, clamped to the steering range."""
    if dense is None or len(dense) == 0:
        raise NoCommand("empty dense path")
    errors = nearest_point_and_errors(dense, front_axle(state, params), state.yaw)
    delta = stanley_angle(errors, state.speed, sp)
    return min(max(delta, -params.max_steer), params.max_steer)
