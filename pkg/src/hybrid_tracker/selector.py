"""Reliability observer and tracker arbitration."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum, IntEnum

import numpy as np

from hybrid_tracker.lane_pipeline import FRAME, GuidanceLine
from hybrid_tracker.path_processing import (
    GPS_METERS_PER_PIXEL,
    DensePath,
    GlobalPath,
    PathError,
    global_to_local,
    spline_interpolate,
)
from hybrid_tracker.plant import Actuator, SteeringCommand, VehicleParams, VehicleState
from hybrid_tracker.trackers import (
    GPS_PID,
    VISION_PID,
    NoCommand,
    PidFilter,
    PurePursuitParams,
    StanleyParams,
    pure_pursuit_steer,
    stanley_steer,
)

log = logging.getLogger(__name__)

HDOP_LIMIT = 3.0


class RtkState(IntEnum):
    NO_FIXED = 0
    FLOAT = 1
    FIXED = 2


class TrackerId(str, Enum):
    PURE_PURSUIT_VISION = "pp-vision"
    PURE_PURSUIT_GPS = "pp-gps"
    STANLEY_GPS = "stanley-gps"


FALLBACK_ORDER = (TrackerId.PURE_PURSUIT_VISION, TrackerId.PURE_PURSUIT_GPS, TrackerId.STANLEY_GPS)


@dataclass(frozen=True)
class SensorSnapshot:
    rtk_state: RtkState
    hdop: float
    guidance: GuidanceLine
    hd_map_flag: int
    global_path: GlobalPath | None = None
    timestamp: float = 0.0

    def __post_init__(self) -> None:
        if not self.hdop >= 0:
            raise ValueError("hdop must be non-negative")
        if self.hd_map_flag not in (0, 1):
            raise ValueError("hd_map_flag must be 0 or 1")


@dataclass(frozen=True)
class ReliabilityFlags:
    gps_rel: int
    lane_rel: int
    hd_map: int


def gps_reliability(rtk_state, hdop: float) -> int:
    return int(RtkState(rtk_state) == RtkState.FIXED and hdop < HDOP_LIMIT)


def lane_reliability(line: GuidanceLine, road_width_px: float = 100.0) -> int:
    """1 iff every guidance x lies within a fifth of the road width of the centre column."""
    if road_width_px <= 0:
        raise ValueError("road width must be positive")
    if not line:
        return 0
    return int(np.all(np.abs(FRAME / 2 - line.xs) < road_width_px / 5))


def select_tracker(flags: ReliabilityFlags) -> TrackerId:
    if not flags.gps_rel:
        return TrackerId.PURE_PURSUIT_VISION
    if flags.hd_map:
        return TrackerId.STANLEY_GPS
    if flags.lane_rel:
        return TrackerId.PURE_PURSUIT_VISION
    return TrackerId.PURE_PURSUIT_GPS


class PurePursuitVision:
    ident = TrackerId.PURE_PURSUIT_VISION

    def __init__(self, params: VehicleParams, pp: PurePursuitParams | None = None):
        self.params = params
        self.pp = pp or PurePursuitParams(pid=VISION_PID)
        self.pid = PidFilter(self.pp.pid, self.pp.integral_limit)

    def __call__(self, snapshot: SensorSnapshot, vehicle: VehicleState) -> float:
        raw = pure_pursuit_steer(vehicle, snapshot.guidance, self.pp, self.params)
        return self.pid(raw, self.params.dt)


class PurePursuitGps:
    ident = TrackerId.PURE_PURSUIT_GPS

    def __init__(self, params: VehicleParams, pp: PurePursuitParams | None = None,
                 meters_per_pixel: float = GPS_METERS_PER_PIXEL):
        self.params = params
        self.pp = pp or PurePursuitParams(pid=GPS_PID)
        self.pid = PidFilter(self.pp.pid, self.pp.integral_limit)
        self.meters_per_pixel = meters_per_pixel

    def __call__(self, snapshot: SensorSnapshot, vehicle: VehicleState) -> float:
        if snapshot.global_path is None:
            raise NoCommand("no global path")
        local = global_to_local(snapshot.global_path, vehicle, self.meters_per_pixel)
        raw = pure_pursuit_steer(vehicle, local, self.pp, self.params)
        return self.pid(raw, self.params.dt)


class StanleyGps:
    ident = TrackerId.STANLEY_GPS

    def __init__(self, params: VehicleParams, sp: StanleyParams | None = None):
        self.params = params
        self.sp = sp or StanleyParams()
        self._cache: tuple[np.ndarray, DensePath] | None = None

    def _dense(self, gp: GlobalPath) -> DensePath:
        # the GPS window only moves every metre; reuse the spline in between
        if self._cache is not None and np.array_equal(self._cache[0], gp.points):
            return self._cache[1]
        dense = spline_interpolate(gp)
        self._cache = (gp.points, dense)
        return dense

    def __call__(self, snapshot: SensorSnapshot, vehicle: VehicleState) -> float:
        if snapshot.global_path is None:
            raise NoCommand("no global path")
        try:
            dense = self._dense(snapshot.global_path)
        except PathError as exc:
            raise NoCommand(str(exc)) from exc
        return stanley_steer(vehicle, dense, self.sp, self.params)


def make_tracker(ident: TrackerId, params: VehicleParams, pp_vision=None, pp_gps=None,
                 stanley=None, gps_meters_per_pixel: float = GPS_METERS_PER_PIXEL):
    if ident is TrackerId.PURE_PURSUIT_VISION:
        return PurePursuitVision(params, pp_vision)
    if ident is TrackerId.PURE_PURSUIT_GPS:
        return PurePursuitGps(params, pp_gps, gps_meters_per_pixel)
    return StanleyGps(params, stanley)


@dataclass(frozen=True)
class HybridDecision:
    command: SteeringCommand
    tracker: TrackerId
    flags: ReliabilityFlags
    outputs: dict = field(default_factory=dict)
    degraded: bool = False


class HybridTracker:
    """Evaluates all trackers each step and hands control to the selected one."""

    def __init__(self, params: VehicleParams, road_width_px: float = 100.0,
                 min_dwell: float = 0.0, trackers=None):
        self.params = params
        self.road_width_px = road_width_px
        self.min_dwell = min_dwell
        self.trackers = trackers or {t: make_tracker(t, params) for t in TrackerId}
        self.actuator = Actuator(params)
        self.active: TrackerId | None = None
        self._since_switch = 0.0

    def flags(self, snapshot: SensorSnapshot) -> ReliabilityFlags:
        return ReliabilityFlags(gps_reliability(snapshot.rtk_state, snapshot.hdop),
                                lane_reliability(snapshot.guidance, self.road_width_px),
                                snapshot.hd_map_flag)

    def evaluate(self, snapshot: SensorSnapshot, vehicle: VehicleState) -> dict:
        outputs = {}
        for ident, tracker in self.trackers.items():
            try:
                outputs[ident] = tracker(snapshot, vehicle)
            except NoCommand:
                outputs[ident] = None
        return outputs

    def step(self, snapshot: SensorSnapshot, vehicle: VehicleState) -> HybridDecision:
        flags = self.flags(snapshot)
        outputs = self.evaluate(snapshot, vehicle)
        wanted = select_tracker(flags)
        if (self.active is not None and wanted is not self.active
                and self._since_switch < self.min_dwell and outputs.get(self.active) is not None):
            wanted = self.active
        chosen = wanted
        if outputs.get(chosen) is None:
            usable = [t for t in FALLBACK_ORDER if outputs.get(t) is not None]
            chosen = usable[0] if usable else None
        if chosen is None:
            log.warning("no usable tracker at t=%.2f; holding previous command", snapshot.timestamp)
            cmd = self.actuator(self.actuator.prev)
            return HybridDecision(cmd, wanted, flags, outputs, degraded=True)
        if chosen is self.active:
            self._since_switch += self.params.dt
        else:
            self.active, self._since_switch = chosen, 0.0
        cmd = self.actuator(outputs[chosen])
        return HybridDecision(cmd, chosen, flags, outputs)


def hybrid_step(snapshot: SensorSnapshot, vehicle: VehicleState,
                hybrid: HybridTracker) -> tuple[SteeringCommand, TrackerId, ReliabilityFlags]:
    d = hybrid.step(snapshot, vehicle)
    return d.command, d.tracker, d.flags
