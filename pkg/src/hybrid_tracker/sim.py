"""Closed-loop simulation: sensors -> tracker(s) -> actuator -> plant."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import cv2
import numpy as np

from hybrid_tracker.lane_pipeline import (
    FRAME,
    LEFT,
    LEFT_LEFT,
    RIGHT,
    RIGHT_RIGHT,
    GuidanceLine,
    Homography,
    LanePipeline,
    SegMask,
    apply_ipm,
)
from hybrid_tracker.path_processing import (
    GPS_METERS_PER_PIXEL,
    VISION_METERS_PER_PIXEL,
    GlobalPath,
    global_to_local,
)
from hybrid_tracker.plant import Actuator, VehicleParams, VehicleState, step
from hybrid_tracker.scenarios import (
    BOTH,
    LEFT_ONLY,
    RIGHT_ONLY,
    WINDOW_POINTS,
    WINDOW_SPACING,
    Scenario,
)
from hybrid_tracker.selector import (
    HybridTracker,
    ReliabilityFlags,
    RtkState,
    SensorSnapshot,
    TrackerId,
    gps_reliability,
    lane_reliability,
    make_tracker,
)
from hybrid_tracker.trackers import NoCommand, PurePursuitParams, StanleyParams

CHOICES = ("pp-vision", "pp-gps", "stanley-gps", "hybrid")
LOG_COLUMNS = ("t", "x", "y", "yaw", "v", "steer_cmd", "tracker_id", "gps_rel", "lane_rel", "hd_map")

# top view -> forward camera: the far edge of the frame converges toward the centre
CAMERA_HOMOGRAPHY = Homography.from_points(
    [(0, 0), (FRAME, 0), (FRAME, FRAME), (0, FRAME)],
    [(100, 90), (200, 90), (FRAME, FRAME), (0, FRAME)])


@dataclass
class SimConfig:
    vehicle: VehicleParams = field(default_factory=VehicleParams)
    pp_vision: PurePursuitParams | None = None
    pp_gps: PurePursuitParams | None = None
    stanley: StanleyParams | None = None
    seed: int = 0
    gps_sigma: float = 0.02        # metres, RTK Fixed
    float_sigma: float = 0.3       # metres, RTK Float
    vision_period: float = 0.1     # seconds between camera frames
    gps_meters_per_pixel: float = GPS_METERS_PER_PIXEL
    vision_meters_per_pixel: float = VISION_METERS_PER_PIXEL
    lane_width_px: float = 100.0
    marking_width: float = 0.2     # metres
    corridor_margin: float = 0.5
    camera: Homography | None = CAMERA_HOMOGRAPHY
    min_dwell: float = 0.0


def render_top_view(scn: Scenario, state: VehicleState, cfg: SimConfig) -> SegMask:
    """Draw visible lane markings into the vehicle-centred vision frame."""
    mpp = cfg.vision_meters_per_pixel
    path = scn.ideal_path
    i0 = path.nearest((state.x, state.y))
    s0 = path.s[i0]
    reach = FRAME * mpp * 1.5 + 2.0
    s = np.arange(max(0.0, s0 - 2.0), min(path.length, s0 + reach), 0.25)
    img = np.zeros((FRAME, FRAME), np.uint8)
    if len(s) < 2:
        return SegMask(img)
    vis = np.array([scn.visibility(v) for v in s])
    half = scn.road_width / 2
    lanes = [(LEFT, half, (BOTH, LEFT_ONLY)), (RIGHT, -half, (BOTH, RIGHT_ONLY))]
    if scn.outer_lanes:
        lanes += [(LEFT_LEFT, 3 * half, (BOTH, LEFT_ONLY)),
                  (RIGHT_RIGHT, -3 * half, (BOTH, RIGHT_ONLY))]
    thickness = max(1, int(round(cfg.marking_width / mpp)))
    for label, lateral, shown in lanes:
        on = np.isin(vis, shown)
        if not on.any():
            continue
        px = global_to_local(path.offset(s, lateral), state, mpp).points
        # split into visible runs
        edges = np.flatnonzero(np.diff(on.astype(int))) + 1
        for run in np.split(np.arange(len(s)), edges):
            if len(run) < 2 or not on[run[0]]:
                continue
            poly = np.round(px[run] * 16).astype(np.int32).reshape(-1, 1, 2)
            cv2.polylines(img, [poly], False, int(label), thickness, cv2.LINE_8, shift=4)
    return SegMask(img)


@dataclass
class GpsReceiver:
    """RTK receiver model: noisy when Fixed/Float, stale output when not fixed."""

    rng: np.random.Generator
    sigma: float
    float_sigma: float
    last: tuple[float, float] | None = None

    def read(self, truth: VehicleState, rtk: RtkState) -> tuple[float, float]:
        if rtk == RtkState.NO_FIXED and self.last is not None:
            return self.last
        sig = self.sigma if rtk == RtkState.FIXED else self.float_sigma
        n = self.rng.normal(0.0, sig, 2) if sig > 0 else (0.0, 0.0)
        self.last = (truth.x + float(n[0]), truth.y + float(n[1]))
        return self.last


class SensorSuite:
    """Camera + lane pipeline, RTK GPS, IMU and HD-map lookup for one run."""

    def __init__(self, scn: Scenario, cfg: SimConfig):
        self.scn = scn
        self.cfg = cfg
        self.gps = GpsReceiver(np.random.default_rng(cfg.seed), cfg.gps_sigma, cfg.float_sigma)
        ipm = cfg.camera.inverse() if cfg.camera is not None else Homography.identity()
        self.pipeline = LanePipeline(ipm, cfg.lane_width_px)
        self._guidance = GuidanceLine()
        self._next_frame = 0.0
        self._hint: int | None = None

    def camera_frame(self, state: VehicleState) -> GuidanceLine:
        top = render_top_view(self.scn, state, self.cfg)
        raw = apply_ipm(top, self.cfg.camera) if self.cfg.camera is not None else top
        _, line = self.pipeline.run(raw)
        return line

    def sense(self, truth: VehicleState, t: float) -> tuple[SensorSnapshot, VehicleState]:
        """Snapshot plus the navigation estimate (GPS position, IMU yaw, wheel speed)."""
        if t >= self._next_frame - 1e-9:
            self._guidance = self.camera_frame(truth)
            self._next_frame += self.cfg.vision_period
        rtk, hdop = self.scn.gps_at(t)
        gx, gy = self.gps.read(truth, rtk)
        nav = VehicleState(gx, gy, truth.yaw, truth.speed)
        path = self.scn.ideal_path
        i = path.nearest((gx, gy), self._hint)
        self._hint = i
        s0 = math.floor(path.s[i] / WINDOW_SPACING) * WINDOW_SPACING
        window = path.at(s0 + WINDOW_SPACING * np.arange(WINDOW_POINTS))
        keep = np.concatenate([[True], np.any(np.diff(window, axis=0) != 0, axis=1)])
        window = window[keep]
        gp = GlobalPath(window) if len(window) >= 2 else None
        snap = SensorSnapshot(rtk, hdop, self._guidance, self.scn.hd_map_flag(path.s[i]), gp, t)
        return snap, nav


def synthesize_sensors(scn: Scenario, state: VehicleState, t: float,
                       cfg: SimConfig | None = None) -> SensorSnapshot:
    """One-off snapshot for ``state`` at time ``t`` (fresh receiver, no history)."""
    if not 0.0 <= t <= scn.duration:
        raise ValueError(f"t={t} outside [0, {scn.duration}]")
    suite = SensorSuite(scn, cfg or SimConfig())
    suite._next_frame = t
    return suite.sense(state, t)[0]


@dataclass
class TrajectoryLog:
    rows: list = field(default_factory=list)
    success: bool = True
    scenario: str = ""
    choice: str = ""
    degraded_steps: int = 0

    def append(self, *row) -> None:
        self.rows.append(row)

    def column(self, name: str) -> np.ndarray:
        i = LOG_COLUMNS.index(name)
        return np.array([r[i] for r in self.rows])

    def __len__(self) -> int:
        return len(self.rows)

    def to_csv(self) -> str:
        lines = [",".join(LOG_COLUMNS)]
        for t, x, y, yaw, v, steer, tid, g, ln, hd in self.rows:
            lines.append(f"{t:.2f},{x:.6f},{y:.6f},{yaw:.6f},{v:.6f},{steer:.6f},{tid},{g},{ln},{hd}")
        return "\n".join(lines) + "\n"


class SingleTracker:
    """Runs one tracker standalone, holding the last command when it has no path."""

    def __init__(self, ident: TrackerId, cfg: SimConfig):
        self.ident = ident
        self.tracker = make_tracker(ident, cfg.vehicle, cfg.pp_vision, cfg.pp_gps, cfg.stanley,
                                    cfg.gps_meters_per_pixel)
        self.actuator = Actuator(cfg.vehicle)
        self.lane_width_px = cfg.lane_width_px

    def step(self, snap: SensorSnapshot, nav: VehicleState):
        flags = ReliabilityFlags(gps_reliability(snap.rtk_state, snap.hdop),
                                 lane_reliability(snap.guidance, self.lane_width_px),
                                 snap.hd_map_flag)
        try:
            desired = self.tracker(snap, nav)
            degraded = False
        except NoCommand:
            desired, degraded = self.actuator.prev, True
        return self.actuator(desired), self.ident, flags, degraded


def make_controller(choice: str, cfg: SimConfig):
    if choice == "hybrid":
        trackers = {t: make_tracker(t, cfg.vehicle, cfg.pp_vision, cfg.pp_gps, cfg.stanley,
                                    cfg.gps_meters_per_pixel) for t in TrackerId}
        return HybridTracker(cfg.vehicle, cfg.lane_width_px, cfg.min_dwell, trackers)
    try:
        return SingleTracker(TrackerId(choice), cfg)
    except ValueError:
        raise ValueError(f"unknown tracker {choice!r}; choose from {', '.join(CHOICES)}") from None


def _trackers(ctrl):
    if isinstance(ctrl, HybridTracker):
        return list(ctrl.trackers.values())
    return [ctrl.tracker]


def initial_state(scn: Scenario, lateral: float = 0.0, yaw_offset: float = 0.0) -> VehicleState:
    path = scn.ideal_path
    i = int(np.searchsorted(path.s, scn.start_offset))
    p = path.offset([path.s[i]], lateral)[0]
    return VehicleState(float(p[0]), float(p[1]), float(path.yaw[i]) + yaw_offset, scn.speed)


def simulate(scn: Scenario, choice: str, cfg: SimConfig | None = None,
             state: VehicleState | None = None, initial_steer: float = 0.0) -> TrajectoryLog:
    """Fixed-step closed loop until the scenario ends or the vehicle leaves the corridor."""
    cfg = cfg or SimConfig()
    ctrl = make_controller(choice, cfg)
    ctrl.actuator.prev = initial_steer
    for tracker in _trackers(ctrl):
        if hasattr(tracker, "pid"):
            tracker.pid.reset(initial_steer)
    sensors = SensorSuite(scn, cfg)
    state = state or initial_state(scn)
    corridor = scn.road_width / 2 + cfg.corridor_margin
    path = scn.ideal_path
    log = TrajectoryLog(scenario=scn.name, choice=choice)
    dt = cfg.vehicle.dt
    n_steps = int(round(scn.duration / dt))
    hint = None
    for k in range(n_steps + 1):
        t = k * dt
        hint = path.nearest((state.x, state.y), hint)
        if math.hypot(state.x - path.x[hint], state.y - path.y[hint]) > corridor:
            log.success = False
            break
        snap, nav = sensors.sense(state, t)
        if choice == "hybrid":
            d = ctrl.step(snap, nav)
            cmd, tid, flags, degraded = d.command, d.tracker, d.flags, d.degraded
        else:
            cmd, tid, flags, degraded = ctrl.step(snap, nav)
        log.degraded_steps += int(degraded)
        log.append(t, state.x, state.y, state.yaw, state.speed, cmd.angle, tid.value,
                   flags.gps_rel, flags.lane_rel, flags.hd_map)
        state = step(state, cmd, cfg.vehicle)
    return log
