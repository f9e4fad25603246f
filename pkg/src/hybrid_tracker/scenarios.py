"""The seven road scenarios and their synthetic sensor timelines."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from hybrid_tracker.selector import RtkState

SCENARIOS = ("straight", "slight_curve", "steep_curve", "junctions", "roundabout",
             "intersection", "tunnel")
NORMAL = SCENARIOS[:3]
COMPLEX = SCENARIOS[3:]

BOTH, LEFT_ONLY, RIGHT_ONLY, NO_LANES = "both", "left-only", "right-only", "none"
FIXED_HDOP = 0.8
TUNNEL_HDOP = 6.0
CENTERLINE_STEP = 0.05
WINDOW_POINTS = 30
WINDOW_SPACING = 1.0
HD_MAP_CURVATURE = 1.0 / 20.0


class ScenarioError(KeyError):
    pass


@dataclass
class Centerline:
    """Densely sampled analytic centreline made of straights and arcs."""

    s: np.ndarray
    x: np.ndarray
    y: np.ndarray
    yaw: np.ndarray    # degrees
    kappa: np.ndarray  # 1/m, left positive

    @classmethod
    def build(cls, segments, start=(0.0, 0.0), yaw0: float = 0.0,
              step: float = CENTERLINE_STEP) -> "Centerline":
        """``segments``: ("line", length) or ("arc", radius, signed_angle_deg)."""
        xs, ys, yaws, ks, ss = [start[0]], [start[1]], [math.radians(yaw0)], [], [0.0]
        for seg in segments:
            if seg[0] == "line":
                length, k = seg[1], 0.0
            else:
                radius, ang = seg[1], seg[2]
                length, k = radius * math.radians(abs(ang)), math.copysign(1.0 / radius, ang)
            n = max(1, int(round(length / step)))
            h = length / n
            x0, y0, th0, s0 = xs[-1], ys[-1], yaws[-1], ss[-1]
            if not ks:
                ks.append(k)
            for i in range(1, n + 1):
                d = i * h
                th = th0 + k * d
                if k == 0.0:
                    x, y = x0 + d * math.cos(th0), y0 + d * math.sin(th0)
                else:
                    x = x0 + (math.sin(th) - math.sin(th0)) / k
                    y = y0 - (math.cos(th) - math.cos(th0)) / k
                xs.append(x)
                ys.append(y)
                yaws.append(th)
                ks.append(k)
                ss.append(s0 + d)
        yaw = np.degrees(np.asarray(yaws))
        yaw = (yaw + 180.0) % 360.0 - 180.0
        yaw[yaw == -180.0] = 180.0
        return cls(np.asarray(ss), np.asarray(xs), np.asarray(ys), yaw, np.asarray(ks))

    @property
    def length(self) -> float:
        return float(self.s[-1])

    @property
    def xy(self) -> np.ndarray:
        return np.column_stack([self.x, self.y])

    def nearest(self, point, hint: int | None = None, span: int = 400) -> int:
        lo, hi = 0, len(self.s)
        if hint is not None:
            lo, hi = max(0, hint - span), min(len(self.s), hint + span)
        d2 = (self.x[lo:hi] - point[0]) ** 2 + (self.y[lo:hi] - point[1]) ** 2
        return lo + int(np.argmin(d2))

    def at(self, s) -> np.ndarray:
        s = np.clip(np.asarray(s, dtype=float), 0.0, self.length)
        return np.column_stack([np.interp(s, self.s, self.x), np.interp(s, self.s, self.y)])

    def offset(self, s, lateral: float) -> np.ndarray:
        """Points ``lateral`` metres to the left of the centreline at arc ``s``."""
        s = np.clip(np.asarray(s, dtype=float), 0.0, self.length)
        base = self.at(s)
        # interpolate heading through its unit vector to avoid wrap issues
        c = np.interp(s, self.s, np.cos(np.radians(self.yaw)))
        sn = np.interp(s, self.s, np.sin(np.radians(self.yaw)))
        nrm = np.hypot(c, sn)
        return base + lateral * np.column_stack([-sn / nrm, c / nrm])


@dataclass
class Scenario:
    name: str
    segments: list
    speed: float = 20.0 / 3.6
    road_width: float = 3.0
    hd_map_windows: list = field(default_factory=list)   # (s0, s1, flag)
    gps_timeline: list = field(default_factory=list)     # (t0, t1, rtk, hdop)
    lane_model: list = field(default_factory=list)       # (s0, s1, visibility)
    duration: float | None = None
    start_offset: float = 0.0
    outer_lanes: bool = True
    ideal_path: Centerline | None = None

    def __post_init__(self) -> None:
        if self.ideal_path is None:
            self.ideal_path = Centerline.build(self.segments)
        if self.duration is None:
            usable = self.ideal_path.length - WINDOW_POINTS * WINDOW_SPACING - 3.0
            self.duration = round(usable / self.speed, 2)
        if not self.gps_timeline:
            self.gps_timeline = [(0.0, self.duration, RtkState.FIXED, FIXED_HDOP)]

    def hd_map_flag(self, s: float) -> int:
        for s0, s1, flag in self.hd_map_windows:
            if s0 <= s <= s1:
                return int(flag)
        i = int(np.searchsorted(self.ideal_path.s, s).clip(0, len(self.ideal_path.s) - 1))
        return int(abs(self.ideal_path.kappa[i]) > HD_MAP_CURVATURE)

    def gps_at(self, t: float) -> tuple[RtkState, float]:
        for t0, t1, rtk, hdop in self.gps_timeline:
            if t0 <= t <= t1:
                return RtkState(rtk), float(hdop)
        return RtkState.FIXED, FIXED_HDOP

    def visibility(self, s: float) -> str:
        for s0, s1, vis in self.lane_model:
            if s0 <= s <= s1:
                return vis
        return BOTH

    def curvature_at(self, s) -> np.ndarray:
        idx = np.searchsorted(self.ideal_path.s, s).clip(0, len(self.ideal_path.s) - 1)
        return self.ideal_path.kappa[idx]


def _arc_len(radius: float, angle: float) -> float:
    return radius * math.radians(abs(angle))


def build_scenario(name: str, speed_kmh: float = 20.0) -> Scenario:
    """Parameterised scenario by name; see ``SCENARIOS``."""
    v = speed_kmh / 3.6
    if name == "straight":
        return Scenario(name, [("line", 160.0)], speed=v)
    if name == "straight_highspeed":
        return Scenario(name, [("line", 600.0)], speed=100.0 / 3.6)
    if name == "slight_curve":
        return Scenario(name, [("line", 30.0), ("arc", 157.5, 50.0), ("line", 45.0)], speed=v)
    if name == "steep_curve":
        return Scenario(name, [("line", 30.0), ("arc", 53.0, 90.0), ("line", 45.0)], speed=v)
    if name == "junctions":
        windows = [(50.0, 60.0, NO_LANES), (95.0, 105.0, NO_LANES), (140.0, 150.0, NO_LANES)]
        return Scenario(name, [("line", 200.0)], speed=v, lane_model=windows)
    if name == "roundabout":
        a0 = 35.0
        arc = _arc_len(14.0, 180.0)
        return Scenario(
            name, [("line", a0), ("arc", 14.0, 180.0), ("line", 45.0)], speed=v,
            hd_map_windows=[(a0 - 12.0, a0 + arc + 5.0, 1)],
            lane_model=[(a0 - 2.0, a0 + arc + 2.0, NO_LANES)])
    if name == "intersection":
        a0 = 40.0
        arc = _arc_len(22.0, 90.0)
        return Scenario(
            name, [("line", a0), ("arc", 22.0, 90.0), ("line", 45.0)], speed=v,
            hd_map_windows=[(a0 - 12.0, a0 + arc + 5.0, 1)],
            lane_model=[(a0 - 8.0, a0 + arc + 8.0, NO_LANES)])
    if name == "tunnel":
        t0 = 30.0
        sc = Scenario(name, [("line", 25.0), ("arc", 157.5, 55.0), ("line", 45.0)], speed=v)
        sc.gps_timeline = [(0.0, t0 / v, RtkState.FIXED, FIXED_HDOP),
                           (t0 / v, (t0 + 100.0) / v, RtkState.NO_FIXED, TUNNEL_HDOP),
                           ((t0 + 100.0) / v, sc.duration, RtkState.FIXED, FIXED_HDOP)]
        return sc
    raise ScenarioError(f"unknown scenario {name!r}; valid names: {', '.join(SCENARIOS)}")
