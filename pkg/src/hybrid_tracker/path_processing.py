"""Path preparation for the trackers.

Local pixel frames put the vehicle's rear axle at (150, 300) with the
heading pointing up-screen (decreasing row). World frames are metric,
x east / y north, yaw in degrees counter-clockwise from +x.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from hybrid_tracker.plant import VehicleState, wrap_deg

ORIGIN_PX = (150.0, 300.0)
GPS_METERS_PER_PIXEL = 0.1   # factor 10 in the UTM -> pixel transform
VISION_METERS_PER_PIXEL = 0.03
DENSE_STEP = 0.1


class PathError(ValueError):
    pass


@dataclass(frozen=True)
class GlobalPath:
    points: np.ndarray  # (n, 2) easting, northing

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=float).reshape(-1, 2)
        if len(pts) < 2:
            raise PathError("a global path needs at least 2 points")
        if np.any(np.all(np.diff(pts, axis=0) == 0.0, axis=1)):
            raise PathError("consecutive path points must be distinct")
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class DensePath:
    x: np.ndarray
    y: np.ndarray
    yaw: np.ndarray  # degrees

    def __len__(self) -> int:
        return len(self.x)

    @property
    def xy(self) -> np.ndarray:
        return np.column_stack([self.x, self.y])


@dataclass(frozen=True)
class LocalPixelPath:
    points: np.ndarray  # (n, 2) pixel x, y
    meters_per_pixel: float = GPS_METERS_PER_PIXEL

    def __post_init__(self) -> None:
        if self.meters_per_pixel <= 0:
            raise PathError("meters_per_pixel must be positive")

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class TrackingErrors:
    alpha: float = 0.0
    cross_track_e: float = 0.0
    heading_phi: float = 0.0
    index: int = -1


def lookahead_target(points, ld: float, origin=ORIGIN_PX) -> tuple[float, float]:
    """Point on the polyline at distance ``ld`` from ``origin``.

    Walks the ordered points to the first pair bracketing the look-ahead
    circle and intersects the circle with the segment between them. If the
    whole path lies inside the circle the farthest point is returned.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(pts) == 0:
        raise PathError("empty path")
    if ld <= 0:
        raise PathError("look-ahead distance must be positive")
    o = np.asarray(origin, dtype=float)
    dist = np.hypot(pts[:, 0] - o[0], pts[:, 1] - o[1])
    beyond = np.nonzero(dist >= ld)[0]
    if len(beyond) == 0:
        return tuple(pts[np.argmax(dist)])
    j = int(beyond[0])
    if j == 0:
        return tuple(pts[0])
    p, q = pts[j - 1], pts[j]
    d = q - p
    f = p - o
    a = d @ d
    b = 2.0 * (f @ d)
    c = f @ f - ld * ld
    disc = max(b * b - 4 * a * c, 0.0)
    # far root: the segment leaves the circle between p (inside) and q
    t = (-b + math.sqrt(disc)) / (2 * a)
    t = min(max(t, 0.0), 1.0)
    return tuple(p + t * d)


densify_vision_path = lookahead_target


def _segment_params(n_seg_len: np.ndarray, step: float) -> np.ndarray:
    s0 = np.concatenate([[0.0], np.cumsum(n_seg_len)])
    counts = np.maximum(1, np.ceil(np.asarray(n_seg_len) / step - 1e-9).astype(int))
    seg = np.repeat(np.arange(len(counts)), counts)
    # position of each sample within its interval: 0, 1/n, ..., (n-1)/n
    k = np.arange(len(seg)) - np.repeat(np.cumsum(counts) - counts, counts)
    frac = k / counts[seg]
    t = s0[seg] + frac * (s0[seg + 1] - s0[seg])
    return np.concatenate([t, s0[-1:]])


def spline_interpolate(gp: GlobalPath, step: float = DENSE_STEP) -> DensePath:
    """Natural cubic spline through the knots, chord-length parameterised.

    Each knot interval is split into equal pieces no longer than ``step``
    so every knot appears among the samples.
    """
    pts = gp.points
    if len(pts) < 3:
        raise PathError("spline interpolation needs at least 3 points")
    seg = np.hypot(*np.diff(pts, axis=0).T)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    cs = CubicSpline(s, pts, bc_type="natural")
    t = _segment_params(seg, step)
    xy = cs(t)
    dxy = cs(t, 1)
    yaw = np.degrees(np.arctan2(dxy[:, 1], dxy[:, 0]))
    return DensePath(xy[:, 0], xy[:, 1], yaw)


def global_to_local(gp: GlobalPath | np.ndarray, vehicle: VehicleState,
                    meters_per_pixel: float = GPS_METERS_PER_PIXEL) -> LocalPixelPath:
    """UTM-style metric path into the vehicle-centred pixel frame."""
    if meters_per_pixel <= 0:
        raise PathError("meters_per_pixel must be positive")
    pts = gp.points if isinstance(gp, GlobalPath) else np.asarray(gp, dtype=float).reshape(-1, 2)
    s = 1.0 / meters_per_pixel
    th = math.radians(-(90.0 + vehicle.yaw))
    c, sn = math.cos(th), math.sin(th)
    dx = pts[:, 0] - vehicle.x
    dy = pts[:, 1] - vehicle.y
    xr = c * dx - sn * dy
    yr = sn * dx + c * dy
    return LocalPixelPath(np.column_stack([ORIGIN_PX[0] - s * xr, ORIGIN_PX[1] + s * yr]),
                          meters_per_pixel)


def local_to_global(local: LocalPixelPath, vehicle: VehicleState) -> np.ndarray:
    """Inverse of :func:`global_to_local`."""
    s = 1.0 / local.meters_per_pixel
    xr = (ORIGIN_PX[0] - local.points[:, 0]) / s
    yr = (local.points[:, 1] - ORIGIN_PX[1]) / s
    th = math.radians(-(90.0 + vehicle.yaw))
    c, sn = math.cos(th), math.sin(th)
    dx = c * xr + sn * yr
    dy = -sn * xr + c * yr
    return np.column_stack([vehicle.x + dx, vehicle.y + dy])


def nearest_index(xy: np.ndarray, probe) -> int:
    d2 = (xy[:, 0] - probe[0]) ** 2 + (xy[:, 1] - probe[1]) ** 2
    return int(np.argmin(d2))


def nearest_point_and_errors(dense: DensePath, probe, heading: float) -> TrackingErrors:
    """Cross-track and heading errors against the closest dense sample.

    ``cross_track_e`` is the offset of the probe perpendicular to the path
    tangent at that sample, positive when the path lies to the probe's left.
    """
    if len(dense) == 0:
        raise PathError("empty path")
    i = nearest_index(dense.xy, probe)
    yaw = math.radians(dense.yaw[i])
    rx, ry = probe[0] - dense.x[i], probe[1] - dense.y[i]
    e = math.sin(yaw) * rx - math.cos(yaw) * ry
    return TrackingErrors(cross_track_e=e, heading_phi=wrap_deg(dense.yaw[i] - heading), index=i)


def pixel_alpha(target, origin=ORIGIN_PX) -> float:
    """Bearing of ``target`` from the origin relative to the up-screen heading."""
    forward = origin[1] - target[1]
    left = origin[0] - target[0]
    return math.degrees(math.atan2(left, forward))
