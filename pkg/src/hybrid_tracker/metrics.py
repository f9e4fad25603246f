"""Figures of merit for a closed-loop run against its ideal path."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from hybrid_tracker.plant import VehicleParams


@dataclass(frozen=True)
class MetricsReport:
    success: bool
    rmse_lateral: float
    rmse_longitudinal: float
    distance: float
    rmse_yaw: float
    rmse_steer: float

    def to_dict(self) -> dict:
        return asdict(self)


def _rms(a: np.ndarray) -> float:
    return float(math.sqrt(np.mean(np.square(a)))) if len(a) else 0.0


def error_components(xy: np.ndarray, path_xy: np.ndarray, path_yaw: np.ndarray):
    """Nearest path sample per point and the error split along / across its tangent.

    Returns ``(index, longitudinal, lateral)``; lateral is positive to the
    left of the path.
    """
    xy = np.atleast_2d(np.asarray(xy, dtype=float))
    idx = np.empty(len(xy), dtype=int)
    for k, (x, y) in enumerate(xy):
        idx[k] = int(np.argmin((path_xy[:, 0] - x) ** 2 + (path_xy[:, 1] - y) ** 2))
    d = xy - path_xy[idx]
    th = np.radians(path_yaw[idx])
    c, s = np.cos(th), np.sin(th)
    lon = c * d[:, 0] + s * d[:, 1]
    lat = -s * d[:, 0] + c * d[:, 1]
    return idx, lon, lat


def compute_metrics(log, scenario, params: VehicleParams | None = None) -> MetricsReport:
    """RMSE of lateral/longitudinal/total position error, yaw and steering.

    The steering reference is the curvature feed-forward ``atan(L * kappa)``
    at the nearest ideal-path sample.
    """
    if len(log) == 0:
        raise ValueError("empty trajectory log")
    params = params or VehicleParams()
    path = scenario.ideal_path
    xy = np.column_stack([log.column("x"), log.column("y")])
    idx, lon, lat = error_components(xy, path.xy, path.yaw)
    yaw_err = (log.column("yaw") - path.yaw[idx] + 180.0) % 360.0 - 180.0
    steer_ref = np.degrees(np.arctan(params.wheelbase * path.kappa[idx]))
    return MetricsReport(
        success=bool(log.success),
        rmse_lateral=_rms(lat),
        rmse_longitudinal=_rms(lon),
        distance=_rms(np.hypot(lat, lon)),
        rmse_yaw=_rms(yaw_err),
        rmse_steer=_rms(log.column("steer_cmd") - steer_ref),
    )
