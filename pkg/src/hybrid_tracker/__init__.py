"""Closed-loop path tracking with a reliability-driven hybrid tracker selector."""

from hybrid_tracker.plant import SteeringCommand, VehicleParams, VehicleState
from hybrid_tracker.selector import TrackerId

__all__ = ["SteeringCommand", "TrackerId", "VehicleParams", "VehicleState"]
