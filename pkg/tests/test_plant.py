import math

import pytest
from hypothesis import given, strategies as st

from hybrid_tracker.plant import (
    Actuator,
    SteeringCommand,
    ValidationError,
    VehicleParams,
    VehicleState,
    apply_actuator,
    front_axle,
    step,
    wrap_deg,
)

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


def test_straight_step():
    s = step(VehicleState(0, 0, 0, 1), SteeringCommand(0.0), VehicleParams(dt=1.0))
    assert (s.x, s.y, s.yaw) == (1.0, 0.0, 0.0)


def test_straight_step_heading_north():
    s = step(VehicleState(0, 0, 90, 1), SteeringCommand(0.0), VehicleParams(dt=1.0))
    assert s.x == pytest.approx(0.0, abs=1e-15)
    assert s.y == pytest.approx(1.0)
    assert s.yaw == 90.0


def _circle_pose(v, angle, wheelbase, t):
    # closed form: start at origin heading +x, turning left about (0, R)
    r = wheelbase / math.tan(math.radians(angle))
    phi = v * t / r
    return r * math.sin(phi), r - r * math.cos(phi), math.degrees(phi), r


def test_constant_steer_matches_analytic_circle():
    params = VehicleParams(wheelbase=2.7, dt=0.02)
    state = VehicleState(0, 0, 0, 5)
    cmd = SteeringCommand(10.0)
    for k in range(1, 501):
        state = step(state, cmd, params)
        x, y, _, r = _circle_pose(5, 10.0, 2.7, k * 0.02)
        assert math.hypot(state.x - x, state.y - y) < 1e-9
        assert abs(math.hypot(state.x, state.y - r) - r) < 1e-9


def test_step_conserves_speed_and_rejects_nan():
    params = VehicleParams()
    s = step(VehicleState(1, 2, 3, 4.5), SteeringCommand(-12.0), params)
    assert s.speed == 4.5
    with pytest.raises(ValidationError):
        step(VehicleState(0, 0, 0, 1), SteeringCommand(float("nan")), params)
    with pytest.raises(ValidationError):
        VehicleState(float("inf"), 0, 0, 1)
    with pytest.raises(ValidationError):
        VehicleState(0, 0, 0, -1)


@pytest.mark.parametrize("desired, expected", [(5, 2), (-5, -2), (1, 1)])
def test_actuator_threshold(desired, expected):
    assert apply_actuator(desired, 0.0, VehicleParams(steer_slew=2.0)).angle == expected


def test_actuator_clamps_to_range():
    p = VehicleParams(max_steer=30.0, steer_slew=5.0)
    assert apply_actuator(100.0, 29.0, p).angle == 30.0


def test_params_validation():
    for bad in ({"wheelbase": 0}, {"max_steer": -1}, {"steer_slew": 0}, {"dt": 0}):
        with pytest.raises(ValidationError):
            VehicleParams(**bad)


@pytest.mark.parametrize("state, wheelbase, expected", [
    (VehicleState(0, 0, 0, 0), 2.7, (2.7, 0.0)),
    (VehicleState(0, 0, 90, 0), 2.7, (0.0, 2.7)),
    (VehicleState(1, 1, 45, 0), math.sqrt(2), (2.0, 2.0)),
])
def test_front_axle(state, wheelbase, expected):
    fx, fy = front_axle(state, VehicleParams(wheelbase=wheelbase))
    assert fx == pytest.approx(expected[0], abs=1e-12)
    assert fy == pytest.approx(expected[1], abs=1e-12)


@given(st.lists(st.floats(-90, 90, allow_nan=False), min_size=1, max_size=200),
       st.floats(0.1, 5.0))
def test_slew_bound_holds_for_any_sequence(desired, slew):
    act = Actuator(VehicleParams(steer_slew=slew))
    prev = act.prev
    for d in desired:
        out = act(d).angle
        assert abs(out - prev) <= slew + 1e-12
        assert abs(out) <= 30.0
        prev = out


@given(st.lists(st.floats(-30, 30, allow_nan=False), min_size=1, max_size=50))
def test_trajectory_is_deterministic(cmds):
    params = VehicleParams()

    def run():
        s = VehicleState(0, 0, 0, 5)
        out = []
        for c in cmds:
            s = step(s, SteeringCommand(c), params)
            out.append((s.x, s.y, s.yaw, s.speed))
        return out

    assert run() == run()


@given(finite)
def test_wrap_range(a):
    w = wrap_deg(a)
    assert -180 < w <= 180
    assert math.isclose(math.cos(math.radians(w)), math.cos(math.radians(a)), abs_tol=1e-9)
