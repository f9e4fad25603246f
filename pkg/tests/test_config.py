import pytest

from hybrid_tracker.config import (
    ConfigError,
    apply_scenario_overrides,
    load_sim_config,
    resolve_scenario,
)
from hybrid_tracker.scenarios import ScenarioError, build_scenario
from hybrid_tracker.selector import RtkState
from hybrid_tracker.sim import SimConfig
from hybrid_tracker.trackers import GPS_PID


def _write(tmp_path, text, name="params.ini"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_no_file_returns_defaults(monkeypatch):
    monkeypatch.delenv("HYBRID_TRACKER_CONFIG", raising=False)
    cfg, overrides = load_sim_config()
    assert cfg == SimConfig() and overrides == {}


def test_sections_override_defaults(tmp_path):
    p = _write(tmp_path, """
[vehicle]
wheelbase = 3.0
[pure_pursuit_gps]
kp = 1.5
lookahead_formula = literal
[stanley]
k = 2.0
[sim]
gps_sigma = 0.05
seed = 9
[scenario.tunnel]
speed_kmh = 30
""")
    cfg, overrides = load_sim_config(p)
    assert cfg.vehicle.wheelbase == 3.0
    assert cfg.pp_gps.pid.kp == 1.5 and cfg.pp_gps.pid.ki == GPS_PID.ki
    assert cfg.pp_gps.lookahead_formula == "literal"
    assert cfg.stanley.k == 2.0
    assert cfg.gps_sigma == 0.05 and cfg.seed == 9
    assert overrides == {"tunnel": {"speed_kmh": "30"}}


def test_env_var_is_used(tmp_path, monkeypatch):
    p = _write(tmp_path, "[vehicle]\nmax_steer = 25\n")
    monkeypatch.setenv("HYBRID_TRACKER_CONFIG", str(p))
    cfg, _ = load_sim_config()
    assert cfg.vehicle.max_steer == 25


@pytest.mark.parametrize("text", [
    "[vehicle]\nwheelbase = abc\n",
    "[vehicle]\ncolor = red\n",
    "[engine]\nhp = 3\n",
    "[sim]\ncamera = none\n",
    "[vehicle]\nwheelbase = -1\n",
    "not an ini",
])
def test_bad_files_raise(tmp_path, text):
    with pytest.raises(ConfigError):
        load_sim_config(_write(tmp_path, text))


def test_missing_file_raises(tmp_path):
    with pytest.raises(ConfigError):
        load_sim_config(tmp_path / "nope.ini")


def test_speed_override_rescales_timeline():
    base = build_scenario("tunnel")
    scn = apply_scenario_overrides(build_scenario("tunnel"), {"speed_kmh": "40"})
    assert scn.speed == pytest.approx(40 / 3.6)
    nf_base = next(w for w in base.gps_timeline if w[2] == RtkState.NO_FIXED)
    nf = next(w for w in scn.gps_timeline if w[2] == RtkState.NO_FIXED)
    assert nf[0] == pytest.approx(nf_base[0] / 2)


def test_window_overrides():
    scn = apply_scenario_overrides(build_scenario("straight"), {
        "lane_model": "10-20:none, 30-40:left-only",
        "hd_map_windows": "5-6:1",
        "gps_timeline": "0-3:1:2.0",
    })
    assert scn.visibility(15) == "none" and scn.visibility(35) == "left-only"
    assert scn.hd_map_flag(5.5) == 1
    assert scn.gps_at(1.0) == (RtkState.FLOAT, 2.0)


def test_bad_window_and_key():
    with pytest.raises(ConfigError):
        apply_scenario_overrides(build_scenario("straight"), {"lane_model": "10-20"})
    with pytest.raises(ConfigError):
        apply_scenario_overrides(build_scenario("straight"), {"gravity": "1"})


def test_resolve_scenario_file(tmp_path):
    p = _write(tmp_path, "[scenario]\nname = short\nsegments = line:60, arc:30:45, line:40\n",
               "short.ini")
    scn = resolve_scenario(str(p))
    assert scn.name == "short"
    assert scn.ideal_path.length == pytest.approx(100 + 30 * 3.141592653589793 / 4, rel=1e-3)


def test_resolve_unknown_name():
    with pytest.raises(ScenarioError):
        resolve_scenario("moon")
