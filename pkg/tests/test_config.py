"""Scenario loading, config hashing, and the command line surface."""

import json
import os

import pytest
import yaml

from transitsim.cli import _parse_event_flag, main
from transitsim.config import (ConfigError, config_hash, load_scenario,
                               scenario_from_dict)


def doc4(**over):
    doc = {
        "seed": 7,
        "horizon_hours": 6,
        "network": {
            "stations": [{"id": i, "name": f"s{i}", "lat": 1.0,
                          "lon": 103.0 + 0.01 * i} for i in range(4)],
            "lines": [{"name": "L", "stations": [0, 1, 2, 3],
                       "service": {"run_seconds": 120, "dwell_seconds": 30,
                                   "headway_seconds": 600,
                                   "first_departure": 3600,
                                   "last_departure": 18000}}],
        },
        "population": {"size": 60, "margin_km": 1.0},
        "social": {"degree_min": 1, "degree_max": 8, "degree_mean": 2.5},
        "events": {
            "poll_interval": 3600,
            "poll_probability": 1.0,
            "events": [{"lat": 1.0, "lon": 103.03, "start": 10800,
                        "end": 14400, "age_groups": [1, 2, 3, 4, 5, 6],
                        "lead_seconds": 3600}],
        },
        "transit": {"compartments": 1, "road_speed_kmh": 10.0},
        "strategy": {"name": "none", "alt_routing": False, "pool": 2},
    }
    doc.update(over)
    return doc


def test_defaults_fill_missing_sections():
    cfg = scenario_from_dict({"seed": 1, "network": doc4()["network"]})
    assert cfg.horizon_hours == 24
    assert cfg.population["size"] == 1000
    assert cfg.social["degree_mean"] == 3.0
    assert cfg.transit["compartments"] == 2
    assert cfg.strategy == {"name": "none", "alt_routing": False, "pool": 10,
                            "alt_margin_seconds": 300}


@pytest.mark.parametrize("broken,msg", [
    ({"network": {"stations": [], "lines": []}}, "seed"),
    ({"seed": "abc", "network": {}}, "integer"),
    ({"seed": 1}, "network"),
    ({"seed": 1, "network": {}, "horizon_hours": 0}, "positive"),
    ({"seed": 1, "network": {}, "population": {"size": 0}}, "positive"),
    ({"seed": 1, "network": {}, "strategy": {"name": "psychic"}}, "strategy"),
    ({"seed": 1, "network": {}, "social": 3}, "mapping"),
])
def test_rejects_malformed_scenarios(broken, msg):
    with pytest.raises(ConfigError, match=msg):
        scenario_from_dict(broken)


def test_hash_ignores_formatting_but_not_values(tmp_path):
    a = tmp_path / "a.yaml"
    b = tmp_path / "b.yaml"
    a.write_text(yaml.safe_dump(doc4(), sort_keys=True))
    b.write_text("# padded variant\n" + yaml.safe_dump(doc4(), sort_keys=False,
                                                       default_flow_style=False))
    assert config_hash(load_scenario(str(a))) == config_hash(load_scenario(str(b)))
    c = tmp_path / "c.yaml"
    c.write_text(yaml.safe_dump(doc4(seed=8)))
    assert config_hash(load_scenario(str(c))) != config_hash(load_scenario(str(a)))


def test_load_names_missing_file():
    with pytest.raises(ConfigError, match="no/such/place.yaml"):
        load_scenario("no/such/place.yaml")


def test_event_flag_parses_clock_times():
    ev = _parse_event_flag("1.25,103.5,08:30,11:00")
    assert ev == {"lat": 1.25, "lon": 103.5, "start": 30600, "end": 39600}


def scenario_file(tmp_path, **over):
    p = tmp_path / "scn.yaml"
    p.write_text(yaml.safe_dump(doc4(**over)))
    return str(p)


def read_outputs(run_dir):
    out = {}
    for name in ("usage.csv", "wait.csv", "summary.csv", "event.log"):
        with open(os.path.join(run_dir, name), "rb") as f:
            out[name] = f.read()
    return out


def test_cli_reruns_are_byte_identical(tmp_path, capsys):
    scn = scenario_file(tmp_path)
    rc1 = main(["--scenario", scn, "--out", str(tmp_path / "o1")])
    rc2 = main(["--scenario", scn, "--out", str(tmp_path / "o2")])
    assert rc1 == 0 and rc2 == 0
    first = read_outputs(str(tmp_path / "o1" / "run"))
    second = read_outputs(str(tmp_path / "o2" / "run"))
    assert first == second
    with open(tmp_path / "o1" / "run" / "manifest.json") as f:
        manifest = json.load(f)
    assert manifest["config_hash"] == config_hash(load_scenario(scn))
    assert manifest["label"] == "run"
    assert manifest["end"] == 6 * 3600


def test_cli_compare_writes_matching_delta(tmp_path):
    scn = scenario_file(tmp_path)
    rc = main(["--scenario", scn, "--compare", "event",
               "--out", str(tmp_path / "cmp")])
    assert rc == 0
    with open(tmp_path / "cmp" / "event" / "delta.csv", "rb") as f:
        one = f.read()
    with open(tmp_path / "cmp" / "no-event" / "delta.csv", "rb") as f:
        two = f.read()
    assert one == two
    header = one.decode().splitlines()[0]
    assert header == "kind,hour,line,section,delta"


def test_cli_reports_missing_scenario(tmp_path, capsys):
    missing = str(tmp_path / "gone.yaml")
    rc = main(["--scenario", missing, "--out", str(tmp_path / "o")])
    assert rc == 2
    err = capsys.readouterr().err
    assert err.startswith("error: config:")
    assert "gone.yaml" in err


def test_cli_rejects_bad_override(tmp_path, capsys):
    scn = scenario_file(tmp_path)
    rc = main(["--scenario", scn, "--until", "0", "--out", str(tmp_path / "o")])
    assert rc == 2
    assert "error: config:" in capsys.readouterr().err


def test_bundled_scenarios_load_and_build():
    from transitsim.city import network_from_dict
    root = os.path.join(os.path.dirname(__file__), "..", "scenarios")
    desk = load_scenario(os.path.join(root, "desk.yaml"))
    net = network_from_dict(desk.network)
    assert len(net.stations) == 20 and set(net.lines) == {"H", "V"}
    big = load_scenario(os.path.join(root, "singapore-like.yaml"))
    net = network_from_dict(big.network)
    assert len(net.stations) == 87
    assert set(net.lines) == {"NS", "EW", "CC", "NE"}
    assert net.lines["CC"].circular and not net.lines["NS"].circular
    # the two trunk lines meet the circle and each other
    shared = [sid for sid, m in net.memberships.items() if len(m) >= 2]
    assert len(shared) == 6


def test_cli_event_override_changes_the_run(tmp_path):
    scn = scenario_file(tmp_path)
    assert main(["--scenario", scn, "--out", str(tmp_path / "base")]) == 0
    assert main(["--scenario", scn, "--event", "1.0,103.01,03:10,04:10",
                 "--out", str(tmp_path / "extra")]) == 0
    with open(tmp_path / "base" / "run" / "event.log", "rb") as f:
        base = f.read()
    with open(tmp_path / "extra" / "run" / "event.log", "rb") as f:
        extra = f.read()
    assert base != extra
    rec = json.loads(extra.splitlines()[0])
    assert {"t", "actor", "kind"} <= set(rec)
