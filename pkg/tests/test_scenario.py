import math

import pytest
from hypothesis import given, settings, strategies as st

from wlanvoip.errors import ConfigError, ScenarioError
from wlanvoip.kernel import TICKS_PER_SECOND
from wlanvoip.mobility import WaypointPath, position_at
from wlanvoip.scenario import (
    dump_scenario, load_scenario, load_shipped, resolve_scenario, scenario_hash,
    shipped_scenario_text,
)
from wlanvoip.signaling import Protocol

BASE = """\
name: tiny
duration_s: 5
nodes:
  - {id: 1, position: [0, 0]}
  - {id: 2, position: [50, 0]}
  - {id: 3, position: [0, 50]}
networks:
  - {id: 1, listenable: "0100", listening: "0100", nodes: [1, 2, 3]}
signaling:
  server_node: 3
applications:
  - {id: call, kind: voip, src: 1, dst: 2, start_s: 1, stop_s: 4, codec: G711}
"""


def test_shipped_scenario_shape():
    s = load_shipped()
    kinds = [a.kind for a in s.applications]
    assert len(s.nodes) == 10
    assert (kinds.count("voip"), kinds.count("ftp"), kinds.count("cbr")) == (5, 2, 1)
    assert s.duration == 134 * TICKS_PER_SECOND
    assert sorted(s.networks[0].nodes) == [1, 2, 3, 4, 5]
    assert sorted(s.networks[1].nodes) == [6, 7, 8, 9]
    links = [(a.src, a.dst) for a in s.applications if a.kind == "voip"]
    assert links == [(4, 5), (3, 7), (1, 9), (2, 8), (5, 7)]
    assert s.server_node == 10 and s.signaling_mode is Protocol.SIP


def test_unknown_node_is_reported_with_context():
    text = BASE.replace("src: 1, dst: 2", "src: 4, dst: 11")
    with pytest.raises(ScenarioError, match="unknown node 4") as info:
        load_scenario(text)
    assert info.value.field == "applications[0].src"
    assert info.value.line == 12


def test_zero_mask_rejected():
    with pytest.raises(ScenarioError, match="zero"):
        load_scenario(BASE.replace('listenable: "0100"', 'listenable: "0000"'))


def test_duplicate_node_ids_rejected():
    with pytest.raises(ScenarioError, match="defined twice"):
        load_scenario(BASE.replace("{id: 3, position", "{id: 2, position"))


@pytest.mark.parametrize("patch", [
    ("duration_s: 5", "duration_s: -1"),
    ("codec: G711", "codec: G999"),
    ("kind: voip", "kind: video"),
    ("name: tiny", "name: tiny\nbogus: 1"),
    ("position: [50, 0]", "position: [50]"),
    ("nodes: [1, 2, 3]", "nodes: [1, 2, 3]\n    extra: true"),
])
def test_other_validation_errors(patch):
    with pytest.raises(ConfigError):
        load_scenario(BASE.replace(*patch))


def test_malformed_document():
    with pytest.raises(ScenarioError, match="malformed"):
        load_scenario("nodes: [1, 2\n")


def test_exponent_numbers_are_floats():
    s = load_scenario(BASE.replace("position: [50, 0]", "position: [5e1, 1e-9]"))
    assert s.nodes[1].position == (50.0, 1e-9)


def test_round_trip_shipped():
    for name in ("paper_80211a", "pcf_test"):
        s = load_shipped(name)
        again = load_scenario(dump_scenario(s))
        assert again == s
        assert scenario_hash(again) == scenario_hash(s)


def test_hash_tracks_content():
    a = load_scenario(BASE)
    b = load_scenario(BASE.replace("duration_s: 5", "duration_s: 6"))
    assert scenario_hash(a) != scenario_hash(b)
    assert scenario_hash(a) == scenario_hash(load_scenario(BASE))


def test_frame_override():
    s = load_scenario(BASE).with_frame("G711", 15)
    assert s.applications[0].frame_ms == 15
    with pytest.raises(ConfigError):
        load_scenario(BASE).with_frame("G711", 1)  # 8 B payload is below the floor


def test_resolve_by_name_or_path(tmp_path):
    p = tmp_path / "mine.yaml"
    p.write_text(BASE)
    assert resolve_scenario(str(p)).name == "tiny"
    assert resolve_scenario("pcf_test").name == "pcf_test"
    assert shipped_scenario_text("pcf_test").startswith("#")


@settings(max_examples=40, deadline=None)
@given(
    st.integers(2, 6),
    st.lists(st.tuples(st.floats(-500, 500), st.floats(-500, 500)), min_size=6, max_size=6),
    st.floats(1, 200),
    st.sampled_from(["0001", "0100", "1010", "1111"]),
    st.booleans(),
)
def test_round_trip_generated(n, coords, duration, mask, backoff):
    nodes = "\n".join(f"  - {{id: {i + 1}, position: [{coords[i][0]!r}, {coords[i][1]!r}]}}"
                      for i in range(n))
    text = (f"name: gen\nduration_s: {duration!r}\nnodes:\n{nodes}\n"
            f"networks:\n  - {{id: 1, listenable: \"{mask}\", listening: \"{mask}\", "
            f"nodes: [{', '.join(str(i + 1) for i in range(n))}]}}\n"
            f"mac:\n  always_backoff: {str(backoff).lower()}\n"
            f"applications:\n  - {{id: c, kind: cbr, src: 1, dst: 2, start_s: 0.5}}\n")
    s = load_scenario(text)
    assert load_scenario(dump_scenario(s)) == s


def test_path_interpolation_and_clamp():
    path = WaypointPath(((0.0, 0.0), (10.0, 20.0)), (0, 10 * TICKS_PER_SECOND))
    assert position_at(path, 5 * TICKS_PER_SECOND) == (5.0, 10.0)
    assert position_at(path, 99 * TICKS_PER_SECOND) == (10.0, 20.0)
    still = WaypointPath.static((3, 4))
    assert still.is_static and position_at(still, 10**9) == (3, 4)


def test_fast_leg_takes_a_fifth_of_the_time():
    slow = WaypointPath.from_legs((0, 0), 0, [((100, 0), "slow")])
    fast = WaypointPath.from_legs((0, 0), 0, [((100, 0), "fast")])
    assert slow.times[-1] == 100 * TICKS_PER_SECOND
    assert fast.times[-1] * 5 == slow.times[-1]


def test_path_validation():
    with pytest.raises(ConfigError):
        WaypointPath(((0, 0), (1, 1)), (5, 5))
    with pytest.raises(ConfigError):
        WaypointPath.from_legs((0, 0), 0, [((0, 0), "slow")])
    with pytest.raises(ConfigError):
        WaypointPath.from_legs((0, 0), 0, [((1, 0), "warp")])


@given(st.lists(st.tuples(st.integers(-300, 300), st.integers(-300, 300)), min_size=1, max_size=5),
       st.integers(0, 3_000_000_000))
def test_position_stays_on_the_path(points, t):
    legs = []
    prev = (0, 0)
    for p in points:
        if p != prev:
            legs.append((p, "slow"))
            prev = p
    if not legs:
        return
    path = WaypointPath.from_legs((0, 0), 0, legs)
    x, y = position_at(path, t)
    # the point lies on some segment of the polyline
    on = False
    for (x0, y0), (x1, y1) in zip(path.points, path.points[1:]):
        seg = math.dist((x0, y0), (x1, y1))
        if abs(math.dist((x0, y0), (x, y)) + math.dist((x, y), (x1, y1)) - seg) < 1e-6:
            on = True
    assert on
