import math
import re

import numpy as np
import pytest

from socnav.errors import IdentityError, InputError
from socnav.simulator import ScenarioConfig
from socnav.world_model import (
    SpatialEdge,
    TemporalEdge,
    build_world_graph,
    fmt_num,
    fmt_vec,
    render_edge_text,
    render_environment_summary,
    render_observation_prompt,
    render_vertex_text,
    trend_word,
)

from conftest import make_frame, make_human, make_robot, random_frame


# --- graph construction -------------------------------------------------------

def test_first_frame_345_triangle():
    frame = make_frame(humans=[make_human(0, position=(3.0, 4.0))])
    g = build_world_graph(None, frame)
    assert len(g.spatial_edges) == 1
    assert g.spatial_edges[0].distance == pytest.approx(5.0)
    assert g.spatial_edges[0].delta_distance is None
    assert g.temporal_edges == []


def test_goal_distance_delta_decreased():
    prev = make_frame(time=0.0, robot=make_robot(position=(0.0, -2.0), goal=(0.0, 4.0)))
    curr = make_frame(time=0.25, robot=make_robot(position=(0.0, -1.0), goal=(0.0, 4.0)))
    g = build_world_graph(prev, curr)
    (edge,) = g.temporal_edges
    assert edge.kind == "robot_goal_distance"
    assert edge.value == pytest.approx(5.0)
    assert edge.delta == pytest.approx(-1.0)
    assert edge.trend == "decreased"


def test_edge_distances_match_bruteforce_oracle(rng):
    # oracle: plain python pairwise distances over robot + humans
    for _ in range(200):
        curr = random_frame(rng)
        g = build_world_graph(None, curr)
        agents = {"robot": curr.robot.position}
        agents.update({h.id: h.position for h in curr.humans})
        expected = {}
        ids = list(agents)
        for i in range(len(ids)):
            for j in range(i + 1, len(ids)):
                a, b = agents[ids[i]], agents[ids[j]]
                expected[frozenset((ids[i], ids[j]))] = math.hypot(
                    a[0] - b[0], a[1] - b[1]
                )
        got = {frozenset((e.from_id, e.to_id)): e.distance for e in g.spatial_edges}
        assert set(got) == set(expected)
        for key, d in expected.items():
            assert got[key] == pytest.approx(d, rel=1e-9)


def test_pair_count_and_robot_edges_first(rng):
    frame = random_frame(rng, n_humans=4)
    g = build_world_graph(None, frame)
    n = len(frame.humans)
    assert len(g.spatial_edges) == n + n * (n - 1) // 2
    assert all(e.to_id == "robot" for e in g.spatial_edges[:n])
    assert all("robot" not in (e.from_id, e.to_id) for e in g.spatial_edges[n:])


def test_deltas_are_exact_differences(rng):
    prev = random_frame(rng, n_humans=3)
    curr = random_frame(rng, n_humans=3)
    curr.time = prev.time + 0.25
    g = build_world_graph(prev, curr)
    for e in g.spatial_edges:
        ids = [e.from_id, e.to_id]
        def pos(frame, aid):
            return frame.robot.position if aid == "robot" else frame.human_by_id(aid).position
        d_curr = np.linalg.norm(pos(curr, ids[0]) - pos(curr, ids[1]))
        d_prev = np.linalg.norm(pos(prev, ids[0]) - pos(prev, ids[1]))
        assert e.delta_distance == d_curr - d_prev


def test_unknown_prev_id_is_identity_error():
    prev = make_frame(time=0.0, humans=[make_human(0), make_human(1, position=(1.0, 1.0))])
    curr = make_frame(time=1.0, humans=[make_human(0)])
    with pytest.raises(IdentityError):
        build_world_graph(prev, curr)


def test_new_human_in_curr_has_no_delta():
    prev = make_frame(time=0.0, humans=[make_human(0)])
    curr = make_frame(time=1.0, humans=[make_human(0), make_human(1, position=(1.0, 1.0))])
    g = build_world_graph(prev, curr)
    by_pair = {frozenset((e.from_id, e.to_id)): e for e in g.spatial_edges}
    assert by_pair[frozenset(("human_0", "robot"))].delta_distance is not None
    assert by_pair[frozenset(("human_1", "robot"))].delta_distance is None
    assert [t.agent_id for t in g.temporal_edges] == ["robot", "human_0"]


def test_nonfinite_coordinates_rejected():
    with pytest.raises(InputError):
        make_frame(humans=[make_human(0, position=(float("nan"), 0.0))])


def test_duplicate_ids_rejected():
    with pytest.raises(IdentityError):
        make_frame(humans=[make_human(0), make_human(0)])


def test_non_monotone_time_rejected():
    prev = make_frame(time=2.0)
    curr = make_frame(time=1.0)
    with pytest.raises(InputError):
        build_world_graph(prev, curr)


# --- sentence templates ---------------------------------------------------------

def test_robot_vertex_template_bytes():
    robot = make_robot(position=(0.0, 0.0), velocity=(1.0, 0.0), goal=(5.0, 0.0),
                       task="delivery")
    assert render_vertex_text(robot, social_distance=0.5) == (
        "[robot] is located at [(0.00, 0.00)] with velocity [(1.00, 0.00)] "
        "toward the destination [(5.00, 0.00)], executing task [delivery] "
        "with social distance [0.50]."
    )


def test_human_vertex_template_bytes():
    human = make_human(0, position=(3.0, 4.0), velocity=(0.0, 0.0), activity="talking")
    assert render_vertex_text(human) == (
        "[human_0] is located at [(3.00, 4.00)] with velocity [(0.00, 0.00)] "
        "and the collision radius [0.30], performing personal activity [talking]."
    )


def test_zero_velocity_renders_zero_pair():
    human = make_human(0, velocity=(0.0, 0.0))
    assert "[(0.00, 0.00)]" in render_vertex_text(human)


def test_human_temporal_edge_template_bytes():
    edge = TemporalEdge("human_0", "human_velocity", 1.2, 0.2, "increased")
    assert render_edge_text(edge) == (
        "The velocity [1.20] of agent [human_0] has [increased] compared to "
        "the last timestep, with a difference [0.20]."
    )


def test_robot_temporal_edge_template_bytes():
    edge = TemporalEdge("robot", "robot_goal_distance", 5.0, -1.0, "decreased")
    text = render_edge_text(edge, goal=(0.0, 4.0))
    assert text == (
        "The absolute distance [5.00] between agent [robot] and destination "
        "[(0.00, 4.00)] has [decreased], compared to the last timestep with "
        "a difference [-1.00]."
    )


def test_spatial_edge_template_bytes():
    edge = SpatialEdge("human_0", "robot", 2.5, -0.1, "decreased")
    assert render_edge_text(edge) == (
        "The relative distance [2.50] between [human_0] and [robot] has "
        "[decreased] compared to the last timestep, with a difference [-0.10]."
    )


def test_first_frame_spatial_edge_renders_delta_free():
    edge = SpatialEdge("human_0", "robot", 2.5)
    assert render_edge_text(edge) == (
        "The relative distance [2.50] between [human_0] and [robot]."
    )


@pytest.mark.parametrize(
    "delta,expected",
    [(0.2, "increased"), (-1.0, "decreased"), (0.0, "unchanged"),
     (0.0009, "unchanged"), (-0.001, "unchanged"), (0.0011, "increased")],
)
def test_trend_word_tolerance(delta, expected):
    assert trend_word(delta) == expected


def test_negative_zero_normalized():
    assert fmt_num(-0.0001) == "0.00"
    assert fmt_vec((-0.0001, -0.0)) == "(0.00, 0.00)"


# --- full prompt ---------------------------------------------------------------

def test_empty_crowd_prompt_lines():
    prev = make_frame(time=0.0, robot=make_robot(position=(0.0, -2.0)))
    curr = make_frame(time=0.25, robot=make_robot(position=(0.0, -1.75)))
    g = build_world_graph(prev, curr)
    lines = render_observation_prompt(g).splitlines()
    assert len(lines) == 2
    assert lines[0].startswith("[robot] is located")
    assert lines[1].startswith("The absolute distance")


def test_two_human_prompt_counts_and_order():
    prev = make_frame(time=0.0, humans=[make_human(0), make_human(1, position=(1.0, 1.0))])
    curr = make_frame(time=0.25, humans=[make_human(0), make_human(1, position=(1.0, 1.2))])
    g = build_world_graph(prev, curr)
    lines = render_observation_prompt(g).splitlines()
    # 1 robot + 2 humans + 3 temporal (robot, 2 humans) + 3 spatial
    assert len(lines) == 9
    assert lines[0].startswith("[robot]")
    assert lines[1].startswith("[human_0]")
    assert lines[2].startswith("[human_1]")
    assert lines[3].startswith("The absolute distance")
    assert lines[4].startswith("The velocity")
    assert all(l.startswith("The relative distance") for l in lines[6:])


def test_prompt_deterministic(rng):
    prev = random_frame(rng, n_humans=3)
    curr = random_frame(rng, n_humans=3)
    curr.time = prev.time + 0.5
    g1 = build_world_graph(prev, curr)
    g2 = build_world_graph(prev, curr)
    assert render_observation_prompt(g1) == render_observation_prompt(g2)


_TUPLE = r"\((-?\d+\.\d\d), (-?\d+\.\d\d)\)"


def _parse_prompt(text):
    """Parse-back oracle: recover every quantized slot value from the text."""
    parsed = {"vertices": {}, "temporal": {}, "spatial": {}}
    for line in text.splitlines():
        m = re.fullmatch(
            rf"\[robot\] is located at \[{_TUPLE}\] with velocity \[{_TUPLE}\] "
            rf"toward the destination \[{_TUPLE}\], executing task \[(.*?)\] "
            rf"with social distance \[(-?\d+\.\d\d)\].",
            line,
        )
        if m:
            parsed["vertices"]["robot"] = tuple(float(x) for x in m.groups()[:6])
            continue
        m = re.fullmatch(
            rf"\[(\w+)\] is located at \[{_TUPLE}\] with velocity \[{_TUPLE}\] and "
            rf"the collision radius \[(-?\d+\.\d\d)\], performing personal "
            rf"activity \[(\w+)\].",
            line,
        )
        if m:
            parsed["vertices"][m.group(1)] = (
                tuple(float(x) for x in m.groups()[1:6]) + (m.group(7),)
            )
            continue
        m = re.fullmatch(
            rf"The absolute distance \[(-?\d+\.\d\d)\] between agent \[(\w+)\] and "
            rf"destination \[{_TUPLE}\] has \[(\w+)\], compared to the last "
            rf"timestep with a difference \[(-?\d+\.\d\d)\].",
            line,
        )
        if m:
            parsed["temporal"][m.group(2)] = (float(m.group(1)), float(m.group(6)))
            continue
        m = re.fullmatch(
            rf"The velocity \[(-?\d+\.\d\d)\] of agent \[(\w+)\] has \[(\w+)\] "
            rf"compared to the last timestep, with a difference \[(-?\d+\.\d\d)\].",
            line,
        )
        if m:
            parsed["temporal"][m.group(2)] = (float(m.group(1)), float(m.group(4)))
            continue
        m = re.fullmatch(
            rf"The relative distance \[(-?\d+\.\d\d)\] between \[(\w+)\] and "
            rf"\[(\w+)\](?: has \[(\w+)\] compared to the last timestep, with a "
            rf"difference \[(-?\d+\.\d\d)\])?.",
            line,
        )
        if m:
            delta = float(m.group(5)) if m.group(5) is not None else None
            parsed["spatial"][(m.group(2), m.group(3))] = (float(m.group(1)), delta)
            continue
        raise AssertionError(f"unparseable line: {line!r}")
    return parsed


def _q(x):
    q = round(float(x), 2)
    return 0.0 if q == 0.0 else q


def test_prompt_roundtrip_parse_oracle(rng):
    # rendering must be injective on quantized slot values: parse the text
    # back and compare against the quantized graph
    for _ in range(1000):
        prev = random_frame(rng, n_humans=int(rng.integers(0, 4)))
        curr = random_frame(rng, n_humans=len(prev.humans))
        curr.time = prev.time + 0.25
        g = build_world_graph(prev, curr)
        parsed = _parse_prompt(render_observation_prompt(g))

        robot = parsed["vertices"]["robot"]
        assert robot[:2] == tuple(_q(v) for v in curr.robot.position)
        assert robot[2:4] == tuple(_q(v) for v in curr.robot.velocity)
        assert robot[4:6] == tuple(_q(v) for v in curr.robot.goal)
        for h in curr.humans:
            px, py, vx, vy, radius, activity = parsed["vertices"][h.id]
            assert (px, py) == tuple(_q(v) for v in h.position)
            assert (vx, vy) == tuple(_q(v) for v in h.velocity)
            assert radius == _q(h.radius)
            assert activity == h.activity
        for e in g.temporal_edges:
            assert parsed["temporal"][e.agent_id] == (_q(e.value), _q(e.delta))
        for e in g.spatial_edges:
            value, delta = parsed["spatial"][(e.from_id, e.to_id)]
            assert value == _q(e.distance)
            assert delta == _q(e.delta_distance)


# --- environment summary ---------------------------------------------------------

def test_summary_contains_time_budget():
    assert "T_max = 50" in render_environment_summary(ScenarioConfig())


def test_summary_deterministic():
    cfg = ScenarioConfig()
    assert render_environment_summary(cfg) == render_environment_summary(cfg)


def test_summary_dmin_locality():
    from dataclasses import replace
    from socnav.constraints import ComplianceParams

    base = ScenarioConfig()
    changed = replace(base, params=ComplianceParams(d_min=0.7))
    a = render_environment_summary(base).splitlines()
    b = render_environment_summary(changed).splitlines()
    assert len(a) == len(b)
    diffs = [i for i, (x, y) in enumerate(zip(a, b)) if x != y]
    assert len(diffs) == 1
    assert "d_min" in a[diffs[0]]
