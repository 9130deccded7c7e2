"""Spatial-temporal world model over two consecutive observation frames.

Builds a graph of agent vertices plus spatial (pairwise distance) and
temporal (frame-to-frame change) edges, and renders it into fixed sentence
templates. Rendered text is deterministic: the same graph always produces
byte-identical output, with every slot value wrapped in square brackets and
numbers printed with two decimal places.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from .errors import IdentityError, InputError

ROBOT_ID = "robot"

# Built-in activity names; the preference table accepts arbitrary extras.
WALKING = "walking"
TALKING = "talking"
STANDING = "standing"
SITTING = "sitting"
PHONE = "phone"
ACTIVITIES = (WALKING, TALKING, STANDING, SITTING, PHONE)

TREND_UP = "increased"
TREND_DOWN = "decreased"
TREND_FLAT = "unchanged"

# |delta| at or below this renders as "unchanged" (meters or m/s).
TREND_TOLERANCE = 1e-3

# Rendered for the robot's social-distance slot when no explicit value is
# given; matches the default minimum proxemic distance.
DEFAULT_SOCIAL_DISTANCE = 0.5

ROBOT_VERTEX_TEMPLATE = (
    "[{r}] is located at [{p}] with velocity [{v}] toward the destination "
    "[{g}], executing task [{T}] with social distance [{d}]."
)
HUMAN_VERTEX_TEMPLATE = (
    "[{h}] is located at [{p}] with velocity [{v}] and the collision radius "
    "[{r}], performing personal activity [{a}]."
)
ROBOT_TEMPORAL_TEMPLATE = (
    "The absolute distance [{s}] between agent [{r}] and destination [{g}] "
    "has [{y}], compared to the last timestep with a difference [{ds}]."
)
HUMAN_TEMPORAL_TEMPLATE = (
    "The velocity [{v}] of agent [{h}] has [{y}] compared to the last "
    "timestep, with a difference [{dv}]."
)
SPATIAL_TEMPLATE = (
    "The relative distance [{rd}] between [{a}] and [{b}] has [{y}] compared "
    "to the last timestep, with a difference [{drd}]."
)
# First frame: no previous distance to compare against.
SPATIAL_TEMPLATE_NO_DELTA = "The relative distance [{rd}] between [{a}] and [{b}]."

KIND_ROBOT_GOAL = "robot_goal_distance"
KIND_HUMAN_VELOCITY = "human_velocity"


def fmt_num(x: float) -> str:
    """Fixed two-decimal format; negative zero is normalized to 0.00."""
    q = round(float(x), 2)
    if q == 0.0:
        q = 0.0
    return f"{q:.2f}"


def fmt_vec(v) -> str:
    """2D vector as a parenthesized pair, e.g. ``(1.00, -2.50)``."""
    return f"({fmt_num(v[0])}, {fmt_num(v[1])})"


def trend_word(delta: float, tolerance: float = TREND_TOLERANCE) -> str:
    if abs(delta) <= tolerance:
        return TREND_FLAT
    return TREND_UP if delta > 0 else TREND_DOWN


def _as_vec(value) -> np.ndarray:
    return np.asarray(value, dtype=float).reshape(2)


@dataclass
class RobotVertex:
    """Robot state as observed at one frame."""

    position: np.ndarray
    velocity: np.ndarray
    radius: float
    goal: np.ndarray
    task_label: str = "navigate_to_goal"
    elapsed_time: float = 0.0

    def __post_init__(self):
        self.position = _as_vec(self.position)
        self.velocity = _as_vec(self.velocity)
        self.goal = _as_vec(self.goal)
        if self.radius <= 0:
            raise InputError("robot radius must be positive")
        if self.elapsed_time < 0:
            raise InputError("elapsed_time must be non-negative")

    @property
    def goal_distance(self) -> float:
        return float(np.linalg.norm(self.goal - self.position))


@dataclass
class HumanVertex:
    """Observable human state: no goal or other private fields are carried."""

    id: str
    position: np.ndarray
    velocity: np.ndarray
    radius: float
    activity: str

    def __post_init__(self):
        self.position = _as_vec(self.position)
        self.velocity = _as_vec(self.velocity)
        if self.radius <= 0:
            raise InputError(f"human {self.id}: radius must be positive")

    @property
    def speed(self) -> float:
        return float(np.linalg.norm(self.velocity))


@dataclass
class ObservationFrame:
    """One observation: the robot plus zero or more humans, at a timestamp."""

    time: float
    robot: RobotVertex
    humans: list[HumanVertex] = field(default_factory=list)

    def __post_init__(self):
        if self.time < 0:
            raise InputError("frame time must be non-negative")
        ids = [h.id for h in self.humans]
        if len(set(ids)) != len(ids):
            raise IdentityError("duplicate human ids within a frame")
        for h in self.humans:
            if not (np.isfinite(h.position).all() and np.isfinite(h.velocity).all()):
                raise InputError(f"human {h.id}: non-finite coordinates")
        r = self.robot
        for arr in (r.position, r.velocity, r.goal):
            if not np.isfinite(arr).all():
                raise InputError("robot: non-finite coordinates")

    def human_by_id(self, hid: str) -> HumanVertex:
        for h in self.humans:
            if h.id == hid:
                return h
        raise IdentityError(f"unknown human id {hid!r}")


@dataclass
class SpatialEdge:
    """Pairwise Euclidean distance between two agents, with its frame delta."""

    from_id: str
    to_id: str
    distance: float
    delta_distance: float | None = None
    trend: str | None = None


@dataclass
class TemporalEdge:
    """Frame-to-frame change of a per-agent scalar (goal distance or speed)."""

    agent_id: str
    kind: str
    value: float
    delta: float
    trend: str


@dataclass
class WorldGraph:
    frame: ObservationFrame
    spatial_edges: list[SpatialEdge]
    temporal_edges: list[TemporalEdge]


def _id_sort_key(hid: str):
    # human_10 sorts after human_9: compare the numeric suffix when present
    m = re.match(r"^(.*?)(\d+)$", hid)
    if m:
        return (m.group(1), int(m.group(2)))
    return (hid, -1)


def build_world_graph(prev: ObservationFrame | None, curr: ObservationFrame) -> WorldGraph:
    """Construct the spatial-temporal graph for the current frame.

    Spatial edges cover every unordered agent pair (robot-human pairs first,
    then human-human); each carries the Euclidean distance and, when the pair
    existed in ``prev``, the distance change since then. Temporal edges exist
    only when ``prev`` is given: one robot-to-goal distance edge plus one
    speed edge per human seen in both frames.
    """
    if prev is not None:
        if prev.time >= curr.time:
            raise InputError("previous frame must be strictly earlier")
        prev_ids = {h.id for h in prev.humans}
        curr_ids = {h.id for h in curr.humans}
        missing = prev_ids - curr_ids
        if missing:
            raise IdentityError(f"humans vanished between frames: {sorted(missing)}")

    humans = sorted(curr.humans, key=lambda h: _id_sort_key(h.id))

    def dist(a, b) -> float:
        return float(np.linalg.norm(a - b))

    spatial: list[SpatialEdge] = []
    for h in humans:
        d = dist(h.position, curr.robot.position)
        edge = SpatialEdge(h.id, ROBOT_ID, d)
        if prev is not None and any(p.id == h.id for p in prev.humans):
            d_prev = dist(prev.human_by_id(h.id).position, prev.robot.position)
            edge.delta_distance = d - d_prev
            edge.trend = trend_word(edge.delta_distance)
        spatial.append(edge)
    for i, hi in enumerate(humans):
        for hj in humans[i + 1 :]:
            d = dist(hi.position, hj.position)
            edge = SpatialEdge(hi.id, hj.id, d)
            if prev is not None and all(
                any(p.id == x.id for p in prev.humans) for x in (hi, hj)
            ):
                d_prev = dist(
                    prev.human_by_id(hi.id).position, prev.human_by_id(hj.id).position
                )
                edge.delta_distance = d - d_prev
                edge.trend = trend_word(edge.delta_distance)
            spatial.append(edge)

    temporal: list[TemporalEdge] = []
    if prev is not None:
        goal_now = curr.robot.goal_distance
        goal_before = prev.robot.goal_distance
        delta = goal_now - goal_before
        temporal.append(
            TemporalEdge(ROBOT_ID, KIND_ROBOT_GOAL, goal_now, delta, trend_word(delta))
        )
        for h in humans:
            if any(p.id == h.id for p in prev.humans):
                v_now = h.speed
                dv = v_now - prev.human_by_id(h.id).speed
                temporal.append(
                    TemporalEdge(h.id, KIND_HUMAN_VELOCITY, v_now, dv, trend_word(dv))
                )

    return WorldGraph(frame=curr, spatial_edges=spatial, temporal_edges=temporal)


def render_vertex_text(
    v: RobotVertex | HumanVertex, social_distance: float = DEFAULT_SOCIAL_DISTANCE
) -> str:
    """Render one agent vertex into its sentence template.

    ``social_distance`` fills the robot's social-distance slot: the minimum
    proxemic distance currently in force (it is a policy knob, not a robot
    state variable, so it is passed in).
    """
    if isinstance(v, RobotVertex):
        return ROBOT_VERTEX_TEMPLATE.format(
            r=ROBOT_ID,
            p=fmt_vec(v.position),
            v=fmt_vec(v.velocity),
            g=fmt_vec(v.goal),
            T=v.task_label,
            d=fmt_num(social_distance),
        )
    return HUMAN_VERTEX_TEMPLATE.format(
        h=v.id,
        p=fmt_vec(v.position),
        v=fmt_vec(v.velocity),
        r=fmt_num(v.radius),
        a=v.activity,
    )


def render_edge_text(e: SpatialEdge | TemporalEdge, goal=None) -> str:
    """Render one edge into its sentence template.

    Spatial edges without a delta (first frame, or a human absent from the
    previous frame) use the comparison-free sentence. Robot temporal edges
    need the goal position for the destination slot.
    """
    if isinstance(e, SpatialEdge):
        if e.delta_distance is None:
            return SPATIAL_TEMPLATE_NO_DELTA.format(
                rd=fmt_num(e.distance), a=e.from_id, b=e.to_id
            )
        return SPATIAL_TEMPLATE.format(
            rd=fmt_num(e.distance),
            a=e.from_id,
            b=e.to_id,
            y=e.trend,
            drd=fmt_num(e.delta_distance),
        )
    if e.kind == KIND_ROBOT_GOAL:
        if goal is None:
            raise InputError("robot temporal edge needs the goal position")
        return ROBOT_TEMPORAL_TEMPLATE.format(
            s=fmt_num(e.value),
            r=e.agent_id,
            g=fmt_vec(goal),
            y=e.trend,
            ds=fmt_num(e.delta),
        )
    return HUMAN_TEMPORAL_TEMPLATE.format(
        v=fmt_num(e.value), h=e.agent_id, y=e.trend, dv=fmt_num(e.delta)
    )


def render_observation_prompt(
    g: WorldGraph, social_distance: float = DEFAULT_SOCIAL_DISTANCE
) -> str:
    """Full observation text: robot line, human lines, then all edges.

    Line order is fixed (robot vertex, humans by id, temporal edges, spatial
    edges) so identical graphs render to identical bytes.
    """
    lines = [render_vertex_text(g.frame.robot, social_distance)]
    humans = sorted(g.frame.humans, key=lambda h: _id_sort_key(h.id))
    lines.extend(render_vertex_text(h) for h in humans)
    lines.extend(render_edge_text(e, goal=g.frame.robot.goal) for e in g.temporal_edges)
    lines.extend(render_edge_text(e) for e in g.spatial_edges)
    return "\n".join(lines)


def render_environment_summary(cfg) -> str:
    """Fixed per-scenario preamble: arena, limits, preferences, action space.

    One clause per line so a single changed parameter changes exactly one
    line. ``cfg`` is a scenario configuration carrying compliance parameters
    and an action space (see ``socnav.simulator.ScenarioConfig``).
    """
    p = cfg.params
    half_w, half_h = cfg.arena_width / 2.0, cfg.arena_height / 2.0
    prefs = ", ".join(
        f"{name}: {fmt_num(d)} m" for name, d in sorted(p.pref_table.items())
    )
    space = cfg.action_space
    speeds = ", ".join(fmt_num(s) for s in space.speeds)
    lines = [
        "Environment summary:",
        f"Arena bounds: x in [{fmt_num(-half_w)}, {fmt_num(half_w)}] m, "
        f"y in [{fmt_num(-half_h)}, {fmt_num(half_h)}] m.",
        f"Time budget: T_max = {p.t_max:g} seconds.",
        f"Minimum proxemic distance: d_min = {fmt_num(p.d_min)} m (plus both agent radii).",
        f"Preferred distance by activity: {prefs} (plus both agent radii).",
        f"Action space: speeds {{{speeds}}} m/s x {len(space.headings)} headings"
        + (", plus a stop action" if space.includes_stop else "")
        + f"; max speed {fmt_num(p.max_speed)} m/s.",
        f"Control interval: {p.dt:g} s; prediction horizon: {p.horizon_steps} steps.",
    ]
    return "\n".join(lines)
