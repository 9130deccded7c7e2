"""Seeded 2D episodic crowd environment.

One robot navigates to a fixed goal among scripted humans whose activities
are ground-truth scenario attributes. Everything downstream of the seed is
deterministic: spawning, human motion, terminal detection, and the JSON
Lines trace format. Humans under the waypoint policy never react to the
robot; the social-force variant adds light repulsion from all agents.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Union

import numpy as np

from .constraints import ComplianceParams
from .deduction import DeductionOutcome, format_proof_tree
from .errors import ConfigError, InputError, StateError
from .planner import ActionSpace, CandidateAction, default_action_space
from .world_model import ACTIVITIES, WALKING, PHONE, HumanVertex, ObservationFrame, RobotVertex

SPAWN_CIRCLE_CROSSING = "circle_crossing"
SPAWN_RANDOM = "random"
POLICY_WAYPOINT = "constant_velocity_waypoint"
POLICY_SOCIAL_FORCE = "social_force_lite"

# Humans walk to their waypoint when their activity implies movement;
# otherwise they hold position. Phone users drift slower.
_ACTIVITY_SPEED_FACTOR = {WALKING: 1.0, PHONE: 0.6}

# Extra clearance required between spawned agents beyond summed radii.
_SPAWN_MARGIN = 0.05
_SPAWN_ATTEMPTS = 200

# Sub-steps per control interval for tunneling-safe collision checks.
_COLLISION_SUBSTEPS = 4


class EpisodeStatus(Enum):
    RUNNING = "running"
    SUCCESS = "success"
    COLLISION = "collision"
    TIMEOUT = "timeout"
    ABORTED = "aborted"


@dataclass(frozen=True)
class ScenarioConfig:
    """Full experiment configuration for one scenario family."""

    n_humans: int = 5
    arena_width: float = 12.0
    arena_height: float = 12.0
    robot_start: tuple[float, float] = (0.0, -4.0)
    robot_goal: tuple[float, float] = (0.0, 4.0)
    spawn_rule: str = SPAWN_CIRCLE_CROSSING
    human_policy: str = POLICY_WAYPOINT
    seed: int = 0
    goal_radius: float = 0.3
    robot_radius: float = 0.3
    human_radius: float = 0.3
    human_speed: float = 1.0
    activities: tuple[str, ...] = ACTIVITIES
    # optional switch schedule: (time seconds, human id, new activity);
    # activities are static for the episode when empty
    activity_schedule: tuple[tuple[float, str, str], ...] = ()
    task_label: str = "navigate_to_goal"
    params: ComplianceParams = field(default_factory=ComplianceParams)
    action_space: ActionSpace | None = None

    def __post_init__(self):
        if self.n_humans < 0:
            raise ConfigError("n_humans must be >= 0")
        if self.spawn_rule not in (SPAWN_CIRCLE_CROSSING, SPAWN_RANDOM):
            raise ConfigError(f"unknown spawn rule {self.spawn_rule!r}")
        if self.human_policy not in (POLICY_WAYPOINT, POLICY_SOCIAL_FORCE):
            raise ConfigError(f"unknown human policy {self.human_policy!r}")
        half_w, half_h = self.arena_width / 2, self.arena_height / 2
        gx, gy = self.robot_goal
        if abs(gx) > half_w or abs(gy) > half_h:
            raise ConfigError("robot goal must lie inside the arena")
        for name in self.activities:
            if name not in self.params.pref_table:
                raise ConfigError(f"activity {name!r} has no preference-table entry")
        for when, _hid, name in self.activity_schedule:
            if when < 0:
                raise ConfigError("activity switch times must be non-negative")
            if name not in self.params.pref_table:
                raise ConfigError(f"switch activity {name!r} has no preference-table entry")
        if self.action_space is None:
            object.__setattr__(
                self, "action_space", default_action_space(self.params.max_speed)
            )

    @property
    def dt(self) -> float:
        return self.params.dt

    @property
    def t_max(self) -> float:
        return self.params.t_max


@dataclass(frozen=True)
class HumanScript:
    """Private per-human motion state; never exposed in observation frames."""

    id: str
    waypoint: tuple[float, float]
    speed: float


@dataclass
class EpisodeState:
    frame: ObservationFrame
    tick: int
    status: EpisodeStatus
    cfg: ScenarioConfig
    scripts: tuple[HumanScript, ...] = ()

    @property
    def elapsed(self) -> float:
        return self.tick * self.cfg.dt


@dataclass
class EpisodeResult:
    """Everything recorded from one episode."""

    status: EpisodeStatus
    trajectory: list[ObservationFrame]
    outcomes: list[DeductionOutcome | None]
    actions: list[CandidateAction]
    cfg: ScenarioConfig

    @property
    def terminal_tick(self) -> int:
        return len(self.trajectory) - 1


def _waypoint_velocity(pos: np.ndarray, script: HumanScript) -> np.ndarray:
    to_goal = np.asarray(script.waypoint) - pos
    dist = float(np.linalg.norm(to_goal))
    if script.speed <= 0 or dist < 0.2:
        return np.zeros(2)
    return to_goal / dist * script.speed


def _social_force_velocity(
    pos: np.ndarray, script: HumanScript, others: list[tuple[np.ndarray, float]], radius: float
) -> np.ndarray:
    v = _waypoint_velocity(pos, script)
    if script.speed <= 0:
        return v
    for other_pos, other_radius in others:
        gap = pos - other_pos
        dist = float(np.linalg.norm(gap))
        if dist < 1e-9:
            continue
        v += (gap / dist) * 2.0 * np.exp((radius + other_radius - dist) / 0.5)
    speed = float(np.linalg.norm(v))
    if speed > script.speed:
        v = v / speed * script.speed
    return v


def _min_pair_clearance(positions: list[np.ndarray], radii: list[float]) -> float:
    worst = np.inf
    for i in range(len(positions)):
        for j in range(i + 1, len(positions)):
            d = float(np.linalg.norm(positions[i] - positions[j]))
            worst = min(worst, d - radii[i] - radii[j])
    return worst


def spawn_scenario(cfg: ScenarioConfig) -> EpisodeState:
    """Place the robot and humans; deterministic in cfg.seed.

    Humans are drawn one at a time and re-drawn (bounded attempts) until
    clear of the robot and of each other; activities come from the configured
    set. Raises ConfigError when the arena cannot fit the crowd.
    """
    rng = np.random.default_rng(cfg.seed)
    robot_pos = np.asarray(cfg.robot_start, dtype=float)
    circle_radius = min(cfg.arena_width, cfg.arena_height) / 2 - 2.0
    half_w = cfg.arena_width / 2 - cfg.human_radius
    half_h = cfg.arena_height / 2 - cfg.human_radius

    humans: list[HumanVertex] = []
    scripts: list[HumanScript] = []
    placed: list[np.ndarray] = [robot_pos]
    radii: list[float] = [cfg.robot_radius]

    for k in range(cfg.n_humans):
        for attempt in range(_SPAWN_ATTEMPTS):
            if cfg.spawn_rule == SPAWN_CIRCLE_CROSSING:
                angle = rng.uniform(0, 2 * np.pi)
                jitter = rng.uniform(-0.5, 0.5, size=2)
                pos = circle_radius * np.array([np.cos(angle), np.sin(angle)]) + jitter
                waypoint = -pos + rng.uniform(-0.5, 0.5, size=2)
            else:
                pos = rng.uniform([-half_w, -half_h], [half_w, half_h])
                waypoint = rng.uniform([-half_w, -half_h], [half_w, half_h])
            activity = cfg.activities[int(rng.integers(len(cfg.activities)))]
            clear = all(
                float(np.linalg.norm(pos - q)) >= cfg.human_radius + r + _SPAWN_MARGIN
                for q, r in zip(placed, radii)
            )
            if clear:
                break
        else:
            raise ConfigError(
                f"could not place human {k} after {_SPAWN_ATTEMPTS} attempts"
            )
        speed = cfg.human_speed * _ACTIVITY_SPEED_FACTOR.get(activity, 0.0)
        script = HumanScript(id=f"human_{k}", waypoint=tuple(waypoint), speed=speed)
        velocity = _waypoint_velocity(pos, script)
        humans.append(
            HumanVertex(
                id=script.id,
                position=pos,
                velocity=velocity,
                radius=cfg.human_radius,
                activity=activity,
            )
        )
        scripts.append(script)
        placed.append(pos)
        radii.append(cfg.human_radius)

    known = {h.id for h in humans}
    for _when, hid, _name in cfg.activity_schedule:
        if hid not in known:
            raise ConfigError(f"activity switch names unknown human {hid!r}")

    frame = ObservationFrame(
        time=0.0,
        robot=RobotVertex(
            position=robot_pos,
            velocity=np.zeros(2),
            radius=cfg.robot_radius,
            goal=np.asarray(cfg.robot_goal, dtype=float),
            task_label=cfg.task_label,
            elapsed_time=0.0,
        ),
        humans=humans,
    )
    return EpisodeState(
        frame=frame, tick=0, status=EpisodeStatus.RUNNING, cfg=cfg, scripts=tuple(scripts)
    )


def _human_velocities(state: EpisodeState) -> list[np.ndarray]:
    frame, cfg = state.frame, state.cfg
    velocities = []
    for h, script in zip(frame.humans, state.scripts):
        if cfg.human_policy == POLICY_SOCIAL_FORCE:
            others = [(frame.robot.position, frame.robot.radius)] + [
                (o.position, o.radius) for o in frame.humans if o.id != h.id
            ]
            velocities.append(_social_force_velocity(h.position, script, others, h.radius))
        else:
            velocities.append(_waypoint_velocity(h.position, script))
    return velocities


def step(state: EpisodeState, action: CandidateAction) -> EpisodeState:
    """Advance one control interval under the given robot command.

    Collision is checked at dt/4 sub-steps along the linear motion of all
    agents and takes precedence over goal arrival on the same tick; arrival
    takes precedence over timeout.
    """
    if state.status is not EpisodeStatus.RUNNING:
        raise StateError(f"cannot step a {state.status.value} episode")
    cfg = state.cfg
    dt = cfg.dt
    frame = state.frame

    robot_v = action.velocity
    human_vs = [h.velocity for h in frame.humans]

    collided = False
    for s in range(1, _COLLISION_SUBSTEPS + 1):
        tau = dt * s / _COLLISION_SUBSTEPS
        rp = frame.robot.position + robot_v * tau
        for h, hv in zip(frame.humans, human_vs):
            hp = h.position + hv * tau
            if float(np.linalg.norm(rp - hp)) < frame.robot.radius + h.radius:
                collided = True
                break
        if collided:
            break

    new_robot_pos = frame.robot.position + robot_v * dt
    new_time = frame.time + dt

    new_humans = []
    for h, hv in zip(frame.humans, human_vs):
        new_pos = h.position + hv * dt
        new_humans.append(
            HumanVertex(
                id=h.id,
                position=new_pos,
                velocity=hv,  # refreshed below once positions are known
                radius=h.radius,
                activity=h.activity,
            )
        )

    new_frame = ObservationFrame(
        time=new_time,
        robot=RobotVertex(
            position=new_robot_pos,
            velocity=robot_v,
            radius=frame.robot.radius,
            goal=frame.robot.goal,
            task_label=frame.robot.task_label,
            elapsed_time=new_time,
        ),
        humans=new_humans,
    )
    scripts = state.scripts
    due = [
        (hid, name)
        for when, hid, name in cfg.activity_schedule
        if frame.time < when <= new_time
    ]
    if due:
        switched = dict(due)
        by_id = {h.id: h for h in new_humans}
        updated = []
        for script in scripts:
            if script.id in switched:
                name = switched[script.id]
                by_id[script.id].activity = name
                speed = cfg.human_speed * _ACTIVITY_SPEED_FACTOR.get(name, 0.0)
                script = HumanScript(id=script.id, waypoint=script.waypoint, speed=speed)
            updated.append(script)
        scripts = tuple(updated)

    new_state = EpisodeState(
        frame=new_frame,
        tick=state.tick + 1,
        status=EpisodeStatus.RUNNING,
        cfg=cfg,
        scripts=scripts,
    )
    # Advertise each human's next-interval velocity so constant-velocity
    # prediction matches what the human will actually do.
    for h, v in zip(new_frame.humans, _human_velocities(new_state)):
        h.velocity = v

    if collided:
        new_state.status = EpisodeStatus.COLLISION
    elif float(np.linalg.norm(new_robot_pos - new_frame.robot.goal)) <= cfg.goal_radius:
        new_state.status = EpisodeStatus.SUCCESS
    elif new_time > cfg.t_max:
        new_state.status = EpisodeStatus.TIMEOUT
    return new_state


Policy = Callable[
    [ObservationFrame, Union[ObservationFrame, None], float],
    Union[DeductionOutcome, CandidateAction],
]


def run_episode(cfg: ScenarioConfig, policy: Policy) -> EpisodeResult:
    """Spawn, then loop policy and step until a terminal status.

    The policy receives (frame, previous frame, elapsed seconds) and returns
    either a deduction outcome (recorded, its action executed) or a bare
    action. A policy exception aborts the episode with ABORTED status.
    """
    state = spawn_scenario(cfg)
    trajectory = [state.frame]
    outcomes: list[DeductionOutcome | None] = []
    actions: list[CandidateAction] = []
    prev_frame: ObservationFrame | None = None

    while state.status is EpisodeStatus.RUNNING:
        try:
            decision = policy(state.frame, prev_frame, state.elapsed)
        except Exception:
            state.status = EpisodeStatus.ABORTED
            break
        if isinstance(decision, DeductionOutcome):
            outcomes.append(decision)
            action = decision.action
        else:
            outcomes.append(None)
            action = decision
        actions.append(action)
        prev_frame = state.frame
        state = step(state, action)
        trajectory.append(state.frame)

    return EpisodeResult(
        status=state.status,
        trajectory=trajectory,
        outcomes=outcomes,
        actions=actions,
        cfg=cfg,
    )


def stop_policy(frame, prev_frame, elapsed) -> CandidateAction:
    """Stationary robot; useful as a timeout baseline."""
    return CandidateAction((0.0, 0.0), 0)


# --- trace files -------------------------------------------------------------


def _trace_record(
    tick: int, frame: ObservationFrame, outcome: DeductionOutcome | None, executed
) -> dict:
    record = {
        "tick": tick,
        "time": frame.time,
        "robot": {
            "p": [float(x) for x in frame.robot.position],
            "v": [float(x) for x in frame.robot.velocity],
        },
        "humans": [
            {
                "id": h.id,
                "p": [float(x) for x in h.position],
                "v": [float(x) for x in h.velocity],
                "activity": h.activity,
            }
            for h in frame.humans
        ],
        "action": None,
        "level": None,
        "predicate_vector": None,
        "forced": None,
        "repaired": None,
        "proof": None,
    }
    if executed is not None:
        record["action"] = [float(x) for x in executed.velocity_command]
    if outcome is not None:
        record["level"] = outcome.level.value
        record["predicate_vector"] = outcome.facts.as_dict()
        record["forced"] = outcome.forced
        record["repaired"] = outcome.repaired
        record["proof"] = format_proof_tree(outcome.tree)
    return record


def trace_records(result: EpisodeResult) -> list[dict]:
    """One JSON-ready record per tick; the terminal tick has no action."""
    records = []
    for tick, frame in enumerate(result.trajectory):
        if tick < len(result.actions):
            outcome = result.outcomes[tick]
            executed = result.actions[tick]
        else:
            outcome, executed = None, None
        records.append(_trace_record(tick, frame, outcome, executed))
    return records


def write_trace(path, result: EpisodeResult) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in trace_records(result):
            fh.write(json.dumps(record, sort_keys=True) + "\n")


def read_trace(path) -> list[dict]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise InputError(f"{path}: line {lineno}: {exc}") from exc
    return records
