"""Action sampling, short-horizon rollout prediction, and plan selection.

The action space is a finite grid of speed/heading velocity commands plus an
optional stop. Each candidate is rolled out under constant robot command and
constant observed human velocities, scored by predicted goal progress, and
classified by the compliance predicates; the final choice is delegated to
the deduction module's degradation loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import constraints, deduction
from .constraints import ComplianceParams
from .errors import InputError
from .world_model import ObservationFrame


@dataclass(frozen=True)
class ActionSpace:
    """Finite velocity-command grid: speeds x headings, plus optional stop."""

    speeds: tuple[float, ...]
    headings: tuple[float, ...]
    includes_stop: bool = True

    def __post_init__(self):
        if not self.speeds or not self.headings:
            raise InputError("action space needs at least one speed and one heading")


def default_action_space(max_speed: float = 1.0, n_headings: int = 12) -> ActionSpace:
    """Four speed rings up to max_speed, evenly spaced headings, plus stop."""
    speeds = tuple(max_speed * k / 4 for k in range(1, 5))
    headings = tuple(2 * math.pi * i / n_headings for i in range(n_headings))
    return ActionSpace(speeds=speeds, headings=headings, includes_stop=True)


@dataclass(frozen=True)
class CandidateAction:
    velocity_command: tuple[float, float]
    index: int

    @property
    def velocity(self) -> np.ndarray:
        return np.array(self.velocity_command, dtype=float)


def sample_actions(space: ActionSpace) -> list[CandidateAction]:
    """Deterministic enumeration: stop first, then speed-major heading-minor."""
    actions: list[CandidateAction] = []
    if space.includes_stop:
        actions.append(CandidateAction((0.0, 0.0), 0))
    for speed in space.speeds:
        for heading in space.headings:
            command = (speed * math.cos(heading), speed * math.sin(heading))
            actions.append(CandidateAction(command, len(actions)))
    return actions


@dataclass
class Rollout:
    """Predicted robot and human positions over the planning horizon.

    ``robot_positions`` has shape (steps, 2); ``human_positions`` has shape
    (steps, n_humans, 2), both excluding the current state. The frame is kept
    so evaluators can read radii, activities, and the goal.
    """

    action: CandidateAction
    frame: ObservationFrame
    robot_positions: np.ndarray
    human_positions: np.ndarray
    duration: float

    @property
    def n_steps(self) -> int:
        return self.robot_positions.shape[0]

    @cached_property
    def human_distances(self) -> np.ndarray:
        """Center-to-center robot-human distance per step, shape (steps, n)."""
        if self.human_positions.shape[1] == 0:
            return np.zeros((self.n_steps, 0))
        diff = self.human_positions - self.robot_positions[:, None, :]
        return np.sqrt((diff * diff).sum(axis=-1))


def rollout(
    action: CandidateAction, frame: ObservationFrame, h_steps: int, dt: float
) -> Rollout:
    """Integrate the command and constant-velocity humans for h_steps of dt."""
    if h_steps < 1:
        raise InputError("h_steps must be >= 1")
    steps = np.arange(1, h_steps + 1, dtype=float) * dt
    robot_positions = frame.robot.position[None, :] + steps[:, None] * action.velocity[None, :]
    if frame.humans:
        p = np.stack([h.position for h in frame.humans])
        v = np.stack([h.velocity for h in frame.humans])
        human_positions = p[None, :, :] + steps[:, None, None] * v[None, :, :]
    else:
        human_positions = np.zeros((h_steps, 0, 2))
    return Rollout(
        action=action,
        frame=frame,
        robot_positions=robot_positions,
        human_positions=human_positions,
        duration=h_steps * dt,
    )


def score(
    action: CandidateAction, frame: ObservationFrame, h_steps: int = 5, dt: float = 0.25
) -> float:
    """Negative predicted end-of-horizon distance to goal (higher is better)."""
    end = frame.robot.position + action.velocity * (h_steps * dt)
    diff = frame.robot.goal - end
    return -float(np.sqrt((diff * diff).sum()))


def evaluate_candidates(
    frame: ObservationFrame,
    actions: list[CandidateAction],
    elapsed: float,
    params: ComplianceParams,
) -> list[tuple[CandidateAction, constraints.PredicateVector, float]]:
    """Predicate vectors and scores for every candidate, batched.

    Arithmetic is element-for-element the same as rolling out and evaluating
    each candidate individually; the batching only removes per-candidate
    call overhead.
    """
    h, dt = params.horizon_steps, params.dt
    steps = np.arange(1, h + 1, dtype=float) * dt
    vels = np.array([a.velocity_command for a in actions])  # (C, 2)
    robot = frame.robot.position[None, None, :] + steps[None, :, None] * vels[:, None, :]
    end_diff = frame.robot.goal[None, :] - robot[:, -1, :]
    remaining = np.sqrt((end_diff * end_diff).sum(axis=1))
    et = (elapsed + h * dt + remaining / params.max_speed) <= params.t_max
    scores = -remaining

    if frame.humans:
        hp = np.stack([x.position for x in frame.humans])
        hv = np.stack([x.velocity for x in frame.humans])
        humans = hp[None, :, :] + steps[:, None, None] * hv[None, :, :]  # (h, n, 2)
        diff = robot[:, :, None, :] - humans[None, :, :, :]
        dists = np.sqrt((diff * diff).sum(axis=-1))
        rho = frame.robot.radius + np.array([x.radius for x in frame.humans])
        prefs = np.array([params.pref(x.activity) for x in frame.humans])
        es = (dists >= (rho + prefs)[None, None, :]).all(axis=(1, 2))
        ed = (dists >= (rho + params.d_min)[None, None, :]).all(axis=(1, 2))
        nec = (dists >= rho[None, None, :]).all(axis=(1, 2))
    else:
        ones = np.ones(len(actions), dtype=bool)
        es = ed = nec = ones

    return [
        (
            action,
            constraints.PredicateVector(
                es=bool(es[i]), ed=bool(ed[i]), not_ec=bool(nec[i]), et=bool(et[i])
            ),
            float(scores[i]),
        )
        for i, action in enumerate(actions)
    ]


def plan_step(
    frame: ObservationFrame,
    prev_frame: ObservationFrame | None,
    elapsed: float,
    params: ComplianceParams,
    space: ActionSpace | None = None,
) -> deduction.DeductionOutcome:
    """One receding-horizon planning cycle.

    Samples the action space, predicts each candidate's rollout, evaluates
    the compliance predicates, and selects via level degradation. The
    previous frame is accepted for interface stability; constant-velocity
    prediction only needs the current one.
    """
    if space is None:
        space = default_action_space(params.max_speed)
    candidates = evaluate_candidates(frame, sample_actions(space), elapsed, params)
    return deduction.degrade_and_select(candidates)
