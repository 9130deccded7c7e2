"""Social-compliance predicates and hierarchical classification.

Four predicates are evaluated over a candidate action's predicted rollout:
activity-aware distancing, minimum proxemic distancing, collision freedom,
and time-budget feasibility. An action is then classified into the most
stringent of four compliance levels, each a conjunction of predicates that
drops one social requirement at a time while always keeping collision
freedom and timeliness.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from .errors import ConfigError, InputError
from .world_model import ACTIVITIES, PHONE, SITTING, STANDING, TALKING, WALKING

if TYPE_CHECKING:
    from .planner import Rollout

DEFAULT_PREF_TABLE = {
    TALKING: 1.2,
    WALKING: 0.8,
    STANDING: 0.6,
    SITTING: 0.6,
    PHONE: 0.8,
}


@dataclass(frozen=True)
class ComplianceParams:
    """Numerical knobs for the compliance predicates. Immutable after load."""

    d_min: float = 0.5
    t_max: float = 50.0
    pref_table: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_PREF_TABLE))
    dt: float = 0.25
    max_speed: float = 1.0
    horizon_steps: int = 5

    def __post_init__(self):
        if self.d_min <= 0 or self.t_max <= 0 or self.dt <= 0:
            raise ConfigError("d_min, t_max and dt must be positive")
        if self.max_speed <= 0 or self.horizon_steps < 1:
            raise ConfigError("max_speed must be positive and horizon_steps >= 1")
        for name in ACTIVITIES:
            if name not in self.pref_table:
                raise ConfigError(f"pref_table missing activity {name!r}")

    def pref(self, activity: str) -> float:
        try:
            return self.pref_table[activity]
        except KeyError:
            raise ConfigError(f"no preferred distance configured for activity {activity!r}")


@dataclass(frozen=True)
class PredicateVector:
    """Truth values of the four predicates for one candidate action."""

    es: bool
    ed: bool
    not_ec: bool
    et: bool

    def as_dict(self) -> dict[str, bool]:
        return {"es": self.es, "ed": self.ed, "not_ec": self.not_ec, "et": self.et}

    def satisfies(self, level: "ComplianceLevel") -> bool:
        """Whether this vector supports the given level's conjunction."""
        if level is ComplianceLevel.NONE:
            return False
        needs_es, needs_ed = LEVEL_REQUIREMENTS[level]
        return (
            self.not_ec
            and self.et
            and (self.es or not needs_es)
            and (self.ed or not needs_ed)
        )


class ComplianceLevel(enum.Enum):
    """Progressively relaxed conjunctions, strongest first.

    LEVEL1 requires all four predicates; LEVEL2 drops the minimum-distance
    requirement; LEVEL3 drops the activity requirement; LEVEL4 keeps only
    collision freedom and timeliness. NONE means not even LEVEL4 holds.
    """

    LEVEL1 = "D1"
    LEVEL2 = "D2"
    LEVEL3 = "D3"
    LEVEL4 = "D4"
    NONE = "none"


# (needs_es, needs_ed) per level; collision freedom and timeliness are
# required by every level.
LEVEL_REQUIREMENTS = {
    ComplianceLevel.LEVEL1: (True, True),
    ComplianceLevel.LEVEL2: (True, False),
    ComplianceLevel.LEVEL3: (False, True),
    ComplianceLevel.LEVEL4: (False, False),
}

LEVEL_ORDER = (
    ComplianceLevel.LEVEL1,
    ComplianceLevel.LEVEL2,
    ComplianceLevel.LEVEL3,
    ComplianceLevel.LEVEL4,
)


def _clearance_ok(rollout: "Rollout", margins: np.ndarray) -> bool:
    # margins: per-human required center-to-center distance, shape (n,)
    if rollout.human_distances.size == 0:
        return True
    return bool((rollout.human_distances >= margins[None, :]).all())


def _margins(rollout: "Rollout", extra_per_human) -> np.ndarray:
    rho_r = rollout.frame.robot.radius
    return np.array(
        [rho_r + h.radius + extra for h, extra in zip(rollout.frame.humans, extra_per_human)]
    )


def eval_activity_awareness(rollout: "Rollout", params: ComplianceParams) -> bool:
    """True iff every human keeps at least its activity-preferred distance
    (plus both radii) from the robot at every rollout step."""
    if rollout.n_steps == 0:
        raise InputError("rollout must contain at least one step")
    prefs = [params.pref(h.activity) for h in rollout.frame.humans]
    return _clearance_ok(rollout, _margins(rollout, prefs))


def eval_distance_awareness(rollout: "Rollout", params: ComplianceParams) -> bool:
    """True iff the universal minimum distance d_min (plus radii) holds
    throughout the rollout."""
    if rollout.n_steps == 0:
        raise InputError("rollout must contain at least one step")
    n = len(rollout.frame.humans)
    return _clearance_ok(rollout, _margins(rollout, [params.d_min] * n))


def eval_collision_free(rollout: "Rollout", params: ComplianceParams) -> bool:
    """True iff robot and human discs never overlap during the rollout."""
    n = len(rollout.frame.humans)
    return _clearance_ok(rollout, _margins(rollout, [0.0] * n))


def eval_time_constraint(rollout: "Rollout", elapsed: float, params: ComplianceParams) -> bool:
    """Optimistic completion-time bound, inclusive at the budget.

    elapsed + rollout duration + straight-line remaining distance at max
    speed must not exceed t_max. The bound is admissible: it never rejects an
    action that could still finish in time.
    """
    diff = rollout.frame.robot.goal - rollout.robot_positions[-1]
    remaining = float(np.sqrt((diff * diff).sum()))
    total = elapsed + rollout.duration + remaining / params.max_speed
    return total <= params.t_max


def classify(vector: PredicateVector) -> ComplianceLevel:
    """Most stringent level whose conjunction holds, or NONE."""
    for level in LEVEL_ORDER:
        if vector.satisfies(level):
            return level
    return ComplianceLevel.NONE


def compliance_level(
    rollout: "Rollout", elapsed: float, params: ComplianceParams
) -> tuple[ComplianceLevel, PredicateVector]:
    """Evaluate all four predicates and classify the action."""
    vector = PredicateVector(
        es=eval_activity_awareness(rollout, params),
        ed=eval_distance_awareness(rollout, params),
        not_ec=eval_collision_free(rollout, params),
        et=eval_time_constraint(rollout, elapsed, params),
    )
    return classify(vector), vector
