"""Stepwise reasoning over a pluggable text backend.

A fixed eight-step guidance chain walks a backend through the planning
procedure: restate the scene, evaluate each compliance predicate over the
candidate shortlist, classify the level, verify, and emit an action. Each
step's prompt embeds every earlier reply, so the chain is strictly
sequential. Replies must carry a fenced, tag-labelled JSON block; free text
around the block is ignored.

The backend's claims are never trusted: the final action is re-checked by
the constraint and deduction modules, and any unsupported or unparseable
claim falls back to the deterministic planner.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
from dataclasses import dataclass
from typing import Callable, Protocol

import requests

from . import constraints, deduction, planner
from .constraints import ComplianceLevel, ComplianceParams
from .errors import ChainError, FixtureError, ParseError, TransportError
from .planner import ActionSpace, CandidateAction
from .world_model import (
    ObservationFrame,
    build_world_graph,
    fmt_num,
    render_environment_summary,
    render_observation_prompt,
)

# One transport failure or unparseable reply is retried this many times
# before the chain gives up on the step.
RETRY_BUDGET = 2

TAG_WORLD = "world_state"
TAG_ACTIVITY = "verdicts:activity"
TAG_DISTANCE = "verdicts:distance"
TAG_COLLISION = "verdicts:collision"
TAG_TIME = "verdicts:time"
TAG_LEVEL = "level"
TAG_VERIFY = "verification"
TAG_ACTION = "action"


class ReasoningBackend(Protocol):
    """Text-completion capability: one prompt in, one reply out.

    Implementations keep no state between calls; nondeterministic replies
    are allowed (remote models), but the surrounding chain treats each call
    independently.
    """

    name: str
    max_prompt_chars: int

    def complete(self, prompt: str) -> str: ...


@dataclass(frozen=True)
class GuidanceStep:
    index: int
    subject: str  # what the step is about: a predicate, "level", "action", ...
    objective: str
    output_tag: str
    schema_hint: str


@dataclass(frozen=True)
class GuidanceChain:
    steps: tuple[GuidanceStep, ...]

    def __len__(self) -> int:
        return len(self.steps)


@dataclass(frozen=True)
class StepResult:
    parse_ok: bool
    payload: dict | None = None


@dataclass(frozen=True)
class EvidenceEntry:
    step_index: int
    prompt: str
    reply: str
    payload: dict | None


@dataclass(frozen=True)
class EvidenceChain:
    entries: tuple[EvidenceEntry, ...]

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class ActionClaim:
    """The backend's final answer: a velocity command plus optional hints."""

    velocity: tuple[float, float] | None = None
    index: int | None = None
    level: ComplianceLevel | None = None


def build_guidance_chain(params: ComplianceParams) -> GuidanceChain:
    """The canonical eight-step chain with thresholds baked into the text."""
    prefs = ", ".join(
        f"{name}: {fmt_num(d)} m" for name, d in sorted(params.pref_table.items())
    )
    verdict_schema = '{"verdicts": [[candidate_index, true_or_false], ...]}'
    steps = (
        GuidanceStep(
            1,
            "world_state",
            "Restate the observed scene: the robot's position and the number "
            "of humans with their positions, velocities, and activities.",
            TAG_WORLD,
            '{"robot": [x, y], "n_humans": n}',
        ),
        GuidanceStep(
            2,
            "es",
            "For each candidate action, check that every predicted rollout "
            "step keeps each human at least its activity-preferred distance "
            f"away, plus both agent radii. Preferred distances: {prefs}.",
            TAG_ACTIVITY,
            verdict_schema,
        ),
        GuidanceStep(
            3,
            "ed",
            "For each candidate action, check that every predicted rollout "
            f"step keeps each human at least d_min = {fmt_num(params.d_min)} m "
            "away, plus both agent radii.",
            TAG_DISTANCE,
            verdict_schema,
        ),
        GuidanceStep(
            4,
            "not_ec",
            "For each candidate action, check that the robot and every human "
            "stay at least the summed collision radii rho_R + rho_H apart at "
            "every predicted rollout step.",
            TAG_COLLISION,
            verdict_schema,
        ),
        GuidanceStep(
            5,
            "et",
            "For each candidate action, check the time budget: elapsed time "
            "plus rollout duration plus straight-line remaining distance at "
            f"max speed {fmt_num(params.max_speed)} m/s must not exceed "
            f"T_max = {params.t_max:g} s.",
            TAG_TIME,
            verdict_schema,
        ),
        GuidanceStep(
            6,
            "level",
            "Classify the best candidate into the most stringent compliance "
            "level its verdicts support: D1 (all four checks), D2 (activity, "
            "collision, time), D3 (distance, collision, time), or D4 "
            "(collision, time).",
            TAG_LEVEL,
            '{"index": candidate_index, "level": "D1".."D4"}',
        ),
        GuidanceStep(
            7,
            "verification",
            "Re-derive the chosen level from the recorded predicate verdicts "
            "and state whether the derivation holds.",
            TAG_VERIFY,
            '{"index": candidate_index, "level": "D1".."D4", "verified": true_or_false}',
        ),
        GuidanceStep(
            8,
            "action",
            "Emit the final velocity command for the chosen candidate.",
            TAG_ACTION,
            '{"index": candidate_index, "velocity": [vx, vy], "level": "D1".."D4"}',
        ),
    )
    return GuidanceChain(steps=steps)


def _step_text(step: GuidanceStep, total: int) -> str:
    return (
        f"Step {step.index} of {total}: {step.objective}\n"
        f"Reply with a fenced code block tagged \"{step.output_tag}\" containing "
        f"JSON shaped like {step.schema_hint}."
    )


def parse_step_reply(reply: str, step: GuidanceStep) -> StepResult:
    """Extract the step's tagged fenced block and decode its JSON payload.

    The last matching block wins; anything outside fences is ignored.
    """
    pattern = re.compile(
        r"```" + re.escape(step.output_tag) + r"[ \t]*\n(.*?)```", re.DOTALL
    )
    matches = pattern.findall(reply)
    if not matches:
        return StepResult(parse_ok=False)
    try:
        payload = json.loads(matches[-1])
    except json.JSONDecodeError:
        return StepResult(parse_ok=False)
    if not isinstance(payload, dict):
        return StepResult(parse_ok=False)
    return StepResult(parse_ok=True, payload=payload)


def parse_action_claim(payload: dict | None) -> ActionClaim | None:
    if not payload:
        return None
    velocity = payload.get("velocity")
    if (
        not isinstance(velocity, (list, tuple))
        or len(velocity) != 2
        or not all(isinstance(x, (int, float)) for x in velocity)
    ):
        return None
    index = payload.get("index")
    index = index if isinstance(index, int) else None
    level = None
    raw_level = payload.get("level")
    if isinstance(raw_level, str):
        try:
            level = ComplianceLevel(raw_level)
        except ValueError:
            level = None
    return ActionClaim(velocity=(float(velocity[0]), float(velocity[1])), index=index, level=level)


def run_chain(
    backend: ReasoningBackend,
    env_summary: str,
    obs_prompt: str,
    chain: GuidanceChain,
) -> tuple[EvidenceChain, ActionClaim]:
    """Execute the chain strictly in order against the backend.

    Each step retries transport failures and unparseable replies up to the
    retry budget. An exhausted intermediate step raises ChainError; an
    exhausted final step raises ParseError (the chain completed but produced
    no usable action claim).
    """
    entries: list[EvidenceEntry] = []
    total = len(chain)
    # Each prompt extends the previous one with its reply, so later prompts
    # always embed the entire earlier conversation.
    context = f"{env_summary}\n\n{obs_prompt}"
    for step in chain.steps:
        prompt = f"{context}\n\n{_step_text(step, total)}"
        if len(prompt) > getattr(backend, "max_prompt_chars", 1_000_000):
            raise ChainError(f"step {step.index}: prompt exceeds backend capacity")
        reply = None
        result = StepResult(parse_ok=False)
        failure: Exception | None = None
        for _attempt in range(1 + RETRY_BUDGET):
            try:
                reply = backend.complete(prompt)
            except TransportError as exc:
                failure = exc
                continue
            result = parse_step_reply(reply, step)
            if result.parse_ok:
                break
            failure = None
        if not result.parse_ok:
            if failure is not None:
                raise ChainError(f"step {step.index}: transport failed: {failure}")
            if step.index == total:
                raise ParseError(f"step {step.index}: no parseable action claim")
            raise ChainError(f"step {step.index}: reply not parseable")
        entries.append(
            EvidenceEntry(
                step_index=step.index, prompt=prompt, reply=reply, payload=result.payload
            )
        )
        context = f"{prompt}\n\nStep {step.index} reply:\n{reply}"
    claim = parse_action_claim(entries[-1].payload)
    if claim is None:
        raise ParseError("final step payload is not an action claim")
    return EvidenceChain(entries=tuple(entries)), claim


# --- backends ----------------------------------------------------------------


_TAG_REQUEST = re.compile(r'tagged "([^"]+)"')


class OracleBackend:
    """Deterministic stand-in backend that answers from the planner itself.

    Built per control step from the same observation the chain describes; it
    plans once up front and formats each step's reply from that plan, so the
    full pipeline reproduces the deterministic planner exactly.
    """

    name = "oracle"
    max_prompt_chars = 4_000_000

    def __init__(
        self,
        frame: ObservationFrame,
        prev_frame: ObservationFrame | None,
        elapsed: float,
        params: ComplianceParams,
        space: ActionSpace | None = None,
    ):
        self._params = params
        space = space or planner.default_action_space(params.max_speed)
        self._candidates = planner.evaluate_candidates(
            frame, planner.sample_actions(space), elapsed, params
        )
        self._outcome = deduction.degrade_and_select(self._candidates)
        self._frame = frame

    def _verdicts(self, key: str) -> list[list]:
        return [
            [action.index, bool(getattr(facts, key))]
            for action, facts, _ in self._candidates
        ]

    def complete(self, prompt: str) -> str:
        tags = _TAG_REQUEST.findall(prompt)
        if not tags:
            raise TransportError("malformed_response", "prompt names no output tag")
        tag = tags[-1]
        out = self._outcome
        if tag == TAG_WORLD:
            payload = {
                "robot": [float(x) for x in self._frame.robot.position],
                "n_humans": len(self._frame.humans),
            }
        elif tag in (TAG_ACTIVITY, TAG_DISTANCE, TAG_COLLISION, TAG_TIME):
            key = {
                TAG_ACTIVITY: "es",
                TAG_DISTANCE: "ed",
                TAG_COLLISION: "not_ec",
                TAG_TIME: "et",
            }[tag]
            payload = {"verdicts": self._verdicts(key)}
        elif tag == TAG_LEVEL:
            payload = {"index": out.action.index, "level": out.level.value}
        elif tag == TAG_VERIFY:
            payload = {
                "index": out.action.index,
                "level": out.level.value,
                "verified": out.verified,
            }
        elif tag == TAG_ACTION:
            payload = {
                "index": out.action.index,
                "velocity": [float(x) for x in out.action.velocity_command],
                "level": out.level.value,
            }
        else:
            raise TransportError("malformed_response", f"unknown tag {tag!r}")
        body = json.dumps(payload, sort_keys=True)
        return f"```{tag}\n{body}\n```"


def oracle_backend(
    frame: ObservationFrame,
    prev_frame: ObservationFrame | None,
    elapsed: float,
    params: ComplianceParams,
    space: ActionSpace | None = None,
) -> OracleBackend:
    return OracleBackend(frame, prev_frame, elapsed, params, space)


class RemoteBackend:
    """Adapter to a chat-completion HTTP service.

    Sends ``{"model": ..., "messages": [{"role": "user", "content": prompt}]}``
    and reads the reply from ``choices[0].message.content``. The bearer token
    comes from the environment variable named by ``token_env``. All failure
    modes raise TransportError with a distinguishing code.
    """

    max_prompt_chars = 200_000

    def __init__(
        self,
        endpoint: str,
        model: str,
        timeout: float = 30.0,
        token_env: str = "SOCNAV_API_TOKEN",
        name: str = "remote",
        post_fn=None,
    ):
        self.endpoint = endpoint
        self.model = model
        self.timeout = timeout
        self.token_env = token_env
        self.name = name
        self._post = post_fn or requests.post

    def complete(self, prompt: str) -> str:
        token = os.environ.get(self.token_env)
        if not token:
            raise TransportError("auth", f"environment variable {self.token_env} not set")
        body = {"model": self.model, "messages": [{"role": "user", "content": prompt}]}
        headers = {"Authorization": f"Bearer {token}"}
        try:
            resp = self._post(self.endpoint, json=body, headers=headers, timeout=self.timeout)
        except requests.exceptions.Timeout as exc:
            raise TransportError("timeout", str(exc)) from exc
        except requests.exceptions.RequestException as exc:
            raise TransportError("connect", str(exc)) from exc
        status = getattr(resp, "status_code", 200)
        if status in (401, 403):
            raise TransportError("auth", f"service rejected credentials ({status})")
        if not 200 <= status < 300:
            raise TransportError("status", f"service returned {status}")
        try:
            data = resp.json()
            content = data["choices"][0]["message"]["content"]
        except Exception as exc:
            raise TransportError("malformed_response", str(exc)) from exc
        if not isinstance(content, str):
            raise TransportError("malformed_response", "reply content is not text")
        return content


def remote_backend(
    endpoint: str,
    model: str,
    timeout: float = 30.0,
    token_env: str = "SOCNAV_API_TOKEN",
) -> RemoteBackend:
    return RemoteBackend(endpoint, model, timeout=timeout, token_env=token_env)


def prompt_key(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


class ReplayBackend:
    """Replays recorded replies keyed by prompt hash; fully deterministic."""

    name = "replay"
    max_prompt_chars = 4_000_000

    def __init__(self, replies: dict[str, str], name: str = "replay"):
        self.replies = dict(replies)
        self.name = name

    @classmethod
    def from_file(cls, path) -> "ReplayBackend":
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except FileNotFoundError as exc:
            raise FixtureError(f"fixture file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise FixtureError(f"fixture file is not valid JSON: {path}") from exc
        replies = data.get("replies")
        if not isinstance(replies, dict):
            raise FixtureError(f"fixture file has no replies table: {path}")
        return cls(replies, name=f"replay:{path}")

    def complete(self, prompt: str) -> str:
        key = prompt_key(prompt)
        try:
            return self.replies[key]
        except KeyError:
            raise FixtureError(f"no recorded reply for prompt hash {key[:12]}...")


class RecordingBackend:
    """Wraps another backend and captures (prompt hash, reply) pairs."""

    max_prompt_chars = 4_000_000

    def __init__(self, inner: ReasoningBackend):
        self.inner = inner
        self.name = f"recording({inner.name})"
        self.replies: dict[str, str] = {}

    def complete(self, prompt: str) -> str:
        reply = self.inner.complete(prompt)
        self.replies[prompt_key(prompt)] = reply
        return reply

    def save_fixture(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump({"replies": self.replies}, fh, indent=1, sort_keys=True)


# --- validation and the full pipeline ----------------------------------------


def _snap_to_candidate(
    velocity: tuple[float, float], actions: list[CandidateAction]
) -> CandidateAction:
    def dist(a: CandidateAction) -> float:
        return (a.velocity_command[0] - velocity[0]) ** 2 + (
            a.velocity_command[1] - velocity[1]
        ) ** 2

    best = actions[0]
    best_d = dist(best)
    for a in actions[1:]:
        d = dist(a)
        if d < best_d:
            best, best_d = a, d
    return best


def validate_and_repair(
    claim: ActionClaim | None,
    frame: ObservationFrame,
    elapsed: float,
    params: ComplianceParams,
    space: ActionSpace | None = None,
) -> deduction.DeductionOutcome:
    """Re-check a claimed action; fall back to the planner when unsupported.

    The claim's velocity is snapped to the nearest sampled candidate, its
    predicates are recomputed, and the claimed level (or, absent one, the
    best supported level) must prove out. Any gap - no claim, no level, or a
    failed proof - routes to plan_step and marks the outcome repaired.
    """
    space = space or planner.default_action_space(params.max_speed)

    def fallback() -> deduction.DeductionOutcome:
        outcome = planner.plan_step(frame, None, elapsed, params, space)
        outcome.repaired = True
        return outcome

    if claim is None or claim.velocity is None:
        return fallback()
    actions = planner.sample_actions(space)
    candidate = _snap_to_candidate(claim.velocity, actions)
    ro = planner.rollout(candidate, frame, params.horizon_steps, params.dt)
    best_level, facts = constraints.compliance_level(ro, elapsed, params)
    target = claim.level if claim.level is not None else best_level
    if target is ComplianceLevel.NONE or not facts.satisfies(target):
        return fallback()
    tree = deduction.prove_level(candidate, target, facts)
    assert isinstance(tree, deduction.ProofTree)
    return deduction.DeductionOutcome(
        action=candidate,
        level=target,
        tree=tree,
        verified=deduction.check_proof(tree, facts),
        forced=False,
        facts=facts,
        repaired=False,
    )


def chain_plan_step(
    frame: ObservationFrame,
    prev_frame: ObservationFrame | None,
    elapsed: float,
    cfg,
    backend: ReasoningBackend,
) -> tuple[deduction.DeductionOutcome, EvidenceChain | None]:
    """Full pipeline for one control step: world model, chain, validation.

    ``cfg`` is the scenario configuration (compliance parameters plus action
    space). Chain failures are not fatal; the validated fallback planner
    always yields an outcome.
    """
    params = cfg.params
    graph = build_world_graph(prev_frame, frame)
    obs_prompt = render_observation_prompt(graph, social_distance=params.d_min)
    env_summary = render_environment_summary(cfg)
    chain = build_guidance_chain(params)
    evidence: EvidenceChain | None = None
    claim: ActionClaim | None = None
    try:
        evidence, claim = run_chain(backend, env_summary, obs_prompt, chain)
    except (ChainError, ParseError):
        claim = None
    outcome = validate_and_repair(claim, frame, elapsed, params, cfg.action_space)
    return outcome, evidence


BackendProvider = Callable[
    [ObservationFrame, "ObservationFrame | None", float, object], ReasoningBackend
]


def oracle_provider(
    frame: ObservationFrame, prev_frame, elapsed: float, cfg
) -> OracleBackend:
    """Backend provider building a fresh oracle for each control step."""
    return OracleBackend(frame, prev_frame, elapsed, cfg.params, cfg.action_space)


def shared_provider(backend: ReasoningBackend) -> BackendProvider:
    """Backend provider reusing one backend instance for every step."""

    def provide(frame, prev_frame, elapsed, cfg) -> ReasoningBackend:
        return backend

    return provide


def chain_policy(cfg, provider: BackendProvider = oracle_provider):
    """Episode policy that plans through the reasoning chain each step."""

    def policy(frame, prev_frame, elapsed):
        backend = provider(frame, prev_frame, elapsed, cfg)
        outcome, _ = chain_plan_step(frame, prev_frame, elapsed, cfg, backend)
        return outcome

    return policy
