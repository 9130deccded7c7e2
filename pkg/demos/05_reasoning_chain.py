"""
The eight-step reasoning chain
==============================

Planning can be delegated to a text backend: the scene is rendered to
logical-form sentences, then the backend is walked through eight guided
steps (restate, four predicate checks, classify, verify, act), each prompt
embedding every earlier reply. The backend's final claim is never trusted:
it is re-proved and repaired if unsupported.

The oracle backend answers from the planner itself, which makes the whole
loop runnable offline and exactly equivalent to direct planning. Replies
can be recorded to a fixture and replayed byte-for-byte later.
"""

from socnav.planner import plan_step
from socnav.reasoner import (
    OracleBackend,
    RecordingBackend,
    ReplayBackend,
    chain_plan_step,
)
from socnav.simulator import ScenarioConfig, spawn_scenario

cfg = ScenarioConfig(n_humans=3, seed=9)
frame = spawn_scenario(cfg).frame

backend = RecordingBackend(OracleBackend(frame, None, 0.0, cfg.params, cfg.action_space))
outcome, evidence = chain_plan_step(frame, None, 0.0, cfg, backend)

print(f"{len(evidence)} chain steps:")
for entry in evidence.entries:
    first_line = entry.reply.splitlines()[0]
    print(f"  step {entry.step_index}: prompt {len(entry.prompt):5d} chars -> {first_line[:60]}")

reference = plan_step(frame, None, 0.0, cfg.params, cfg.action_space)
print()
print(f"chain action : {outcome.action.velocity_command} at {outcome.level.value}")
print(f"plan action  : {reference.action.velocity_command} at {reference.level.value}")
print("repaired:", outcome.repaired)

# Replay the recorded replies: same evidence, no backend logic involved.
replay = ReplayBackend(backend.replies)
again, evidence2 = chain_plan_step(frame, None, 0.0, cfg, replay)
assert [e.reply for e in evidence2.entries] == [e.reply for e in evidence.entries]
assert again.action == outcome.action
print("replayed from fixture:", True)
