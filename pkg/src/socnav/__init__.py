"""Socially-aware robot navigation with logic-checked action selection.

The package couples a spatial-temporal world model, first-order compliance
predicates with hierarchical relaxation, natural-deduction proof checking,
a receding-horizon planner, a chain-of-thought reasoning pipeline, and a
seeded crowd simulator with a metrics harness.
"""

from .constraints import (
    ComplianceLevel,
    ComplianceParams,
    PredicateVector,
    classify,
    compliance_level,
)
from .deduction import (
    DeductionOutcome,
    ProofFailure,
    ProofTree,
    build_objective,
    check_proof,
    degrade_and_select,
    format_proof_tree,
    prove_level,
)
from .metrics import EpisodeMetrics, MetricsReport, aggregate, episode_metrics
from .planner import (
    ActionSpace,
    CandidateAction,
    Rollout,
    default_action_space,
    plan_step,
    rollout,
    sample_actions,
    score,
)
from .reasoner import (
    ActionClaim,
    EvidenceChain,
    GuidanceChain,
    OracleBackend,
    RecordingBackend,
    RemoteBackend,
    ReplayBackend,
    build_guidance_chain,
    chain_plan_step,
    chain_policy,
    oracle_backend,
    remote_backend,
    run_chain,
    validate_and_repair,
)
from .simulator import (
    EpisodeResult,
    EpisodeStatus,
    ScenarioConfig,
    run_episode,
    spawn_scenario,
    step,
)
from .world_model import (
    HumanVertex,
    ObservationFrame,
    RobotVertex,
    WorldGraph,
    build_world_graph,
    render_environment_summary,
    render_observation_prompt,
    render_vertex_text,
    render_edge_text,
)

__version__ = "0.1.0"
