import itertools
from dataclasses import replace

import pytest

from socnav.constraints import ComplianceLevel, PredicateVector
from socnav.deduction import (
    ACTION_VAR,
    ATOM_ACTIVITY,
    ATOM_COLLISION,
    ATOM_DISTANCE,
    ATOM_TIME,
    And,
    Atom,
    InferenceRule,
    Not,
    Or,
    ProofFailure,
    ProofNode,
    ProofTree,
    action_subject,
    build_objective,
    check_proof,
    degrade_and_select,
    format_proof_tree,
    level_conjunction,
    prove_level,
)
from socnav.errors import InputError
from socnav.planner import CandidateAction

LEVELS = (
    ComplianceLevel.LEVEL1,
    ComplianceLevel.LEVEL2,
    ComplianceLevel.LEVEL3,
    ComplianceLevel.LEVEL4,
)


def all_vectors():
    return [
        PredicateVector(*bits) for bits in itertools.product([False, True], repeat=4)
    ]


def vector_supports(v: PredicateVector, level: ComplianceLevel) -> bool:
    # independent re-statement of the four conjunctions
    return {
        ComplianceLevel.LEVEL1: v.es and v.ed and v.not_ec and v.et,
        ComplianceLevel.LEVEL2: v.es and v.not_ec and v.et,
        ComplianceLevel.LEVEL3: v.ed and v.not_ec and v.et,
        ComplianceLevel.LEVEL4: v.not_ec and v.et,
    }[level]


def action(index=0):
    return CandidateAction((0.5, 0.0), index)


# --- objective formula ------------------------------------------------------------

def hand_encoded_objective(var):
    # written out literal-by-literal, separate from the builder
    es = Atom(ATOM_ACTIVITY, var)
    ed = Atom(ATOM_DISTANCE, var)
    nec = Not(Atom(ATOM_COLLISION, var))
    et = Atom(ATOM_TIME, var)
    return Or(
        (
            And((es, ed, nec, et)),
            And((es, nec, et)),
            And((ed, nec, et)),
            And((nec, et)),
        )
    )


def test_objective_structure():
    phi = build_objective(ACTION_VAR)
    assert isinstance(phi, Or) and len(phi.parts) == 4
    assert [len(p.parts) for p in phi.parts] == [4, 3, 3, 2]


def test_objective_every_disjunct_has_safety_atoms():
    phi = build_objective(ACTION_VAR)
    for part in phi.parts:
        assert Not(Atom(ATOM_COLLISION, ACTION_VAR)) in part.parts
        assert Atom(ATOM_TIME, ACTION_VAR) in part.parts


def test_objective_matches_hand_encoding():
    assert build_objective("a") == hand_encoded_objective("a")
    assert build_objective("x") == hand_encoded_objective("x")


# --- prove_level -------------------------------------------------------------------

def test_prove_level1_tree_shape():
    facts = PredicateVector(True, True, True, True)
    tree = prove_level(action(), ComplianceLevel.LEVEL1, facts)
    assert isinstance(tree, ProofTree)
    subject = action_subject(action())
    assert tree.root.conclusion == level_conjunction(ComplianceLevel.LEVEL1, subject)
    assert tree.root.rule is InferenceRule.VERIFICATION_STEP
    and_nodes = [
        n for n in _walk(tree.root) if n.rule is InferenceRule.AND_INTRO
    ]
    assert len(and_nodes) == 1 and len(and_nodes[0].premises) == 4


def test_prove_level1_fails_citing_activity():
    facts = PredicateVector(False, True, True, True)
    failure = prove_level(action(), ComplianceLevel.LEVEL1, facts)
    assert isinstance(failure, ProofFailure)
    assert failure.failed_atom == Atom(ATOM_ACTIVITY, action_subject(action()))


def test_prove_level3_succeeds_without_activity():
    facts = PredicateVector(False, True, True, True)
    tree = prove_level(action(), ComplianceLevel.LEVEL3, facts)
    assert isinstance(tree, ProofTree)
    and_nodes = [n for n in _walk(tree.root) if n.rule is InferenceRule.AND_INTRO]
    assert len(and_nodes[0].premises) == 3


def test_prove_level_completeness_truth_table():
    # succeeds exactly when the level's conjunction holds: 16 x 4 cases
    for facts in all_vectors():
        for level in LEVELS:
            result = prove_level(action(), level, facts)
            if vector_supports(facts, level):
                assert isinstance(result, ProofTree), (facts, level)
            else:
                assert isinstance(result, ProofFailure), (facts, level)


# --- check_proof -------------------------------------------------------------------

def _walk(node):
    yield node
    for p in node.premises:
        yield from _walk(p)


def test_soundness_roundtrip_all_cases():
    for facts in all_vectors():
        for level in LEVELS:
            result = prove_level(action(), level, facts)
            if isinstance(result, ProofTree):
                assert check_proof(result, facts) is True


def test_leaf_contradicting_facts_rejected():
    facts = PredicateVector(True, True, True, True)
    tree = prove_level(action(), ComplianceLevel.LEVEL1, facts)
    weaker = PredicateVector(False, True, True, True)
    assert check_proof(tree, weaker) is False


def test_root_level_mismatch_rejected():
    facts = PredicateVector(True, True, True, True)
    tree = prove_level(action(), ComplianceLevel.LEVEL2, facts)
    assert check_proof(replace(tree, target_level=ComplianceLevel.LEVEL1), facts) is False


def test_wrong_subject_rejected():
    facts = PredicateVector(True, True, True, True)
    tree = prove_level(action(), ComplianceLevel.LEVEL1, facts)
    assert check_proof(replace(tree, subject_action="action_99"), facts) is False


# mutation machinery: rebuild a tree with one node replaced

def _paths(node, prefix=()):
    yield prefix
    for i, p in enumerate(node.premises):
        yield from _paths(p, prefix + (i,))


def _get(node, path):
    for i in path:
        node = node.premises[i]
    return node


def _replace_at(node, path, new_node):
    if not path:
        return new_node
    i, rest = path[0], path[1:]
    premises = list(node.premises)
    premises[i] = _replace_at(premises[i], rest, new_node)
    return replace(node, premises=tuple(premises))


def mutate_tree(tree: ProofTree, rng) -> ProofTree:
    """Corrupt one node: its rule, its conclusion, or its premise count."""
    paths = list(_paths(tree.root))
    path = paths[int(rng.integers(len(paths)))]
    node = _get(tree.root, path)
    kind = int(rng.integers(3))
    if kind == 0:  # rule flip
        choices = [r for r in InferenceRule if r is not node.rule]
        if node.rule is not None:
            choices.append(None)
        mutant = replace(node, rule=choices[int(rng.integers(len(choices)))])
    elif kind == 1:  # conclusion swap
        other = _get(tree.root, paths[int(rng.integers(len(paths)))])
        new_conclusion = other.conclusion
        if new_conclusion == node.conclusion:
            new_conclusion = Atom("mutant", "zzz")
        mutant = replace(node, conclusion=new_conclusion)
    else:  # premise arity corruption
        if node.premises:
            premises = list(node.premises)
            if int(rng.integers(2)) and len(premises) > 1:
                premises.pop(int(rng.integers(len(premises))))
            else:
                premises.append(premises[0])
            mutant = replace(node, premises=tuple(premises))
        else:
            mutant = replace(node, premises=(node,))
    return replace(tree, root=_replace_at(tree.root, path, mutant))


def test_mutation_resistance(rng):
    facts_levels = [
        (facts, level)
        for facts in all_vectors()
        for level in LEVELS
        if vector_supports(facts, level)
    ]
    rejected = 0
    for i in range(1000):
        facts, level = facts_levels[i % len(facts_levels)]
        tree = prove_level(action(), level, facts)
        mutated = mutate_tree(tree, rng)
        if check_proof(mutated, facts) is False:
            rejected += 1
    assert rejected == 1000


def test_malformed_tree_returns_false():
    facts = PredicateVector(True, True, True, True)
    bogus = ProofTree(
        root=ProofNode(conclusion=Atom("mutant", "z")),
        target_level=ComplianceLevel.LEVEL1,
        subject_action="action_0",
    )
    assert check_proof(bogus, facts) is False


def test_serialization_shape():
    facts = PredicateVector(True, True, True, True)
    tree = prove_level(action(), ComplianceLevel.LEVEL1, facts)
    text = format_proof_tree(tree)
    lines = text.splitlines()
    assert lines[0].startswith("proof target=D1")
    assert len(lines) == 1 + sum(1 for _ in _walk(tree.root))
    assert any("verification_step" in l for l in lines)
    assert any("assume [1]" in l for l in lines)


# --- degrade_and_select -------------------------------------------------------------

def test_single_all_true_candidate():
    facts = PredicateVector(True, True, True, True)
    outcome = degrade_and_select([(action(), facts, 1.0)])
    assert outcome.level == ComplianceLevel.LEVEL1
    assert outcome.verified is True
    assert outcome.forced is False


def test_all_colliding_forces_level4():
    colliding = PredicateVector(False, False, False, True)
    cands = [(action(i), colliding, float(i)) for i in range(3)]
    outcome = degrade_and_select(cands)
    assert outcome.forced is True
    assert outcome.level == ComplianceLevel.LEVEL4
    assert outcome.verified is False
    # ties on violation count break by score: highest score wins
    assert outcome.action.index == 2
    assert check_proof(outcome.tree, colliding) is False


def test_forced_prefers_fewest_violations():
    worse = PredicateVector(True, True, False, False)  # two weak-level atoms violated
    better = PredicateVector(True, True, False, True)  # only collision violated
    outcome = degrade_and_select([(action(0), worse, 5.0), (action(1), better, -5.0)])
    assert outcome.forced is True
    assert outcome.action.index == 1


def test_forced_tie_prefers_collision_free():
    # equal violation counts: the collision-free (merely late) candidate must
    # win even against a higher-scoring colliding one
    colliding_timely = PredicateVector(True, True, False, True)
    safe_late = PredicateVector(True, True, True, False)
    outcome = degrade_and_select(
        [(action(0), colliding_timely, 99.0), (action(1), safe_late, -99.0)]
    )
    assert outcome.forced is True
    assert outcome.action.index == 1
    assert outcome.facts.not_ec is True


def test_empty_candidates_rejected():
    with pytest.raises(InputError):
        degrade_and_select([])


def test_tie_break_lowest_index():
    facts = PredicateVector(True, True, True, True)
    outcome = degrade_and_select([(action(0), facts, 1.0), (action(1), facts, 1.0)])
    assert outcome.action.index == 0


def test_degradation_matches_bruteforce_oracle(rng):
    def oracle_best(cands):
        # minimum level index any candidate supports, then best score, then
        # lowest index
        for level in LEVELS:
            feasible = [
                (idx, c) for idx, c in enumerate(cands) if vector_supports(c[1], level)
            ]
            if feasible:
                best = max(feasible, key=lambda t: (t[1][2], -t[0]))
                return level, best[0], False
        return ComplianceLevel.LEVEL4, None, True

    for _ in range(1000):
        n = int(rng.integers(1, 8))
        cands = []
        for i in range(n):
            bits = [bool(rng.integers(2)) for _ in range(4)]
            cands.append(
                (action(i), PredicateVector(*bits), float(rng.normal()))
            )
        outcome = degrade_and_select(cands)
        level, idx, forced = oracle_best(cands)
        assert outcome.level == level
        assert outcome.forced == forced
        if not forced:
            assert outcome.action.index == idx
            assert outcome.verified is True
