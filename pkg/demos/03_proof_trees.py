"""
Deduction trees and the independent checker
===========================================

A selected action carries a natural-deduction proof of its compliance
level. The checker re-derives every node from rule schemas alone, so a
tampered tree (here, one corrupted rule label) is rejected even though
it still "looks" like a proof.
"""

from dataclasses import replace

from socnav.constraints import ComplianceLevel, PredicateVector
from socnav.deduction import (
    InferenceRule,
    check_proof,
    degrade_and_select,
    format_proof_tree,
    prove_level,
)
from socnav.planner import CandidateAction

facts = PredicateVector(es=True, ed=True, not_ec=True, et=True)
action = CandidateAction((0.5, 0.0), index=3)

tree = prove_level(action, ComplianceLevel.LEVEL1, facts)
print(format_proof_tree(tree))
print()
print("checker verdict:", check_proof(tree, facts))

# Corrupt one node's rule label: the and-introduction becomes a bogus
# implication elimination. The schema check refuses it.
corrupted_root = replace(
    tree.root,
    premises=(
        replace(
            tree.root.premises[0],
            premises=(
                tree.root.premises[0].premises[0],
                replace(
                    tree.root.premises[0].premises[1],
                    premises=(
                        replace(
                            tree.root.premises[0].premises[1].premises[0],
                            rule=InferenceRule.IMPLIES_ELIM,
                        ),
                    ),
                ),
            ),
        ),
    ),
)
print("corrupted tree verdict:", check_proof(replace(tree, root=corrupted_root), facts))

# Degradation: when nothing proves even D4, the least-violating action is
# still emitted, but flagged forced and unverified.
colliding = PredicateVector(es=False, ed=False, not_ec=False, et=True)
outcome = degrade_and_select([(CandidateAction((0.0, 0.0), 0), colliding, 0.0)])
print()
print(f"cornered: level={outcome.level.value} forced={outcome.forced} "
      f"verified={outcome.verified}")
