"""Natural-deduction proof trees for compliance-level selection.

The objective formula says: some action in the sampled space satisfies one
of the four compliance-level conjunctions. For a concrete candidate, a
fixed-shape proof tree derives its level from assumed predicate facts:

    [1] exists a. in_action_space(a)
     |  implies-intro (discharges 1)
    (in_action_space(a) -> objective(a))      [2] exists a_k. in_action_space(a_k)
     |  exists-elim (discharges 1, 2)
    objective(a_k)                            [3..] predicate literals for a_k
     |                                         |  and-intro
     |                                        level conjunction
     |                                         |  implies-intro
     |                                        (objective(a_k) -> conjunction)
      \\______________________________________/
                 |  implies-elim
                level conjunction
                 |  verification step (fact agreement at the root)

``check_proof`` re-derives every node from rule schemas alone; it shares no
code with the builder, so a proof that merely *looks* plausible but was
corrupted anywhere (rule label, conclusion, premise arity, leaf facts) is
rejected. When no candidate supports even the weakest level, the selector
still emits the least-violating action, flagged as forced and unverified.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import TYPE_CHECKING, Union

from .constraints import (
    LEVEL_ORDER,
    LEVEL_REQUIREMENTS,
    ComplianceLevel,
    PredicateVector,
)
from .errors import InputError

if TYPE_CHECKING:
    from .planner import CandidateAction

# Atom names, by what each predicate asserts about an action.
ATOM_ACTIVITY = "activity_awareness"
ATOM_DISTANCE = "distance_awareness"
ATOM_COLLISION = "collision"  # appears negated in every level
ATOM_TIME = "time_within_budget"
ATOM_IN_SPACE = "in_action_space"

ACTION_VAR = "a"


@dataclass(frozen=True)
class Atom:
    name: str
    subject: str


@dataclass(frozen=True)
class Not:
    body: "Formula"


@dataclass(frozen=True)
class And:
    parts: tuple["Formula", ...]


@dataclass(frozen=True)
class Or:
    parts: tuple["Formula", ...]


@dataclass(frozen=True)
class Implies:
    lhs: "Formula"
    rhs: "Formula"


@dataclass(frozen=True)
class Exists:
    var: str
    body: "Formula"


Formula = Union[Atom, Not, And, Or, Implies, Exists]


def substitute(f: Formula, var: str, subject: str) -> Formula:
    """Replace every atom subject ``var`` with ``subject``."""
    if isinstance(f, Atom):
        return Atom(f.name, subject) if f.subject == var else f
    if isinstance(f, Not):
        return Not(substitute(f.body, var, subject))
    if isinstance(f, And):
        return And(tuple(substitute(p, var, subject) for p in f.parts))
    if isinstance(f, Or):
        return Or(tuple(substitute(p, var, subject) for p in f.parts))
    if isinstance(f, Implies):
        return Implies(substitute(f.lhs, var, subject), substitute(f.rhs, var, subject))
    if isinstance(f, Exists):
        if f.var == var:
            return f
        return Exists(f.var, substitute(f.body, var, subject))
    raise TypeError(f"not a formula: {f!r}")


def render_formula(f: Formula) -> str:
    if isinstance(f, Atom):
        return f"{f.name}({f.subject})"
    if isinstance(f, Not):
        return f"~{render_formula(f.body)}"
    if isinstance(f, And):
        return "(" + " & ".join(render_formula(p) for p in f.parts) + ")"
    if isinstance(f, Or):
        return "(" + " | ".join(render_formula(p) for p in f.parts) + ")"
    if isinstance(f, Implies):
        return f"({render_formula(f.lhs)} -> {render_formula(f.rhs)})"
    if isinstance(f, Exists):
        return f"(exists {f.var}. {render_formula(f.body)})"
    raise TypeError(f"not a formula: {f!r}")


def level_literals(level: ComplianceLevel, subject: str) -> tuple[Formula, ...]:
    """The level's conjunct literals in canonical order."""
    needs_es, needs_ed = LEVEL_REQUIREMENTS[level]
    lits: list[Formula] = []
    if needs_es:
        lits.append(Atom(ATOM_ACTIVITY, subject))
    if needs_ed:
        lits.append(Atom(ATOM_DISTANCE, subject))
    lits.append(Not(Atom(ATOM_COLLISION, subject)))
    lits.append(Atom(ATOM_TIME, subject))
    return tuple(lits)


def level_conjunction(level: ComplianceLevel, subject: str) -> And:
    return And(level_literals(level, subject))


def build_objective(action_var: str = ACTION_VAR) -> Or:
    """Disjunction of the four level conjunctions over one action variable."""
    return Or(tuple(level_conjunction(level, action_var) for level in LEVEL_ORDER))


def _literal_truth(lit: Formula, subject: str, facts: PredicateVector) -> bool | None:
    """Truth of a predicate literal about ``subject`` under ``facts``.

    Returns None for formulas that are not recognized literals.
    """
    if isinstance(lit, Atom) and lit.subject == subject:
        if lit.name == ATOM_ACTIVITY:
            return facts.es
        if lit.name == ATOM_DISTANCE:
            return facts.ed
        if lit.name == ATOM_TIME:
            return facts.et
        if lit.name == ATOM_COLLISION:
            return not facts.not_ec
    if isinstance(lit, Not):
        inner = _literal_truth(lit.body, subject, facts)
        return None if inner is None else not inner
    return None


class InferenceRule(enum.Enum):
    IMPLIES_INTRO = "implies_intro"
    IMPLIES_ELIM = "implies_elim"
    AND_INTRO = "and_intro"
    EXISTS_ELIM = "exists_elim"
    VERIFICATION_STEP = "verification_step"


# Fixed premise count per rule; AND_INTRO takes any count >= 2.
RULE_ARITY = {
    InferenceRule.IMPLIES_INTRO: 1,
    InferenceRule.IMPLIES_ELIM: 2,
    InferenceRule.AND_INTRO: None,
    InferenceRule.EXISTS_ELIM: 2,
    InferenceRule.VERIFICATION_STEP: 1,
}


@dataclass(frozen=True)
class ProofNode:
    """One derivation step; leaves (rule=None) are assumptions."""

    conclusion: Formula
    rule: InferenceRule | None = None
    premises: tuple["ProofNode", ...] = ()
    discharged_assumptions: tuple[str, ...] = ()
    assumption_label: str | None = None


@dataclass(frozen=True)
class ProofTree:
    root: ProofNode
    target_level: ComplianceLevel
    subject_action: str


@dataclass(frozen=True)
class ProofFailure:
    """Returned instead of a tree when the level's conjunction is unsupported."""

    level: ComplianceLevel
    failed_atom: Formula


@dataclass
class DeductionOutcome:
    """Selected action with its level, proof, and verification flags."""

    action: "CandidateAction"
    level: ComplianceLevel
    tree: ProofTree
    verified: bool
    forced: bool
    facts: PredicateVector
    repaired: bool = False


def action_subject(action: "CandidateAction") -> str:
    return f"action_{action.index}"


def _build_level_tree(subject: str, level: ComplianceLevel) -> ProofTree:
    """Assemble the fixed tree shape for a subject, regardless of facts."""
    objective_open = build_objective(ACTION_VAR)
    objective_inst = substitute(objective_open, ACTION_VAR, subject)
    conjunction = level_conjunction(level, subject)

    exists_any = ProofNode(
        conclusion=Exists(ACTION_VAR, Atom(ATOM_IN_SPACE, ACTION_VAR)),
        assumption_label="1",
    )
    implication = ProofNode(
        conclusion=Implies(Atom(ATOM_IN_SPACE, ACTION_VAR), objective_open),
        rule=InferenceRule.IMPLIES_INTRO,
        premises=(exists_any,),
        discharged_assumptions=("1",),
    )
    witness = ProofNode(
        conclusion=Exists(subject, Atom(ATOM_IN_SPACE, subject)),
        assumption_label="2",
    )
    objective_node = ProofNode(
        conclusion=objective_inst,
        rule=InferenceRule.EXISTS_ELIM,
        premises=(implication, witness),
        discharged_assumptions=("1", "2"),
    )

    leaves = tuple(
        ProofNode(conclusion=lit, assumption_label=str(3 + i))
        for i, lit in enumerate(level_literals(level, subject))
    )
    conj_node = ProofNode(
        conclusion=conjunction, rule=InferenceRule.AND_INTRO, premises=leaves
    )
    conj_implication = ProofNode(
        conclusion=Implies(objective_inst, conjunction),
        rule=InferenceRule.IMPLIES_INTRO,
        premises=(conj_node,),
    )
    derived = ProofNode(
        conclusion=conjunction,
        rule=InferenceRule.IMPLIES_ELIM,
        premises=(objective_node, conj_implication),
    )
    root = ProofNode(
        conclusion=conjunction,
        rule=InferenceRule.VERIFICATION_STEP,
        premises=(derived,),
    )
    return ProofTree(root=root, target_level=level, subject_action=subject)


def prove_level(
    action: "CandidateAction", level: ComplianceLevel, facts: PredicateVector
) -> ProofTree | ProofFailure:
    """Build the proof tree for ``level``, or report the first missing atom.

    Succeeds exactly when every literal of the level's conjunction is true
    under ``facts``.
    """
    if level not in LEVEL_REQUIREMENTS:
        raise InputError(f"not a provable level: {level}")
    subject = action_subject(action)
    for lit in level_literals(level, subject):
        if not _literal_truth(lit, subject, facts):
            return ProofFailure(level=level, failed_atom=lit)
    return _build_level_tree(subject, level)


# --- independent checker ----------------------------------------------------
#
# Everything below validates trees from rule schemas only. It must not call
# the builder above; structural expectations are re-stated locally.

_CHECK_LEVEL_ATOMS = {
    ComplianceLevel.LEVEL1: (ATOM_ACTIVITY, ATOM_DISTANCE, ATOM_COLLISION, ATOM_TIME),
    ComplianceLevel.LEVEL2: (ATOM_ACTIVITY, ATOM_COLLISION, ATOM_TIME),
    ComplianceLevel.LEVEL3: (ATOM_DISTANCE, ATOM_COLLISION, ATOM_TIME),
    ComplianceLevel.LEVEL4: (ATOM_COLLISION, ATOM_TIME),
}


def _is_level_shape(f: Formula, atoms: tuple[str, ...], subject: str) -> bool:
    """f is the conjunction of exactly these atoms over subject, in order,
    with the collision atom negated."""
    if not isinstance(f, And) or len(f.parts) != len(atoms):
        return False
    for part, name in zip(f.parts, atoms):
        if name == ATOM_COLLISION:
            if not (
                isinstance(part, Not)
                and isinstance(part.body, Atom)
                and part.body == Atom(ATOM_COLLISION, subject)
            ):
                return False
        elif part != Atom(name, subject):
            return False
    return True


def _is_objective_shape(f: Formula, var: str) -> bool:
    """f is the four-level disjunction over one variable."""
    if not isinstance(f, Or) or len(f.parts) != 4:
        return False
    expected = (
        _CHECK_LEVEL_ATOMS[ComplianceLevel.LEVEL1],
        _CHECK_LEVEL_ATOMS[ComplianceLevel.LEVEL2],
        _CHECK_LEVEL_ATOMS[ComplianceLevel.LEVEL3],
        _CHECK_LEVEL_ATOMS[ComplianceLevel.LEVEL4],
    )
    return all(_is_level_shape(p, atoms, var) for p, atoms in zip(f.parts, expected))


def _leaf_labels(node: ProofNode) -> set[str]:
    if node.rule is None:
        return {node.assumption_label} if node.assumption_label else set()
    out: set[str] = set()
    for p in node.premises:
        out |= _leaf_labels(p)
    return out


def _check_node(node: ProofNode, subject: str, facts: PredicateVector) -> bool:
    if node.rule is None:
        if node.premises:
            return False
        # Quantified assumptions are admitted; predicate literals must agree
        # with the computed facts.
        if isinstance(node.conclusion, Exists):
            body = node.conclusion.body
            return body == Atom(ATOM_IN_SPACE, node.conclusion.var)
        truth = _literal_truth(node.conclusion, subject, facts)
        return truth is True

    arity = RULE_ARITY[node.rule]
    if arity is None:
        if len(node.premises) < 2:
            return False
    elif len(node.premises) != arity:
        return False
    if not all(_check_node(p, subject, facts) for p in node.premises):
        return False
    if node.discharged_assumptions and not (
        set(node.discharged_assumptions) <= _leaf_labels(node)
    ):
        return False

    c = node.conclusion
    if node.rule is InferenceRule.AND_INTRO:
        return isinstance(c, And) and c.parts == tuple(
            p.conclusion for p in node.premises
        )

    if node.rule is InferenceRule.IMPLIES_INTRO:
        if not isinstance(c, Implies):
            return False
        premise = node.premises[0].conclusion
        # Either the hierarchy axiom introduced from the existence
        # assumption, or a plain introduction whose consequent was derived.
        if (
            isinstance(premise, Exists)
            and c.lhs == Atom(ATOM_IN_SPACE, premise.var)
            and _is_objective_shape(c.rhs, premise.var)
            and len(node.discharged_assumptions) == 1
        ):
            return True
        return c.rhs == premise and not node.discharged_assumptions

    if node.rule is InferenceRule.EXISTS_ELIM:
        impl, witness = (p.conclusion for p in node.premises)
        if not (isinstance(impl, Implies) and isinstance(witness, Exists)):
            return False
        if not isinstance(impl.lhs, Atom) or impl.lhs.name != ATOM_IN_SPACE:
            return False
        if witness.body != Atom(ATOM_IN_SPACE, witness.var):
            return False
        if len(node.discharged_assumptions) != 2:
            return False
        return c == substitute(impl.rhs, impl.lhs.subject, witness.var)

    if node.rule is InferenceRule.IMPLIES_ELIM:
        antecedent, implication = (p.conclusion for p in node.premises)
        return (
            isinstance(implication, Implies)
            and implication.lhs == antecedent
            and c == implication.rhs
        )

    if node.rule is InferenceRule.VERIFICATION_STEP:
        if c != node.premises[0].conclusion:
            return False
        if not isinstance(c, And):
            return False
        return all(_literal_truth(lit, subject, facts) is True for lit in c.parts)

    return False


def check_proof(tree: ProofTree, facts: PredicateVector) -> bool:
    """Validate a proof tree against rule schemas and the given facts.

    True iff every node follows from its premises under its rule, every leaf
    literal agrees with ``facts``, the root is the fact-checking step, and
    the root conclusion is the target level's conjunction for the tree's
    subject. Malformed trees return False rather than raising.
    """
    try:
        root = tree.root
        if root.rule is not InferenceRule.VERIFICATION_STEP:
            return False
        atoms = _CHECK_LEVEL_ATOMS.get(tree.target_level)
        if atoms is None:
            return False
        if not _is_level_shape(root.conclusion, atoms, tree.subject_action):
            return False
        return _check_node(root, tree.subject_action, facts)
    except (AttributeError, TypeError, KeyError):
        return False


def format_proof_tree(tree: ProofTree) -> str:
    """One node per line, two-space indentation per depth level."""
    lines = [f"proof target={tree.target_level.value} subject={tree.subject_action}"]

    def walk(node: ProofNode, depth: int):
        rule = node.rule.value if node.rule else "assume"
        label = f" [{node.assumption_label}]" if node.assumption_label else ""
        discharged = (
            f" discharges={','.join(node.discharged_assumptions)}"
            if node.discharged_assumptions
            else ""
        )
        lines.append(
            f"{'  ' * depth}{rule}{label}: {render_formula(node.conclusion)}{discharged}"
        )
        for p in node.premises:
            walk(p, depth + 1)

    walk(tree.root, 1)
    return "\n".join(lines)


def degrade_and_select(
    candidates: list[tuple["CandidateAction", PredicateVector, float]],
) -> DeductionOutcome:
    """Pick the best provable action at the most stringent attainable level.

    Levels are tried strongest-first; within a level the highest-scoring
    provable candidate wins (ties broken by lowest candidate index). If no
    candidate supports even the weakest level, the output is forced: the
    candidate violating the fewest weakest-level atoms (ties by score, then
    index) is returned unverified.
    """
    if not candidates:
        raise InputError("candidate list is empty")

    for level in LEVEL_ORDER:
        best = None
        for idx, (action, facts, score) in enumerate(candidates):
            if not facts.satisfies(level):
                continue
            if best is None or score > best[0] or (score == best[0] and idx < best[1]):
                best = (score, idx)
        if best is not None:
            action, facts, _ = candidates[best[1]]
            tree = prove_level(action, level, facts)
            assert isinstance(tree, ProofTree)
            return DeductionOutcome(
                action=action,
                level=level,
                tree=tree,
                verified=check_proof(tree, facts),
                forced=False,
                facts=facts,
            )

    def violation_key(item):
        idx, (_, facts, score) = item
        violations = (not facts.not_ec) + (not facts.et)
        # collision outranks lateness: a collision-free-but-late candidate
        # must beat a colliding-but-timely one on equal violation counts
        return (violations, not facts.not_ec, -score, idx)

    idx, (action, facts, _) = min(enumerate(candidates), key=violation_key)
    tree = _build_level_tree(action_subject(action), ComplianceLevel.LEVEL4)
    return DeductionOutcome(
        action=action,
        level=ComplianceLevel.LEVEL4,
        tree=tree,
        verified=False,
        forced=True,
        facts=facts,
    )
