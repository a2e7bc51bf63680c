"""Stepping states, successors, jumps, and the undo tree.

A state couples the rules considered so far with the atoms decided true and
false and with every unfounded subset of the positive part.  Steps extend a
state by one rule and a total assignment over its undecided atoms; jumps
extend it by many rules at once through the solver.  All state values are
immutable; the tree serialises mutations per session.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Optional, Union

from .caps import DEFAULT_CAPS, Caps
from .errors import (
    EngineError,
    NoAnswerSetError,
    PreconditionError,
    UnfoundedOverflowError,
    UnknownNodeError,
    UnknownRuleError,
)
from .model import (
    CRule,
    GroundProgram,
    eval_catom,
    head_satisfied,
    rule_active,
    rule_sort_key,
    sorted_atoms,
)
from .semantics import (
    _subsets_of,
    external_support,
    flp_reduct,
    is_answer_set,
    search_answer_sets,
    solve_extension,
    unfounded_sets,
)

EMPTY_SET: frozenset = frozenset()
ONLY_EMPTY: frozenset = frozenset([EMPTY_SET])


@dataclass(frozen=True)
class State:
    """One stepping state: considered rules, truth assignment, unfounded sets."""

    rules: frozenset  # frozenset[CRule]
    pos: frozenset  # atoms considered true
    neg: frozenset  # atoms considered false
    unfounded: frozenset = ONLY_EMPTY  # frozenset[frozenset[Atom]]

    @property
    def domain(self) -> frozenset:
        return self.pos | self.neg

    @property
    def stable(self) -> bool:
        return self.unfounded == ONLY_EMPTY

    def rules_sorted(self) -> tuple[CRule, ...]:
        return tuple(sorted(self.rules, key=rule_sort_key))

    def describe(self) -> str:
        u = sorted(
            (s for s in self.unfounded if s), key=lambda s: (len(s), sorted_atoms(s))
        )
        return (
            "<{%s}, {%s}, {%s}, {%s}>"
            % (
                "; ".join(str(r) for r in self.rules_sorted()),
                ", ".join(str(a) for a in sorted_atoms(self.pos)),
                ", ".join(str(a) for a in sorted_atoms(self.neg)),
                ", ".join("{" + ", ".join(map(str, sorted_atoms(s))) + "}" for s in u),
            )
        )


def empty_state() -> State:
    return State(frozenset(), frozenset(), frozenset(), ONLY_EMPTY)


def state_violations(s: State, caps: Caps = DEFAULT_CAPS) -> list[str]:
    """Why the structure is not a state; empty list when it is one."""
    problems = []
    if s.pos & s.neg:
        problems.append("true and false atoms overlap")
    for r in s.rules:
        if not rule_active(r, s.pos):
            problems.append(f"body of considered rule not satisfied: {r}")
        elif not head_satisfied(r, s.pos):
            problems.append(f"head of considered rule not satisfied: {r}")
        if not r.domain_set <= s.domain:
            problems.append(f"rule domain not fully decided: {r}")
    expected = frozenset(unfounded_sets(s.rules, s.pos, caps))
    if s.unfounded != expected:
        problems.append("unfounded sets differ from the tracked collection")
    return problems


def is_state(s: State, caps: Caps = DEFAULT_CAPS) -> bool:
    return not state_violations(s, caps)


@dataclass(frozen=True)
class StepDelta:
    """One rule plus the truth assignment over its undecided atoms."""

    rule: CRule
    true: frozenset = EMPTY_SET
    false: frozenset = EMPTY_SET


@dataclass(frozen=True)
class ValidationResult:
    ok: bool
    condition: Optional[str] = None
    detail: Optional[str] = None


def undecided_atoms(s: State, r: CRule) -> frozenset:
    return r.domain_set - s.domain


def validate_assignment(s: State, d: StepDelta) -> ValidationResult:
    """Check that applying the delta yields a successor state."""
    r = d.rule
    if r in s.rules:
        return ValidationResult(False, "rule-considered", f"already considered: {r}")
    if not r.head:
        return ValidationResult(
            False, "head-unsatisfied", "constraints have an unsatisfiable head"
        )
    if d.true & d.false:
        overlap = sorted_atoms(d.true & d.false)
        return ValidationResult(
            False, "assignment-overlap", f"atoms both true and false: {overlap[0]}"
        )
    if (d.true | d.false) & s.domain:
        decided = sorted_atoms((d.true | d.false) & s.domain)
        return ValidationResult(
            False, "already-decided", f"atom already decided: {decided[0]}"
        )
    undecided = undecided_atoms(s, r)
    if d.true | d.false != undecided:
        missing = sorted_atoms(undecided - d.true - d.false)
        extra = sorted_atoms((d.true | d.false) - undecided)
        if missing:
            return ValidationResult(
                False, "incomplete-assignment", f"undecided atom left: {missing[0]}"
            )
        return ValidationResult(
            False, "outside-domain", f"atom outside the rule domain: {extra[0]}"
        )
    if not rule_active(r, s.pos):
        return ValidationResult(False, "not-active", f"body not satisfied yet: {r}")
    new_pos = s.pos | d.true
    for c in r.pos_body:
        if not eval_catom(c, new_pos):
            return ValidationResult(False, "body-violated", f"body literal fails: {c}")
    for c in r.neg_body:
        if eval_catom(c, new_pos):
            return ValidationResult(False, "body-violated", f"body literal fails: not {c}")
    if not head_satisfied(r, new_pos):
        if not r.head:
            return ValidationResult(
                False, "head-unsatisfied", "constraints have an unsatisfiable head"
            )
        return ValidationResult(False, "head-unsatisfied", "no head alternative satisfied")
    return ValidationResult(True)


_WORK_LIMIT = 1 << 22


def _incremental_unfounded(
    s: State, rule: CRule, delta: frozenset, new_pos: frozenset, caps: Caps
) -> frozenset:
    """Unfounded sets of the successor, computed locally from the old ones.

    Every unfounded set of the extended state is a previously unfounded set
    joined with part of the new true atoms, and the new rule is the only
    possible external support for such a set.
    """
    delta_atoms = sorted_atoms(delta)
    if len(s.unfounded) << len(delta_atoms) > _WORK_LIMIT:
        raise UnfoundedOverflowError(
            f"tracking {len(s.unfounded)} sets across {len(delta_atoms)} new atoms"
        )
    seen: set = set()
    kept: set = set()
    for x in s.unfounded:
        for extra in _subsets_of(delta_atoms):
            candidate = x | extra
            if candidate in seen:
                continue
            seen.add(candidate)
            if not external_support(rule, candidate, new_pos, caps):
                kept.add(candidate)
                if len(kept) > caps.unfounded:
                    raise UnfoundedOverflowError(
                        f"more than {caps.unfounded} unfounded sets"
                    )
    return frozenset(kept)


def apply_step(s: State, d: StepDelta, caps: Caps = DEFAULT_CAPS) -> State:
    """Successor state for a validated assignment; unfounded sets maintained
    incrementally, never by global recomputation."""
    check = validate_assignment(s, d)
    if not check.ok:
        raise PreconditionError(f"invalid step ({check.condition}): {check.detail}")
    new_pos = s.pos | d.true
    unfounded = _incremental_unfounded(s, d.rule, d.true, new_pos, caps)
    return State(s.rules | {d.rule}, new_pos, s.neg | d.false, unfounded)


def successor_assignments(s: State, r: CRule) -> Iterator[StepDelta]:
    """All valid truth assignments over the undecided atoms of an active rule."""
    if r in s.rules or not rule_active(r, s.pos):
        return
    undecided = sorted_atoms(undecided_atoms(s, r))
    for true_part in _subsets_of(undecided):
        delta = StepDelta(r, true_part, frozenset(undecided) - true_part)
        if validate_assignment(s, delta).ok:
            yield delta


def admits_successor(s: State, r: CRule) -> bool:
    return next(successor_assignments(s, r), None) is not None


def is_successor(s: State, nxt: State, caps: Caps = DEFAULT_CAPS) -> bool:
    """The successor relation between two state structures."""
    new_rules = nxt.rules - s.rules
    if len(new_rules) != 1 or s.rules - nxt.rules:
        return False
    (rule,) = new_rules
    delta = nxt.pos - s.pos
    delta_false = nxt.neg - s.neg
    if not (s.pos <= nxt.pos and s.neg <= nxt.neg):
        return False
    if not (delta | delta_false) <= rule.domain_set:
        return False
    if s.domain & (delta | delta_false):
        return False
    if not rule.domain_set <= nxt.domain:
        return False
    if not rule_active(rule, s.pos):
        return False
    if not rule_active(rule, nxt.pos) or not head_satisfied(rule, nxt.pos):
        return False
    expected = _incremental_unfounded(s, rule, delta, nxt.pos, caps)
    return nxt.unfounded == expected


# --------------------------------------------------------------------------
# Active rules and candidates
# --------------------------------------------------------------------------


def active_instances(program: GroundProgram, s: State) -> tuple[CRule, ...]:
    """Unconsidered rules whose body holds under the current interpretation."""
    return tuple(
        r for r in program.rules if r not in s.rules and rule_active(r, s.pos)
    )


def active_candidates(
    program: GroundProgram, s: State
) -> dict[Optional[str], list[CRule]]:
    """Steppable rules grouped by their source statements.

    Active instances that admit no valid successor assignment (constraints
    most prominently) are not candidates; they are what gets a computation
    stuck.
    """
    grouped: dict[Optional[str], list[CRule]] = {}
    for r in active_instances(program, s):
        if not admits_successor(s, r):
            continue
        sources = {p.source_id for p in r.provenance} or {None}
        for source in sorted(sources, key=lambda x: (x is None, x)):
            grouped.setdefault(source, []).append(r)
    return grouped


# --------------------------------------------------------------------------
# Computation tree
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class StepEdge:
    delta: StepDelta


@dataclass(frozen=True)
class JumpEdge:
    selected: tuple[str, ...]
    rules: tuple[CRule, ...]
    model: frozenset


Edge = Union[StepEdge, JumpEdge]


@dataclass
class TreeNode:
    id: int
    state: State
    parent: Optional[int]
    edge: Optional[Edge]
    children: list[int] = field(default_factory=list)


class ComputationTree:
    """Rooted tree of states; the root-to-active-leaf path is the computation.

    Nothing is ever deleted: retracting moves the active leaf and leaves the
    abandoned branch in place for redo.
    """

    def __init__(self, root: Optional[State] = None):
        root_state = root if root is not None else empty_state()
        self.nodes: dict[int, TreeNode] = {0: TreeNode(0, root_state, None, None)}
        self.active_leaf = 0
        self._next_id = 1

    def node(self, node_id: int) -> TreeNode:
        try:
            return self.nodes[node_id]
        except KeyError:
            raise UnknownNodeError(f"no node {node_id}") from None

    @property
    def active_state(self) -> State:
        return self.nodes[self.active_leaf].state

    def add_child(self, state: State, edge: Edge) -> TreeNode:
        node = TreeNode(self._next_id, state, self.active_leaf, edge)
        self.nodes[node.id] = node
        self.nodes[self.active_leaf].children.append(node.id)
        self._next_id += 1
        self.active_leaf = node.id
        return node

    def path_to(self, node_id: int) -> list[TreeNode]:
        chain = []
        cursor: Optional[int] = node_id
        while cursor is not None:
            node = self.node(cursor)
            chain.append(node)
            cursor = node.parent
        return list(reversed(chain))

    def active_path(self) -> list[TreeNode]:
        return self.path_to(self.active_leaf)

    def __len__(self) -> int:
        return len(self.nodes)


def retract(tree: ComputationTree, node_id: int) -> ComputationTree:
    """Make an earlier node the active leaf; no branch is deleted."""
    tree.node(node_id)
    tree.active_leaf = node_id
    return tree


# --------------------------------------------------------------------------
# Jumps
# --------------------------------------------------------------------------


def resolve_selection(
    program: GroundProgram, selected: Iterable[Union[str, CRule]]
) -> tuple[tuple[str, ...], tuple[CRule, ...]]:
    """Map source-rule ids and ground rules to instances of the program."""
    labels: list[str] = []
    rules: list[CRule] = []
    by_source: dict[str, list[CRule]] = {}
    for r in program.rules:
        for p in r.provenance:
            by_source.setdefault(p.source_id, []).append(r)
    for item in selected:
        if isinstance(item, CRule):
            if item not in program:
                raise UnknownRuleError(f"not a rule of the program: {item}")
            rules.append(item)
            labels.append(str(item))
        else:
            if item not in by_source:
                raise UnknownRuleError(f"unknown source rule: {item}")
            rules.extend(by_source[item])
            labels.append(item)
    return tuple(labels), tuple(dict.fromkeys(rules))


def apply_jump(
    program: GroundProgram,
    tree: ComputationTree,
    selected: Iterable[Union[str, CRule]],
    caps: Caps = DEFAULT_CAPS,
) -> State:
    """Extend the active computation through the selected rules at once.

    Solves the auxiliary program (considered rules, selected rules, and the
    freezing of the current assignment) and materialises only the stable
    target state; the intermediate steps exist by construction and can be
    reconstructed on demand.
    """
    labels, chosen = resolve_selection(program, selected)
    leaf = tree.active_state
    extra = tuple(r for r in chosen if r not in leaf.rules)
    base = leaf.rules_sorted()
    model = solve_extension(
        base,
        extra,
        required_true=leaf.pos,
        required_false=leaf.neg,
        caps=caps,
        base_unfounded=leaf.unfounded,
    )
    if model is None:
        raise NoAnswerSetError(
            "jump target inconsistent; the overall program may still be consistent"
        )
    added = flp_reduct(extra, model)
    new_rules = leaf.rules | set(added)
    domain: frozenset = leaf.domain
    for r in new_rules:
        domain |= r.domain_set
    new_state = State(
        frozenset(new_rules), model, leaf.neg | (domain - model), ONLY_EMPTY
    )
    tree.add_child(new_state, JumpEdge(labels, added, model))
    return new_state


def expand_jump(
    program: GroundProgram, start: State, target: State, caps: Caps = DEFAULT_CAPS
) -> list[StepDelta]:
    """Single-rule steps from start to a jump target, in canonical order."""
    deltas: list[StepDelta] = []
    current = start
    remaining = set(target.rules - start.rules)
    while remaining:
        eligible = [r for r in sorted(remaining, key=rule_sort_key) if rule_active(r, current.pos)]
        if not eligible:
            raise EngineError("jump expansion blocked; target is not reachable")
        rule = eligible[0]
        delta = StepDelta(
            rule,
            (target.pos & rule.domain_set) - current.pos,
            (rule.domain_set - target.pos) - current.neg,
        )
        current = apply_step(current, delta, caps)
        deltas.append(delta)
        remaining.discard(rule)
    if current != target:
        raise EngineError("jump expansion does not reproduce the target state")
    return deltas


# --------------------------------------------------------------------------
# Status
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class StatusReport:
    status: str  # in_progress | complete | succeeded | stuck
    failed_at: Optional[int] = None
    failure_checked: bool = False

    @property
    def succeeded(self) -> bool:
        return self.status == "succeeded"


def state_status(program: GroundProgram, leaf: State) -> str:
    missing_active = [
        r for r in program.rules if r not in leaf.rules and rule_active(r, leaf.pos)
    ]
    if not missing_active:
        return "succeeded" if leaf.stable else "complete"
    if any(admits_successor(leaf, r) for r in missing_active):
        return "in_progress"
    return "stuck"


def failed_at(
    program: GroundProgram, states: Iterable[State], caps: Caps = DEFAULT_CAPS
) -> Optional[int]:
    """Earliest state from which no answer set of the program is reachable."""
    for i, s in enumerate(states):
        extension = next(
            search_answer_sets(
                program.rules, required_true=s.pos, required_false=s.neg, caps=caps,
                max_models=1,
            ),
            None,
        )
        if extension is None:
            return i
    return None


def computation_status(
    program: GroundProgram,
    tree: ComputationTree,
    check_failed: bool = False,
    caps: Caps = DEFAULT_CAPS,
) -> StatusReport:
    leaf = tree.active_state
    status = state_status(program, leaf)
    if not check_failed:
        return StatusReport(status)
    states = [n.state for n in tree.active_path()]
    return StatusReport(status, failed_at(program, states, caps), True)


@dataclass(frozen=True)
class SequenceReport:
    """Classification of a raw sequence of state structures."""

    is_computation: bool
    reject_index: Optional[int] = None
    reject_reason: Optional[str] = None  # invalid-state | not-successor
    rooted: bool = False
    stable: bool = False
    for_program: bool = False
    complete: bool = False
    succeeded: bool = False
    stuck: bool = False
    failed_at: Optional[int] = None


def classify_sequence(
    program: GroundProgram,
    states: list[State],
    caps: Caps = DEFAULT_CAPS,
    check_failed: bool = False,
) -> SequenceReport:
    """Decide computation-hood and every status of a candidate sequence."""
    for i, s in enumerate(states):
        if state_violations(s, caps):
            return SequenceReport(False, reject_index=i, reject_reason="invalid-state")
    for i in range(len(states) - 1):
        if not is_successor(states[i], states[i + 1], caps):
            return SequenceReport(
                False, reject_index=i + 1, reject_reason="not-successor"
            )
    leaf = states[-1]
    for_program = all(r in program for r in leaf.rules)
    status = state_status(program, leaf) if for_program else "in_progress"
    complete = status in ("complete", "succeeded")
    return SequenceReport(
        True,
        rooted=states[0] == empty_state(),
        stable=all(s.stable for s in states),
        for_program=for_program,
        complete=complete,
        succeeded=status == "succeeded",
        stuck=status == "stuck",
        failed_at=failed_at(program, states, caps) if check_failed and for_program else None,
    )


# --------------------------------------------------------------------------
# Guided computations
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class GuidedPath:
    states: tuple[State, ...]
    deltas: tuple[StepDelta, ...]

    @property
    def final(self) -> State:
        return self.states[-1]


def guided_computation(
    program: GroundProgram,
    target: frozenset,
    start: Optional[State] = None,
    caps: Caps = DEFAULT_CAPS,
    rule_key: Optional[Callable[[CRule], object]] = None,
) -> GuidedPath:
    """Drive a computation to a known answer set.

    Follows the constructive completeness argument: repeatedly consider any
    not-yet-considered rule of the target reduct that is active under the
    current interpretation and assign its undecided atoms the truth values
    they have in the target.  `rule_key` overrides the canonical tie-break.
    """
    start = start if start is not None else empty_state()
    if len(target) <= caps.subsets:
        report = is_answer_set(program.rules, target, caps)
        if not report.is_answer_set:
            raise PreconditionError(f"target is not an answer set: {report.describe()}")
    if not start.pos <= target:
        raise PreconditionError("start considers true atoms outside the target")
    if target & start.neg:
        raise PreconditionError("target contains atoms the start considers false")
    reduct = set(flp_reduct(program.rules, target))
    if not start.rules <= reduct:
        raise PreconditionError("start considers rules outside the target reduct")

    key = rule_key if rule_key is not None else rule_sort_key
    states = [start]
    deltas: list[StepDelta] = []
    current = start
    remaining = reduct - current.rules
    while remaining:
        eligible = [r for r in remaining if rule_active(r, current.pos)]
        if not eligible:
            raise EngineError("guided computation blocked before completion")
        rule = min(eligible, key=key)
        delta = StepDelta(
            rule,
            (target & rule.domain_set) - current.pos,
            (rule.domain_set - target) - current.neg,
        )
        current = apply_step(current, delta, caps)
        states.append(current)
        deltas.append(delta)
        remaining.discard(rule)
    return GuidedPath(tuple(states), tuple(deltas))
