"""Answer-set semantics: reduct, stability, unfounded sets, and search.

Stability of a model is checked either through the smaller-interpretation
condition or through nonempty unfounded subsets; the two are equivalent and
both are available.  A polynomial fixpoint covers the normal convex
fragment, everything else falls back to capped exhaustive search.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Iterator, Optional, Union

from .caps import DEFAULT_CAPS, Caps
from .errors import CapExceededError, NotApplicableError, SearchExhaustedError
from .model import (
    Atom,
    CAtom,
    CRule,
    GroundProgram,
    classify_literal,
    CLiteral,
    eval_catom,
    has_satisfier_superset,
    head_satisfied,
    program_satisfied,
    rule_active,
    rule_satisfied,
    sorted_atoms,
)


def flp_reduct(rules: Iterable[CRule], interp: frozenset) -> tuple[CRule, ...]:
    """The rules active under the interpretation, kept intact."""
    return tuple(r for r in rules if rule_active(r, interp))


def condition_o(rules: Iterable[CRule], interp: frozenset, smaller: frozenset) -> bool:
    """The smaller interpretation re-satisfies every active reduct rule.

    True means `smaller` witnesses that `interp` is not stable: each reduct
    rule active under `smaller` has a head c-atom satisfied by `smaller`
    with the same projection as under `interp`.
    """
    for r in flp_reduct(rules, interp):
        if not rule_active(r, smaller):
            continue
        witness = False
        for a in r.head:
            if eval_catom(a, smaller) and (smaller & a.domain_set) == (interp & a.domain_set):
                witness = True
                break
        if not witness:
            return False
    return True


def external_support(r: CRule, x: frozenset, interp: frozenset, caps: Caps = DEFAULT_CAPS) -> bool:
    """The rule actively derives part of x without depending on x."""
    if not rule_active(r, interp):
        return False
    if not rule_active(r, interp - x):
        return False
    derives = False
    for a in r.head:
        if x & a.domain_set and has_satisfier_superset(a, interp, caps):
            derives = True
            break
    if not derives:
        return False
    xi = x & interp
    for a in r.head:
        if eval_catom(a, interp) and not (xi & a.domain_set):
            return False
    return True


def _subsets_of(atoms: tuple, include_empty: bool = True) -> Iterator[frozenset]:
    start = 0 if include_empty else 1
    for k in range(start, len(atoms) + 1):
        for combo in combinations(atoms, k):
            yield frozenset(combo)


def unfounded_sets(
    rules: Iterable[CRule],
    interp: frozenset,
    caps: Caps = DEFAULT_CAPS,
) -> tuple[frozenset, ...]:
    """All unfounded subsets of the interpretation, the empty set included."""
    rules = tuple(rules)
    atoms = sorted_atoms(interp)
    if len(atoms) > caps.subsets:
        raise CapExceededError("unfounded subset search", len(atoms), caps.subsets)
    out = []
    for x in _subsets_of(atoms):
        if not any(external_support(r, x, interp, caps) for r in rules):
            out.append(x)
    return tuple(sorted(out, key=lambda s: (len(s), sorted_atoms(s))))


def has_nonempty_unfounded_subset(
    rules: Iterable[CRule], interp: frozenset, caps: Caps = DEFAULT_CAPS
) -> Optional[frozenset]:
    rules = tuple(rules)
    atoms = sorted_atoms(interp)
    if len(atoms) > caps.subsets:
        raise CapExceededError("unfounded subset search", len(atoms), caps.subsets)
    for x in _subsets_of(atoms, include_empty=False):
        if not any(external_support(r, x, interp, caps) for r in rules):
            return x
    return None


def is_normal_convex(rules: Iterable[CRule], caps: Caps = DEFAULT_CAPS) -> bool:
    """Single-atom heads and convex-or-monotone literals throughout.

    Constraints are exempt: a rule without a head can never externally
    support anything, so it cannot affect which sets are unfounded.
    """
    for r in rules:
        if r.is_constraint():
            continue
        if not r.is_normal():
            return False
        literals = [CLiteral(a) for a in r.head] + list(r.body_literals())
        for lit in literals:
            if classify_literal(lit, caps) == "neither":
                return False
    return True


def greatest_unfounded_check(
    rules: Iterable[CRule],
    interp: frozenset,
    scope: frozenset,
    caps: Caps = DEFAULT_CAPS,
    precheck: bool = True,
) -> Optional[frozenset]:
    """Greatest unfounded subset of interp∩scope for normal convex programs.

    Shrinks the candidate set by removing atoms some rule supports externally
    of the remainder; the nonempty fixpoint is an unfounded set, and an empty
    fixpoint proves no nonempty unfounded subset exists within the scope.
    """
    rules = tuple(rules)
    if precheck and not is_normal_convex(rules, caps):
        raise NotApplicableError("greatest_unfounded_check needs a normal convex program")
    candidate = set(interp & scope)
    # a rule can only ever free the candidate atoms its head domain covers
    # and whose head can still reach a satisfier above the interpretation
    eligible: list[tuple[CRule, frozenset]] = []
    for r in rules:
        if not r.head or not rule_active(r, interp):
            continue
        head = r.head[0]
        covered = head.domain_set & candidate
        if covered and has_satisfier_superset(head, interp, caps):
            eligible.append((r, head.domain_set))
    changed = True
    while changed and candidate:
        changed = False
        remainder = interp - candidate
        for r, head_dom in eligible:
            if head_dom & candidate and rule_active(r, remainder):
                candidate -= head_dom
                remainder = interp - candidate
                changed = True
    return frozenset(candidate) if candidate else None


# --------------------------------------------------------------------------
# Answer-set check
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class AnswerSetReport:
    is_answer_set: bool
    violated_rule: Optional[CRule] = None
    smaller_model: Optional[frozenset] = None
    unfounded_set: Optional[frozenset] = None

    @property
    def witness(self):
        if self.violated_rule is not None:
            return self.violated_rule
        if self.smaller_model is not None:
            return self.smaller_model
        return self.unfounded_set

    def describe(self) -> str:
        if self.is_answer_set:
            return "answer set"
        if self.violated_rule is not None:
            return f"violated rule: {self.violated_rule}"
        if self.smaller_model is not None:
            return "smaller interpretation re-satisfies the reduct: " + "{" + ", ".join(
                str(a) for a in sorted_atoms(self.smaller_model)
            ) + "}"
        return "nonempty unfounded set: " + "{" + ", ".join(
            str(a) for a in sorted_atoms(self.unfounded_set or frozenset())
        ) + "}"


def is_answer_set(
    program: Union[GroundProgram, Iterable[CRule]],
    interp: frozenset,
    caps: Caps = DEFAULT_CAPS,
    strategy: str = "auto",
) -> AnswerSetReport:
    """Model check plus stability check.

    strategy: "condition-o" searches for a smaller interpretation satisfying
    the reduct condition, "unfounded" searches for a nonempty unfounded
    subset, "auto" uses the polynomial fixpoint when the program is normal
    and convex and the unfounded search otherwise.
    """
    rules = tuple(program)
    for r in rules:
        if not rule_satisfied(r, interp):
            return AnswerSetReport(False, violated_rule=r)

    if strategy == "condition-o":
        atoms = sorted_atoms(interp)
        if len(atoms) > caps.subsets:
            raise CapExceededError("smaller-model search", len(atoms), caps.subsets)
        for smaller in _subsets_of(atoms):
            if len(smaller) == len(atoms):
                continue
            if condition_o(rules, interp, smaller):
                return AnswerSetReport(False, smaller_model=smaller)
        return AnswerSetReport(True)

    if strategy == "auto" and is_normal_convex(rules, caps):
        u = greatest_unfounded_check(rules, interp, interp, caps, precheck=False)
        if u is not None:
            return AnswerSetReport(False, unfounded_set=u)
        return AnswerSetReport(True)

    x = has_nonempty_unfounded_subset(rules, interp, caps)
    if x is not None:
        return AnswerSetReport(False, unfounded_set=x)
    return AnswerSetReport(True)


def enumerate_answer_sets(
    program: Union[GroundProgram, Iterable[CRule]],
    caps: Caps = DEFAULT_CAPS,
    strategy: str = "auto",
) -> tuple[frozenset, ...]:
    """Brute-force oracle over every subset of the program domain."""
    rules = tuple(program)
    universe: frozenset = frozenset()
    for r in rules:
        universe |= r.domain_set
    atoms = sorted_atoms(universe)
    if len(atoms) > caps.atoms:
        raise CapExceededError("answer-set enumeration", len(atoms), caps.atoms)
    out = []
    for interp in _subsets_of(atoms):
        if program_satisfied(rules, interp) and is_answer_set(
            rules, interp, caps, strategy
        ).is_answer_set:
            out.append(interp)
    return tuple(sorted(out, key=lambda s: (len(s), sorted_atoms(s))))


# --------------------------------------------------------------------------
# Backtracking search for answer sets of an extended program
# --------------------------------------------------------------------------


from .model import Elementary as _Elementary


def _fast_lit_may_must(catom: CAtom, negated: bool, true: set, false: set) -> tuple[bool, bool]:
    spec = catom.spec
    if type(spec) is _Elementary:
        a = spec.atom
        if a in true:
            may = must = True
        elif a in false:
            may = must = False
        else:
            may, must = True, False
    else:
        dom = catom.domain_set
        t = frozenset(dom & true)
        undecided = dom - t - false
        may, must = spec.bounds_given(t, undecided)
    if negated:
        return not must, not may
    return may, must


@dataclass
class _SearchState:
    true: set
    false: set
    budget: int


class _Prepared:
    """Rule structures and an atom-to-rule index for fast propagation."""

    def __init__(self, rules: tuple[CRule, ...]):
        self.rules = rules
        self.body: list[tuple[tuple[CAtom, bool], ...]] = []
        self.heads: list[tuple[CAtom, ...]] = []
        self.by_atom: dict[Atom, list[int]] = {}
        # per rule: positive elementary body atoms (support gating) and the
        # union of head domains (support contribution)
        self.pos_elementary: list[tuple[Atom, ...]] = []
        self.head_atoms: list[frozenset] = []
        for i, r in enumerate(rules):
            lits = tuple((c, False) for c in r.pos_body) + tuple(
                (c, True) for c in r.neg_body
            )
            self.body.append(lits)
            self.heads.append(r.head)
            self.pos_elementary.append(
                tuple(
                    c.spec.atom
                    for c in r.pos_body
                    if type(c.spec) is _Elementary
                )
            )
            head_dom: frozenset = frozenset()
            for c in r.head:
                head_dom |= c.domain_set
            self.head_atoms.append(head_dom)
            for a in r.domain_set:
                self.by_atom.setdefault(a, []).append(i)

    def support_closure(self, st: "_SearchState") -> set:
        """Least set of atoms that can still be derived with support.

        A rule contributes its head domain once its body may still hold and
        every positive elementary body atom is itself supported; atoms
        outside the closure are false in every answer set extending the
        assignment.  Non-elementary body parts gate nothing, which only
        enlarges the closure and stays sound.
        """
        supported: set = set()
        changed = True
        while changed:
            changed = False
            for i in range(len(self.rules)):
                head_atoms = self.head_atoms[i]
                if not head_atoms or head_atoms <= supported:
                    continue
                if any(
                    b in st.false or b not in supported
                    for b in self.pos_elementary[i]
                ):
                    continue
                ok = True
                for catom, negated in self.body[i]:
                    if not negated and type(catom.spec) is _Elementary:
                        continue  # gated above
                    may, _must = _fast_lit_may_must(catom, negated, st.true, st.false)
                    if not may:
                        ok = False
                        break
                if not ok:
                    continue
                new_atoms = {a for a in head_atoms if a not in st.false} - supported
                if new_atoms:
                    supported |= new_atoms
                    changed = True
        return supported

    def propagate_full(
        self, st: "_SearchState", dirty: Iterable[int], universe: tuple[Atom, ...]
    ) -> bool:
        """Worklist propagation plus support-closure falsification."""
        pending = list(dirty)
        while True:
            if not self.propagate(st, pending):
                return False
            supported = self.support_closure(st)
            for a in st.true:
                if a not in supported:
                    return False
            newly_false = [
                a
                for a in universe
                if a not in supported and a not in st.false and a not in st.true
            ]
            if not newly_false:
                return True
            pending = []
            for a in newly_false:
                st.false.add(a)
                pending.extend(self.by_atom.get(a, ()))

    def propagate(self, st: "_SearchState", dirty: Iterable[int]) -> bool:
        """Force certain consequences of dirty rules; False on conflict."""
        queue = list(dict.fromkeys(dirty))
        queued = set(queue)
        while queue:
            i = queue.pop()
            queued.discard(i)
            body_may = True
            body_must = True
            for catom, negated in self.body[i]:
                may, must = _fast_lit_may_must(catom, negated, st.true, st.false)
                if not may:
                    body_may = False
                    break
                if not must:
                    body_must = False
            if not body_may or not body_must:
                continue
            head_may = [
                c
                for c in self.heads[i]
                if _fast_lit_may_must(c, False, st.true, st.false)[0]
            ]
            if not head_may:
                return False
            if len(head_may) == 1 and head_may[0].is_elementary():
                forced = head_may[0].domain[0]
                if forced not in st.true:
                    if forced in st.false:
                        return False
                    st.true.add(forced)
                    for j in self.by_atom.get(forced, ()):
                        if j not in queued:
                            queued.add(j)
                            queue.append(j)
        return True


def _scc_order(vertices: tuple[Atom, ...], edges: dict) -> list[Atom]:
    """Atoms ordered dependencies-first (Tarjan completion order of SCCs)."""
    index: dict[Atom, int] = {}
    low: dict[Atom, int] = {}
    on_stack: set = set()
    stack: list[Atom] = []
    order: list[Atom] = []
    counter = [0]

    def strongconnect(root: Atom):
        work = [(root, iter(sorted(edges.get(root, ()), key=Atom.sort_key)))]
        index[root] = low[root] = counter[0]
        counter[0] += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter[0]
                    counter[0] += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(sorted(edges.get(w, ()), key=Atom.sort_key))))
                    advanced = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
            if low[v] == index[v]:
                component = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    component.append(w)
                    if w == v:
                        break
                order.extend(sorted(component, key=Atom.sort_key))

    for v in sorted(vertices, key=Atom.sort_key):
        if v not in index:
            strongconnect(v)
    return order


def _branch_order(rules: tuple[CRule, ...], candidates: frozenset) -> tuple[Atom, ...]:
    """Branching order: an atom only after the atoms its derivations read."""
    edges: dict[Atom, set] = {}
    for r in rules:
        body_dom: frozenset = frozenset()
        for c in r.pos_body + r.neg_body:
            body_dom |= c.domain_set
        body_dom &= candidates
        if not body_dom:
            continue
        for c in r.head:
            for h in c.domain_set & candidates:
                edges.setdefault(h, set()).update(body_dom - {h})
    return tuple(_scc_order(tuple(candidates), edges))


def _search_models(
    prepared: _Prepared,
    atoms: tuple[Atom, ...],
    st: _SearchState,
    pos: int,
    dirty: Iterable[int],
) -> Iterator[frozenset]:
    """Depth-first enumeration of classical models, false branch first."""
    if st.budget <= 0:
        raise SearchExhaustedError("solver node budget exhausted")
    st.budget -= 1

    entry_true, entry_false = set(st.true), set(st.false)
    try:
        if not prepared.propagate_full(st, dirty, atoms):
            return
        while pos < len(atoms) and (atoms[pos] in st.true or atoms[pos] in st.false):
            pos += 1
        if pos == len(atoms):
            interp = frozenset(st.true)
            if program_satisfied(prepared.rules, interp):
                yield interp
            return
        pivot = atoms[pos]
        decided_true, decided_false = set(st.true), set(st.false)
        affected = prepared.by_atom.get(pivot, ())
        for value in (False, True):
            st.true = set(decided_true)
            st.false = set(decided_false)
            (st.true if value else st.false).add(pivot)
            yield from _search_models(prepared, atoms, st, pos + 1, affected)
    finally:
        st.true, st.false = entry_true, entry_false


def search_answer_sets(
    program: Union[GroundProgram, Iterable[CRule]],
    required_true: frozenset = frozenset(),
    required_false: frozenset = frozenset(),
    caps: Caps = DEFAULT_CAPS,
    base_unfounded: Optional[Iterable[frozenset]] = None,
    max_models: Optional[int] = None,
) -> Iterator[frozenset]:
    """Complete enumeration of answer sets extending a partial assignment.

    Candidate models are produced by backtracking (required atoms pinned
    first, then the remaining domain in canonical order, false before true)
    and kept when stable.  When the caller knows the unfounded sets of a
    pinned base state, the stability check is localised to the new atoms
    joined with those sets; otherwise the polynomial fixpoint is used where
    applicable and capped exhaustive search beyond that.
    """
    rules = tuple(program)
    universe: frozenset = frozenset()
    for r in rules:
        universe |= r.domain_set
    if required_true & required_false:
        return
    if not (required_true <= universe and required_false <= universe):
        universe = universe | required_true | required_false
    # required atoms are pinned up front; the rest branches in dependency
    # order (sources before derived atoms) to keep false-first propagation
    # from thrashing, canonical order breaking ties
    undecided = _branch_order(rules, universe - required_true - required_false)
    atoms = sorted_atoms(required_true) + sorted_atoms(required_false) + undecided

    normal_convex = is_normal_convex(rules, caps)
    base_unfounded_sets = (
        tuple(frozenset(x) for x in base_unfounded) if base_unfounded is not None else None
    )

    prepared = _Prepared(rules)
    st = _SearchState(set(required_true), set(required_false), caps.search_nodes)
    found = 0
    for interp in _search_models(prepared, atoms, st, 0, range(len(rules))):
        if not (required_true <= interp and not (required_false & interp)):
            continue
        if _stable(rules, interp, caps, normal_convex, required_true, base_unfounded_sets):
            yield interp
            found += 1
            if max_models is not None and found >= max_models:
                return


def _stable(
    rules: tuple[CRule, ...],
    interp: frozenset,
    caps: Caps,
    normal_convex: bool,
    pinned_true: frozenset,
    base_unfounded_sets: Optional[tuple[frozenset, ...]],
) -> bool:
    if normal_convex:
        return (
            greatest_unfounded_check(rules, interp, interp, caps, precheck=False) is None
        )
    if base_unfounded_sets is not None:
        # locality: any unfounded subset of interp splits into a previously
        # unfounded part of the pinned base and a subset of the new atoms
        delta = sorted_atoms(interp - pinned_true)
        if len(delta) > caps.subsets:
            raise CapExceededError("unfounded subset search", len(delta), caps.subsets)
        for base in base_unfounded_sets:
            for extra in _subsets_of(delta):
                x = base | extra
                if not x:
                    continue
                if not any(external_support(r, x, interp, caps) for r in rules):
                    return False
        return True
    return has_nonempty_unfounded_subset(rules, interp, caps) is None


def solve_extension(
    base: Union[GroundProgram, Iterable[CRule]],
    extra: Union[GroundProgram, Iterable[CRule]],
    required_true: frozenset = frozenset(),
    required_false: frozenset = frozenset(),
    caps: Caps = DEFAULT_CAPS,
    base_unfounded: Optional[Iterable[frozenset]] = None,
    verify: bool = True,
) -> Optional[frozenset]:
    """One answer set of base ∪ extra respecting the required assignment.

    Returns None when the search space is exhausted (proven absence); a
    budget overrun raises SearchExhaustedError instead.  Within caps, the
    chosen model is re-verified by the reference check before returning.
    """
    base_rules = tuple(base)
    rules = tuple(GroundProgram(base_rules + tuple(extra)))
    if base_unfounded is not None:
        # the locality argument needs every base-rule atom pinned; drop the
        # hint rather than risk an unsound restriction
        base_dom: frozenset = frozenset()
        for r in base_rules:
            base_dom |= r.domain_set
        if not base_dom <= (required_true | required_false):
            base_unfounded = None
    for interp in search_answer_sets(
        rules,
        required_true,
        required_false,
        caps,
        base_unfounded=base_unfounded,
        max_models=1,
    ):
        if verify and len(interp) <= caps.subsets:
            report = is_answer_set(rules, interp, caps)
            if not report.is_answer_set:
                raise AssertionError(
                    f"search produced a non-answer-set: {report.describe()}"
                )
        return interp
    return None
