"""Naive bottom-up grounding with provenance.

Variables are instantiated over the atoms justified by positive rules and
ranges (a "possible atom" fixpoint, ignoring negation).  Negated body atoms
are kept even when their atom is never derivable, so instances like
`maxCol(5) :- col(5), not col(6).` survive.  Conditions of choice elements
are the one place where truth is decided at grounding time: they are
evaluated against the deterministically derivable ("certain") atoms, and a
dropped element whose condition was merely possible is reported as a
diagnostic.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Union

from .caps import DEFAULT_CAPS, Caps
from .errors import GroundingError, GroundingLimitError, UnknownRuleError
from .model import (
    Atom,
    CAtom,
    CRule,
    GroundProgram,
    Provenance,
    choice_catom,
    elementary,
    weight_to_catom,
)
from .source import (
    AtomAst,
    AtomLit,
    ChoiceElem,
    Comparison,
    CountAgg,
    HChoice,
    HDisj,
    SourceProgram,
    SourceStatement,
    TRange,
    TVar,
    TermAst,
    Variant,
    WeightAgg,
    eval_term,
    parse,
    term_vars,
)

GROUNDER_VERSION = 1


@dataclass(frozen=True)
class GroundingResult:
    source: SourceProgram
    program: GroundProgram
    diagnostics: tuple[str, ...]

    def provenance(self, rule: CRule) -> tuple[Provenance, ...]:
        for r in self.program.rules:
            if r == rule:
                return r.provenance
        raise UnknownRuleError(str(rule))

    def instances_of(self, source_rule_id: str) -> tuple[CRule, ...]:
        """All ground instances recorded for a source statement, canonical order."""
        try:
            self.source.statement(source_rule_id)
        except KeyError:
            raise UnknownRuleError(f"unknown source rule: {source_rule_id}") from None
        return tuple(
            r
            for r in self.program.rules
            if any(p.source_id == source_rule_id for p in r.provenance)
        )


def instances_of(gr: GroundingResult, source_rule_id: str) -> tuple[CRule, ...]:
    return gr.instances_of(source_rule_id)


# --------------------------------------------------------------------------
# Substitution machinery
# --------------------------------------------------------------------------


def _evaluable(t: TermAst, subst: dict) -> bool:
    return all(v in subst for v in term_vars(t))


def _ground_atom(a: AtomAst, subst: dict) -> Atom:
    args = []
    for alternatives in a.args:
        if len(alternatives) != 1:
            raise GroundingError(f"unexpanded pool in {a}")
        args.append(eval_term(alternatives[0], subst))
    return Atom(a.predicate, tuple(args))


def _unify_atom(
    a: AtomAst, ground: Atom, subst: dict
) -> Optional[tuple[dict, list[tuple[TermAst, object]]]]:
    """Extend subst so that a matches ground, or None.

    Arithmetic args whose variables are still unbound become pending
    constraints `eval(term) == value`, checked once the join binds them.
    """
    if a.predicate != ground.predicate or len(a.args) != len(ground.args):
        return None
    out = dict(subst)
    pending: list[tuple[TermAst, object]] = []
    for alternatives, value in zip(a.args, ground.args):
        t = alternatives[0]
        if isinstance(t, TVar):
            bound = out.get(t.name)
            if bound is None:
                out[t.name] = value
            elif bound != value:
                return None
        elif _evaluable(t, out):
            if eval_term(t, out) != value:
                return None
        else:
            pending.append((t, value))
    return out, pending


def _compare(op: str, left, right) -> bool:
    if op == "=":
        return left == right
    if op == "!=":
        return left != right
    if type(left) is not type(right):
        raise GroundingError(f"ordered comparison over mixed terms: {left} {op} {right}")
    if op == "<":
        return left < right
    if op == "<=":
        return left <= right
    if op == ">":
        return left > right
    if op == ">=":
        return left >= right
    raise GroundingError(f"unknown comparison {op}")


class _Index:
    """Possible atoms grouped by predicate and arity."""

    def __init__(self):
        self.by_pred: dict[tuple[str, int], list[Atom]] = {}
        self.all: set[Atom] = set()

    def add(self, a: Atom) -> bool:
        if a in self.all:
            return False
        self.all.add(a)
        self.by_pred.setdefault((a.predicate, len(a.args)), []).append(a)
        return True

    def candidates(self, a: AtomAst) -> list[Atom]:
        return self.by_pred.get((a.predicate, len(a.args)), [])


def _range_values(t: TRange, subst: dict) -> range:
    lo = eval_term(t.lower, subst)
    hi = eval_term(t.upper, subst)
    if not isinstance(lo, int) or not isinstance(hi, int):
        raise GroundingError(f"range bounds must be integers: {t}")
    return range(lo, hi + 1)


def _join(
    literals: list[Union[AtomLit, Comparison]],
    index: _Index,
    subst: dict,
    pending: tuple[tuple[TermAst, object], ...] = (),
) -> Iterator[dict]:
    """Enumerate substitutions satisfying positive atoms and comparisons.

    Comparisons with `=` act as binders (including ranges).  Pending
    constraints are arithmetic matches deferred until their variables are
    bound by a later literal.
    """
    still: list[tuple[TermAst, object]] = []
    for term, expected in pending:
        if _evaluable(term, subst):
            if eval_term(term, subst) != expected:
                return
        else:
            still.append((term, expected))

    if not literals:
        if still:
            raise GroundingError(
                "unresolved arithmetic match: "
                + ", ".join(str(t) for t, _ in still)
            )
        yield subst
        return

    # consume any comparison that can be decided or used as a binder now
    for i, lit in enumerate(literals):
        if not isinstance(lit, Comparison):
            continue
        rest = literals[:i] + literals[i + 1 :]
        left_range = isinstance(lit.left, TRange)
        right_range = isinstance(lit.right, TRange)
        if not left_range and not right_range:
            if _evaluable(lit.left, subst) and _evaluable(lit.right, subst):
                if _compare(lit.op, eval_term(lit.left, subst), eval_term(lit.right, subst)):
                    yield from _join(rest, index, subst, tuple(still))
                return
        if lit.op == "=":
            for var_side, other in ((lit.left, lit.right), (lit.right, lit.left)):
                if isinstance(other, TRange):
                    if not (_evaluable(other.lower, subst) and _evaluable(other.upper, subst)):
                        continue
                    values = _range_values(other, subst)
                    if isinstance(var_side, TVar) and var_side.name not in subst:
                        for v in values:
                            yield from _join(
                                rest, index, {**subst, var_side.name: v}, tuple(still)
                            )
                        return
                    if _evaluable(var_side, subst):
                        if eval_term(var_side, subst) in values:
                            yield from _join(rest, index, subst, tuple(still))
                        return
                elif isinstance(var_side, TVar) and var_side.name not in subst and _evaluable(
                    other, subst
                ):
                    yield from _join(
                        rest, index, {**subst, var_side.name: eval_term(other, subst)},
                        tuple(still),
                    )
                    return

    # otherwise branch on the first positive atom
    for i, lit in enumerate(literals):
        if isinstance(lit, AtomLit) and not lit.negated:
            rest = literals[:i] + literals[i + 1 :]
            for ground in index.candidates(lit.atom):
                unified = _unify_atom(lit.atom, ground, subst)
                if unified is not None:
                    extended, extra = unified
                    yield from _join(rest, index, extended, tuple(still) + tuple(extra))
            return

    raise GroundingError(
        "cannot order body literals for instantiation: "
        + ", ".join(str(l) for l in literals)
    )


def _positive_join_literals(body: Iterable) -> list[Union[AtomLit, Comparison]]:
    out: list[Union[AtomLit, Comparison]] = []
    for lit in body:
        if isinstance(lit, AtomLit) and not lit.negated:
            out.append(lit)
        elif isinstance(lit, Comparison):
            out.append(lit)
    return out


# --------------------------------------------------------------------------
# Fixpoints
# --------------------------------------------------------------------------


def _variant_head_derivations(variant: Variant, index: _Index, subst: dict) -> Iterator[Atom]:
    head = variant.head
    if head is None:
        return
    if isinstance(head, HDisj):
        for a in head.atoms:
            yield _ground_atom(a, subst)
    else:
        for elem in head.elements:
            conds = _positive_join_literals(elem.conditions)
            for elem_subst in _join(conds, index, subst):
                yield _ground_atom(elem.atom, elem_subst)


def _possible_atoms(statements: Iterable[SourceStatement], caps: Caps) -> _Index:
    index = _Index()
    budget = caps.ground_instances * 4
    changed = True
    while changed:
        changed = False
        for st in statements:
            for variant in st.variants:
                joins = _positive_join_literals(variant.body)
                for subst in _join(joins, index, {}):
                    for derived in _variant_head_derivations(variant, index, subst):
                        if index.add(derived):
                            changed = True
                            budget -= 1
                            if budget <= 0:
                                raise GroundingLimitError(len(index.all), caps.ground_instances)
    return index


def _certain_atoms(statements: Iterable[SourceStatement], possible: _Index, caps: Caps) -> set:
    certain = _Index()
    changed = True
    while changed:
        changed = False
        for st in statements:
            for variant in st.variants:
                head = variant.head
                if not isinstance(head, HDisj) or len(head.atoms) != 1:
                    continue
                if any(isinstance(l, (CountAgg, WeightAgg)) for l in variant.body):
                    continue
                joins = _positive_join_literals(variant.body)
                negs = [l for l in variant.body if isinstance(l, AtomLit) and l.negated]
                for subst in _join(joins, certain, subst={}):
                    if any(_ground_atom(n.atom, subst) in possible.all for n in negs):
                        continue
                    if certain.add(_ground_atom(head.atoms[0], subst)):
                        changed = True
    return certain.all


# --------------------------------------------------------------------------
# Rule emission
# --------------------------------------------------------------------------


def _eval_bound(t: Optional[TermAst], subst: dict, default):
    if t is None:
        return default
    return eval_term(t, subst)


def _expand_choice_elements(
    elements: Iterable[ChoiceElem],
    subst: dict,
    possible: _Index,
    certain: set,
    diagnostics: list[str],
    where: str,
) -> tuple[Atom, ...]:
    domain: list[Atom] = []
    seen: set[Atom] = set()
    for elem in elements:
        conds = _positive_join_literals(elem.conditions)
        negs = [c for c in elem.conditions if isinstance(c, AtomLit) and c.negated]
        for elem_subst in _join(conds, possible, subst):
            ok = True
            for c in elem.conditions:
                if isinstance(c, AtomLit) and not c.negated:
                    ground = _ground_atom(c.atom, elem_subst)
                    if ground not in certain:
                        ok = False
                        if ground in possible.all:
                            diagnostics.append(
                                f"{where}: condition {ground} is possible but not certain; "
                                f"element {elem.atom} dropped"
                            )
                        break
            if ok:
                for c in negs:
                    ground = _ground_atom(c.atom, elem_subst)
                    if ground in certain:
                        ok = False
                        break
                    if ground in possible.all:
                        diagnostics.append(
                            f"{where}: negated condition over possible atom {ground}; "
                            f"element {elem.atom} kept"
                        )
            if ok:
                a = _ground_atom(elem.atom, elem_subst)
                if a not in seen:
                    seen.add(a)
                    domain.append(a)
    return tuple(domain)


def _emit_instance(
    st: SourceStatement,
    variant_index: int,
    variant: Variant,
    subst: dict,
    possible: _Index,
    certain: set,
    diagnostics: list[str],
) -> CRule:
    where = f"{st.id}[{variant_index}]"
    head_catoms: list[CAtom] = []
    head = variant.head
    if isinstance(head, HDisj):
        head_catoms = [elementary(_ground_atom(a, subst)) for a in head.atoms]
    elif isinstance(head, HChoice):
        lower = int(_eval_bound(head.lower, subst, 0))
        upper = _eval_bound(head.upper, subst, None)
        domain = _expand_choice_elements(
            head.elements, subst, possible, certain, diagnostics, where
        )
        head_catoms = [choice_catom(domain, lower, None if upper is None else int(upper))]

    pos_body: list[CAtom] = []
    neg_body: list[CAtom] = []
    for lit in variant.body:
        if isinstance(lit, AtomLit):
            ground = elementary(_ground_atom(lit.atom, subst))
            (neg_body if lit.negated else pos_body).append(ground)
        elif isinstance(lit, Comparison):
            continue  # already checked during the join
        elif isinstance(lit, CountAgg):
            lower = int(_eval_bound(lit.lower, subst, 0))
            upper = _eval_bound(lit.upper, subst, None)
            domain = _expand_choice_elements(
                lit.elements, subst, possible, certain, diagnostics, where
            )
            catom = choice_catom(domain, lower, None if upper is None else int(upper))
            (neg_body if lit.negated else pos_body).append(catom)
        elif isinstance(lit, WeightAgg):
            lower = _eval_bound(lit.lower, subst, float("-inf"))
            upper = _eval_bound(lit.upper, subst, float("inf"))
            entries = [
                (_ground_atom(a, subst), positive, float(eval_term(w, subst)))
                for a, positive, w in lit.entries
            ]
            catom = weight_to_catom(float(lower), entries, float(upper))
            (neg_body if lit.negated else pos_body).append(catom)

    visible = _variant_vars(variant)
    prov = Provenance(
        st.id,
        tuple((v, subst[v]) for v in sorted(subst) if v in visible),
        variant_index,
    )
    return CRule(head_catoms, pos_body, neg_body, (prov,))


def _variant_vars(variant: Variant) -> frozenset:
    out: frozenset = frozenset()
    if isinstance(variant.head, HDisj):
        for a in variant.head.atoms:
            for alts in a.args:
                for t in alts:
                    out |= term_vars(t)
    elif isinstance(variant.head, HChoice):
        for b in (variant.head.lower, variant.head.upper):
            if b is not None:
                out |= term_vars(b)
    for lit in variant.body:
        if isinstance(lit, AtomLit):
            for alts in lit.atom.args:
                for t in alts:
                    out |= term_vars(t)
        elif isinstance(lit, Comparison):
            out |= term_vars(lit.left) | term_vars(lit.right)
    return out


def ground(sp: SourceProgram, caps: Caps = DEFAULT_CAPS) -> GroundingResult:
    """Instantiate a parsed program over its justified Herbrand terms."""
    possible = _possible_atoms(sp.statements, caps)
    certain = _certain_atoms(sp.statements, possible, caps)
    diagnostics: list[str] = []
    rules: list[CRule] = []
    count = 0
    for st in sp.statements:
        for vi, variant in enumerate(st.variants):
            joins = _positive_join_literals(variant.body)
            for subst in _join(joins, possible, {}):
                rules.append(
                    _emit_instance(st, vi, variant, subst, possible, certain, diagnostics)
                )
                count += 1
                if count > caps.ground_instances:
                    raise GroundingLimitError(count, caps.ground_instances)
    program = GroundProgram(rules)
    return GroundingResult(sp, program, tuple(diagnostics))


def ground_text(text: str, caps: Caps = DEFAULT_CAPS) -> GroundingResult:
    return ground(parse(text), caps)


def render_ground_program(gr: GroundingResult, with_provenance: bool = True) -> str:
    """One canonical rule per line, provenance as a trailing comment."""
    lines = []
    for r in gr.program.rules:
        line = str(r)
        if with_provenance and r.provenance:
            notes = []
            for p in r.provenance:
                binding = ",".join(f"{v}→{t}" for v, t in p.substitution)
                notes.append(f"{p.source_id} {{{binding}}}")
            line += "  % " + "; ".join(notes)
        lines.append(line)
    return "\n".join(lines)
