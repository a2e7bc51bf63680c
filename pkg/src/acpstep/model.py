"""Ground data model: atoms, abstract-constraint atoms, rules, programs.

An abstract-constraint atom couples a finite atom domain D with a collection
of satisfying subsets of D.  The collection is either listed explicitly or
described intensionally (weight and cardinality bounds), with one uniform
membership test; explicit enumeration happens only on demand and is capped.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Iterator, Union

from .caps import DEFAULT_CAPS, Caps
from .errors import CapExceededError, EngineError

Term = Union[int, str]


def term_key(t: Term):
    # integers sort before symbolic constants
    return (0, t, "") if isinstance(t, int) else (1, 0, t)


def render_term(t: Term) -> str:
    return str(t)


class Atom:
    """A ground atom: predicate plus integer/symbol arguments.

    Values are immutable by convention; the hash is precomputed because
    atoms dominate every set operation in the engine.
    """

    __slots__ = ("predicate", "args", "_hash")

    def __init__(self, predicate: str, args: tuple[Term, ...] = ()):
        self.predicate = predicate
        self.args = args
        self._hash = hash((predicate, args))

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Atom)
            and self.predicate == other.predicate
            and self.args == other.args
        )

    def __hash__(self) -> int:
        return self._hash

    def sort_key(self):
        return (self.predicate, len(self.args), tuple(term_key(t) for t in self.args))

    def __lt__(self, other: "Atom") -> bool:
        return self.sort_key() < other.sort_key()

    def __str__(self) -> str:
        if not self.args:
            return self.predicate
        return f"{self.predicate}({','.join(render_term(t) for t in self.args)})"

    def __repr__(self) -> str:
        return f"Atom({str(self)!r})"


def atom(predicate: str, *args: Term) -> Atom:
    return Atom(predicate, tuple(args))


Interpretation = frozenset  # frozenset[Atom]; projection to X is `I & X`

EMPTY_I: Interpretation = frozenset()


def sorted_atoms(atoms: Iterable[Atom]) -> tuple[Atom, ...]:
    return tuple(sorted(atoms, key=Atom.sort_key))


def render_atom_set(atoms: Iterable[Atom]) -> str:
    return "{" + ", ".join(str(a) for a in sorted_atoms(atoms)) + "}"


_ATOM_RE = re.compile(r"\s*([a-z][A-Za-z0-9_]*)\s*(\(([^()]*)\))?\s*")


def parse_atom(text: str) -> Atom:
    """Parse `pred` or `pred(t1,...,tn)` with integer/symbol terms."""
    m = _ATOM_RE.fullmatch(text)
    if not m:
        raise EngineError(f"cannot parse atom: {text!r}")
    if m.group(2) is None:
        return Atom(m.group(1))
    args: list[Term] = []
    for raw in m.group(3).split(","):
        raw = raw.strip()
        if not raw:
            raise EngineError(f"cannot parse atom: {text!r}")
        args.append(int(raw) if re.fullmatch(r"-?\d+", raw) else raw)
    return Atom(m.group(1), tuple(args))


def parse_atom_list(text: str) -> frozenset:
    """Parse a comma-separated atom list, with or without surrounding braces."""
    text = text.strip()
    if text.startswith("{") and text.endswith("}"):
        text = text[1:-1]
    if not text.strip():
        return frozenset()
    parts = re.split(r",(?![^()]*\))", text)
    return frozenset(parse_atom(p) for p in parts)


# --------------------------------------------------------------------------
# Satisfier specifications
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Elementary:
    """The c-atom <{a},{{a}}> identified with the plain atom a."""

    atom: Atom

    def holds(self, x: frozenset) -> bool:
        return self.atom in x

    def bounds_given(self, true: frozenset, undecided: frozenset) -> tuple[bool, bool]:
        may = self.atom in true or self.atom in undecided
        must = self.atom in true
        return may, must


@dataclass(frozen=True)
class ExplicitSatisfiers:
    """Satisfying subsets listed extensionally."""

    sets: frozenset  # frozenset[frozenset[Atom]]

    def holds(self, x: frozenset) -> bool:
        return x in self.sets

    def bounds_given(self, true: frozenset, undecided: frozenset) -> tuple[bool, bool]:
        may = any(true <= s <= true | undecided for s in self.sets)
        must = may and all(
            frozenset(true | set(extra)) in self.sets
            for extra in _subsets(tuple(undecided))
        )
        return may, must


@dataclass(frozen=True)
class WeightEntry:
    atom: Atom
    positive: bool
    weight: float


@dataclass(frozen=True)
class WeightConstraint:
    """l <= sum of weights <= u, negative-polarity entries count when absent."""

    lower: float
    upper: float
    entries: tuple[WeightEntry, ...]

    def _sum(self, x: frozenset) -> float:
        total = 0.0
        for e in self.entries:
            if e.positive == (e.atom in x):
                total += e.weight
        return total

    def holds(self, x: frozenset) -> bool:
        return self.lower <= self._sum(x) <= self.upper

    def _sum_range(self, true: frozenset, undecided: frozenset) -> tuple[float, float]:
        lo = hi = 0.0
        for e in self.entries:
            if e.atom in undecided:
                contrib_in = e.weight if e.positive else 0.0
                contrib_out = 0.0 if e.positive else e.weight
                lo += min(contrib_in, contrib_out)
                hi += max(contrib_in, contrib_out)
            elif e.positive == (e.atom in true):
                lo += e.weight
                hi += e.weight
        return lo, hi

    def bounds_given(self, true: frozenset, undecided: frozenset) -> tuple[bool, bool]:
        # interval reasoning: `may` over-approximates, `must` under-approximates,
        # which is the sound direction for pruning and forcing respectively
        lo, hi = self._sum_range(true, undecided)
        may = not (hi < self.lower or lo > self.upper)
        must = self.lower <= lo and hi <= self.upper
        return may, must


@dataclass(frozen=True)
class ChoiceBounds:
    """l <= |X| <= u over the domain; None means unbounded above."""

    lower: int = 0
    upper: int | None = None

    def holds(self, x: frozenset) -> bool:
        n = len(x)
        return self.lower <= n and (self.upper is None or n <= self.upper)

    def bounds_given(self, true: frozenset, undecided: frozenset) -> tuple[bool, bool]:
        lo, hi = len(true), len(true) + len(undecided)
        upper = math.inf if self.upper is None else self.upper
        may = not (hi < self.lower or lo > upper)
        must = self.lower <= lo and hi <= upper
        return may, must


@dataclass(frozen=True)
class Complement:
    """Pointwise negation of another spec over the same domain."""

    inner: "Spec"

    def holds(self, x: frozenset) -> bool:
        return not self.inner.holds(x)

    def bounds_given(self, true: frozenset, undecided: frozenset) -> tuple[bool, bool]:
        inner_may, inner_must = self.inner.bounds_given(true, undecided)
        return not inner_must, not inner_may


Spec = Union[Elementary, ExplicitSatisfiers, WeightConstraint, ChoiceBounds, Complement]


def _subsets(items: tuple) -> Iterator[tuple]:
    for k in range(len(items) + 1):
        yield from combinations(items, k)


# --------------------------------------------------------------------------
# CAtom
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class CAtom:
    """Abstract-constraint atom: ordered domain plus satisfier spec."""

    domain: tuple[Atom, ...]
    spec: Spec

    def __post_init__(self):
        object.__setattr__(self, "domain", sorted_atoms(self.domain))
        object.__setattr__(self, "domain_set", frozenset(self.domain))
        for a in _spec_atoms(self.spec):
            if a not in self.domain_set:
                raise EngineError(f"spec atom {a} outside domain")

    def is_elementary(self) -> bool:
        return isinstance(self.spec, Elementary)

    def __str__(self) -> str:
        return render_catom(self)


def _spec_atoms(spec: Spec) -> frozenset:
    if isinstance(spec, Elementary):
        return frozenset([spec.atom])
    if isinstance(spec, ExplicitSatisfiers):
        out: set = set()
        for s in spec.sets:
            out |= s
        return frozenset(out)
    if isinstance(spec, WeightConstraint):
        return frozenset(e.atom for e in spec.entries)
    if isinstance(spec, ChoiceBounds):
        return frozenset()
    if isinstance(spec, Complement):
        return _spec_atoms(spec.inner)
    raise EngineError(f"unknown spec {spec!r}")


def elementary(a: Atom) -> CAtom:
    return CAtom((a,), Elementary(a))


def explicit_catom(domain: Iterable[Atom], sats: Iterable[Iterable[Atom]]) -> CAtom:
    dom = sorted_atoms(domain)
    dom_set = frozenset(dom)
    frozen = frozenset(frozenset(s) for s in sats)
    for s in frozen:
        if not s <= dom_set:
            raise EngineError(f"satisfier {render_atom_set(s)} outside domain")
    return CAtom(dom, ExplicitSatisfiers(frozen))


def choice_catom(domain: Iterable[Atom], lower: int = 0, upper: int | None = None) -> CAtom:
    return CAtom(tuple(domain), ChoiceBounds(lower, upper))


def weight_to_catom(
    lower: float, entries: Iterable[tuple[Atom, bool, float]], upper: float
) -> CAtom:
    """Build the c-atom of a weight constraint `l [ ... ] u`.

    Entries are (atom, positive, weight); a negative-polarity entry
    contributes its weight when the atom is absent.
    """
    canonical = tuple(
        sorted(
            (WeightEntry(a, pos, float(w)) for a, pos, w in entries),
            key=lambda e: (e.atom.sort_key(), not e.positive, e.weight),
        )
    )
    domain = sorted_atoms({e.atom for e in canonical})
    return CAtom(domain, WeightConstraint(float(lower), float(upper), canonical))


def complement_catom(a: CAtom, caps: Caps = DEFAULT_CAPS) -> CAtom:
    """Same domain, satisfiers flipped pointwise over 2^D."""
    if isinstance(a.spec, Complement):
        return CAtom(a.domain, a.spec.inner)
    if len(a.domain) <= caps.enumeration:
        sats = frozenset(
            frozenset(s) for s in _subsets(a.domain) if not a.spec.holds(frozenset(s))
        )
        return CAtom(a.domain, ExplicitSatisfiers(sats))
    return CAtom(a.domain, Complement(a.spec))


@dataclass(frozen=True)
class CLiteral:
    """A c-atom or its default negation."""

    atom: CAtom
    negated: bool = False

    @property
    def domain_set(self) -> frozenset:
        return self.atom.domain_set

    def __str__(self) -> str:
        return ("not " if self.negated else "") + str(self.atom)


# --------------------------------------------------------------------------
# Satisfaction
# --------------------------------------------------------------------------


def eval_catom(a: CAtom, interp: frozenset) -> bool:
    """True iff the projection of the interpretation to dom(A) is a satisfier."""
    return a.spec.holds(interp & a.domain_set)


def eval_literal(lit: CLiteral, interp: frozenset) -> bool:
    value = eval_catom(lit.atom, interp)
    return not value if lit.negated else value


def catom_may_must(
    a: CAtom, true: frozenset, false: frozenset
) -> tuple[bool, bool]:
    """(may hold, must hold) under every completion of a partial assignment.

    `may` never reports False for a satisfiable completion; `must` never
    reports True unless all completions satisfy.  Weight constraints use
    interval reasoning, so `may` can over-approximate there.
    """
    dom = a.domain_set
    t = true & dom
    undecided = dom - t - false
    return a.spec.bounds_given(t, undecided)


def literal_may_must(lit: CLiteral, true: frozenset, false: frozenset) -> tuple[bool, bool]:
    may, must = catom_may_must(lit.atom, true, false)
    if lit.negated:
        return not must, not may
    return may, must


# --------------------------------------------------------------------------
# Rules and programs
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Provenance:
    source_id: str
    substitution: tuple[tuple[str, Term], ...] = ()
    variant: int = 0


class CRule:
    """Disjunctive abstract-constraint rule.

    Literals keep their written order for rendering, but equality and
    hashing are structural over the head / positive body / negative body
    sets, so programs behave as rule sets and duplicate instances merge.
    """

    __slots__ = ("head", "pos_body", "neg_body", "provenance", "_key", "_hash", "domain_set")

    def __init__(
        self,
        head: Iterable[CAtom] = (),
        pos_body: Iterable[CAtom] = (),
        neg_body: Iterable[CAtom] = (),
        provenance: Iterable[Provenance] = (),
    ):
        self.head = tuple(head)
        self.pos_body = tuple(pos_body)
        self.neg_body = tuple(neg_body)
        self.provenance = tuple(provenance)
        self._key = (
            frozenset(self.head),
            frozenset(self.pos_body),
            frozenset(self.neg_body),
        )
        self._hash = hash(self._key)
        dom: frozenset = frozenset()
        for c in self.head + self.pos_body + self.neg_body:
            dom |= c.domain_set
        self.domain_set = dom

    def __eq__(self, other) -> bool:
        return isinstance(other, CRule) and self._key == other._key

    def __hash__(self) -> int:
        return self._hash

    def body_literals(self) -> tuple[CLiteral, ...]:
        return tuple(CLiteral(c) for c in self.pos_body) + tuple(
            CLiteral(c, negated=True) for c in self.neg_body
        )

    def is_normal(self) -> bool:
        return len(self.head) == 1

    def is_constraint(self) -> bool:
        return not self.head

    def is_fact(self) -> bool:
        return bool(self.head) and not self.pos_body and not self.neg_body

    def is_positive(self) -> bool:
        return not self.neg_body

    def with_provenance(self, provenance: Iterable[Provenance]) -> "CRule":
        return CRule(self.head, self.pos_body, self.neg_body, provenance)

    def __str__(self) -> str:
        return render_rule(self)

    def __repr__(self) -> str:
        return f"CRule({render_rule(self)!r})"


def rule_active(r: CRule, interp: frozenset) -> bool:
    """The body holds: every positive c-atom true, every negated one false."""
    return all(eval_catom(c, interp) for c in r.pos_body) and not any(
        eval_catom(c, interp) for c in r.neg_body
    )


def head_satisfied(r: CRule, interp: frozenset) -> bool:
    return any(eval_catom(c, interp) for c in r.head)


def rule_satisfied(r: CRule, interp: frozenset) -> bool:
    return not rule_active(r, interp) or head_satisfied(r, interp)


def program_satisfied(rules: Iterable[CRule], interp: frozenset) -> bool:
    return all(rule_satisfied(r, interp) for r in rules)


def rule_sort_key(r: CRule):
    def catom_key(c: CAtom):
        return (tuple(a.sort_key() for a in c.domain), render_catom(c))

    return (
        tuple(catom_key(c) for c in sorted(r.head, key=render_catom)),
        tuple(catom_key(c) for c in sorted(r.pos_body, key=render_catom)),
        tuple(catom_key(c) for c in sorted(r.neg_body, key=render_catom)),
    )


class GroundProgram:
    """A duplicate-free set of ground c-rules in canonical order."""

    __slots__ = ("rules", "_rule_set", "_universe")

    def __init__(self, rules: Iterable[CRule] = ()):
        merged: dict[CRule, CRule] = {}
        for r in rules:
            prev = merged.get(r)
            if prev is None:
                merged[r] = r
            elif r.provenance:
                seen = prev.provenance
                extra = tuple(p for p in r.provenance if p not in seen)
                if extra:
                    merged[r] = prev.with_provenance(seen + extra)
        self.rules = tuple(sorted(merged.values(), key=rule_sort_key))
        self._rule_set = frozenset(self.rules)
        universe: frozenset = frozenset()
        for r in self.rules:
            universe |= r.domain_set
        self._universe = universe

    @property
    def atom_universe(self) -> frozenset:
        return self._universe

    def __contains__(self, r: CRule) -> bool:
        return r in self._rule_set

    def __iter__(self) -> Iterator[CRule]:
        return iter(self.rules)

    def __len__(self) -> int:
        return len(self.rules)

    def __eq__(self, other) -> bool:
        return isinstance(other, GroundProgram) and self._rule_set == other._rule_set

    def __hash__(self) -> int:
        return hash(self._rule_set)

    def union(self, other: Iterable[CRule]) -> "GroundProgram":
        return GroundProgram(self.rules + tuple(other))

    def __str__(self) -> str:
        return "\n".join(render_rule(r) for r in self.rules)


# --------------------------------------------------------------------------
# Satisfier enumeration and classification
# --------------------------------------------------------------------------


def satisfier_sets(a: CAtom, caps: Caps = DEFAULT_CAPS) -> tuple[frozenset, ...]:
    """All satisfiers of A, explicitly; requires |dom(A)| within the cap."""
    if len(a.domain) > caps.enumeration:
        raise CapExceededError("satisfier enumeration", len(a.domain), caps.enumeration)
    out = [
        frozenset(s) for s in _subsets(a.domain) if a.spec.holds(frozenset(s))
    ]
    return tuple(sorted(out, key=lambda s: (len(s), sorted_atoms(s))))


def has_satisfier_superset(a: CAtom, lower: frozenset, caps: Caps = DEFAULT_CAPS) -> bool:
    """Is there a satisfier S of A with lower <= S?  (lower need not be in dom.)"""
    lower = lower & a.domain_set
    spec = a.spec
    if isinstance(spec, Elementary):
        return lower <= frozenset([spec.atom])
    if isinstance(spec, ExplicitSatisfiers):
        return any(lower <= s for s in spec.sets)
    if isinstance(spec, ChoiceBounds):
        hi = len(a.domain) if spec.upper is None else min(spec.upper, len(a.domain))
        return max(spec.lower, len(lower)) <= hi
    free = tuple(a.domain_set - lower)
    if len(free) > caps.enumeration:
        raise CapExceededError("satisfier superset search", len(free), caps.enumeration)
    return any(spec.holds(lower | frozenset(extra)) for extra in _subsets(free))


def _classification_masks(a: CAtom) -> list[bool]:
    atoms = a.domain
    n = len(atoms)
    sat = []
    for mask in range(1 << n):
        x = frozenset(atoms[i] for i in range(n) if mask >> i & 1)
        sat.append(a.spec.holds(x))
    return sat


def classify_catom(a: CAtom, caps: Caps = DEFAULT_CAPS) -> str:
    """Classify as "monotone", "convex", or "neither" (strongest label wins).

    Exhaustive over 2^D within the enumeration cap; beyond it, the analytic
    shortcuts for weight and cardinality bounds apply, otherwise the check
    is refused.
    """
    n = len(a.domain)
    if n > caps.enumeration:
        spec = a.spec
        if isinstance(spec, WeightConstraint) and all(e.weight >= 0 for e in spec.entries):
            if spec.upper == math.inf:
                return "monotone"
            return "convex"
        if isinstance(spec, ChoiceBounds):
            return "monotone" if spec.upper is None else "convex"
        raise CapExceededError("c-atom classification", n, caps.enumeration)
    sat = _classification_masks(a)
    size = 1 << n
    down = list(sat)  # has a satisfier subset
    up = list(sat)  # has a satisfier superset
    for b in range(n):
        bit = 1 << b
        for m in range(size):
            if m & bit:
                if down[m ^ bit]:
                    down[m] = True
            elif up[m | bit]:
                up[m] = True
    if all(sat[m] for m in range(size) if down[m]):
        return "monotone"
    if all(sat[m] for m in range(size) if up[m] and down[m]):
        return "convex"
    return "neither"


def classify_literal(lit: CLiteral, caps: Caps = DEFAULT_CAPS) -> str:
    """Classification of the literal as it occurs (negation complements)."""
    target = complement_catom(lit.atom) if lit.negated else lit.atom
    return classify_catom(target, caps)


def positive_normal_form(literals: Iterable[CLiteral]) -> tuple[CAtom, ...]:
    return tuple(
        complement_catom(lit.atom) if lit.negated else lit.atom for lit in literals
    )


def pos_occurrences(
    literals: Iterable[CLiteral],
    caps: Caps = DEFAULT_CAPS,
    overapproximate: bool = False,
) -> frozenset:
    """Union of all satisfier sets of the positive normal form.

    With `overapproximate`, a c-atom too large to enumerate contributes its
    whole domain instead of failing; that is sound for cycle detection but
    may reject tightness conservatively.
    """
    occ: set = set()
    for c in positive_normal_form(literals):
        try:
            for s in satisfier_sets(c, caps):
                occ |= s
        except CapExceededError:
            if not overapproximate:
                raise
            occ |= c.domain_set
    return frozenset(occ)


# --------------------------------------------------------------------------
# Rendering
# --------------------------------------------------------------------------


def _render_bound_prefix(lower) -> str:
    if lower in (0, -math.inf, None):
        return ""
    return f"{_render_weight(lower)} "


def _render_bound_suffix(upper) -> str:
    if upper is None or upper == math.inf:
        return ""
    return f" {_render_weight(upper)}"


def _render_weight(w) -> str:
    if isinstance(w, float) and w.is_integer() and abs(w) < 1e15:
        return str(int(w))
    return str(w)


def render_catom(c: CAtom) -> str:
    spec = c.spec
    if isinstance(spec, Elementary):
        return str(spec.atom)
    if isinstance(spec, ExplicitSatisfiers):
        sets = sorted(spec.sets, key=lambda s: (len(s), sorted_atoms(s)))
        inner = ",".join(render_atom_set(s) for s in sets)
        return f"<{render_atom_set(c.domain)},{{{inner}}}>"
    if isinstance(spec, ChoiceBounds):
        atoms = ", ".join(str(a) for a in c.domain)
        return f"{_render_bound_prefix(spec.lower)}{{{atoms}}}{_render_bound_suffix(spec.upper)}"
    if isinstance(spec, WeightConstraint):
        entries = ", ".join(
            f"{'' if e.positive else 'not '}{e.atom}={_render_weight(e.weight)}"
            for e in spec.entries
        )
        lo = "" if spec.lower == -math.inf else f"{_render_weight(spec.lower)} "
        hi = "" if spec.upper == math.inf else f" {_render_weight(spec.upper)}"
        return f"{lo}[{entries}]{hi}"
    if isinstance(spec, Complement):
        return f"compl({render_catom(CAtom(c.domain, spec.inner))})"
    raise EngineError(f"unknown spec {spec!r}")


def render_rule(r: CRule) -> str:
    head = " | ".join(render_catom(c) for c in r.head)
    body_parts = [render_catom(c) for c in r.pos_body] + [
        f"not {render_catom(c)}" for c in r.neg_body
    ]
    body = ", ".join(body_parts)
    if body and head:
        return f"{head} :- {body}."
    if body:
        return f":- {body}."
    return f"{head}."


def render_interpretation(interp: Iterable[Atom]) -> str:
    return render_atom_set(interp)
