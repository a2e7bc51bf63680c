"""Parser for the source language.

Supported subset: facts, normal and disjunctive rules (`|`), constraints,
integer ranges `i..j`, arithmetic (+, -, *), comparisons, choice heads with
optional bounds and conditional elements, cardinality bodies `l { ... } u`,
weight bodies `l [ a=w, not b=w ] u`, and pooling `a(x;y)`.

Pools and ranges are expanded syntactically right after parsing: inside a
choice or aggregate they multiply the element list, anywhere else they
multiply the statement into variants sharing the statement id.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from itertools import product
from typing import Iterable, Iterator, Optional, Union

from .errors import ParseError, UnsafeRuleError

# --------------------------------------------------------------------------
# Terms
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class TInt:
    value: int

    def __str__(self):
        return str(self.value)


@dataclass(frozen=True)
class TSym:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class TVar:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class TBin:
    op: str
    left: "TermAst"
    right: "TermAst"

    def __str__(self):
        return f"{self.left}{self.op}{self.right}"


@dataclass(frozen=True)
class TRange:
    lower: "TermAst"
    upper: "TermAst"

    def __str__(self):
        return f"{self.lower}..{self.upper}"


TermAst = Union[TInt, TSym, TVar, TBin, TRange]


def term_vars(t: TermAst) -> frozenset:
    if isinstance(t, TVar):
        return frozenset([t.name])
    if isinstance(t, TBin):
        return term_vars(t.left) | term_vars(t.right)
    if isinstance(t, TRange):
        return term_vars(t.lower) | term_vars(t.upper)
    return frozenset()


def eval_term(t: TermAst, subst: dict):
    """Evaluate a ground-after-substitution term to an int or symbol."""
    if isinstance(t, TInt):
        return t.value
    if isinstance(t, TSym):
        return t.name
    if isinstance(t, TVar):
        if t.name not in subst:
            raise ParseError(f"unbound variable {t.name}", 0, 0)
        return subst[t.name]
    if isinstance(t, TBin):
        left = eval_term(t.left, subst)
        right = eval_term(t.right, subst)
        if not isinstance(left, int) or not isinstance(right, int):
            raise ParseError(f"arithmetic over non-integers: {t}", 0, 0)
        if t.op == "+":
            return left + right
        if t.op == "-":
            return left - right
        if t.op == "*":
            return left * right
    raise ParseError(f"cannot evaluate term {t}", 0, 0)


# --------------------------------------------------------------------------
# Literals, heads, statements
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class AtomAst:
    predicate: str
    # each argument is a tuple of alternatives (singleton unless pooled)
    args: tuple[tuple[TermAst, ...], ...] = ()

    def __str__(self):
        if not self.args:
            return self.predicate
        rendered = ",".join(";".join(str(t) for t in alts) for alts in self.args)
        return f"{self.predicate}({rendered})"


@dataclass(frozen=True)
class AtomLit:
    atom: AtomAst
    negated: bool = False

    def __str__(self):
        return ("not " if self.negated else "") + str(self.atom)


@dataclass(frozen=True)
class Comparison:
    op: str
    left: TermAst
    right: TermAst

    def __str__(self):
        return f"{self.left} {self.op} {self.right}"


@dataclass(frozen=True)
class ChoiceElem:
    atom: AtomAst
    conditions: tuple[Union[AtomLit, Comparison], ...] = ()

    def __str__(self):
        if not self.conditions:
            return str(self.atom)
        return f"{self.atom} : {', '.join(str(c) for c in self.conditions)}"


@dataclass(frozen=True)
class CountAgg:
    lower: Optional[TermAst]
    upper: Optional[TermAst]
    elements: tuple[ChoiceElem, ...]
    negated: bool = False


@dataclass(frozen=True)
class WeightAgg:
    lower: Optional[TermAst]
    upper: Optional[TermAst]
    entries: tuple[tuple[AtomAst, bool, TermAst], ...]  # (atom, positive, weight)
    negated: bool = False


BodyLit = Union[AtomLit, Comparison, CountAgg, WeightAgg]


@dataclass(frozen=True)
class HDisj:
    atoms: tuple[AtomAst, ...]


@dataclass(frozen=True)
class HChoice:
    lower: Optional[TermAst]
    upper: Optional[TermAst]
    elements: tuple[ChoiceElem, ...]


HeadAst = Union[HDisj, HChoice, None]


@dataclass(frozen=True)
class Span:
    line: int
    column: int
    end_line: int
    end_column: int


@dataclass(frozen=True)
class Variant:
    """One pool/range expansion of a statement."""

    head: HeadAst
    body: tuple[BodyLit, ...]


@dataclass(frozen=True)
class SourceStatement:
    id: str
    head: HeadAst
    body: tuple[BodyLit, ...]
    span: Span
    text: str
    variants: tuple[Variant, ...]

    def is_constraint(self) -> bool:
        return self.head is None


@dataclass(frozen=True)
class SourceProgram:
    statements: tuple[SourceStatement, ...]
    text: str

    def statement(self, statement_id: str) -> SourceStatement:
        for st in self.statements:
            if st.id == statement_id:
                return st
        raise KeyError(statement_id)


# --------------------------------------------------------------------------
# Tokenizer
# --------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>%[^\n]*)
  | (?P<int>\d+)
  | (?P<ident>[a-z][A-Za-z0-9_]*)
  | (?P<var>[_A-Z][A-Za-z0-9_]*)
  | (?P<op>\.\.|:-|!=|<=|>=|[(){}\[\],;:.|=<>+\-*])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # int | ident | var | op | eof
    value: str
    line: int
    column: int


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    line, column = 1, 1
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, column)
        kind = m.lastgroup or ""
        value = m.group()
        if kind not in ("ws", "comment"):
            tokens.append(Token(kind, value, line, column))
        newlines = value.count("\n")
        if newlines:
            line += newlines
            column = len(value) - value.rfind("\n")
        else:
            column += len(value)
        pos = m.end()
    tokens.append(Token("eof", "", line, column))
    return tokens


# --------------------------------------------------------------------------
# Recursive-descent parser
# --------------------------------------------------------------------------


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = tokenize(text)
        self.pos = 0

    def peek(self, ahead: int = 0) -> Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def expect(self, value: str) -> Token:
        tok = self.next()
        if tok.value != value:
            raise ParseError(f"expected {value!r}, found {tok.value!r}", tok.line, tok.column)
        return tok

    def error(self, message: str) -> ParseError:
        tok = self.peek()
        return ParseError(message + f" (found {tok.value!r})", tok.line, tok.column)

    # -- terms ------------------------------------------------------------

    def parse_term(self) -> TermAst:
        t = self.parse_addsub()
        if self.peek().value == "..":
            self.next()
            upper = self.parse_addsub()
            return TRange(t, upper)
        return t

    def parse_addsub(self) -> TermAst:
        t = self.parse_mul()
        while self.peek().value in ("+", "-"):
            op = self.next().value
            t = TBin(op, t, self.parse_mul())
        return t

    def parse_mul(self) -> TermAst:
        t = self.parse_primary()
        while self.peek().value == "*":
            self.next()
            t = TBin("*", t, self.parse_primary())
        return t

    def parse_primary(self) -> TermAst:
        tok = self.peek()
        if tok.kind == "int":
            self.next()
            return TInt(int(tok.value))
        if tok.value == "-" and self.peek(1).kind == "int":
            self.next()
            return TInt(-int(self.next().value))
        if tok.kind == "ident":
            self.next()
            return TSym(tok.value)
        if tok.kind == "var":
            self.next()
            return TVar(tok.value)
        if tok.value == "(":
            self.next()
            t = self.parse_term()
            self.expect(")")
            return t
        raise self.error("expected a term")

    def parse_pooled_arg(self) -> tuple[TermAst, ...]:
        alts = [self.parse_term()]
        while self.peek().value == ";":
            self.next()
            alts.append(self.parse_term())
        return tuple(alts)

    # -- atoms and literals ------------------------------------------------

    def at_atom(self) -> bool:
        return self.peek().kind == "ident" and self.peek().value != "not"

    def parse_atom(self) -> AtomAst:
        tok = self.next()
        if tok.kind != "ident":
            raise ParseError(f"expected a predicate, found {tok.value!r}", tok.line, tok.column)
        args: list[tuple[TermAst, ...]] = []
        if self.peek().value == "(":
            self.next()
            args.append(self.parse_pooled_arg())
            while self.peek().value == ",":
                self.next()
                args.append(self.parse_pooled_arg())
            self.expect(")")
        return AtomAst(tok.value, tuple(args))

    _CMP_OPS = ("=", "!=", "<", "<=", ">", ">=")

    def parse_condition(self) -> Union[AtomLit, Comparison]:
        lit = self.parse_atom_or_comparison()
        if lit is None:
            raise self.error("expected a condition literal")
        return lit

    def parse_atom_or_comparison(self) -> Union[AtomLit, Comparison, None]:
        if self.peek().value == "not":
            self.next()
            return AtomLit(self.parse_atom(), negated=True)
        start = self.pos
        if self.at_atom():
            a = self.parse_atom()
            if self.peek().value in self._CMP_OPS and len(a.args) == 0:
                # `x < Y`: re-read the symbol as a term of a comparison
                self.pos = start
            else:
                return AtomLit(a)
        left = self.parse_term()
        if self.peek().value not in self._CMP_OPS:
            raise self.error("expected a comparison operator")
        op = self.next().value
        right = self.parse_term()
        return Comparison(op, left, right)

    # -- aggregates and choices ---------------------------------------------

    def maybe_bound(self) -> Optional[TermAst]:
        tok = self.peek()
        if tok.kind == "int" or tok.kind == "var":
            return self.parse_term()
        if tok.value == "-" and self.peek(1).kind == "int":
            return self.parse_term()
        return None

    def parse_choice_elements(self) -> tuple[ChoiceElem, ...]:
        elements: list[ChoiceElem] = []
        if self.peek().value != "}":
            while True:
                if self.peek().value == "not":
                    raise self.error("negated entries are only supported in [..] weight bodies")
                a = self.parse_atom()
                conditions: list[Union[AtomLit, Comparison]] = []
                if self.peek().value == ":":
                    self.next()
                    conditions.append(self.parse_condition())
                    while self.peek().value == ",":
                        self.next()
                        conditions.append(self.parse_condition())
                elements.append(ChoiceElem(a, tuple(conditions)))
                if self.peek().value == ";":
                    self.next()
                    continue
                # plain comma-separated element lists are also accepted
                if self.peek().value == "," and not conditions:
                    self.next()
                    continue
                break
        return tuple(elements)

    def parse_brace_aggregate(self, lower: Optional[TermAst]) -> tuple[Optional[TermAst], Optional[TermAst], tuple[ChoiceElem, ...]]:
        self.expect("{")
        elements = self.parse_choice_elements()
        self.expect("}")
        upper = self.maybe_bound()
        return lower, upper, elements

    def parse_weight_entries(self) -> tuple[tuple[AtomAst, bool, TermAst], ...]:
        entries: list[tuple[AtomAst, bool, TermAst]] = []
        if self.peek().value != "]":
            while True:
                positive = True
                if self.peek().value == "not":
                    self.next()
                    positive = False
                a = self.parse_atom()
                weight: TermAst = TInt(1)
                if self.peek().value == "=":
                    self.next()
                    weight = self.parse_term()
                entries.append((a, positive, weight))
                if self.peek().value == ",":
                    self.next()
                    continue
                break
        return tuple(entries)

    # -- statements ----------------------------------------------------------

    def _at_aggregate(self) -> bool:
        if self.peek().value in ("{", "["):
            return True
        probe = self.pos
        if self.maybe_bound() is not None and self.peek().value in ("{", "["):
            self.pos = probe
            return True
        self.pos = probe
        return False

    def parse_body(self) -> tuple[BodyLit, ...]:
        literals: list[BodyLit] = []
        while True:
            negated_aggregate = False
            if self.peek().value == "not":
                probe = self.pos
                self.next()
                if self._at_aggregate():
                    negated_aggregate = True
                else:
                    self.pos = probe
            bound = self.maybe_bound()
            if bound is not None or self.peek().value in ("{", "["):
                if self.peek().value == "{":
                    lower, upper, elements = self.parse_brace_aggregate(bound)
                    literals.append(CountAgg(lower, upper, elements, negated_aggregate))
                elif self.peek().value == "[":
                    self.next()
                    entries = self.parse_weight_entries()
                    self.expect("]")
                    upper = self.maybe_bound()
                    literals.append(WeightAgg(bound, upper, entries, negated_aggregate))
                else:
                    # a bound not followed by an aggregate: must be a comparison
                    assert bound is not None
                    if self.peek().value not in self._CMP_OPS:
                        raise self.error("expected an aggregate or comparison")
                    op = self.next().value
                    right = self.parse_term()
                    literals.append(Comparison(op, bound, right))
            else:
                lit = self.parse_atom_or_comparison()
                assert lit is not None
                literals.append(lit)
            if self.peek().value == ",":
                self.next()
                continue
            break
        return tuple(literals)

    def parse_statement(self, index: int) -> SourceStatement:
        start = self.peek()
        head: HeadAst = None
        body: tuple[BodyLit, ...] = ()
        if self.peek().value == ":-":
            self.next()
            body = self.parse_body()
        else:
            bound = self.maybe_bound()
            if bound is not None or self.peek().value == "{":
                lower, upper, elements = self.parse_brace_aggregate(bound)
                head = HChoice(lower, upper, elements)
            else:
                atoms = [self.parse_atom()]
                while self.peek().value == "|":
                    self.next()
                    atoms.append(self.parse_atom())
                head = HDisj(tuple(atoms))
            if self.peek().value == ":-":
                self.next()
                body = self.parse_body()
        end = self.expect(".")
        span = Span(start.line, start.column, end.line, end.column)
        text = _slice_span(self.text, span)
        variants = tuple(_expand_variants(head, body))
        st = SourceStatement(f"r{index}", head, body, span, text, variants)
        _check_safety(st)
        return st

    def parse_program(self) -> SourceProgram:
        statements = []
        index = 0
        while self.peek().kind != "eof":
            statements.append(self.parse_statement(index))
            index += 1
        return SourceProgram(tuple(statements), self.text)


def _slice_span(text: str, span: Span) -> str:
    lines = text.splitlines()
    if span.line == span.end_line:
        return lines[span.line - 1][span.column - 1 : span.end_column]
    chunks = [lines[span.line - 1][span.column - 1 :]]
    chunks.extend(lines[span.line : span.end_line - 1])
    chunks.append(lines[span.end_line - 1][: span.end_column])
    return "\n".join(chunks)


# --------------------------------------------------------------------------
# Pool / range expansion
# --------------------------------------------------------------------------


def _term_alternatives(t: TermAst) -> list[TermAst]:
    if isinstance(t, TRange):
        lo = eval_term(t.lower, {})
        hi = eval_term(t.upper, {})
        if not isinstance(lo, int) or not isinstance(hi, int):
            raise ParseError(f"range bounds must be integers: {t}", 0, 0)
        return [TInt(v) for v in range(lo, hi + 1)]
    return [t]


def _expand_atom(a: AtomAst) -> list[AtomAst]:
    """Expand pools and ranges in argument positions."""
    per_arg: list[list[TermAst]] = []
    for alternatives in a.args:
        options: list[TermAst] = []
        for alt in alternatives:
            options.extend(_term_alternatives(alt))
        per_arg.append(options)
    return [
        AtomAst(a.predicate, tuple((t,) for t in combo)) for combo in product(*per_arg)
    ]


def _expand_elements(elements: Iterable[ChoiceElem]) -> tuple[ChoiceElem, ...]:
    out: list[ChoiceElem] = []
    for e in elements:
        conds = []
        for c in e.conditions:
            if isinstance(c, AtomLit):
                expanded = _expand_atom(c.atom)
                if len(expanded) != 1:
                    raise ParseError("pools are not supported in element conditions", 0, 0)
                conds.append(AtomLit(expanded[0], c.negated))
            else:
                conds.append(c)
        for a in _expand_atom(e.atom):
            out.append(ChoiceElem(a, tuple(conds)))
    return tuple(out)


def _expand_variants(head: HeadAst, body: tuple[BodyLit, ...]) -> Iterator[Variant]:
    """Syntactic expansion of pools and ranges.

    Head alternatives multiply the statement (a pooled or ranged fact is
    many facts); a pooled body atom expands conjunctively into one literal
    per alternative within the same body, so `p(X+1;X-1)` requires both
    neighbours.
    """
    head_options: list[HeadAst]
    if head is None:
        head_options = [None]
    elif isinstance(head, HChoice):
        head_options = [HChoice(head.lower, head.upper, _expand_elements(head.elements))]
    else:
        per_atom = [_expand_atom(a) for a in head.atoms]
        head_options = [HDisj(tuple(combo)) for combo in product(*per_atom)]

    literals: list[BodyLit] = []
    for lit in body:
        if isinstance(lit, AtomLit):
            literals.extend(AtomLit(a, lit.negated) for a in _expand_atom(lit.atom))
        elif isinstance(lit, CountAgg):
            literals.append(
                CountAgg(lit.lower, lit.upper, _expand_elements(lit.elements), lit.negated)
            )
        elif isinstance(lit, WeightAgg):
            entries: list[tuple[AtomAst, bool, TermAst]] = []
            for a, positive, w in lit.entries:
                expanded = _expand_atom(a)
                if len(expanded) != 1:
                    raise ParseError("pools are not supported in weight entries", 0, 0)
                entries.append((expanded[0], positive, w))
            literals.append(WeightAgg(lit.lower, lit.upper, tuple(entries), lit.negated))
        else:
            literals.append(lit)

    for h in head_options:
        yield Variant(h, tuple(literals))


# --------------------------------------------------------------------------
# Safety
# --------------------------------------------------------------------------


def _atom_vars(a: AtomAst) -> frozenset:
    out: frozenset = frozenset()
    for alternatives in a.args:
        for t in alternatives:
            out |= term_vars(t)
    return out


def _plain_var_args(a: AtomAst) -> frozenset:
    return frozenset(
        t.name for alts in a.args for t in alts if isinstance(t, TVar)
    )


def _lit_vars(lit: BodyLit) -> frozenset:
    if isinstance(lit, AtomLit):
        return _atom_vars(lit.atom)
    if isinstance(lit, Comparison):
        return term_vars(lit.left) | term_vars(lit.right)
    if isinstance(lit, CountAgg):
        out: frozenset = frozenset()
        for e in lit.elements:
            out |= _atom_vars(e.atom)
            for c in e.conditions:
                out |= _lit_vars(c)
        for bound in (lit.lower, lit.upper):
            if bound is not None:
                out |= term_vars(bound)
        return out
    if isinstance(lit, WeightAgg):
        out = frozenset()
        for a, _pos, w in lit.entries:
            out |= _atom_vars(a) | term_vars(w)
        for bound in (lit.lower, lit.upper):
            if bound is not None:
                out |= term_vars(bound)
        return out
    raise TypeError(lit)


def _bound_vars(body: Iterable[BodyLit]) -> frozenset:
    """Least fixpoint of variables bound by positive atoms and `=` binders."""
    bound: set = set()
    changed = True
    while changed:
        changed = False
        for lit in body:
            if isinstance(lit, AtomLit) and not lit.negated:
                new = _plain_var_args(lit.atom) - bound
                if new:
                    bound |= new
                    changed = True
            elif isinstance(lit, Comparison) and lit.op == "=":
                for var_side, other in ((lit.left, lit.right), (lit.right, lit.left)):
                    if isinstance(var_side, TVar) and var_side.name not in bound:
                        if term_vars(other) <= bound:
                            bound.add(var_side.name)
                            changed = True
    return frozenset(bound)


def _check_safety(st: SourceStatement) -> None:
    for variant in st.variants:
        rule_bound = _bound_vars(variant.body)
        needed: set = set()
        if isinstance(variant.head, HDisj):
            for a in variant.head.atoms:
                needed |= _atom_vars(a)
        elif isinstance(variant.head, HChoice):
            for bound in (variant.head.lower, variant.head.upper):
                if bound is not None:
                    needed |= term_vars(bound)
            for e in variant.head.elements:
                local = rule_bound | _bound_vars(
                    [c for c in e.conditions if isinstance(c, (AtomLit, Comparison))]
                )
                elem_vars = _atom_vars(e.atom)
                for c in e.conditions:
                    elem_vars |= _lit_vars(c)
                for v in sorted(elem_vars - local):
                    raise UnsafeRuleError(v, st.span.line, st.span.column)
        for lit in variant.body:
            needed |= _lit_vars(lit)
        for v in sorted(needed - rule_bound):
            raise UnsafeRuleError(v, st.span.line, st.span.column)


def parse(text: str) -> SourceProgram:
    """Parse source text into statements with spans and expanded variants."""
    return _Parser(text).parse_program()
