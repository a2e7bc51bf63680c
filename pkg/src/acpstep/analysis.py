"""Positive-dependency analysis and the stable-computation guarantee.

The guarantee ties three properties together: normal rules, convex
literals, and an acyclic positive dependency graph.  Programs inside the
fragment admit computations that stay stable throughout, and the witness is
a total rule order extending rule-level reachability.
"""

from __future__ import annotations

from dataclasses import dataclass
from graphlib import CycleError, TopologicalSorter
from typing import Iterable, Optional, Union

from .caps import DEFAULT_CAPS, Caps
from .errors import CyclicGraphError
from .model import (
    Atom,
    CLiteral,
    CRule,
    GroundProgram,
    classify_literal,
    pos_occurrences,
    rule_sort_key,
)


@dataclass(frozen=True)
class DepGraph:
    """Directed graph over atoms or rules."""

    vertices: tuple
    edges: frozenset  # frozenset[tuple[vertex, vertex]]

    def successors(self, v) -> tuple:
        return tuple(b for (a, b) in self.edges if a == v)

    def is_acyclic(self) -> bool:
        return self.find_cycle() is None

    def find_cycle(self) -> Optional[tuple]:
        adjacency = {v: [] for v in self.vertices}
        for a, b in self.edges:
            adjacency[a].append(b)
        try:
            tuple(TopologicalSorter(adjacency).static_order())
            return None
        except CycleError as err:
            return tuple(err.args[1])


def _head_occurrences(r: CRule, caps: Caps) -> frozenset:
    return pos_occurrences([CLiteral(c) for c in r.head], caps, overapproximate=True)


def _body_occurrences(r: CRule, caps: Caps) -> frozenset:
    return pos_occurrences(r.body_literals(), caps, overapproximate=True)


def dependency_graph(
    program: Union[GroundProgram, Iterable[CRule]], caps: Caps = DEFAULT_CAPS
) -> DepGraph:
    """Atom-level positive dependencies: head occurrences read body occurrences."""
    rules = tuple(program)
    universe: frozenset = frozenset()
    for r in rules:
        universe |= r.domain_set
    edges = set()
    for r in rules:
        heads = _head_occurrences(r, caps)
        bodies = _body_occurrences(r, caps)
        for a in heads:
            for b in bodies:
                edges.add((a, b))
    return DepGraph(tuple(sorted(universe, key=Atom.sort_key)), frozenset(edges))


def rule_dependency_graph(
    program: Union[GroundProgram, Iterable[CRule]], caps: Caps = DEFAULT_CAPS
) -> DepGraph:
    """Rule-level positive dependencies: a rule reads what another derives."""
    rules = tuple(program)
    heads = {r: _head_occurrences(r, caps) for r in rules}
    bodies = {r: _body_occurrences(r, caps) for r in rules}
    edges = set()
    for r1 in rules:
        for r2 in rules:
            if bodies[r1] & heads[r2]:
                edges.add((r1, r2))
    return DepGraph(tuple(sorted(rules, key=rule_sort_key)), frozenset(edges))


def is_absolutely_tight(
    program: Union[GroundProgram, Iterable[CRule]], caps: Caps = DEFAULT_CAPS
) -> bool:
    return dependency_graph(program, caps).is_acyclic()


def topological_rule_order(
    program: Union[GroundProgram, Iterable[CRule]], caps: Caps = DEFAULT_CAPS
) -> tuple[CRule, ...]:
    """Stepping order: every rule comes after the rules it positively reads.

    Extends the reachability relation of the rule dependency graph to a
    total order, canonical order breaking ties deterministically.
    """
    graph = rule_dependency_graph(program, caps)
    cycle = graph.find_cycle()
    if cycle is not None:
        raise CyclicGraphError([str(r) for r in cycle])
    adjacency: dict[CRule, list[CRule]] = {r: [] for r in graph.vertices}
    for reader, read in graph.edges:
        adjacency[reader].append(read)  # what a rule reads is stepped first
    sorter = TopologicalSorter(adjacency)
    sorter.prepare()
    order: list[CRule] = []
    while sorter.is_active():
        ready = sorted(sorter.get_ready(), key=rule_sort_key)
        order.extend(ready)
        sorter.done(*ready)
    return tuple(order)


@dataclass(frozen=True)
class StableGuarantee:
    guaranteed: bool
    normal: bool
    convex: bool
    tight: bool
    order: Optional[tuple[CRule, ...]] = None  # certificate when guaranteed
    violating_rule: Optional[CRule] = None
    cycle: Optional[tuple] = None


def stable_guarantee(
    program: Union[GroundProgram, Iterable[CRule]], caps: Caps = DEFAULT_CAPS
) -> StableGuarantee:
    """Does every answer set admit an all-stable computation?

    Requires normal rules, convex (or monotone) head and body literals, and
    absolute tightness; the certificate is a stepping order that keeps every
    intermediate state stable when assignments follow the target answer set.
    """
    rules = tuple(program)
    normal = True
    convex = True
    violating = None
    for r in rules:
        if not r.is_normal():
            normal = False
            violating = violating or r
            break
    if normal:
        for r in rules:
            literals = [CLiteral(c) for c in r.head] + list(r.body_literals())
            if any(classify_literal(lit, caps) == "neither" for lit in literals):
                convex = False
                violating = violating or r
                break
    graph = dependency_graph(rules, caps)
    cycle = graph.find_cycle()
    tight = cycle is None
    if normal and convex and tight:
        return StableGuarantee(
            True, normal, convex, tight, order=topological_rule_order(rules, caps)
        )
    return StableGuarantee(
        False, normal, convex, tight, violating_rule=violating, cycle=cycle
    )


def analyze(
    program: Union[GroundProgram, Iterable[CRule]], caps: Caps = DEFAULT_CAPS
) -> dict:
    """Analysis report used by the CLI and the session protocol."""
    rules = tuple(program)
    guarantee = stable_guarantee(rules, caps)
    report = {
        "normal": guarantee.normal,
        "convex": guarantee.convex,
        "tight": guarantee.tight,
        "stable_guarantee": guarantee.guaranteed,
    }
    if guarantee.cycle is not None:
        report["cycle_witness"] = [str(a) for a in guarantee.cycle]
    if guarantee.order is not None:
        report["certificate_order"] = [str(r) for r in guarantee.order]
    return report
