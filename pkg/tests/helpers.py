"""Independent oracles and generators used by the test suite.

Everything in here recomputes expected values by a different route than the
code under test: Gelfond-Lifschitz reducts with least-model iteration,
exhaustive successor enumeration, and plain random program generation.
"""

from __future__ import annotations

import random
from itertools import combinations

from acpstep.caps import Caps
from acpstep.model import (
    Atom,
    CRule,
    GroundProgram,
    atom,
    choice_catom,
    elementary,
    explicit_catom,
    weight_to_catom,
)
from acpstep.stepping import (
    State,
    apply_step,
    empty_state,
    successor_assignments,
    state_status,
)

TEST_CAPS = Caps(subsets=12, atoms=14, search_nodes=200_000)


# --------------------------------------------------------------------------
# Gelfond-Lifschitz oracle for elementary normal programs
# --------------------------------------------------------------------------


def gl_is_answer_set(rules, interp: frozenset) -> bool:
    """Classic reduct + least-model check; elementary normal programs only."""
    triples = []
    for r in rules:
        assert len(r.head) <= 1
        head = r.head[0].domain[0] if r.head else None
        pos = {c.domain[0] for c in r.pos_body}
        neg = {c.domain[0] for c in r.neg_body}
        triples.append((head, pos, neg))
    reduct = [(h, pos) for h, pos, neg in triples if not (neg & interp)]
    least: set = set()
    changed = True
    while changed:
        changed = False
        for h, pos in reduct:
            if h is not None and pos <= least and h not in least:
                least.add(h)
                changed = True
    for h, pos in reduct:
        if h is None and pos <= least:
            return False
    return least == set(interp)


def gl_answer_sets(rules) -> set[frozenset]:
    universe: set = set()
    for r in rules:
        universe |= r.domain_set
    atoms = sorted(universe, key=Atom.sort_key)
    out = set()
    for k in range(len(atoms) + 1):
        for combo in combinations(atoms, k):
            interp = frozenset(combo)
            if gl_is_answer_set(rules, interp):
                out.add(interp)
    return out


# --------------------------------------------------------------------------
# Exhaustive computation enumeration (small programs only)
# --------------------------------------------------------------------------


def enumerate_succeeded_rooted(program: GroundProgram, caps=TEST_CAPS, limit=2000):
    """Every rooted computation that succeeds, as a list of state sequences."""
    results: list[tuple[State, ...]] = []
    seen_budget = [limit]

    def walk(state: State, path: tuple[State, ...]):
        seen_budget[0] -= 1
        if seen_budget[0] < 0:
            raise RuntimeError("enumeration blew the safety budget")
        status = state_status(program, state)
        if status == "succeeded":
            results.append(path)
        for r in program.rules:
            if r in state.rules:
                continue
            for delta in successor_assignments(state, r):
                nxt = apply_step(state, delta, caps)
                walk(nxt, path + (nxt,))

    root = empty_state()
    walk(root, (root,))
    return results


# --------------------------------------------------------------------------
# Random program corpus
# --------------------------------------------------------------------------

_POOL = [atom(name) for name in "abcdefghij"]


def random_elementary_normal(rng: random.Random, max_atoms=7, max_rules=8) -> GroundProgram:
    atoms = _POOL[: rng.randint(2, max_atoms)]
    rules = []
    for _ in range(rng.randint(1, max_rules)):
        head = [] if rng.random() < 0.12 else [elementary(rng.choice(atoms))]
        body_size = rng.randint(0, 3)
        pos, neg = [], []
        for _ in range(body_size):
            target = elementary(rng.choice(atoms))
            (neg if rng.random() < 0.45 else pos).append(target)
        if not head and not pos and not neg:
            head = [elementary(rng.choice(atoms))]
        rules.append(CRule(head=head, pos_body=pos, neg_body=neg))
    return GroundProgram(rules)


def _random_catom(rng: random.Random, atoms):
    kind = rng.random()
    size = rng.randint(1, min(3, len(atoms)))
    domain = rng.sample(atoms, size)
    if kind < 0.4:
        sats = []
        for k in range(len(domain) + 1):
            for combo in combinations(domain, k):
                if rng.random() < 0.5:
                    sats.append(frozenset(combo))
        return explicit_catom(domain, sats)
    if kind < 0.7:
        lower = rng.randint(0, size)
        upper = rng.choice([None, rng.randint(lower, size)])
        return choice_catom(domain, lower, upper)
    entries = [(a, rng.random() < 0.7, rng.randint(0, 2)) for a in domain]
    total = sum(w for _a, _p, w in entries)
    lower = rng.randint(0, max(total, 1))
    return weight_to_catom(lower, entries, rng.randint(lower, max(total, lower)))


def random_general(rng: random.Random, max_atoms=6, max_rules=7) -> GroundProgram:
    """Disjunction, choices, weights, negation; domain stays small."""
    atoms = _POOL[: rng.randint(2, max_atoms)]
    rules = []
    for _ in range(rng.randint(1, max_rules)):
        roll = rng.random()
        if roll < 0.1:
            head = []
        elif roll < 0.62:
            head = [elementary(rng.choice(atoms))]
        elif roll < 0.78:
            head = [elementary(rng.choice(atoms)), elementary(rng.choice(atoms))]
        else:
            head = [_random_catom(rng, atoms)]
        pos, neg = [], []
        for _ in range(rng.randint(0, 2)):
            if rng.random() < 0.8:
                target = elementary(rng.choice(atoms))
            else:
                target = _random_catom(rng, atoms)
            (neg if rng.random() < 0.4 else pos).append(target)
        if not head and not pos and not neg:
            head = [elementary(rng.choice(atoms))]
        rules.append(CRule(head=head, pos_body=pos, neg_body=neg))
    return GroundProgram(rules)


def random_tight_normal_convex(rng: random.Random, max_atoms=7, max_rules=8) -> GroundProgram:
    """Stratified by atom index, so positive dependencies cannot cycle."""
    atoms = _POOL[: rng.randint(3, max_atoms)]
    rules = []
    for _ in range(rng.randint(1, max_rules)):
        head_index = rng.randrange(len(atoms))
        head_atom = atoms[head_index]
        higher_atoms = atoms[head_index + 1 :]
        if rng.random() < 0.85 or not higher_atoms:
            head = [elementary(head_atom)]
        else:
            # every head occurrence stays at or above the body stratum
            domain = rng.sample(higher_atoms, min(len(higher_atoms), rng.randint(1, 2)))
            domain.append(head_atom)
            head = [choice_catom(domain, rng.randint(0, 1), None)]
        pos, neg = [], []
        for _ in range(rng.randint(0, 2)):
            other = rng.randrange(len(atoms))
            target = elementary(atoms[other])
            if other < head_index and rng.random() < 0.6:
                pos.append(target)
            else:
                neg.append(target)
        rules.append(CRule(head=head, pos_body=pos, neg_body=neg))
    return GroundProgram(rules)
