"""Acceptance criteria, one test per criterion (or sub-suite).

Expected values were frozen after hand-checking the worked examples or
recomputed through the independent oracles in helpers.py; the randomized
suites run a fixed-seed corpus of more than 500 generated programs.
"""

from __future__ import annotations

import random

import pytest

from acpstep.analysis import is_absolutely_tight, stable_guarantee
from acpstep.errors import NoAnswerSetError
from acpstep.grounding import ground_text
from acpstep.model import (
    CLiteral,
    GroundProgram,
    atom,
    classify_literal,
)
from acpstep.semantics import (
    enumerate_answer_sets,
    solve_extension,
    flp_reduct,
    is_answer_set,
    search_answer_sets,
    unfounded_sets,
)
from acpstep.session import replay_script, session_create
from acpstep.stepping import (
    ComputationTree,
    State,
    StepDelta,
    StepEdge,
    active_instances,
    apply_jump,
    apply_step,
    classify_sequence,
    empty_state,
    expand_jump,
    guided_computation,
    state_status,
    successor_assignments,
)
from acpstep.analysis import dependency_graph, rule_dependency_graph
from conftest import (
    INTRO_TEXT,
    MAZE_INSTANCE_TEXT,
    MAZE_REACH_BUGGY_TEXT,
    MAZE_STEP_TEXT,
    THREE_COL_BUGGY_TEXT,
    THREE_COL_FIXED_TEXT,
    example_31_rules,
)
from helpers import (
    TEST_CAPS,
    enumerate_succeeded_rooted,
    gl_answer_sets,
    random_elementary_normal,
    random_general,
    random_tight_normal_convex,
)

A, B, C = atom("a"), atom("b"), atom("c")
EMPTY = frozenset()
AB = frozenset({A, B})


def fs(*atoms):
    return frozenset(atoms)


def uf(*sets):
    return frozenset({EMPTY, *map(frozenset, sets)})


# --------------------------------------------------------------------------
# Criterion: worked example regression
# --------------------------------------------------------------------------


def test_intro_program_answer_sets():
    program = ground_text(INTRO_TEXT).program
    assert enumerate_answer_sets(program) == (fs(A),)
    assert list(search_answer_sets(program)) == [fs(A)]


def test_three_colouring_recount():
    buggy = ground_text(THREE_COL_BUGGY_TEXT).program
    assert list(search_answer_sets(buggy, max_models=1)) == []
    fixed = ground_text(THREE_COL_FIXED_TEXT).program
    models = list(search_answer_sets(fixed, max_models=1))
    assert len(models) == 1
    assert is_answer_set(fixed, models[0]).is_answer_set


def test_example_31_answer_sets(ex31):
    assert enumerate_answer_sets(ex31.rules) == (AB,)


def test_example_31_computation_catalogue(ex31):
    rules = example_31_rules()
    sub = GroundProgram([rules["r4"], rules["r1"]])
    s0 = empty_state()
    s_r4 = State(fs(rules["r4"]), EMPTY, fs(C), uf())
    s_r41 = State(fs(rules["r4"], rules["r1"]), AB, fs(C), uf({A}, {B}))
    s_r412 = State(fs(rules["r4"], rules["r1"], rules["r2"]), AB, fs(C), uf({A}))
    s_full = State(
        fs(rules["r4"], rules["r1"], rules["r2"], rules["r3"]), AB, fs(C), uf()
    )
    c1 = [s0, s_r4, s_r41]
    c2 = [s0, s_r4, s_r41, s_r412, s_full]
    c3 = [s_full]
    c4 = [s0, State(fs(rules["r4"]), fs(C), EMPTY, uf())]
    c5 = [
        State(
            fs(rules["r4"], rules["r1"], rules["r2"], rules["r3"]),
            fs(A, B, C),
            EMPTY,
            uf(),
        )
    ]

    for states in (c1, c2, c3, c4, c5):
        assert classify_sequence(ex31, states).is_computation

    assert [classify_sequence(ex31, c).rooted for c in (c1, c2, c3, c4, c5)] == [
        True,
        True,
        False,
        True,
        False,
    ]
    assert [classify_sequence(ex31, c).stable for c in (c1, c2, c3, c4, c5)] == [
        False,
        False,
        True,
        True,
        True,
    ]

    r2 = classify_sequence(ex31, c2, check_failed=True)
    assert r2.complete and r2.succeeded and r2.failed_at is None
    r3 = classify_sequence(ex31, c3)
    assert r3.complete and r3.succeeded

    r1_sub = classify_sequence(sub, c1, check_failed=True)
    assert r1_sub.complete and r1_sub.failed_at == 0

    r4 = classify_sequence(ex31, c4, check_failed=True)
    assert not r4.complete and not r4.stuck and r4.failed_at == 1

    r5 = classify_sequence(ex31, c5, check_failed=True)
    assert r5.stuck and r5.failed_at == 0

    # rejected sequences, with the stated reasons
    c6 = [State(fs(rules["r5"]), EMPTY, fs(C), uf())]
    r6 = classify_sequence(ex31, c6)
    assert not r6.is_computation and r6.reject_reason == "invalid-state"
    c7 = [s0, s_r41]
    r7 = classify_sequence(ex31, c7)
    assert not r7.is_computation and r7.reject_reason == "not-successor"
    assert r7.reject_index == 1


# --------------------------------------------------------------------------
# Criterion: Examples 3.2 and 3.3
# --------------------------------------------------------------------------


def test_example_32_unique_succeeding_computation(ex32):
    succeeded = enumerate_succeeded_rooted(ex32)
    assert len(succeeded) == 1
    (path,) = succeeded
    middle = path[1]
    assert {s for s in middle.unfounded if s} == {fs(A)}
    assert path[-1].pos == AB and path[-1].stable


def test_example_33_exactly_two_computations(ex33):
    succeeded = enumerate_succeeded_rooted(ex33)
    assert len(succeeded) == 2
    for path in succeeded:
        assert len(path) == 3
        assert path[-1].pos == AB
        assert not all(s.stable for s in path)
    nonempty_middles = [{s for s in path[1].unfounded if s} for path in succeeded]
    assert sorted(nonempty_middles, key=str) == sorted(
        [{fs(B)}, {fs(A)}], key=str
    )
    guarantee = stable_guarantee(ex33.rules)
    assert is_absolutely_tight(ex33.rules)
    assert all(
        classify_literal(CLiteral(c)) == "monotone"
        for r in ex33.rules
        for c in r.head
    )
    assert not guarantee.guaranteed


# --------------------------------------------------------------------------
# Criterion: maze walkthrough replay
# --------------------------------------------------------------------------

MAZE_TEXT = MAZE_INSTANCE_TEXT + MAZE_STEP_TEXT

WALKTHROUGH_SCRIPT = [
    {"op": "step", "rule": "entrance(1,2).", "true": ["entrance(1,2)"], "false": []},
    {"op": "step", "rule": "col(5).", "true": ["col(5)"], "false": []},
    {
        "op": "step",
        "rule": "r6",
        "subst": {"X": 5},
        "true": ["maxCol(5)"],
        "false": ["col(6)"],
    },
    {"op": "jump", "rules": [f"r{i}" for i in range(12)]},
    {
        "op": "step",
        "rule": "r13",
        "true": ["wall(3,2)"],
        "false": [
            "wall(2,2)",
            "wall(4,2)",
            "wall(2,3)",
            "wall(4,3)",
            "wall(2,4)",
            "wall(3,4)",
            "wall(4,4)",
        ],
    },
    {"op": "jump", "rules": ["r12", "r14"]},
]

# the expected rule set of the jump target, frozen after hand-checking
S4_RULES = [
    "col(1).", "col(2).", "col(3).", "col(4).", "col(5).",
    "row(1).", "row(2).", "row(3).", "row(4).", "row(5).",
    "wall(3,3).", "empty(3,4).", "entrance(1,2).", "exit(5,4).",
    "maxCol(5) :- col(5), not col(6).",
    "maxRow(5) :- row(5), not row(6).",
    "border(1,1) :- col(1), row(1).",
    "border(2,1) :- col(2), row(1).",
    "border(3,1) :- col(3), row(1).",
    "border(4,1) :- col(4), row(1).",
    "border(5,1) :- col(5), row(1).",
    "border(1,2) :- col(1), row(2).",
    "border(5,2) :- row(2), maxCol(5).",
    "border(1,3) :- col(1), row(3).",
    "border(5,3) :- row(3), maxCol(5).",
    "border(1,4) :- col(1), row(4).",
    "border(5,4) :- row(4), maxCol(5).",
    "border(1,5) :- col(1), row(5).",
    "border(5,1) :- row(1), maxCol(5).",
    "border(5,5) :- row(5), maxCol(5).",
    "border(1,5) :- col(1), maxRow(5).",
    "border(2,5) :- col(2), maxRow(5).",
    "border(3,5) :- col(3), maxRow(5).",
    "border(4,5) :- col(4), maxRow(5).",
    "border(5,5) :- col(5), maxRow(5).",
]

I_AUX = (
    [f"col({x})" for x in range(1, 6)]
    + [f"row({y})" for y in range(1, 6)]
    + ["maxCol(5)", "maxRow(5)", "empty(3,4)", "wall(3,3)", "entrance(1,2)", "exit(5,4)"]
    + [f"border({x},1)" for x in range(1, 6)]
    + [f"border(1,{y})" for y in range(2, 6)]
    + [f"border(5,{y})" for y in range(2, 6)]
    + [f"border({x},5)" for x in range(2, 6)]
)

# the solution maze of the running example, projected to wall/2 and empty/2
SOLUTION_CELLS = {
    (1, 1): "wall", (1, 2): "empty", (1, 3): "wall", (1, 4): "wall", (1, 5): "wall",
    (2, 1): "wall", (2, 2): "empty", (2, 3): "empty", (2, 4): "empty", (2, 5): "wall",
    (3, 1): "wall", (3, 2): "wall", (3, 3): "wall", (3, 4): "empty", (3, 5): "wall",
    (4, 1): "wall", (4, 2): "empty", (4, 3): "empty", (4, 4): "empty", (4, 5): "wall",
    (5, 1): "wall", (5, 2): "wall", (5, 3): "wall", (5, 4): "empty", (5, 5): "wall",
}

S6_ADDED_RULES = [
    f"wall({x},{y}) :- border({x},{y}), not entrance({x},{y}), not exit({x},{y})."
    for (x, y) in [
        (1, 1), (2, 1), (3, 1), (4, 1), (5, 1), (5, 2), (1, 3), (5, 3),
        (1, 4), (1, 5), (2, 5), (3, 5), (4, 5), (5, 5),
    ]
] + [
    f"empty({x},{y}) :- col({x}), row({y}), not wall({x},{y})."
    for (x, y) in [
        (1, 2), (2, 2), (4, 2), (2, 3), (4, 3), (2, 4), (3, 4), (4, 4), (5, 4),
    ]
]


def test_maze_walkthrough_replay():
    session = session_create(MAZE_TEXT)
    payloads = replay_script(session, WALKTHROUGH_SCRIPT)
    states = [session.tree.node(i).state for i in range(1, 7)]
    s1, s2, s3, s4, s5, s6 = states

    assert s1.pos == fs(atom("entrance", 1, 2)) and s1.neg == EMPTY
    assert [str(r) for r in s1.rules] == ["entrance(1,2)."]

    assert s2.pos == fs(atom("entrance", 1, 2), atom("col", 5))

    assert s3.pos == fs(atom("entrance", 1, 2), atom("col", 5), atom("maxCol", 5))
    assert s3.neg == fs(atom("col", 6))
    assert all(s.stable for s in (s1, s2, s3))

    assert {str(r) for r in s4.rules} == set(S4_RULES)
    assert len(s4.rules) == len(set(S4_RULES))
    assert {str(a) for a in s4.pos} == set(I_AUX)
    assert s4.neg == fs(atom("col", 6), atom("row", 6))
    assert s4.stable

    assert s5.pos == s4.pos | fs(atom("wall", 3, 2))
    assert s5.neg == s4.neg | fs(
        *(atom("wall", x, y) for (x, y) in [(2, 2), (4, 2), (2, 3), (4, 3), (2, 4), (3, 4), (4, 4)])
    )
    assert s5.stable and len(s5.rules) == 36

    expected_s6_pos = set(s4.pos) | {atom("wall", 3, 2)}
    for (x, y), kind in SOLUTION_CELLS.items():
        expected_s6_pos.add(atom(kind, x, y))
    assert s6.pos == frozenset(expected_s6_pos)
    assert {str(r) for r in s6.rules} == set(S4_RULES) | {
        str(session.tree.node(5).edge.delta.rule)
    } | set(S6_ADDED_RULES)
    assert s6.neg == frozenset(
        set().union(*(r.domain_set for r in s6.rules)) - s6.pos
    )
    assert s6.stable

    assert payloads[-1]["status"] == "succeeded"
    report = is_answer_set(session.program, s6.pos, TEST_CAPS)
    assert report.is_answer_set


def test_example_44_jump_is_inconsistent():
    session = session_create("a.\n:- not a.")
    tree = session.tree
    with pytest.raises(NoAnswerSetError):
        apply_jump(session.program, tree, ["r1"])
    # the program itself still has its unique answer set
    assert enumerate_answer_sets(session.program) == (fs(A),)


def test_buggy_constraint_gets_stuck_on_the_listed_instance():
    session = session_create(MAZE_TEXT + MAZE_REACH_BUGGY_TEXT)
    replay_script(session, WALKTHROUGH_SCRIPT)
    # consider the reachability machinery wholesale
    response = replay_script(
        session, [{"op": "jump", "rules": ["r15", "r16", "r17", "r18", "r19", "r20"]}]
    )
    assert response[-1]["status"] == "stuck"
    leaf = session.tree.active_state
    remaining = active_instances(session.program, leaf)
    assert [str(r) for r in remaining] == [
        ":- empty(1,2), empty(2,2), empty(1,2), empty(2,3)."
    ]
    assert not list(successor_assignments(leaf, remaining[0]))


# --------------------------------------------------------------------------
# Criterion: randomized property suites (fixed seeds)
# --------------------------------------------------------------------------

_RNG_SEED = 20260809


def _corpus():
    rng = random.Random(_RNG_SEED)
    general = [random_general(rng) for _ in range(300)]
    elementary = [random_elementary_normal(rng) for _ in range(100)]
    tight = [random_tight_normal_convex(rng) for _ in range(120)]
    return general, elementary, tight


GENERAL, ELEMENTARY, TIGHT = _corpus()
ALL_PROGRAMS = GENERAL + ELEMENTARY + TIGHT


def _answer_sets(program):
    return enumerate_answer_sets(program.rules, TEST_CAPS)


def test_corpus_is_large_enough_and_capped():
    assert len(ALL_PROGRAMS) >= 500
    for program in ALL_PROGRAMS:
        assert len(program.atom_universe) <= 10
        assert len(program.rules) <= 8


def test_property_a_incremental_unfounded_tracking():
    checked = 0
    for program in GENERAL[:150] + ELEMENTARY[:40] + TIGHT[:40]:
        for target in _answer_sets(program)[:2]:
            path = guided_computation(program, target, caps=TEST_CAPS)
            for state in path.states:
                expected = frozenset(unfounded_sets(state.rules, state.pos, TEST_CAPS))
                assert state.unfounded == expected
                checked += 1
    assert checked > 400


def test_property_b_succeeded_random_walks_yield_answer_sets():
    rng = random.Random(_RNG_SEED + 1)
    succeeded = 0
    for program in GENERAL[:120] + ELEMENTARY[:40]:
        state = empty_state()
        for _ in range(10):
            candidates = [
                r for r in program.rules if r not in state.rules
            ]
            options = []
            for r in candidates:
                options.extend(list(successor_assignments(state, r))[:4])
            if not options:
                break
            state = apply_step(state, rng.choice(options), TEST_CAPS)
            expected = frozenset(unfounded_sets(state.rules, state.pos, TEST_CAPS))
            assert state.unfounded == expected
        if state_status(program, state) == "succeeded":
            succeeded += 1
            assert is_answer_set(program.rules, state.pos, TEST_CAPS).is_answer_set
    assert succeeded > 30


def test_property_c_completeness_of_guided_computations():
    covered = 0
    for program in GENERAL[:150] + ELEMENTARY[:50]:
        for target in _answer_sets(program):
            path = guided_computation(program, target, caps=TEST_CAPS)
            assert path.final.pos == target
            assert path.final.rules == frozenset(flp_reduct(program.rules, target))
            assert path.final.stable
            assert state_status(program, path.final) == "succeeded"
            covered += 1
    assert covered > 150


def test_property_d_jump_equals_stepwise_replay():
    rng = random.Random(_RNG_SEED + 2)
    jumped = 0
    for program in GENERAL[:120] + TIGHT[:40]:
        selected = [r for r in program.rules if rng.random() < 0.7]
        tree = ComputationTree()
        try:
            target = apply_jump(program, tree, selected, TEST_CAPS)
        except NoAnswerSetError:
            continue
        deltas = expand_jump(program, empty_state(), target, TEST_CAPS)
        replayed = empty_state()
        for delta in deltas:
            replayed = apply_step(replayed, delta, TEST_CAPS)
        assert replayed == target
        jumped += 1
    assert jumped > 60


def test_property_e_order_independence():
    rng = random.Random(_RNG_SEED + 3)
    compared = 0
    for program in GENERAL[:120] + ELEMENTARY[:30]:
        targets = _answer_sets(program)[:1]
        for target in targets:
            base = guided_computation(program, target, caps=TEST_CAPS)
            shuffled = list(program.rules)
            rng.shuffle(shuffled)
            priority = {r: i for i, r in enumerate(shuffled)}
            permuted = guided_computation(
                program, target, caps=TEST_CAPS, rule_key=lambda r: priority[r]
            )
            assert permuted.final == base.final
            assert len(permuted.states) == len(base.states)
            compared += 1
    assert compared > 80


def test_property_f_dependency_graph_equivalence():
    for program in ALL_PROGRAMS:
        atom_acyclic = dependency_graph(program.rules).is_acyclic()
        rule_acyclic = rule_dependency_graph(program.rules).is_acyclic()
        assert atom_acyclic == rule_acyclic


def test_property_g_certificate_order_keeps_states_stable():
    guaranteed = 0
    for program in TIGHT:
        certificate = stable_guarantee(program.rules, TEST_CAPS)
        assert certificate.guaranteed, str(program)
        position = {r: i for i, r in enumerate(certificate.order)}
        for target in _answer_sets(program)[:2]:
            state = empty_state()
            for rule in sorted(flp_reduct(program.rules, target), key=position.get):
                delta = StepDelta(
                    rule,
                    (target & rule.domain_set) - state.pos,
                    (rule.domain_set - target) - state.neg,
                )
                state = apply_step(state, delta, TEST_CAPS)
                assert state.stable
            assert state.pos == target
            guaranteed += 1
    assert guaranteed > 100


def test_property_h_gelfond_lifschitz_agreement():
    for program in ELEMENTARY:
        mine = set(enumerate_answer_sets(program.rules, TEST_CAPS))
        oracle = gl_answer_sets(program.rules)
        assert mine == oracle, str(program)


def test_property_b2_walks_with_jumps_mixed_in():
    rng = random.Random(_RNG_SEED + 4)
    succeeded = 0
    jumps_taken = 0
    for program in GENERAL[120:220]:
        tree = ComputationTree()
        for _ in range(8):
            state = tree.active_state
            if rng.random() < 0.35:
                selected = [r for r in program.rules if rng.random() < 0.5]
                try:
                    apply_jump(program, tree, selected, TEST_CAPS)
                    jumps_taken += 1
                    continue
                except NoAnswerSetError:
                    break
            options = []
            for r in program.rules:
                if r not in state.rules:
                    options.extend(list(successor_assignments(state, r))[:3])
            if not options:
                break
            delta = rng.choice(options)
            tree.add_child(apply_step(state, delta, TEST_CAPS), StepEdge(delta))
        leaf = tree.active_state
        expected = frozenset(unfounded_sets(leaf.rules, leaf.pos, TEST_CAPS))
        assert leaf.unfounded == expected
        if state_status(program, leaf) == "succeeded":
            succeeded += 1
            assert is_answer_set(program.rules, leaf.pos, TEST_CAPS).is_answer_set
    assert succeeded > 20 and jumps_taken > 50


def test_search_enumeration_matches_the_oracle_across_the_corpus():
    compared = 0
    for program in GENERAL[:200] + TIGHT[:60] + ELEMENTARY[:60]:
        searched = sorted(
            search_answer_sets(program.rules, caps=TEST_CAPS),
            key=lambda s: (len(s), sorted(map(str, s))),
        )
        oracle = sorted(
            enumerate_answer_sets(program.rules, TEST_CAPS),
            key=lambda s: (len(s), sorted(map(str, s))),
        )
        assert searched == oracle, str(program)
        compared += 1
    assert compared == 320


MAZE_VALIDITY_TEXT = """:- exit(X,Y), wall(X,Y).
:- wall(X,Y), wall(X+1,Y), wall(X,Y+1), wall(X+1,Y+1).
:- wall(X,Y), empty(X+1;X-1,Y), empty(X,Y+1;Y-1), col(X+1;X-1), row(Y+1;Y-1).
:- wall(X,Y), wall(X+1,Y+1), not wall(X+1,Y), not wall(X,Y+1).
:- wall(X+1,Y), wall(X,Y+1), not wall(X,Y), not wall(X+1,Y+1).
"""

from conftest import MAZE_REACH_FIXED_TEXT


def test_full_maze_encoding_accepts_the_solution_grid():
    from acpstep.model import atom

    program = ground_text(
        MAZE_TEXT + MAZE_REACH_FIXED_TEXT + MAZE_VALIDITY_TEXT
    ).program
    pinned = frozenset(
        atom(kind, x, y) for (x, y), kind in SOLUTION_CELLS.items()
    )
    model = solve_extension((), program.rules, required_true=pinned)
    assert model is not None
    assert is_answer_set(program.rules, model).is_answer_set
    # and solving without pins reaches some valid maze
    first = next(iter(search_answer_sets(program, max_models=1)), None)
    assert first is not None and is_answer_set(program.rules, first).is_answer_set
