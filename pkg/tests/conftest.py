"""Shared program fixtures.

The worked examples here are constructed once and reused across modules;
expected values come from independent oracles in helpers.py or were frozen
after hand-checking the satisfaction conditions.
"""

from __future__ import annotations

import pytest

from acpstep.model import CRule, GroundProgram, atom, elementary, explicit_catom

A, B, C = atom("a"), atom("b"), atom("c")

INTRO_TEXT = """a :- not b.
b :- not a.
a :- b.
"""

MAZE_INSTANCE_TEXT = """col(1..5). row(1..5).
entrance(1,2). exit(5,4). wall(3,3). empty(3,4).
"""

MAZE_STEP_TEXT = """maxCol(X) :- col(X), not col(X+1).
maxRow(Y) :- row(Y), not row(Y+1).
border(1,Y) :- col(1), row(Y).
border(X,1) :- col(X), row(1).
border(X,Y) :- row(Y), maxCol(X).
border(X,Y) :- col(X), maxRow(Y).
wall(X,Y) :- border(X,Y), not entrance(X,Y), not exit(X,Y).
{ wall(X,Y) : col(X), row(Y), not border(X,Y) }.
empty(X,Y) :- col(X), row(Y), not wall(X,Y).
"""

# the reachability block with the defective 2x2 constraint (X+1 where Y+1
# was meant in the third literal)
MAZE_REACH_BUGGY_TEXT = """adjacent(X,Y,X,Y+1) :- col(X), row(Y), row(Y+1).
adjacent(X,Y,X,Y-1) :- col(X), row(Y), row(Y-1).
adjacent(X,Y,X+1,Y) :- col(X), row(Y), col(X+1).
adjacent(X,Y,X-1,Y) :- col(X), row(Y), col(X-1).
reach(X,Y)   :- entrance(X,Y), not wall(X,Y).
reach(XX,YY) :- adjacent(X,Y,XX,YY), reach(X,Y), not wall(XX,YY).

:- empty(X,Y), not reach(X,Y).
:- empty(X,Y), empty(X+1,Y), empty(X,X+1), empty(X+1,Y+1).
"""

MAZE_REACH_FIXED_TEXT = MAZE_REACH_BUGGY_TEXT.replace("empty(X,X+1)", "empty(X,Y+1)")

THREE_COL_BUGGY_TEXT = """1{color(X,red;green;blue)}1 :- node(X).

:- edge(X,Y), color(X,C), color(X,C).

node(X):-edge(X,Y).
node(Y):-edge(X,Y).
edge(1,2). edge(1,3). edge(1,4).
edge(2,4). edge(2,5). edge(2,6).
edge(3,4). edge(3,5). edge(3,6).
edge(4,5). edge(5,6).
"""

THREE_COL_FIXED_TEXT = THREE_COL_BUGGY_TEXT.replace(
    "color(X,C), color(X,C)", "color(X,C), color(Y,C)"
)


def example_31_rules() -> dict[str, CRule]:
    """The five rules of the running computation example."""
    return {
        "r1": CRule(head=[elementary(A)], pos_body=[explicit_catom([A, B], [[], [A, B]])]),
        "r2": CRule(head=[elementary(B)], pos_body=[elementary(A)]),
        "r3": CRule(head=[elementary(A)], pos_body=[elementary(B)]),
        "r4": CRule(head=[explicit_catom([C], [[], [C]])]),
        "r5": CRule(pos_body=[elementary(C)]),
    }


def example_32_rules() -> dict[str, CRule]:
    """Cyclic pair: a <- b and b <- a monotone-wrapped."""
    return {
        "r1": CRule(head=[elementary(A)], pos_body=[elementary(B)]),
        "r2": CRule(head=[elementary(B)], pos_body=[explicit_catom([A], [[], [A]])]),
    }


def example_33_rules() -> dict[str, CRule]:
    """Two disjunctive facts whose interplay forces unstable computations."""
    return {
        "r1": CRule(head=[elementary(A), explicit_catom([A, B], [[A], [A, B]])]),
        "r2": CRule(head=[elementary(B), explicit_catom([A, B], [[B], [A, B]])]),
    }


@pytest.fixture(scope="session")
def ex31() -> GroundProgram:
    return GroundProgram(example_31_rules().values())


@pytest.fixture(scope="session")
def ex32() -> GroundProgram:
    return GroundProgram(example_32_rules().values())


@pytest.fixture(scope="session")
def ex33() -> GroundProgram:
    return GroundProgram(example_33_rules().values())


@pytest.fixture(scope="session")
def intro_program() -> GroundProgram:
    from acpstep.grounding import ground_text

    return ground_text(INTRO_TEXT).program


@pytest.fixture(scope="session")
def maze_grounding():
    from acpstep.grounding import ground_text

    return ground_text(MAZE_INSTANCE_TEXT + MAZE_STEP_TEXT)


def pytest_runtest_logreport(report):
    """One visible pass/fail line per acceptance criterion."""
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    verdict = "PASS" if report.passed else "FAIL"
    print(f"\nACCEPTANCE {name}: {verdict}", flush=True)
