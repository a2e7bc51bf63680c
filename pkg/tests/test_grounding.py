"""Grounding: instantiation, builtin evaluation, provenance."""

from __future__ import annotations

import pytest

from acpstep.caps import Caps
from acpstep.errors import GroundingLimitError, UnknownRuleError
from acpstep.grounding import ground, ground_text, instances_of, render_ground_program
from acpstep.model import atom
from acpstep.source import HDisj, eval_term, parse
from conftest import MAZE_INSTANCE_TEXT, MAZE_STEP_TEXT, THREE_COL_BUGGY_TEXT


def test_fact_range_expands_to_five_facts():
    gr = ground_text("col(1..5).")
    assert [str(r) for r in gr.program.rules] == [
        "col(1).",
        "col(2).",
        "col(3).",
        "col(4).",
        "col(5).",
    ]


def test_negated_atoms_over_underivable_atoms_are_kept():
    gr = ground_text("col(1..5).\nmaxCol(X) :- col(X), not col(X+1).")
    instances = instances_of(gr, "r1")
    assert len(instances) == 5
    assert "maxCol(5) :- col(5), not col(6)." in {str(r) for r in instances}


def test_grounding_ground_program_is_identity():
    gr = ground_text("a :- not b.")
    assert [str(r) for r in gr.program.rules] == ["a :- not b."]
    prov = gr.program.rules[0].provenance
    assert prov[0].source_id == "r0" and prov[0].substitution == ()


def test_all_ground_atoms_are_variable_free():
    gr = ground_text(MAZE_INSTANCE_TEXT + MAZE_STEP_TEXT)
    for a in gr.program.atom_universe:
        assert all(isinstance(t, (int, str)) for t in a.args)


def test_provenance_roundtrip():
    sp = parse("p(X,Y) :- q(X), r(Y).\nq(1). q(2). r(7).")
    gr = ground(sp)
    for rule in instances_of(gr, "r0"):
        matched = False
        for p in rule.provenance:
            if p.source_id != "r0":
                continue
            subst = dict(p.substitution)
            variant = sp.statement("r0").variants[p.variant]
            assert isinstance(variant.head, HDisj)
            head = variant.head.atoms[0]
            expected = atom(
                head.predicate, *(eval_term(alts[0], subst) for alts in head.args)
            )
            matched = matched or rule.head[0].domain[0] == expected
        assert matched


def test_ranges_with_reversed_bounds_are_empty():
    assert len(ground_text("p(3..1).").program) == 0
    assert len(ground_text("p(2..2).").program) == 1


def test_builtin_pruning_drops_instances():
    gr = ground_text("col(1..5).\np(X) :- col(X), X > 3.")
    assert [str(r) for r in instances_of(gr, "r1")] == [
        "p(4) :- col(4).",
        "p(5) :- col(5).",
    ]


def test_unsatisfiable_builtins_yield_no_instance():
    gr = ground_text("col(1..3).\np(X) :- col(X), X > 7.")
    assert instances_of(gr, "r1") == ()


def test_duplicate_instances_merge_provenance():
    gr = ground_text("border(1,Y) :- col(1), row(Y).\nborder(X,1) :- col(X), row(1).\ncol(1). row(1).")
    (rule,) = instances_of(gr, "r0")
    assert {p.source_id for p in rule.provenance} == {"r0", "r1"}
    assert instances_of(gr, "r1") == (rule,)


def test_choice_instance_matches_walkthrough_listing(maze_grounding):
    (choice,) = instances_of(maze_grounding, "r13")
    domain = {str(a) for a in choice.head[0].domain}
    assert domain == {
        f"wall({x},{y})" for x in (2, 3, 4) for y in (2, 3, 4)
    }
    assert not choice.pos_body and not choice.neg_body


def test_choice_condition_over_merely_possible_atom_warns(maze_grounding):
    assert any("border" in d for d in maze_grounding.diagnostics)


def test_three_colouring_choice_instances():
    gr = ground_text(THREE_COL_BUGGY_TEXT)
    instances = instances_of(gr, "r0")
    assert len(instances) == 6
    sample = [r for r in instances if "color(1," in str(r)][0]
    assert str(sample) == (
        "1 {color(1,blue), color(1,green), color(1,red)} 1 :- node(1)."
    )


def test_body_count_aggregate_grounds():
    gr = ground_text("p(1..2).\nq :- 1 { p(1), p(2) } 2.")
    (rule,) = instances_of(gr, "r1")
    assert str(rule) == "q :- 1 {p(1), p(2)} 2."


def test_weight_body_grounds():
    gr = ground_text("p(1..2).\nq :- 2 [p(1)=1, p(2)=2] 3.")
    (rule,) = instances_of(gr, "r1")
    assert str(rule) == "q :- 2 [p(1)=1, p(2)=2] 3."


def test_pooled_constraint_requires_all_neighbours():
    # a wall is only forbidden when surrounded on every existing side
    base = "col(1..3). row(1..3). wall(2,2). empty(1,2). empty(3,2). empty(2,1).\n"
    constraint = (
        ":- wall(X,Y), empty(X+1;X-1,Y), empty(X,Y+1;Y-1), col(X+1;X-1), row(Y+1;Y-1)."
    )
    gr = ground_text(base + "empty(2,3).\n" + constraint)
    (instance,) = instances_of(gr, "r7")
    assert str(instance) == (
        ":- wall(2,2), empty(3,2), empty(1,2), empty(2,3), empty(2,1), "
        "col(3), col(1), row(3), row(1)."
    )
    # with one wall neighbour the constraint has no instance at all
    partial = ground_text(base + "wall(2,3).\n" + constraint.replace("r7", "r7"))
    assert instances_of(partial, "r7") == ()


def test_unknown_source_rule():
    gr = ground_text("a.")
    with pytest.raises(UnknownRuleError):
        instances_of(gr, "r9")


def test_instance_cap():
    with pytest.raises(GroundingLimitError):
        ground_text("p(1..100). q(X,Y) :- p(X), p(Y).", Caps(ground_instances=500))


def test_emit_format_carries_provenance():
    gr = ground_text("col(1..2).\nmaxCol(X) :- col(X), not col(X+1).")
    emitted = render_ground_program(gr)
    assert "maxCol(2) :- col(2), not col(3).  % r1 {X→2}" in emitted


def test_range_binder_comparison():
    gr = ground_text("p(X) :- X = 1..3.")
    assert [str(r) for r in gr.program.rules] == ["p(1).", "p(2).", "p(3)."]
