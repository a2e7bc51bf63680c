"""Interactive stepping engine for abstract-constraint answer-set programs."""

__version__ = "0.1.0"

from .caps import Caps, caps_from_env
from .model import (
    Atom,
    CAtom,
    CLiteral,
    CRule,
    GroundProgram,
    atom,
    choice_catom,
    classify_catom,
    complement_catom,
    elementary,
    eval_catom,
    eval_literal,
    explicit_catom,
    pos_occurrences,
    program_satisfied,
    rule_active,
    rule_satisfied,
    weight_to_catom,
)

__all__ = [
    "Atom",
    "CAtom",
    "CLiteral",
    "CRule",
    "Caps",
    "GroundProgram",
    "atom",
    "caps_from_env",
    "choice_catom",
    "classify_catom",
    "complement_catom",
    "elementary",
    "eval_catom",
    "eval_literal",
    "explicit_catom",
    "pos_occurrences",
    "program_satisfied",
    "rule_active",
    "rule_satisfied",
    "weight_to_catom",
    "__version__",
]
