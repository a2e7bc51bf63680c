"""Resource caps for the exact but potentially exponential algorithms."""

from __future__ import annotations

import os
from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Caps:
    """Limits that separate "proven" answers from "gave up" errors.

    enumeration: largest c-atom domain for which satisfiers are enumerated
        explicitly (classification, positive occurrences, complement walks).
    atoms: largest program domain for the brute-force answer-set oracle.
    subsets: largest interpretation for exhaustive unfounded-subset or
        smaller-model searches.
    unfounded: most unfounded sets tracked per stepping state.
    ground_instances: most ground rules a single grounding may produce.
    search_nodes: decision budget of the backtracking solver.
    """

    enumeration: int = 16
    atoms: int = 24
    subsets: int = 18
    unfounded: int = 4096
    ground_instances: int = 1_000_000
    search_nodes: int = 500_000


def caps_from_env(base: Caps | None = None) -> Caps:
    """Apply ACPSTEP_* environment overrides to a caps record."""
    caps = base or Caps()
    atom_cap = os.environ.get("ACPSTEP_ATOM_CAP")
    if atom_cap is not None:
        caps = replace(caps, atoms=int(atom_cap))
    unfounded_cap = os.environ.get("ACPSTEP_UNFOUNDED_CAP")
    if unfounded_cap is not None:
        caps = replace(caps, unfounded=int(unfounded_cap))
    return caps


DEFAULT_CAPS = Caps()
