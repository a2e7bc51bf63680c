#!/usr/bin/env python3
"""Record the maze walkthrough as frozen protocol fixtures.

Writes tests/golden/maze-walkthrough.json (state payloads per action) and
frontend/fixtures/*.json (full request/response/event exchange logs the web
client tests replay).  Re-run after an intentional engine change and review
the diff.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))
sys.path.insert(0, str(ROOT / "tests"))

from acpstep.session import Session, handle, replay_script  # noqa: E402
from conftest import (  # noqa: E402
    MAZE_INSTANCE_TEXT,
    MAZE_REACH_BUGGY_TEXT,
    MAZE_STEP_TEXT,
)

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

WALL_DRAFT_FALSE = [
    "wall(2,2)",
    "wall(2,3)",
    "wall(2,4)",
    "wall(4,2)",
    "wall(4,3)",
    "wall(4,4)",
]


class Recorder:
    def __init__(self, session: Session):
        self.session = session
        self.exchanges: list[dict] = []
        self.next_id = 1

    def call(self, method: str, params: dict | None = None) -> dict:
        request = {"id": self.next_id, "method": method, "params": params or {}}
        self.next_id += 1
        response, events = handle(self.session, request)
        self.exchanges.append({"request": request, "response": response, "events": events})
        return response


def record_walkthrough() -> dict:
    session = Session(MAZE_TEXT)
    rec = Recorder(session)

    rec.call("state.get", {})
    rec.call("candidates.list")
    rec.call("instances.list", {"rule": "r2"})
    rec.call("step.validate", {"rule": "entrance(1,2).", "true": ["entrance(1,2)"], "false": []})
    rec.call("step.apply", {"rule": "entrance(1,2).", "true": ["entrance(1,2)"], "false": []})
    rec.call("instances.list", {"rule": "r0"})
    rec.call("step.apply", {"rule": "col(5).", "true": ["col(5)"], "false": []})
    # drafting the third step: first an incomplete assignment, then the real one
    rec.call("step.validate", {"rule": "r6", "subst": {"X": 5}, "true": ["maxCol(5)"], "false": []})
    rec.call(
        "step.validate",
        {"rule": "r6", "subst": {"X": 5}, "true": ["maxCol(5)"], "false": ["col(6)"]},
    )
    rec.call(
        "step.apply",
        {"rule": "r6", "subst": {"X": 5}, "true": ["maxCol(5)"], "false": ["col(6)"]},
    )
    rec.call("jump.apply", {"rules": [f"r{i}" for i in range(12)]})
    rec.call("candidates.list")
    rec.call("instances.list", {"rule": "r10"})
    rec.call("instances.list", {"rule": "r10", "filter": "X=5.Y=3"})
    rec.call("instances.list", {"rule": "r13"})
    # wall guess: locked atom wall(3,3) stays out of the draft; a partial
    # draft is invalid until every undecided atom is placed
    rec.call("step.validate", {"rule": "r13", "true": ["wall(3,2)"], "false": WALL_DRAFT_FALSE})
    rec.call(
        "step.validate",
        {"rule": "r13", "true": ["wall(3,2)"], "false": WALL_DRAFT_FALSE + ["wall(3,4)"]},
    )
    rec.call(
        "step.apply",
        {"rule": "r13", "true": ["wall(3,2)"], "false": WALL_DRAFT_FALSE + ["wall(3,4)"]},
    )
    rec.call("jump.apply", {"rules": ["r12", "r14"]})
    rec.call("status")
    rec.call("jump.expand", {"node": 4})
    rec.call("retract", {"node": 4})
    rec.call("state.get", {})
    rec.call("retract", {"node": 6})
    return {"program": MAZE_TEXT, "exchanges": rec.exchanges}


def record_stuck_session() -> dict:
    session = Session(MAZE_TEXT + MAZE_REACH_BUGGY_TEXT)
    replay_script(session, WALKTHROUGH_SCRIPT)
    rec = Recorder(session)
    rec.call("jump.apply", {"rules": ["r15", "r16", "r17", "r18", "r19", "r20"]})
    rec.call("status")
    rec.call("candidates.list")
    rec.call("instances.list", {"rule": "r22"})
    stuck_instance = ":- empty(1,2), empty(2,2), empty(1,2), empty(2,3)."
    rec.call("step.validate", {"rule": stuck_instance, "true": [], "false": []})
    return {"program": MAZE_TEXT + MAZE_REACH_BUGGY_TEXT, "exchanges": rec.exchanges}


def main() -> None:
    golden_dir = ROOT / "tests" / "golden"
    fixtures_dir = ROOT / "frontend" / "fixtures"
    golden_dir.mkdir(parents=True, exist_ok=True)
    fixtures_dir.mkdir(parents=True, exist_ok=True)

    session = Session(MAZE_TEXT)
    payloads = replay_script(session, WALKTHROUGH_SCRIPT)
    (golden_dir / "maze-walkthrough.json").write_text(
        json.dumps(payloads, indent=1, sort_keys=True) + "\n"
    )

    walkthrough = record_walkthrough()
    (fixtures_dir / "maze-session.json").write_text(
        json.dumps(walkthrough, indent=1, sort_keys=True) + "\n"
    )
    (golden_dir / "maze-session-exchanges.json").write_text(
        json.dumps(walkthrough, indent=1, sort_keys=True) + "\n"
    )

    stuck = record_stuck_session()
    (fixtures_dir / "stuck-session.json").write_text(
        json.dumps(stuck, indent=1, sort_keys=True) + "\n"
    )

    print(f"wrote {golden_dir / 'maze-walkthrough.json'}")
    print(f"wrote {fixtures_dir / 'maze-session.json'}")
    print(f"wrote {fixtures_dir / 'stuck-session.json'}")


if __name__ == "__main__":
    main()
